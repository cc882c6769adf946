#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "ogb/errors.hpp"

// Minimal UTF-8 helpers. All spans in the corpus formats are expressed in
// code points, not bytes, so the files stay meaningful to any consumer.
namespace ogb::utf8 {

// Decodes the code point starting at byte offset `i` and advances `i` past
// it. Throws MalformedFile on invalid UTF-8.
inline char32_t decode_next(std::string_view s, std::size_t& i) {
  const auto fail = [&] {
    raise(ErrorKind::MalformedFile,
          "invalid UTF-8 at byte offset " + std::to_string(i));
  };
  if (i >= s.size()) fail();
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    len = 1;
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    fail();
  }
  if (i + len > s.size()) fail();
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) fail();
    cp = (cp << 6) | (b & 0x3F);
  }
  // reject overlong encodings and surrogates
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
      (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
      cp > 0x10FFFF) {
    fail();
  }
  i += len;
  return cp;
}

inline bool is_valid(std::string_view s) {
  std::size_t i = 0;
  try {
    while (i < s.size()) decode_next(s, i);
  } catch (const Error&) {
    return false;
  }
  return true;
}

// Number of code points in `s`.
inline std::size_t length(std::string_view s) {
  std::size_t i = 0, n = 0;
  while (i < s.size()) {
    decode_next(s, i);
    ++n;
  }
  return n;
}

// Byte offset of code point index `cp_index` (may equal s.size() when
// cp_index == length(s)).
inline std::size_t byte_offset(std::string_view s, std::size_t cp_index) {
  std::size_t i = 0, n = 0;
  while (n < cp_index) {
    if (i >= s.size()) {
      raise(ErrorKind::MalformedRecord,
            "code point index " + std::to_string(cp_index) +
                " out of range (text has " + std::to_string(n) +
                " code points)");
    }
    decode_next(s, i);
    ++n;
  }
  return i;
}

// Substring by code-point interval [begin, end).
inline std::string_view substr(std::string_view s, std::size_t cp_begin,
                               std::size_t cp_end) {
  const std::size_t b = byte_offset(s, cp_begin);
  std::size_t e = b;
  std::size_t n = cp_begin;
  while (n < cp_end) {
    if (e >= s.size()) {
      raise(ErrorKind::MalformedRecord, "code point span out of range");
    }
    decode_next(s, e);
    ++n;
  }
  return s.substr(b, e - b);
}

}  // namespace ogb::utf8
