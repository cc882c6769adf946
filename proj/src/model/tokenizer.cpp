#include "ogb/model/tokenizer.hpp"

#include "ogb/errors.hpp"
#include "ogb/util/utf8.hpp"

namespace ogb::model {

bool is_whitespace(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v' || cp == 0x00A0;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'!' && cp <= U'/') || (cp >= U':' && cp <= U'@') ||
           (cp >= U'[' && cp <= U'`') || (cp >= U'{' && cp <= U'~');
  }
  switch (cp) {
    case 0x0964:  // devanagari danda
    case 0x0965:  // devanagari double danda
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2013:
    case 0x2014:
    case 0x2026:
      return true;
    default:
      return false;
  }
}

std::vector<RawToken> split_text(std::string_view text) {
  std::vector<RawToken> out;
  std::size_t byte = 0;
  std::size_t cp_index = 0;
  RawToken current;
  bool in_word = false;

  const auto flush = [&] {
    if (in_word) {
      out.push_back(current);
      in_word = false;
    }
  };

  while (byte < text.size()) {
    const std::size_t start_byte = byte;
    const char32_t cp = utf8::decode_next(text, byte);
    const std::string_view piece = text.substr(start_byte, byte - start_byte);
    if (is_whitespace(cp)) {
      flush();
    } else if (is_punctuation(cp)) {
      flush();
      out.push_back(RawToken{std::string(piece), cp_index, cp_index + 1});
    } else {
      if (!in_word) {
        current = RawToken{std::string(), cp_index, cp_index};
        in_word = true;
      }
      current.text.append(piece);
      current.end = cp_index + 1;
    }
    ++cp_index;
  }
  flush();
  return out;
}

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                          "[MASK]"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < kNumSpecials) {
    raise(ErrorKind::BackendFailure,
          "vocabulary must start with the five special tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
}

int Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) {
    return it->second;
  }
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

int Vocabulary::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    raise(ErrorKind::BackendFailure,
          "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

Encoding WordTokenizer::encode(std::string_view text) const {
  Encoding enc;
  enc.ids.push_back(kClsId);
  enc.spans.push_back(TokenSpan{});
  for (const auto& raw : split_text(text)) {
    enc.ids.push_back(vocab_.id_of(raw.text));
    enc.spans.push_back(TokenSpan{raw.begin, raw.end});
  }
  enc.ids.push_back(kSepId);
  enc.spans.push_back(TokenSpan{});
  return enc;
}

}  // namespace ogb::model
