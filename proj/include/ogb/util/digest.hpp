#pragma once

#include <string>
#include <string_view>

namespace ogb::digest {

// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view data);

// SHA-256 of a file's bytes. Throws FileMissing if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace ogb::digest
