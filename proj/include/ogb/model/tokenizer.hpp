#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ogb/model/backend.hpp"

namespace ogb::model {

// Special token ids shared by every vocabulary in this project.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr std::size_t kNumSpecials = 5;

// A piece of the input text before vocabulary lookup. Offsets are code
// points into the original text.
struct RawToken {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits on whitespace; punctuation code points become single-character
// tokens (so "X is a Y." yields X / is / a / Y / .). Devanagari danda and
// double danda count as punctuation.
std::vector<RawToken> split_text(std::string_view text);

bool is_punctuation(char32_t cp);
bool is_whitespace(char32_t cp);

class Vocabulary {
 public:
  // Starts with the five specials.
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // id -> token, specials first

  int add(std::string_view token);          // returns existing id if present
  int id_of(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Whitespace/punctuation word-level tokenizer over a fixed vocabulary.
class WordTokenizer {
 public:
  explicit WordTokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  // [CLS] tokens... [SEP]; specials carry empty offsets.
  Encoding encode(std::string_view text) const;

  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

 private:
  Vocabulary vocab_;
};

}  // namespace ogb::model
