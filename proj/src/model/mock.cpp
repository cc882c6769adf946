#include "ogb/model/mock.hpp"

#include <cstdint>

#include "ogb/errors.hpp"

namespace ogb::model {

namespace {

// FNV-1a, folded into the non-special id range.
int hash_to_id(std::string_view token, std::size_t vocab_size) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ull;
  }
  const std::uint64_t range = vocab_size - kNumSpecials;
  return static_cast<int>(kNumSpecials + h % range);
}

std::vector<std::size_t> mask_positions_of(const std::vector<int>& seq,
                                           int mask_id) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] == mask_id) out.push_back(i);
  }
  return out;
}

}  // namespace

UniformBackend::UniformBackend(std::size_t vocab_size)
    : vocab_size_(vocab_size) {
  if (vocab_size_ <= kNumSpecials) {
    raise(ErrorKind::BackendFailure,
          "uniform backend needs vocab size > " + std::to_string(kNumSpecials));
  }
}

std::string UniformBackend::model_id() const {
  return "uniform:" + std::to_string(vocab_size_);
}

Encoding UniformBackend::tokenize(std::string_view text) const {
  Encoding enc;
  enc.ids.push_back(kClsId);
  enc.spans.push_back(TokenSpan{});
  for (const auto& raw : split_text(text)) {
    enc.ids.push_back(hash_to_id(raw.text, vocab_size_));
    enc.spans.push_back(TokenSpan{raw.begin, raw.end});
  }
  enc.ids.push_back(kSepId);
  enc.spans.push_back(TokenSpan{});
  return enc;
}

std::vector<MaskedScores> UniformBackend::score_masked(
    const std::vector<std::vector<int>>& batch) const {
  std::vector<MaskedScores> out;
  out.reserve(batch.size());
  const std::vector<double> uniform(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
  for (const auto& seq : batch) {
    MaskedScores scores;
    scores.positions = mask_positions_of(seq, kMaskId);
    scores.probs.assign(scores.positions.size(), uniform);
    out.push_back(std::move(scores));
  }
  return out;
}

TabulatedBackend::TabulatedBackend(Vocabulary vocab)
    : tokenizer_(std::move(vocab)) {}

void TabulatedBackend::set_distribution(const std::vector<int>& sequence,
                                        std::size_t position,
                                        std::vector<double> probs) {
  if (probs.size() != tokenizer_.vocab().size()) {
    raise(ErrorKind::BackendFailure,
          "tabulated distribution size does not match vocab");
  }
  table_[sequence][position] = std::move(probs);
}

Encoding TabulatedBackend::tokenize(std::string_view text) const {
  return tokenizer_.encode(text);
}

std::vector<MaskedScores> TabulatedBackend::score_masked(
    const std::vector<std::vector<int>>& batch) const {
  std::vector<MaskedScores> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) {
    auto entry = table_.find(seq);
    if (entry == table_.end()) {
      raise(ErrorKind::BackendFailure,
            "tabulated backend has no table for this sequence");
    }
    MaskedScores scores;
    for (std::size_t pos : mask_positions_of(seq, kMaskId)) {
      auto dist = entry->second.find(pos);
      if (dist == entry->second.end()) {
        raise(ErrorKind::BackendFailure,
              "tabulated backend has no distribution for position " +
                  std::to_string(pos));
      }
      scores.positions.push_back(pos);
      scores.probs.push_back(dist->second);
    }
    out.push_back(std::move(scores));
  }
  return out;
}

}  // namespace ogb::model
