#pragma once

#include <map>
#include <string>
#include <vector>

#include "ogb/model/backend.hpp"
#include "ogb/model/tokenizer.hpp"

namespace ogb::model {

// Input-independent backend: every masked position receives the uniform
// distribution 1/V. Tokenization hashes words into [kNumSpecials, V), which
// is harmless here because the returned distribution ignores ids.
class UniformBackend final : public MaskedModelBackend {
 public:
  explicit UniformBackend(std::size_t vocab_size);

  std::string model_id() const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  int mask_token_id() const override { return kMaskId; }
  Encoding tokenize(std::string_view text) const override;
  std::vector<MaskedScores> score_masked(
      const std::vector<std::vector<int>>& batch) const override;
  bool supports_concurrent_scoring() const override { return true; }

 private:
  std::size_t vocab_size_;
};

// Backend whose distributions come from an explicit table keyed by the full
// token-id sequence. Used to exercise the scorer against a hand-checkable
// oracle; scoring a sequence/position without a registered table throws.
class TabulatedBackend final : public MaskedModelBackend {
 public:
  explicit TabulatedBackend(Vocabulary vocab);

  void set_distribution(const std::vector<int>& sequence, std::size_t position,
                        std::vector<double> probs);

  std::string model_id() const override { return "tabulated"; }
  std::size_t vocab_size() const override { return tokenizer_.vocab().size(); }
  int mask_token_id() const override { return kMaskId; }
  Encoding tokenize(std::string_view text) const override;
  std::vector<MaskedScores> score_masked(
      const std::vector<std::vector<int>>& batch) const override;
  bool supports_concurrent_scoring() const override { return true; }

  const WordTokenizer& tokenizer() const { return tokenizer_; }

 private:
  WordTokenizer tokenizer_;
  std::map<std::vector<int>, std::map<std::size_t, std::vector<double>>> table_;
};

}  // namespace ogb::model
