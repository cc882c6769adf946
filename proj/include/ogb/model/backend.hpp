#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ogb::model {

// Structural role of a parameter tensor. Classification is by role in the
// architecture, never by name-string matching.
enum class ParamClass {
  LayerNorm,
  PositionalEmbedding,
  WordEmbedding,
  Other,
  Unclassified,  // present only in broken inventories; selection rejects it
};

const char* to_string(ParamClass c);

struct ParamInfo {
  std::string name;
  ParamClass cls = ParamClass::Unclassified;
  std::size_t count = 0;  // number of scalar elements
};

// Token-level character span, in code points into the tokenized text.
// Special tokens carry the empty span {0, 0}.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const { return begin == end; }
  bool operator==(const TokenSpan&) const = default;
};

struct Encoding {
  std::vector<int> ids;
  std::vector<TokenSpan> spans;  // parallel to ids
};

// Softmax distributions returned for each masked position of one sequence.
struct MaskedScores {
  std::vector<std::size_t> positions;       // ascending
  std::vector<std::vector<double>> probs;   // probs[i] is over the vocab

  const std::vector<double>& at(std::size_t position) const;
};

// Anything that can tokenize text and score masked positions. Scoring is
// deterministic in evaluation mode; distributions are softmax-normalized.
class MaskedModelBackend {
 public:
  virtual ~MaskedModelBackend() = default;

  virtual std::string model_id() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual int mask_token_id() const = 0;

  // Tokenizes intact text, reporting per-token code-point offsets so
  // callers can align character spans to token positions.
  virtual Encoding tokenize(std::string_view text) const = 0;

  // One scoring pass per sequence, all masks present simultaneously.
  // Returns one MaskedScores per input sequence, in order.
  virtual std::vector<MaskedScores> score_masked(
      const std::vector<std::vector<int>>& batch) const = 0;

  // Structural parameter inventory (empty for parameterless mocks).
  virtual std::vector<ParamInfo> parameter_inventory() const { return {}; }

  // Declared capability: true when score_masked may be called from several
  // threads at once.
  virtual bool supports_concurrent_scoring() const { return false; }
};

// A parameter tensor exposed for training. `data` and `grad` stay valid as
// long as the owning backend lives.
struct ParamTensor {
  std::string name;
  ParamClass cls = ParamClass::Other;
  double* data = nullptr;
  double* grad = nullptr;
  std::size_t count = 0;
};

// Backend that can compute masked-language-model gradients.
class TrainableBackend : public MaskedModelBackend {
 public:
  virtual std::vector<ParamTensor> parameter_tensors() = 0;
  virtual void zero_grad() = 0;
  virtual void scale_grad(double factor) = 0;

  // Accumulates gradients of the summed cross entropy over positions where
  // labels[i] >= 0. Returns {summed loss, number of labeled positions}.
  virtual std::pair<double, std::size_t> mlm_loss_backward(
      const std::vector<int>& input_ids, const std::vector<int>& labels) = 0;
};

}  // namespace ogb::model
