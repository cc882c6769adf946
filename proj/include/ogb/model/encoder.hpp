#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ogb/model/backend.hpp"
#include "ogb/model/tokenizer.hpp"

namespace ogb::model {

// BERT-family encoder shape. The vocabulary size lives in the Vocabulary;
// everything else is here.
struct EncoderArch {
  int hidden_size = 8;
  int num_layers = 2;
  int num_heads = 2;
  int intermediate_size = 32;
  int max_positions = 16;
  int type_vocab_size = 0;  // 0 = no token-type table
  double layer_norm_eps = 1e-12;
};

// Analytic parameter inventory of this architecture with a tied decoder:
// the word-embedding table doubles as the output projection and is listed
// once, classified WordEmbedding. Token-type tables, attention/FFN weights,
// the MLM-head dense transform and the decoder bias are Other; every
// normalization gain/bias (embedding norm, two per layer, head norm) is
// LayerNorm. Matches the tensors a constructed TinyEncoder exposes.
std::vector<ParamInfo> encoder_inventory(const EncoderArch& arch,
                                         std::size_t vocab_size);

// Published architecture constants for MuRIL-base, used for analytic
// parameter accounting when the 238M-parameter checkpoint itself is not on
// disk (count-params accepts the model id "muril-base").
EncoderArch muril_base_arch();
inline constexpr std::size_t kMurilBaseVocabSize = 197285;

struct Tensor {
  std::string name;
  ParamClass cls = ParamClass::Other;
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;

  std::size_t count() const { return data.size(); }
};

// Small trainable masked-LM encoder: word/position(/type) embeddings with a
// norm, post-norm transformer layers, GELU activations, and an MLM head
// whose decoder is weight-tied to the word embeddings. Double precision,
// single-threaded math; intended for desk-scale experiments and tests.
class TinyEncoder final : public TrainableBackend {
 public:
  TinyEncoder(EncoderArch arch, Vocabulary vocab, std::string model_id);

  // Seeds all weight tables from `seed` (normal, sigma 0.02); norms start
  // at gain 1 / bias 0, biases at 0.
  static std::unique_ptr<TinyEncoder> random_init(const EncoderArch& arch,
                                                  Vocabulary vocab,
                                                  std::string model_id,
                                                  std::uint64_t seed);

  // MaskedModelBackend
  std::string model_id() const override { return model_id_; }
  std::size_t vocab_size() const override { return tokenizer_.vocab().size(); }
  int mask_token_id() const override { return kMaskId; }
  Encoding tokenize(std::string_view text) const override;
  std::vector<MaskedScores> score_masked(
      const std::vector<std::vector<int>>& batch) const override;
  std::vector<ParamInfo> parameter_inventory() const override;
  bool supports_concurrent_scoring() const override { return true; }

  // TrainableBackend
  std::vector<ParamTensor> parameter_tensors() override;
  void zero_grad() override;
  void scale_grad(double factor) override;
  std::pair<double, std::size_t> mlm_loss_backward(
      const std::vector<int>& input_ids,
      const std::vector<int>& labels) override;

  const EncoderArch& arch() const { return arch_; }
  const WordTokenizer& tokenizer() const { return tokenizer_; }
  void set_model_id(std::string id) { model_id_ = std::move(id); }

  const std::vector<Tensor>& tensors() const { return tensors_; }
  Tensor& tensor(const std::string& name);
  const Tensor& tensor(const std::string& name) const;

  // Binary checkpoint (header JSON + little-endian doubles); bit-exact
  // round trip.
  void save(const std::string& path) const;
  static std::unique_ptr<TinyEncoder> load(const std::string& path);

 private:
  struct Workspace;  // per-sequence activation cache

  void build_tensors();
  // Forward to the final hidden states; fills `ws` when training.
  void encode_sequence(const std::vector<int>& ids, Workspace& ws,
                       bool keep_cache) const;

  EncoderArch arch_;
  WordTokenizer tokenizer_;
  std::string model_id_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> tensor_index_;
};

}  // namespace ogb::model
