#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ogb/corpus.hpp"
#include "ogb/model/backend.hpp"

namespace ogb::trainer {

enum class PolicyName { LN, LN_PE, LN_PE_WE, FULL };

// A named subset of parameter classes permitted to train. FULL means every
// parameter regardless of class.
struct FreezePolicy {
  PolicyName name = PolicyName::LN;
  std::set<model::ParamClass> components;

  static FreezePolicy make(PolicyName name);
  static FreezePolicy parse(const std::string& text);  // "LN", "LN_PE", ...
  std::string to_string() const;
  bool selects(model::ParamClass cls) const;
};

struct TrainConfig {
  int epochs = 3;
  double learning_rate = 2e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double mask_probability = 0.15;
};

struct ParamReport {
  FreezePolicy policy;
  std::size_t trainable_count = 0;
  std::size_t total_count = 0;
  double fraction = 0.0;
};

// Names of the parameters whose structural class the policy selects.
// Throws UnclassifiableParameter when the inventory contains an
// Unclassified entry.
std::vector<std::string> select_trainable(
    const model::MaskedModelBackend& backend, const FreezePolicy& policy);
std::vector<std::string> select_trainable(
    const std::vector<model::ParamInfo>& inventory, const FreezePolicy& policy);

ParamReport count_trainable(const model::MaskedModelBackend& backend,
                            const FreezePolicy& policy);
ParamReport count_trainable(const std::vector<model::ParamInfo>& inventory,
                            const FreezePolicy& policy);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean masked-token cross entropy
  std::size_t steps = 0;
  double wall_seconds = 0.0;
};

// Masked-LM fine-tuning with Adam on the policy-selected parameters only;
// every other tensor is left untouched. Dynamic masking at
// config.mask_probability per non-special token, re-sampled every epoch
// (80% mask / 10% random / 10% keep). Deterministic given config.seed.
TrainLog finetune(model::TrainableBackend& backend,
                  const std::vector<corpus::CorpusInstance>& train_corpus,
                  const FreezePolicy& policy, const TrainConfig& config);

}  // namespace ogb::trainer
