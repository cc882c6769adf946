#include "ogb/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ogb/model/tokenizer.hpp"
#include "ogb/util/rng.hpp"

namespace ogb::trainer {

using model::ParamClass;

FreezePolicy FreezePolicy::make(PolicyName name) {
  FreezePolicy p;
  p.name = name;
  switch (name) {
    case PolicyName::LN:
      p.components = {ParamClass::LayerNorm};
      break;
    case PolicyName::LN_PE:
      p.components = {ParamClass::LayerNorm, ParamClass::PositionalEmbedding};
      break;
    case PolicyName::LN_PE_WE:
      p.components = {ParamClass::LayerNorm, ParamClass::PositionalEmbedding,
                      ParamClass::WordEmbedding};
      break;
    case PolicyName::FULL:
      break;  // selects everything regardless of class
  }
  return p;
}

FreezePolicy FreezePolicy::parse(const std::string& text) {
  if (text == "LN") return make(PolicyName::LN);
  if (text == "LN_PE") return make(PolicyName::LN_PE);
  if (text == "LN_PE_WE") return make(PolicyName::LN_PE_WE);
  if (text == "FULL") return make(PolicyName::FULL);
  raise(ErrorKind::UsageError,
        "unknown freeze policy '" + text +
            "' (expected LN, LN_PE, LN_PE_WE or FULL)");
}

std::string FreezePolicy::to_string() const {
  switch (name) {
    case PolicyName::LN: return "LN";
    case PolicyName::LN_PE: return "LN_PE";
    case PolicyName::LN_PE_WE: return "LN_PE_WE";
    case PolicyName::FULL: return "FULL";
  }
  return "?";
}

bool FreezePolicy::selects(ParamClass cls) const {
  if (name == PolicyName::FULL) return true;
  return components.count(cls) > 0;
}

std::vector<std::string> select_trainable(
    const std::vector<model::ParamInfo>& inventory,
    const FreezePolicy& policy) {
  std::vector<std::string> selected;
  for (const auto& info : inventory) {
    if (info.cls == ParamClass::Unclassified) {
      raise(ErrorKind::UnclassifiableParameter,
            "parameter '" + info.name + "' has no structural class");
    }
    if (policy.selects(info.cls)) selected.push_back(info.name);
  }
  return selected;
}

std::vector<std::string> select_trainable(
    const model::MaskedModelBackend& backend, const FreezePolicy& policy) {
  return select_trainable(backend.parameter_inventory(), policy);
}

ParamReport count_trainable(const std::vector<model::ParamInfo>& inventory,
                            const FreezePolicy& policy) {
  ParamReport report;
  report.policy = policy;
  for (const auto& info : inventory) {
    if (info.cls == ParamClass::Unclassified) {
      raise(ErrorKind::UnclassifiableParameter,
            "parameter '" + info.name + "' has no structural class");
    }
    report.total_count += info.count;
    if (policy.selects(info.cls)) report.trainable_count += info.count;
  }
  if (report.total_count > 0) {
    report.fraction = static_cast<double>(report.trainable_count) /
                      static_cast<double>(report.total_count);
  }
  return report;
}

ParamReport count_trainable(const model::MaskedModelBackend& backend,
                            const FreezePolicy& policy) {
  return count_trainable(backend.parameter_inventory(), policy);
}

namespace {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

// BERT-style dynamic masking over the non-special tokens: with probability
// `mask_probability` a token becomes a prediction target; of those, 80% are
// replaced by [MASK], 10% by a random vocabulary token, 10% kept.
void apply_dynamic_mask(const std::vector<int>& tokens, double mask_probability,
                        std::size_t vocab_size, rng::Engine& eng,
                        std::vector<int>& input_ids, std::vector<int>& labels) {
  input_ids = tokens;
  labels.assign(tokens.size(), -1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == model::kClsId || tokens[i] == model::kSepId ||
        tokens[i] == model::kPadId) {
      continue;
    }
    if (rng::unit_double(eng) >= mask_probability) continue;
    labels[i] = tokens[i];
    const double action = rng::unit_double(eng);
    if (action < 0.8) {
      input_ids[i] = model::kMaskId;
    } else if (action < 0.9) {
      input_ids[i] = static_cast<int>(rng::bounded(eng, vocab_size));
    }  // else: keep the original token
  }
}

}  // namespace

TrainLog finetune(model::TrainableBackend& backend,
                  const std::vector<corpus::CorpusInstance>& train_corpus,
                  const FreezePolicy& policy, const TrainConfig& config) {
  if (train_corpus.empty()) {
    raise(ErrorKind::EmptyCorpus, "cannot fine-tune on an empty corpus");
  }
  if (config.epochs <= 0 || config.batch_size <= 0) {
    raise(ErrorKind::UsageError, "epochs and batch_size must be positive");
  }
  if (!(config.mask_probability > 0.0 && config.mask_probability < 1.0)) {
    raise(ErrorKind::UsageError, "mask_probability must lie in (0, 1)");
  }

  const auto started = std::chrono::steady_clock::now();

  // resolve the trainable tensor set up front
  const auto selected_names = select_trainable(backend, policy);
  const std::unordered_set<std::string> selected(selected_names.begin(),
                                                 selected_names.end());
  auto tensors = backend.parameter_tensors();
  std::vector<model::ParamTensor> trainable;
  for (auto& t : tensors) {
    if (selected.count(t.name)) trainable.push_back(t);
  }

  std::vector<AdamState> adam(trainable.size());
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    adam[i].m.assign(trainable[i].count, 0.0);
    adam[i].v.assign(trainable[i].count, 0.0);
  }

  // tokenize once; masking is re-sampled every epoch
  std::vector<std::vector<int>> tokenized;
  tokenized.reserve(train_corpus.size());
  for (const auto& inst : train_corpus) {
    tokenized.push_back(backend.tokenize(inst.sentence).ids);
  }

  auto eng = rng::make_engine(config.seed);
  TrainLog log;
  std::size_t adam_step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(tokenized.size());
    std::iota(order.begin(), order.end(), 0);
    rng::shuffle(order, eng);

    double epoch_loss_sum = 0.0;
    std::size_t epoch_masked = 0;

    for (std::size_t batch_begin = 0; batch_begin < order.size();
         batch_begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t batch_end =
          std::min(order.size(),
                   batch_begin + static_cast<std::size_t>(config.batch_size));

      backend.zero_grad();
      double batch_loss = 0.0;
      std::size_t batch_masked = 0;
      std::vector<int> input_ids, labels;
      for (std::size_t k = batch_begin; k < batch_end; ++k) {
        apply_dynamic_mask(tokenized[order[k]], config.mask_probability,
                           backend.vocab_size(), eng, input_ids, labels);
        const auto [loss, masked] = backend.mlm_loss_backward(input_ids, labels);
        batch_loss += loss;
        batch_masked += masked;
      }
      if (batch_masked == 0) continue;  // nothing was masked this draw

      // mean cross entropy over the batch's masked tokens
      backend.scale_grad(1.0 / static_cast<double>(batch_masked));
      epoch_loss_sum += batch_loss;
      epoch_masked += batch_masked;

      ++adam_step;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_step));
      for (std::size_t t = 0; t < trainable.size(); ++t) {
        auto& tensor = trainable[t];
        auto& state = adam[t];
        for (std::size_t j = 0; j < tensor.count; ++j) {
          const double g = tensor.grad[j];
          state.m[j] = config.adam_beta1 * state.m[j] + (1.0 - config.adam_beta1) * g;
          state.v[j] = config.adam_beta2 * state.v[j] + (1.0 - config.adam_beta2) * g * g;
          const double mhat = state.m[j] / bc1;
          const double vhat = state.v[j] / bc2;
          tensor.data[j] -=
              config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
        }
      }
      ++log.steps;
    }

    log.epoch_loss.push_back(
        epoch_masked == 0 ? 0.0
                          : epoch_loss_sum / static_cast<double>(epoch_masked));
  }

  log.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  return log;
}

}  // namespace ogb::trainer
