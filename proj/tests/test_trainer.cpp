#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "ogb/model/encoder.hpp"
#include "ogb/model/mock.hpp"
#include "ogb/trainer.hpp"

using namespace ogb;
using model::EncoderArch;
using model::ParamClass;
using model::TinyEncoder;
using trainer::FreezePolicy;
using trainer::PolicyName;

namespace {

EncoderArch tiny_arch() {
  EncoderArch arch;
  arch.hidden_size = 8;
  arch.num_layers = 2;
  arch.num_heads = 2;
  arch.intermediate_size = 32;
  arch.max_positions = 16;
  return arch;
}

std::unique_ptr<TinyEncoder> toy_model(std::uint64_t seed = 11) {
  const auto instances = corpus::build_corpus(test::toy_lexicon());
  model::Vocabulary vocab;
  for (const auto& inst : instances) {
    for (const auto& tok : model::split_text(inst.sentence)) vocab.add(tok.text);
  }
  while (vocab.size() < 32) vocab.add("filler" + std::to_string(vocab.size()));
  return TinyEncoder::random_init(tiny_arch(), std::move(vocab), "toy", seed);
}

// snapshot of every tensor's bytes
std::vector<std::vector<double>> snapshot(TinyEncoder& m) {
  std::vector<std::vector<double>> out;
  for (const auto& t : m.tensors()) out.push_back(t.data);
  return out;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("policy definitions pin their component sets") {
  CHECK(FreezePolicy::make(PolicyName::LN).components ==
        std::set<ParamClass>{ParamClass::LayerNorm});
  CHECK(FreezePolicy::make(PolicyName::LN_PE).components ==
        std::set<ParamClass>{ParamClass::LayerNorm,
                             ParamClass::PositionalEmbedding});
  CHECK(FreezePolicy::make(PolicyName::LN_PE_WE).components ==
        std::set<ParamClass>{ParamClass::LayerNorm,
                             ParamClass::PositionalEmbedding,
                             ParamClass::WordEmbedding});
  CHECK(FreezePolicy::make(PolicyName::FULL).selects(ParamClass::Other));
  CHECK(FreezePolicy::parse("LN_PE").name == PolicyName::LN_PE);
  CHECK(FreezePolicy::parse("FULL").to_string() == "FULL");
  try {
    FreezePolicy::parse("LNPE");
    FAIL("expected UsageError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UsageError);
  }
}

TEST_CASE("select_trainable: FULL selects every tensor, LN selects 96 scalars") {
  auto m = toy_model();
  const auto all = trainer::select_trainable(*m, FreezePolicy::make(PolicyName::FULL));
  CHECK(all.size() == m->tensors().size());

  const auto ln = trainer::select_trainable(*m, FreezePolicy::make(PolicyName::LN));
  std::size_t scalars = 0;
  for (const auto& name : ln) scalars += m->tensor(name).count();
  CHECK(scalars == 96);  // (2 layers * 2 + 2) norms * 2 * hidden 8
  for (const auto& name : ln) {
    CHECK(m->tensor(name).cls == ParamClass::LayerNorm);
  }
}

TEST_CASE("an unclassified inventory entry is rejected") {
  std::vector<model::ParamInfo> inventory{
      {"good", ParamClass::LayerNorm, 16},
      {"mystery", ParamClass::Unclassified, 4},
  };
  try {
    trainer::select_trainable(inventory, FreezePolicy::make(PolicyName::LN));
    FAIL("expected UnclassifiableParameter");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnclassifiableParameter);
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
  }
}

TEST_CASE("count_trainable on the tiny model: nesting and closure") {
  auto m = toy_model();
  const auto ln = trainer::count_trainable(*m, FreezePolicy::make(PolicyName::LN));
  const auto ln_pe = trainer::count_trainable(*m, FreezePolicy::make(PolicyName::LN_PE));
  const auto ln_pe_we =
      trainer::count_trainable(*m, FreezePolicy::make(PolicyName::LN_PE_WE));
  const auto full = trainer::count_trainable(*m, FreezePolicy::make(PolicyName::FULL));

  CHECK(ln.trainable_count == 96);
  CHECK(ln_pe.trainable_count == 96 + 16 * 8);
  CHECK(ln_pe_we.trainable_count == 96 + 16 * 8 + 32 * 8);

  // monotone nesting
  CHECK(ln.trainable_count < ln_pe.trainable_count);
  CHECK(ln_pe.trainable_count < ln_pe_we.trainable_count);
  CHECK(ln_pe_we.trainable_count <= full.trainable_count);

  // accounting closure: FULL equals the sum over all tensors
  std::size_t sum = 0;
  for (const auto& t : m->tensors()) sum += t.count();
  CHECK(full.trainable_count == sum);
  CHECK(full.total_count == sum);
  CHECK(full.fraction == doctest::Approx(1.0));
  CHECK(ln.fraction ==
        doctest::Approx(static_cast<double>(ln.trainable_count) / sum)
            .epsilon(1e-6));

  // tied decoder: the word-embedding table is one tensor, counted once
  CHECK(ln_pe_we.trainable_count - ln_pe.trainable_count == 32 * 8);
  std::size_t word_tensors = 0;
  for (const auto& t : m->tensors()) {
    word_tensors += t.cls == ParamClass::WordEmbedding;
  }
  CHECK(word_tensors == 1);
}

TEST_CASE("finetune under LN: frozen tensors are bit-identical, a norm moves") {
  auto m = toy_model();
  const auto train_corpus = corpus::build_corpus(test::toy_lexicon());
  const auto before = snapshot(*m);

  trainer::TrainConfig config;
  config.epochs = 1;
  config.batch_size = 4;
  config.seed = 3;
  config.learning_rate = 1e-3;
  const auto log =
      trainer::finetune(*m, train_corpus, FreezePolicy::make(PolicyName::LN), config);
  CHECK(log.epoch_loss.size() == 1);
  CHECK(log.steps > 0);

  bool any_norm_changed = false;
  const auto& tensors = m->tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].cls == ParamClass::LayerNorm) {
      any_norm_changed = any_norm_changed || !bit_identical(before[i], tensors[i].data);
    } else {
      CHECK(bit_identical(before[i], tensors[i].data));
    }
  }
  CHECK(any_norm_changed);
}

TEST_CASE("finetune FULL with learning rate zero changes nothing") {
  auto m = toy_model();
  const auto train_corpus = corpus::build_corpus(test::toy_lexicon());
  const auto before = snapshot(*m);

  trainer::TrainConfig config;
  config.epochs = 3;
  config.learning_rate = 0.0;
  config.seed = 1;
  const auto log = trainer::finetune(*m, train_corpus,
                                     FreezePolicy::make(PolicyName::FULL), config);
  CHECK(log.epoch_loss.size() == 3);
  for (double loss : log.epoch_loss) CHECK(loss > 0.0);
  const auto& tensors = m->tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    CHECK(bit_identical(before[i], tensors[i].data));
  }
}

TEST_CASE("finetune is deterministic in the training seed") {
  const auto train_corpus = corpus::build_corpus(test::toy_lexicon());
  trainer::TrainConfig config;
  config.epochs = 2;
  config.batch_size = 4;
  config.seed = 21;
  config.learning_rate = 1e-3;

  auto a = toy_model(5);
  auto b = toy_model(5);
  trainer::finetune(*a, train_corpus, FreezePolicy::make(PolicyName::LN_PE), config);
  trainer::finetune(*b, train_corpus, FreezePolicy::make(PolicyName::LN_PE), config);
  for (std::size_t i = 0; i < a->tensors().size(); ++i) {
    CHECK(bit_identical(a->tensors()[i].data, b->tensors()[i].data));
  }

  auto c = toy_model(5);
  auto other = config;
  other.seed = 22;
  trainer::finetune(*c, train_corpus, FreezePolicy::make(PolicyName::LN_PE), other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a->tensors().size(); ++i) {
    any_diff = any_diff || !bit_identical(a->tensors()[i].data, c->tensors()[i].data);
  }
  CHECK(any_diff);
}

TEST_CASE("finetune rejects an empty corpus and bad config") {
  auto m = toy_model();
  trainer::TrainConfig config;
  try {
    trainer::finetune(*m, {}, FreezePolicy::make(PolicyName::LN), config);
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCorpus);
  }
  const auto corpus_ok = corpus::build_corpus(test::toy_lexicon());
  config.epochs = 0;
  CHECK_THROWS_AS(
      trainer::finetune(*m, corpus_ok, FreezePolicy::make(PolicyName::LN), config),
      Error);
  config.epochs = 1;
  config.mask_probability = 1.5;
  CHECK_THROWS_AS(
      trainer::finetune(*m, corpus_ok, FreezePolicy::make(PolicyName::LN), config),
      Error);
}

TEST_CASE("training reduces the loss on a learnable corpus") {
  // FULL policy with a healthy learning rate should fit 24 sentences
  auto m = toy_model(9);
  const auto train_corpus = corpus::build_corpus(test::toy_lexicon());
  trainer::TrainConfig config;
  config.epochs = 30;
  config.batch_size = 8;
  config.learning_rate = 5e-3;
  config.seed = 17;
  const auto log = trainer::finetune(*m, train_corpus,
                                     FreezePolicy::make(PolicyName::FULL), config);
  const double first = log.epoch_loss.front();
  const double last = log.epoch_loss.back();
  CHECK(last < first * 0.8);
}
