#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ogb/corpus.hpp"
#include "ogb/model/backend.hpp"

namespace ogb::scorer {

// Token-level masked query. person_positions all hold the mask id inside
// token_ids; person_target_ids are the noun's subword ids, same length.
struct MaskedQuery {
  std::vector<int> token_ids;
  std::vector<std::size_t> person_positions;
  std::vector<int> person_target_ids;
};

struct ScoredInstance {
  corpus::CorpusInstance instance;
  double p_person = 0.0;
  double p_prior = 0.0;
  double ogb = 0.0;  // log(p_person) - log(p_prior), natural log
};

// Tokenizes the intact sentence, then replaces the person noun's aligned
// token positions with mask ids. Context tokenization is untouched. Throws
// AlignmentFailure when the span does not cover whole tokens,
// EmptyTokenization when nothing aligns.
MaskedQuery make_pm(const corpus::CorpusInstance& inst,
                    const model::MaskedModelBackend& backend);

// As make_pm, with the profession's aligned positions masked in place as
// well (one mask per subword), so person positions match the PM query.
MaskedQuery make_ppm(const corpus::CorpusInstance& inst,
                     const model::MaskedModelBackend& backend);

// One scoring pass with all masks present; arithmetic mean of the target
// probability over the person positions. Throws ZeroProbability when a
// target receives exactly zero (degenerate backend; never clamped).
double target_probability(const model::MaskedModelBackend& backend,
                          const MaskedQuery& query);

ScoredInstance score_instance(const model::MaskedModelBackend& backend,
                              const corpus::CorpusInstance& inst);

enum class ErrorPolicy { FailFast, SkipAndRecord };

struct ScoreOptions {
  std::size_t batch_size = 8;
  ErrorPolicy on_error = ErrorPolicy::FailFast;
  // > 1 enables concurrent chunks when the backend declares support.
  unsigned parallelism = 1;
};

struct ScoreFailure {
  std::size_t index = 0;  // into the input corpus
  std::string message;
};

struct ScoreResult {
  std::vector<ScoredInstance> scored;    // order-preserving
  std::vector<ScoreFailure> failures;    // empty under FailFast success
};

// Scores every instance; batching never changes values (each sequence is
// scored independently). Throws EmptyCorpus on empty input.
ScoreResult score_corpus(const model::MaskedModelBackend& backend,
                         std::span<const corpus::CorpusInstance> corpus,
                         const ScoreOptions& options = {});

// Scored-results file: line-delimited JSON, probabilities and OGB in
// 17-significant-digit scientific decimal text.
struct ScoredRecord {
  std::size_t index = 0;
  std::string template_id;
  lexicon::GenderClass gender = lexicon::GenderClass::Neutral;
  std::string person_surface;
  std::string profession_surface;
  double p_person = 0.0;
  double p_prior = 0.0;
  double ogb = 0.0;
  std::string model_id;
};

void save_scored(const std::vector<ScoredInstance>& scored,
                 const std::string& model_id, const std::string& path);
std::vector<ScoredRecord> load_scored(const std::string& path);

}  // namespace ogb::scorer
