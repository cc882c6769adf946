#include "ogb/scorer.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ogb/util/numfmt.hpp"

namespace ogb::scorer {

using nlohmann::json;

namespace {

std::string describe(const corpus::CorpusInstance& inst) {
  return "instance(template=" + inst.template_id + ", person=" +
         inst.person_surface + ", profession=" + inst.profession_surface + ")";
}

// Token indices whose spans exactly tile the character interval: every
// token overlapping the interval must lie inside it, and the first/last
// overlapped token must touch the interval's ends.
std::vector<std::size_t> align_span(const model::Encoding& enc,
                                    const corpus::Span& span,
                                    const std::string& what,
                                    const corpus::CorpusInstance& inst) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < enc.ids.size(); ++i) {
    const auto& ts = enc.spans[i];
    if (ts.empty()) continue;  // special token
    const bool overlaps = ts.begin < span.end && span.begin < ts.end;
    if (!overlaps) continue;
    if (ts.begin < span.begin || ts.end > span.end) {
      raise(ErrorKind::AlignmentFailure,
            what + " span [" + std::to_string(span.begin) + "," +
                std::to_string(span.end) + ") cuts through token " +
                std::to_string(i) + " at [" + std::to_string(ts.begin) + "," +
                std::to_string(ts.end) + ") in " + describe(inst));
    }
    hits.push_back(i);
  }
  if (hits.empty()) {
    raise(ErrorKind::AlignmentFailure,
          what + " span aligns to no tokens in " + describe(inst));
  }
  if (enc.spans[hits.front()].begin != span.begin ||
      enc.spans[hits.back()].end != span.end) {
    raise(ErrorKind::AlignmentFailure,
          what + " span is not tiled by whole tokens in " + describe(inst));
  }
  return hits;
}

MaskedQuery build_query(const corpus::CorpusInstance& inst,
                        const model::MaskedModelBackend& backend,
                        bool mask_profession) {
  const model::Encoding enc = backend.tokenize(inst.sentence);
  bool any_content = false;
  for (const auto& ts : enc.spans) {
    if (!ts.empty()) { any_content = true; break; }
  }
  if (!any_content) {
    raise(ErrorKind::EmptyTokenization,
          "sentence tokenizes to nothing in " + describe(inst));
  }

  const auto person_idx = align_span(enc, inst.person_span, "person", inst);

  MaskedQuery query;
  query.token_ids = enc.ids;
  for (std::size_t i : person_idx) {
    query.person_positions.push_back(i);
    query.person_target_ids.push_back(enc.ids[i]);
    query.token_ids[i] = backend.mask_token_id();
  }
  if (mask_profession) {
    for (std::size_t i : align_span(enc, inst.profession_span, "profession", inst)) {
      query.token_ids[i] = backend.mask_token_id();
    }
  }
  return query;
}

double probability_from_scores(const model::MaskedModelBackend& backend,
                               const MaskedQuery& query,
                               const model::MaskedScores& scores) {
  double sum = 0.0;
  for (std::size_t i = 0; i < query.person_positions.size(); ++i) {
    const auto& dist = scores.at(query.person_positions[i]);
    if (dist.size() != backend.vocab_size()) {
      raise(ErrorKind::BackendFailure,
            "backend returned a distribution of wrong size");
    }
    double total = 0.0;
    for (double p : dist) {
      if (p < 0.0) {
        raise(ErrorKind::BackendFailure,
              "backend returned a negative probability");
      }
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-4) {
      raise(ErrorKind::BackendFailure,
            "backend distribution sums to " + std::to_string(total));
    }
    const double p = dist[static_cast<std::size_t>(query.person_target_ids[i])];
    if (p == 0.0) {
      raise(ErrorKind::ZeroProbability,
            "target token received probability exactly 0 at position " +
                std::to_string(query.person_positions[i]));
    }
    sum += p;
  }
  return sum / static_cast<double>(query.person_positions.size());
}

ScoredInstance make_scored(const corpus::CorpusInstance& inst, double p_person,
                           double p_prior) {
  ScoredInstance s;
  s.instance = inst;
  s.p_person = p_person;
  s.p_prior = p_prior;
  s.ogb = std::log(p_person) - std::log(p_prior);
  return s;
}

}  // namespace

MaskedQuery make_pm(const corpus::CorpusInstance& inst,
                    const model::MaskedModelBackend& backend) {
  return build_query(inst, backend, /*mask_profession=*/false);
}

MaskedQuery make_ppm(const corpus::CorpusInstance& inst,
                     const model::MaskedModelBackend& backend) {
  return build_query(inst, backend, /*mask_profession=*/true);
}

double target_probability(const model::MaskedModelBackend& backend,
                          const MaskedQuery& query) {
  if (query.person_positions.empty() ||
      query.person_positions.size() != query.person_target_ids.size()) {
    raise(ErrorKind::BackendFailure, "malformed masked query");
  }
  const auto scores = backend.score_masked({query.token_ids});
  return probability_from_scores(backend, query, scores.at(0));
}

ScoredInstance score_instance(const model::MaskedModelBackend& backend,
                              const corpus::CorpusInstance& inst) {
  const MaskedQuery pm = make_pm(inst, backend);
  const MaskedQuery ppm = make_ppm(inst, backend);
  const auto scores = backend.score_masked({pm.token_ids, ppm.token_ids});
  const double p_person = probability_from_scores(backend, pm, scores.at(0));
  const double p_prior = probability_from_scores(backend, ppm, scores.at(1));
  return make_scored(inst, p_person, p_prior);
}

namespace {

struct ChunkOutcome {
  std::vector<std::optional<ScoredInstance>> slots;
  std::vector<ScoreFailure> failures;
};

// Scores [begin, end) of the corpus in batches; slots are indexed relative
// to `begin`.
ChunkOutcome score_range(const model::MaskedModelBackend& backend,
                         std::span<const corpus::CorpusInstance> corpus,
                         std::size_t begin, std::size_t end,
                         const ScoreOptions& options) {
  ChunkOutcome out;
  out.slots.resize(end - begin);
  const std::size_t batch = options.batch_size == 0 ? 1 : options.batch_size;

  for (std::size_t chunk_begin = begin; chunk_begin < end;
       chunk_begin += batch) {
    const std::size_t chunk_end = std::min(end, chunk_begin + batch);

    struct Prepared {
      std::size_t index;
      MaskedQuery pm;
      MaskedQuery ppm;
    };
    std::vector<Prepared> prepared;
    for (std::size_t i = chunk_begin; i < chunk_end; ++i) {
      try {
        Prepared p;
        p.index = i;
        p.pm = make_pm(corpus[i], backend);
        p.ppm = make_ppm(corpus[i], backend);
        prepared.push_back(std::move(p));
      } catch (const Error& e) {
        if (options.on_error == ErrorPolicy::FailFast) throw;
        out.failures.push_back(ScoreFailure{i, e.what()});
      }
    }
    if (prepared.empty()) continue;

    std::vector<std::vector<int>> sequences;
    sequences.reserve(prepared.size() * 2);
    for (const auto& p : prepared) {
      sequences.push_back(p.pm.token_ids);
      sequences.push_back(p.ppm.token_ids);
    }
    const auto scores = backend.score_masked(sequences);
    if (scores.size() != sequences.size()) {
      raise(ErrorKind::BackendFailure,
            "backend returned wrong number of score sets");
    }

    for (std::size_t k = 0; k < prepared.size(); ++k) {
      const auto& p = prepared[k];
      try {
        const double p_person =
            probability_from_scores(backend, p.pm, scores[2 * k]);
        const double p_prior =
            probability_from_scores(backend, p.ppm, scores[2 * k + 1]);
        out.slots[p.index - begin] = make_scored(corpus[p.index], p_person, p_prior);
      } catch (const Error& e) {
        if (options.on_error == ErrorPolicy::FailFast) {
          throw Error(e.kind(),
                      std::string(e.what()) + " while scoring " +
                          describe(corpus[p.index]));
        }
        out.failures.push_back(ScoreFailure{p.index, e.what()});
      }
    }
  }
  return out;
}

}  // namespace

ScoreResult score_corpus(const model::MaskedModelBackend& backend,
                         std::span<const corpus::CorpusInstance> corpus,
                         const ScoreOptions& options) {
  if (corpus.empty()) {
    raise(ErrorKind::EmptyCorpus, "cannot score an empty corpus");
  }

  const unsigned workers =
      (options.parallelism > 1 && backend.supports_concurrent_scoring())
          ? std::min<unsigned>(options.parallelism,
                               static_cast<unsigned>(corpus.size()))
          : 1;

  std::vector<ChunkOutcome> outcomes;
  std::vector<std::size_t> offsets;
  if (workers == 1) {
    outcomes.push_back(score_range(backend, corpus, 0, corpus.size(), options));
    offsets.push_back(0);
  } else {
    const std::size_t per = (corpus.size() + workers - 1) / workers;
    std::vector<std::future<ChunkOutcome>> futures;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * per;
      const std::size_t end = std::min(corpus.size(), begin + per);
      if (begin >= end) break;
      offsets.push_back(begin);
      futures.push_back(std::async(std::launch::async, [&, begin, end] {
        return score_range(backend, corpus, begin, end, options);
      }));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  }

  ScoreResult result;
  for (std::size_t o = 0; o < outcomes.size(); ++o) {
    for (auto& slot : outcomes[o].slots) {
      if (slot.has_value()) result.scored.push_back(std::move(*slot));
    }
    for (auto& f : outcomes[o].failures) result.failures.push_back(std::move(f));
  }
  return result;
}

void save_scored(const std::vector<ScoredInstance>& scored,
                 const std::string& model_id, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing, "cannot write scored results '" + path + "'");
  }
  const std::string model_field = json(model_id).dump();
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& s = scored[i];
    out << "{\"index\":" << i
        << ",\"template_id\":" << json(s.instance.template_id).dump()
        << ",\"gender\":" << json(lexicon::to_string(s.instance.gender)).dump()
        << ",\"person_surface\":" << json(s.instance.person_surface).dump()
        << ",\"profession_surface\":" << json(s.instance.profession_surface).dump()
        << ",\"p_person\":" << numfmt::exact(s.p_person)
        << ",\"p_prior\":" << numfmt::exact(s.p_prior)
        << ",\"ogb\":" << numfmt::exact(s.ogb)
        << ",\"model_id\":" << model_field << "}\n";
  }
}

std::vector<ScoredRecord> load_scored(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "scored results '" + path + "' do not exist");
  }
  std::vector<ScoredRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    json rec;
    try {
      rec = json::parse(line);
      ScoredRecord r;
      r.index = rec.at("index").get<std::size_t>();
      r.template_id = rec.at("template_id").get<std::string>();
      r.gender = lexicon::gender_from_string(rec.at("gender").get<std::string>());
      r.person_surface = rec.at("person_surface").get<std::string>();
      r.profession_surface = rec.at("profession_surface").get<std::string>();
      r.p_person = rec.at("p_person").get<double>();
      r.p_prior = rec.at("p_prior").get<double>();
      r.ogb = rec.at("ogb").get<double>();
      r.model_id = rec.at("model_id").get<std::string>();
      records.push_back(std::move(r));
    } catch (const Error&) {
      raise(ErrorKind::MalformedRecord,
            "line " + std::to_string(line_number) + ": bad gender value");
    } catch (const json::exception& e) {
      raise(ErrorKind::MalformedRecord,
            "line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace ogb::scorer
