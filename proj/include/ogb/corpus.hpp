#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ogb/lexicon.hpp"

namespace ogb::corpus {

// Closed-open interval in code points.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

// One filled template. Spans index `sentence` by code point and extract the
// person noun / profession surfaces exactly.
struct CorpusInstance {
  std::string template_id;
  std::string person_surface;
  lexicon::GenderClass gender = lexicon::GenderClass::Neutral;
  std::string profession_surface;
  std::string sentence;
  Span person_span;
  Span profession_span;

  bool operator==(const CorpusInstance&) const = default;
};

struct CorpusSplit {
  std::vector<CorpusInstance> train;
  std::vector<CorpusInstance> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
  std::set<std::string> train_professions;
  std::set<std::string> test_professions;
};

// Cartesian expansion: template-major, then person noun, then profession.
// |result| == |templates| * |person_nouns| * |professions|.
std::vector<CorpusInstance> build_corpus(const lexicon::Lexicon& lex);

// Partitions the profession set with a seeded Fisher-Yates shuffle
// (mt19937_64; see util/rng.hpp); ceil(train_fraction * #professions)
// professions go to train and every instance follows its profession.
// Throws TooFewProfessions when the corpus has fewer than two professions.
CorpusSplit split_corpus(const std::vector<CorpusInstance>& corpus,
                         double train_fraction, std::uint64_t seed);

// Line-delimited JSON records, one instance per line. load(save(x)) == x.
void save_corpus(const std::vector<CorpusInstance>& corpus,
                 const std::string& path);
std::vector<CorpusInstance> load_corpus(const std::string& path);

// Record codec shared by save/load (and the scored-results reader).
std::string instance_to_json_line(const CorpusInstance& inst);
CorpusInstance instance_from_json_line(const std::string& line,
                                       std::size_t line_number);

// Split persistence: train/test corpus files plus a manifest record.
void save_split(const CorpusSplit& split, const std::string& train_path,
                const std::string& test_path, const std::string& manifest_path);

}  // namespace ogb::corpus
