#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "helpers.hpp"
#include "ogb/corpus.hpp"
#include "ogb/util/utf8.hpp"

using namespace ogb;
using corpus::CorpusInstance;

namespace {

lexicon::Lexicon sized_lexicon(std::size_t templates, std::size_t nouns,
                               std::size_t professions) {
  lexicon::Lexicon lex;
  for (std::size_t i = 0; i < templates; ++i) {
    lex.templates.push_back(
        {"t" + std::to_string(i), "{PERSON} does {PROFESSION} work."});
  }
  const lexicon::GenderClass classes[] = {lexicon::GenderClass::Masculine,
                                          lexicon::GenderClass::Feminine,
                                          lexicon::GenderClass::Neutral};
  for (std::size_t i = 0; i < nouns; ++i) {
    lex.person_nouns.push_back({"noun" + std::to_string(i), classes[i % 3]});
  }
  for (std::size_t i = 0; i < professions; ++i) {
    lex.professions.push_back({"prof" + std::to_string(i)});
  }
  return lex;
}

void check_spans(const CorpusInstance& inst) {
  CHECK(utf8::substr(inst.sentence, inst.person_span.begin,
                     inst.person_span.end) == inst.person_surface);
  CHECK(utf8::substr(inst.sentence, inst.profession_span.begin,
                     inst.profession_span.end) == inst.profession_surface);
  const bool disjoint = inst.person_span.end <= inst.profession_span.begin ||
                        inst.profession_span.end <= inst.person_span.begin;
  CHECK(disjoint);
}

}  // namespace

TEST_CASE("cartesian cardinality: 2 x 3 x 5 -> 30 instances") {
  const auto instances = corpus::build_corpus(sized_lexicon(2, 3, 5));
  CHECK(instances.size() == 30);
}

TEST_CASE("direct substitution with spans") {
  lexicon::Lexicon lex;
  lex.templates = {{"t", "{PERSON} is a {PROFESSION}."}};
  lex.person_nouns = {{"X", lexicon::GenderClass::Masculine},
                      {"F", lexicon::GenderClass::Feminine},
                      {"N", lexicon::GenderClass::Neutral}};
  lex.professions = {{"Y"}, {"Z"}};
  const auto instances = corpus::build_corpus(lex);
  CHECK(instances[0].sentence == "X is a Y.");
  CHECK(instances[0].person_span == corpus::Span{0, 1});
  CHECK(instances[0].profession_span == corpus::Span{7, 8});
}

TEST_CASE("deterministic order: template-major, then noun, then profession") {
  const auto lex = sized_lexicon(2, 3, 2);
  const auto a = corpus::build_corpus(lex);
  const auto b = corpus::build_corpus(lex);
  CHECK(a == b);
  CHECK(a[0].template_id == "t0");
  CHECK(a[0].person_surface == "noun0");
  CHECK(a[0].profession_surface == "prof0");
  CHECK(a[1].profession_surface == "prof1");
  CHECK(a[2].person_surface == "noun1");
  CHECK(a[6].template_id == "t1");
}

TEST_CASE("devanagari spans extract the original surfaces") {
  const auto instances = corpus::build_corpus(test::small_hindi_lexicon());
  CHECK(instances.size() == 30);
  for (const auto& inst : instances) check_spans(inst);
}

TEST_CASE("profession-before-person templates still produce correct spans") {
  const auto instances = corpus::build_corpus(test::toy_lexicon());
  for (const auto& inst : instances) check_spans(inst);
}

TEST_CASE("split: ceil(fraction * professions) go to train") {
  const auto instances = corpus::build_corpus(sized_lexicon(1, 3, 10));
  const auto split = corpus::split_corpus(instances, 0.8, 7);
  CHECK(split.train_professions.size() == 8);
  CHECK(split.test_professions.size() == 2);
}

TEST_CASE("split: 10 professions x 6 instances -> 48 train / 12 test") {
  const auto instances = corpus::build_corpus(sized_lexicon(2, 3, 10));
  REQUIRE(instances.size() == 60);
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const auto split = corpus::split_corpus(instances, 0.8, seed);
    CHECK(split.train.size() == 48);
    CHECK(split.test.size() == 12);
  }
}

TEST_CASE("split determinism: same seed, same partition") {
  const auto instances = corpus::build_corpus(sized_lexicon(2, 4, 9));
  const auto a = corpus::split_corpus(instances, 0.75, 1234);
  const auto b = corpus::split_corpus(instances, 0.75, 1234);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train_professions == b.train_professions);
}

TEST_CASE("split rejects fewer than two professions") {
  const auto instances = corpus::build_corpus(sized_lexicon(1, 3, 1));
  try {
    corpus::split_corpus(instances, 0.8, 0);
    FAIL("expected TooFewProfessions");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewProfessions);
  }
}

TEST_CASE("corpus file round-trip") {
  test::TempDir dir("corpus");
  const auto instances = corpus::build_corpus(test::small_hindi_lexicon());
  const auto path = dir.file("corpus.jsonl");
  corpus::save_corpus(instances, path);
  CHECK(corpus::load_corpus(path) == instances);
}

TEST_CASE("truncated line reports MalformedRecord with its line number") {
  test::TempDir dir("corpus");
  const auto instances = corpus::build_corpus(sized_lexicon(1, 3, 2));
  const auto path = dir.file("corpus.jsonl");
  corpus::save_corpus(instances, path);
  {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    std::ofstream out(path, std::ios::trunc);
    out << first << "\n" << first.substr(0, first.size() / 2) << "\n";
  }
  try {
    corpus::load_corpus(path);
    FAIL("expected MalformedRecord");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRecord);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("record with lying spans is rejected") {
  test::TempDir dir("corpus");
  auto instances = corpus::build_corpus(sized_lexicon(1, 3, 2));
  instances[0].person_span.begin += 1;
  instances[0].person_span.end += 1;
  const auto path = dir.file("corpus.jsonl");
  corpus::save_corpus(instances, path);
  CHECK_THROWS_AS(corpus::load_corpus(path), Error);
}

TEST_CASE("empty file loads as an empty corpus") {
  test::TempDir dir("corpus");
  const auto path = dir.file("empty.jsonl");
  std::ofstream(path).close();
  CHECK(corpus::load_corpus(path).empty());
}

TEST_CASE("missing file reports FileMissing") {
  try {
    corpus::load_corpus("/nonexistent/corpus.jsonl");
    FAIL("expected FileMissing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FileMissing);
  }
}

TEST_CASE("split files plus manifest persist the partition") {
  test::TempDir dir("corpus");
  const auto instances = corpus::build_corpus(sized_lexicon(2, 3, 5));
  const auto split = corpus::split_corpus(instances, 0.8, 5);
  corpus::save_split(split, dir.file("train.jsonl"), dir.file("test.jsonl"),
                     dir.file("split.json"));
  CHECK(corpus::load_corpus(dir.file("train.jsonl")) == split.train);
  CHECK(corpus::load_corpus(dir.file("test.jsonl")) == split.test);
  std::ifstream manifest(dir.file("split.json"));
  std::string text((std::istreambuf_iterator<char>(manifest)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("\"seed\": 5") != std::string::npos);
}

TEST_CASE("property: corpus laws hold on randomized lexica") {
  auto eng = rng::make_engine(77);
  int cases = 0;
  for (int round = 0; round < 220; ++round) {
    const auto lex = test::random_lexicon(eng);
    const auto instances = corpus::build_corpus(lex);

    // cardinality law
    CHECK(instances.size() == lex.templates.size() * lex.person_nouns.size() *
                                  lex.professions.size());

    // span correctness
    for (const auto& inst : instances) check_spans(inst);

    // gender balance: every noun appears exactly once per (template, profession)
    std::map<std::pair<std::string, std::string>, std::multiset<std::string>>
        per_cell;
    for (const auto& inst : instances) {
      per_cell[{inst.template_id, inst.profession_surface}].insert(
          inst.person_surface);
    }
    for (const auto& [cell, nouns] : per_cell) {
      CHECK(nouns.size() == lex.person_nouns.size());
    }

    // split partition laws
    const std::uint64_t seed = rng::bounded(eng, 1 << 20);
    const auto split = corpus::split_corpus(instances, 0.8, seed);
    CHECK(split.train.size() + split.test.size() == instances.size());
    std::set<std::string> inter;
    for (const auto& p : split.train_professions) {
      if (split.test_professions.count(p)) inter.insert(p);
    }
    CHECK(inter.empty());
    CHECK(split.train_professions.size() + split.test_professions.size() ==
          lex.professions.size());
    for (const auto& inst : split.train) {
      CHECK(split.train_professions.count(inst.profession_surface) == 1);
    }
    for (const auto& inst : split.test) {
      CHECK(split.test_professions.count(inst.profession_surface) == 1);
    }

    // seed determinism
    const auto again = corpus::split_corpus(instances, 0.8, seed);
    CHECK(again.train == split.train);
    ++cases;
  }
  CHECK(cases >= 200);
}
