#pragma once

// Shared fixtures for the test suites: deterministic toy lexica, randomized
// lexicon generation for property tests, and a scoped temp directory.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ogb/corpus.hpp"
#include "ogb/lexicon.hpp"
#include "ogb/util/rng.hpp"

namespace ogb::test {

inline lexicon::Lexicon toy_lexicon() {
  lexicon::Lexicon lex;
  lex.templates = {
      {"t1", "{PERSON} works as a {PROFESSION}."},
      {"t2", "The {PROFESSION} met {PERSON}."},
  };
  lex.person_nouns = {
      {"he", lexicon::GenderClass::Masculine},
      {"she", lexicon::GenderClass::Feminine},
      {"they", lexicon::GenderClass::Neutral},
      {"old man", lexicon::GenderClass::Masculine},  // two subwords
  };
  lex.professions = {
      {"doctor"},
      {"nurse"},
      {"police officer"},  // two subwords
  };
  lex.metadata = {{"language", "en"}, {"source", "test fixture"}};
  return lex;
}

// 2 templates x 3 nouns x 5 professions, mirroring the shipped demo data.
inline lexicon::Lexicon small_hindi_lexicon() {
  lexicon::Lexicon lex;
  lex.templates = {
      {"t1", "{PERSON} एक {PROFESSION} हैं।"},
      {"t2", "{PERSON} को {PROFESSION} की नौकरी मिली।"},
  };
  lex.person_nouns = {
      {"आदमी", lexicon::GenderClass::Masculine},
      {"औरत", lexicon::GenderClass::Feminine},
      {"व्यक्ति", lexicon::GenderClass::Neutral},
  };
  lex.professions = {
      {"डॉक्टर"}, {"इंजीनियर"}, {"वकील"}, {"वैज्ञानिक"}, {"पुलिस अफ़सर"},
  };
  return lex;
}

// Randomized but always-valid lexicon for property tests. Surfaces mix
// scripts and occasionally span several words.
inline lexicon::Lexicon random_lexicon(rng::Engine& eng) {
  static const std::vector<std::string> word_pool = {
      "alpha", "beta",  "gamma", "delta", "née",   "zügig",
      "काम",   "नया",   "पुराना", "बड़ा",   "छोटा",  "x",
  };
  const auto pick_word = [&] {
    return word_pool[rng::bounded(eng, word_pool.size())];
  };
  const auto make_surface = [&](const char* tag, std::size_t n) {
    std::string s = pick_word() + "_" + tag + std::to_string(n);
    if (rng::bounded(eng, 4) == 0) s += " " + pick_word();  // multi-word
    return s;
  };

  lexicon::Lexicon lex;
  const std::size_t n_templates = 1 + rng::bounded(eng, 4);
  for (std::size_t i = 0; i < n_templates; ++i) {
    std::string text;
    if (rng::bounded(eng, 4) == 0) text += pick_word() + " ";
    const bool person_first = rng::bounded(eng, 2) == 0;
    text += person_first ? "{PERSON}" : "{PROFESSION}";
    text += " " + pick_word() + " ";
    text += person_first ? "{PROFESSION}" : "{PERSON}";
    if (rng::bounded(eng, 2) == 0) text += " " + pick_word();
    text += rng::bounded(eng, 2) == 0 ? "." : "।";
    lex.templates.push_back({"tpl" + std::to_string(i), text});
  }

  const bool balanced = rng::bounded(eng, 2) == 0;
  const std::size_t per_class = 1 + rng::bounded(eng, 3);
  const lexicon::GenderClass classes[] = {lexicon::GenderClass::Masculine,
                                          lexicon::GenderClass::Feminine,
                                          lexicon::GenderClass::Neutral};
  std::size_t noun_counter = 0;
  for (auto g : classes) {
    const std::size_t n = balanced ? per_class : 1 + rng::bounded(eng, 3);
    for (std::size_t i = 0; i < n; ++i) {
      lex.person_nouns.push_back({make_surface("n", noun_counter++), g});
    }
  }

  const std::size_t n_prof = 2 + rng::bounded(eng, 9);
  for (std::size_t i = 0; i < n_prof; ++i) {
    lex.professions.push_back({make_surface("p", i)});
  }
  return lex;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() /
                ("ogb-test-" + tag + "-XXXXXX");
    std::string templ = base.string();
    if (::mkdtemp(templ.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace ogb::test
