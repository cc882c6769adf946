#include "ogb/corpus.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "ogb/util/rng.hpp"
#include "ogb/util/utf8.hpp"

namespace ogb::corpus {

using nlohmann::json;

namespace {

struct Filled {
  std::string sentence;
  Span person;
  Span profession;
};

// Substitutes both placeholders and derives code-point spans from the
// concatenation layout. Placeholder braces are ASCII, so every segment
// boundary is a code-point boundary.
Filled fill_template(const lexicon::Template& tpl,
                     std::string_view person_surface,
                     std::string_view profession_surface) {
  const std::string_view text = tpl.text;
  const std::size_t person_at = text.find(lexicon::kPersonPlaceholder);
  const std::size_t profession_at = text.find(lexicon::kProfessionPlaceholder);

  struct Part {
    std::string_view content;
    int role;  // 0 plain, 1 person, 2 profession
  };
  std::vector<Part> parts;
  if (person_at < profession_at) {
    parts = {{text.substr(0, person_at), 0},
             {person_surface, 1},
             {text.substr(person_at + lexicon::kPersonPlaceholder.size(),
                          profession_at - person_at -
                              lexicon::kPersonPlaceholder.size()),
              0},
             {profession_surface, 2},
             {text.substr(profession_at + lexicon::kProfessionPlaceholder.size()), 0}};
  } else {
    parts = {{text.substr(0, profession_at), 0},
             {profession_surface, 2},
             {text.substr(profession_at + lexicon::kProfessionPlaceholder.size(),
                          person_at - profession_at -
                              lexicon::kProfessionPlaceholder.size()),
              0},
             {person_surface, 1},
             {text.substr(person_at + lexicon::kPersonPlaceholder.size()), 0}};
  }

  Filled out;
  std::size_t cp = 0;
  for (const auto& part : parts) {
    const std::size_t len = utf8::length(part.content);
    if (part.role == 1) out.person = {cp, cp + len};
    if (part.role == 2) out.profession = {cp, cp + len};
    out.sentence.append(part.content);
    cp += len;
  }
  return out;
}

}  // namespace

std::vector<CorpusInstance> build_corpus(const lexicon::Lexicon& lex) {
  lexicon::validate_lexicon(lex);
  std::vector<CorpusInstance> corpus;
  corpus.reserve(lex.templates.size() * lex.person_nouns.size() *
                 lex.professions.size());
  for (const auto& tpl : lex.templates) {
    for (const auto& noun : lex.person_nouns) {
      for (const auto& prof : lex.professions) {
        Filled filled = fill_template(tpl, noun.surface, prof.surface);
        corpus.push_back(CorpusInstance{tpl.id, noun.surface, noun.gender,
                                        prof.surface, std::move(filled.sentence),
                                        filled.person, filled.profession});
      }
    }
  }
  return corpus;
}

CorpusSplit split_corpus(const std::vector<CorpusInstance>& corpus,
                         double train_fraction, std::uint64_t seed) {
  if (corpus.empty()) {
    raise(ErrorKind::EmptyCorpus, "cannot split an empty corpus");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    raise(ErrorKind::UsageError, "train_fraction must lie in (0, 1)");
  }

  // professions in order of first appearance
  std::vector<std::string> professions;
  for (const auto& inst : corpus) {
    bool seen = false;
    for (const auto& p : professions) {
      if (p == inst.profession_surface) { seen = true; break; }
    }
    if (!seen) professions.push_back(inst.profession_surface);
  }
  if (professions.size() < 2) {
    raise(ErrorKind::TooFewProfessions,
          "corpus has " + std::to_string(professions.size()) +
              " distinct profession(s); need at least 2 to split");
  }

  auto eng = rng::make_engine(seed);
  rng::shuffle(professions, eng);
  const auto n_train = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(professions.size())));

  CorpusSplit split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  for (std::size_t i = 0; i < professions.size(); ++i) {
    if (i < n_train) {
      split.train_professions.insert(professions[i]);
    } else {
      split.test_professions.insert(professions[i]);
    }
  }
  for (const auto& inst : corpus) {
    if (split.train_professions.count(inst.profession_surface)) {
      split.train.push_back(inst);
    } else {
      split.test.push_back(inst);
    }
  }
  return split;
}

std::string instance_to_json_line(const CorpusInstance& inst) {
  json rec;
  rec["template_id"] = inst.template_id;
  rec["person_surface"] = inst.person_surface;
  rec["gender"] = lexicon::to_string(inst.gender);
  rec["profession_surface"] = inst.profession_surface;
  rec["sentence"] = inst.sentence;
  rec["person_span"] = {inst.person_span.begin, inst.person_span.end};
  rec["profession_span"] = {inst.profession_span.begin, inst.profession_span.end};
  return rec.dump();
}

namespace {

Span parse_span(const json& rec, const char* key, std::size_t line_number) {
  const auto where = [&] {
    return "line " + std::to_string(line_number) + ": field '" +
           std::string(key) + "'";
  };
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_array() || it->size() != 2 ||
      !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned()) {
    raise(ErrorKind::MalformedRecord,
          where() + " must be a [begin, end] pair of non-negative integers");
  }
  Span s{(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  if (s.begin > s.end) {
    raise(ErrorKind::MalformedRecord, where() + " has begin > end");
  }
  return s;
}

std::string parse_string(const json& rec, const char* key,
                         std::size_t line_number) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    raise(ErrorKind::MalformedRecord,
          "line " + std::to_string(line_number) + ": field '" +
              std::string(key) + "' missing or not a string");
  }
  return it->get<std::string>();
}

}  // namespace

CorpusInstance instance_from_json_line(const std::string& line,
                                       std::size_t line_number) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedRecord,
          "line " + std::to_string(line_number) + ": " + e.what());
  }
  if (!rec.is_object()) {
    raise(ErrorKind::MalformedRecord,
          "line " + std::to_string(line_number) + ": record must be an object");
  }

  CorpusInstance inst;
  inst.template_id = parse_string(rec, "template_id", line_number);
  inst.person_surface = parse_string(rec, "person_surface", line_number);
  try {
    inst.gender =
        lexicon::gender_from_string(parse_string(rec, "gender", line_number));
  } catch (const Error&) {
    raise(ErrorKind::MalformedRecord,
          "line " + std::to_string(line_number) + ": unknown gender value");
  }
  inst.profession_surface = parse_string(rec, "profession_surface", line_number);
  inst.sentence = parse_string(rec, "sentence", line_number);
  inst.person_span = parse_span(rec, "person_span", line_number);
  inst.profession_span = parse_span(rec, "profession_span", line_number);

  // span extraction must reproduce the surfaces
  try {
    if (utf8::substr(inst.sentence, inst.person_span.begin,
                     inst.person_span.end) != inst.person_surface ||
        utf8::substr(inst.sentence, inst.profession_span.begin,
                     inst.profession_span.end) != inst.profession_surface) {
      raise(ErrorKind::MalformedRecord,
            "line " + std::to_string(line_number) +
                ": spans do not extract the recorded surfaces");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MalformedRecord) throw;
    raise(ErrorKind::MalformedRecord,
          "line " + std::to_string(line_number) + ": " + e.what());
  }
  return inst;
}

void save_corpus(const std::vector<CorpusInstance>& corpus,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing, "cannot write corpus file '" + path + "'");
  }
  for (const auto& inst : corpus) {
    out << instance_to_json_line(inst) << '\n';
  }
}

std::vector<CorpusInstance> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "corpus file '" + path + "' does not exist");
  }
  std::vector<CorpusInstance> corpus;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    corpus.push_back(instance_from_json_line(line, line_number));
  }
  return corpus;
}

void save_split(const CorpusSplit& split, const std::string& train_path,
                const std::string& test_path,
                const std::string& manifest_path) {
  save_corpus(split.train, train_path);
  save_corpus(split.test, test_path);

  json m;
  m["seed"] = split.seed;
  m["train_fraction"] = split.train_fraction;
  m["train_professions"] = json::array();
  for (const auto& p : split.train_professions) m["train_professions"].push_back(p);
  m["test_professions"] = json::array();
  for (const auto& p : split.test_professions) m["test_professions"].push_back(p);
  m["train_instances"] = split.train.size();
  m["test_instances"] = split.test.size();

  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing,
          "cannot write split manifest '" + manifest_path + "'");
  }
  out << m.dump(2) << '\n';
}

}  // namespace ogb::corpus
