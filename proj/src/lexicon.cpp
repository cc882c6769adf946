#include "ogb/lexicon.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace ogb::lexicon {

using nlohmann::json;

const char* to_string(GenderClass g) {
  switch (g) {
    case GenderClass::Masculine: return "masculine";
    case GenderClass::Feminine: return "feminine";
    case GenderClass::Neutral: return "neutral";
  }
  return "?";
}

GenderClass gender_from_string(std::string_view s) {
  if (s == "masculine") return GenderClass::Masculine;
  if (s == "feminine") return GenderClass::Feminine;
  if (s == "neutral") return GenderClass::Neutral;
  raise(ErrorKind::SchemaViolation,
        "gender must be one of masculine/feminine/neutral, got '" +
            std::string(s) + "'");
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view token) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(token); pos != std::string_view::npos;
       pos = text.find(token, pos + token.size())) {
    ++n;
  }
  return n;
}

bool blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v')
      return false;
  }
  return true;
}

void check_surface(std::string_view surface, const std::string& where) {
  if (blank(surface)) {
    raise(ErrorKind::SchemaViolation, where + ": surface is empty or blank");
  }
  if (surface.find(kPersonPlaceholder) != std::string_view::npos ||
      surface.find(kProfessionPlaceholder) != std::string_view::npos) {
    raise(ErrorKind::SchemaViolation,
          where + ": surface contains a placeholder token");
  }
}

}  // namespace

Template validate_template(std::string_view id, std::string_view text) {
  const auto check = [&](std::string_view token, const char* label) {
    const std::size_t n = count_occurrences(text, token);
    if (n == 0) {
      raise(ErrorKind::MissingPlaceholder,
            "template '" + std::string(id) + "' lacks " + label);
    }
    if (n > 1) {
      raise(ErrorKind::DuplicatePlaceholder,
            "template '" + std::string(id) + "' contains " +
                std::to_string(n) + " occurrences of " + label);
    }
  };
  check(kPersonPlaceholder, "{PERSON}");
  check(kProfessionPlaceholder, "{PROFESSION}");
  return Template{std::string(id), std::string(text)};
}

void validate_lexicon(const Lexicon& lex) {
  if (lex.templates.empty())
    raise(ErrorKind::EmptySection, "lexicon has no templates");
  if (lex.person_nouns.empty())
    raise(ErrorKind::EmptySection, "lexicon has no person_nouns");
  if (lex.professions.empty())
    raise(ErrorKind::EmptySection, "lexicon has no professions");

  std::set<std::string> template_ids;
  for (std::size_t i = 0; i < lex.templates.size(); ++i) {
    const auto& t = lex.templates[i];
    if (t.id.empty()) {
      raise(ErrorKind::SchemaViolation,
            "templates[" + std::to_string(i) + "]: id is empty");
    }
    if (!template_ids.insert(t.id).second) {
      raise(ErrorKind::SchemaViolation,
            "templates[" + std::to_string(i) + "]: duplicate id '" + t.id + "'");
    }
    try {
      validate_template(t.id, t.text);
    } catch (const Error& e) {
      raise(ErrorKind::SchemaViolation,
            "templates[" + std::to_string(i) + "]: " + e.what());
    }
  }

  std::set<std::pair<std::string, GenderClass>> noun_keys;
  for (std::size_t i = 0; i < lex.person_nouns.size(); ++i) {
    const auto& n = lex.person_nouns[i];
    check_surface(n.surface, "person_nouns[" + std::to_string(i) + "]");
    if (!noun_keys.insert({n.surface, n.gender}).second) {
      raise(ErrorKind::SchemaViolation,
            "person_nouns[" + std::to_string(i) + "]: duplicate (surface, gender) pair '" +
                n.surface + "'/" + to_string(n.gender));
    }
  }
  for (GenderClass g : {GenderClass::Masculine, GenderClass::Feminine,
                        GenderClass::Neutral}) {
    bool found = false;
    for (const auto& n : lex.person_nouns) {
      if (n.gender == g) { found = true; break; }
    }
    if (!found) {
      raise(ErrorKind::SchemaViolation,
            std::string("person_nouns: no noun with gender '") + to_string(g) + "'");
    }
  }

  std::set<std::string> profession_surfaces;
  for (std::size_t i = 0; i < lex.professions.size(); ++i) {
    const auto& p = lex.professions[i];
    check_surface(p.surface, "professions[" + std::to_string(i) + "]");
    if (!profession_surfaces.insert(p.surface).second) {
      raise(ErrorKind::SchemaViolation,
            "professions[" + std::to_string(i) + "]: duplicate surface '" +
                p.surface + "'");
    }
  }
}

namespace {

const json& require_field(const json& obj, const char* key,
                          const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    raise(ErrorKind::SchemaViolation,
          where + ": missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string()) {
    raise(ErrorKind::SchemaViolation,
          where + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

Lexicon parse_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedFile, e.what());
  }
  if (!doc.is_object()) {
    raise(ErrorKind::MalformedFile, "top level must be a JSON object");
  }

  Lexicon lex;
  const auto section = [&](const char* key) -> const json& {
    const json& v = require_field(doc, key, "lexicon");
    if (!v.is_array()) {
      raise(ErrorKind::SchemaViolation,
            std::string("lexicon: '") + key + "' must be a list");
    }
    return v;
  };

  {
    const json& arr = section("templates");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "templates[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) raise(ErrorKind::SchemaViolation, where + ": must be a record");
      lex.templates.push_back(Template{require_string(arr[i], "id", where),
                                       require_string(arr[i], "text", where)});
    }
  }
  {
    const json& arr = section("person_nouns");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "person_nouns[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) raise(ErrorKind::SchemaViolation, where + ": must be a record");
      PersonNoun n;
      n.surface = require_string(arr[i], "surface", where);
      try {
        n.gender = gender_from_string(require_string(arr[i], "gender", where));
      } catch (const Error& e) {
        raise(ErrorKind::SchemaViolation, where + ": " + e.what());
      }
      lex.person_nouns.push_back(std::move(n));
    }
  }
  {
    const json& arr = section("professions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "professions[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) raise(ErrorKind::SchemaViolation, where + ": must be a record");
      lex.professions.push_back(Profession{require_string(arr[i], "surface", where)});
    }
  }
  if (auto it = doc.find("metadata"); it != doc.end()) {
    if (!it->is_object()) {
      raise(ErrorKind::SchemaViolation, "lexicon: 'metadata' must be a mapping");
    }
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) {
        raise(ErrorKind::SchemaViolation,
              "metadata['" + k + "']: values must be strings");
      }
      lex.metadata[k] = v.get<std::string>();
    }
  }

  validate_lexicon(lex);
  return lex;
}

std::string serialize_lexicon(const Lexicon& lex) {
  json doc;
  doc["templates"] = json::array();
  for (const auto& t : lex.templates) {
    doc["templates"].push_back({{"id", t.id}, {"text", t.text}});
  }
  doc["person_nouns"] = json::array();
  for (const auto& n : lex.person_nouns) {
    doc["person_nouns"].push_back(
        {{"surface", n.surface}, {"gender", to_string(n.gender)}});
  }
  doc["professions"] = json::array();
  for (const auto& p : lex.professions) {
    doc["professions"].push_back({{"surface", p.surface}});
  }
  doc["metadata"] = json::object();
  for (const auto& [k, v] : lex.metadata) doc["metadata"][k] = v;
  return doc.dump(2) + "\n";
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "lexicon file '" + path + "' does not exist");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

void save_lexicon(const Lexicon& lex, const std::string& path) {
  validate_lexicon(lex);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing, "cannot write lexicon file '" + path + "'");
  }
  out << serialize_lexicon(lex);
}

}  // namespace ogb::lexicon
