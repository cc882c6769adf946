#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ogb/errors.hpp"

namespace ogb::lexicon {

// Placeholder tokens, fixed and literal.
inline constexpr std::string_view kPersonPlaceholder = "{PERSON}";
inline constexpr std::string_view kProfessionPlaceholder = "{PROFESSION}";

enum class GenderClass { Masculine, Feminine, Neutral };

const char* to_string(GenderClass g);
GenderClass gender_from_string(std::string_view s);  // throws SchemaViolation

struct PersonNoun {
  std::string surface;
  GenderClass gender;

  bool operator==(const PersonNoun&) const = default;
};

struct Profession {
  std::string surface;

  bool operator==(const Profession&) const = default;
};

struct Template {
  std::string id;
  std::string text;  // exactly one {PERSON} and one {PROFESSION}

  bool operator==(const Template&) const = default;
};

struct Lexicon {
  std::vector<Template> templates;
  std::vector<PersonNoun> person_nouns;
  std::vector<Profession> professions;
  std::map<std::string, std::string> metadata;

  bool operator==(const Lexicon&) const = default;
};

// Checks that `text` contains exactly one of each placeholder; returns the
// Template on success. Throws MissingPlaceholder / DuplicatePlaceholder.
Template validate_template(std::string_view id, std::string_view text);

// Validates all type invariants; throws SchemaViolation / EmptySection with
// the failing entry named.
void validate_lexicon(const Lexicon& lex);

// Reads / writes the JSON lexicon file format (see README). Loading
// preserves list order and applies no normalization to surfaces.
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lex, const std::string& path);

// Parse from an in-memory JSON document (used by load_lexicon and tests).
Lexicon parse_lexicon(std::string_view json_text);
std::string serialize_lexicon(const Lexicon& lex);

}  // namespace ogb::lexicon
