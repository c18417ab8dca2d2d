#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gradeforge/score.hpp"

namespace gradeforge {

// Declared low-to-high so that the enum order is the grade order.
enum class Letter : std::uint8_t { O, F, E, D, C, B, A };
enum class Modifier : std::int8_t { minus = -1, none = 0, plus = 1 };

// A letter grade with an optional +/- modifier. O, E and F never carry one.
class Concept {
 public:
  constexpr Concept() = default;
  Concept(Letter letter, Modifier modifier = Modifier::none);

  // "A", "B-", "C+", "O". Throws InvalidConcept.
  static Concept parse(std::string_view text);

  Letter letter() const { return letter_; }
  Modifier modifier() const { return modifier_; }
  std::string str() const;

  // Position in the total order: O < F < E < D- < D < D+ < ... < A+.
  int rank() const;

  friend bool operator==(const Concept&, const Concept&) = default;
  friend std::strong_ordering operator<=>(const Concept& a, const Concept& b) {
    return a.rank() <=> b.rank();
  }

 private:
  Letter letter_ = Letter::F;
  Modifier modifier_ = Modifier::none;
};

char letter_char(Letter letter);
std::vector<Concept> all_concepts();  // 15 concepts in ascending order

enum class SchemeName { table2, delta02 };

std::string_view to_string(SchemeName name);
SchemeName parse_scheme_name(std::string_view text);

// Concept -> grade points. `table2` is the published conversion table;
// `delta02` reads +/- as +/-0.2 around the base letter, clamped to [0,4].
class ModifierScheme {
 public:
  explicit ModifierScheme(SchemeName name = SchemeName::table2) : name_(name) {}

  SchemeName name() const { return name_; }
  Score score(Concept c) const;

  friend bool operator==(const ModifierScheme&, const ModifierScheme&) = default;

 private:
  SchemeName name_;
};

struct CutoffEntry {
  Score min;
  Concept grade;
  // Annotation carried by the published table; unused by any computation.
  std::optional<double> percent;

  friend bool operator==(const CutoffEntry& a, const CutoffEntry& b) {
    return a.min == b.min && a.grade == b.grade && a.percent == b.percent;
  }
};

// Score -> concept over left-closed intervals [min_i, min_{i+1}), the last
// one closed at 4.
class CutoffTable {
 public:
  // Throws InvalidCutoffs unless thresholds start at 0, strictly increase,
  // stay within [0,4] and map to non-decreasing concepts.
  explicit CutoffTable(std::vector<CutoffEntry> entries);

  static const CutoffTable& standard();

  const std::vector<CutoffEntry>& entries() const { return entries_; }

  // Throws InvalidScore outside [0,4].
  Concept concept_for(const Score& s) const;

  // Moves the row for `c` (or inserts one) to start at `threshold`, dropping
  // rows that would violate ordering. Lowering A from 3.9 to 3.5 removes the
  // A- row at 3.75 and leaves B+ on [3.4, 3.5).
  CutoffTable with_threshold(Concept c, const Score& threshold) const;

  friend bool operator==(const CutoffTable&, const CutoffTable&) = default;

 private:
  std::vector<CutoffEntry> entries_;
};

struct ConceptScale {
  ModifierScheme scheme{};
  CutoffTable cutoffs = CutoffTable::standard();

  friend bool operator==(const ConceptScale&, const ConceptScale&) = default;
};

Score concept_to_score(Concept c, const ModifierScheme& scheme);

// Throws InvalidScore if s is outside [0,4].
Concept score_to_concept(const Score& s, const CutoffTable& table);

// The form recorded in the academic system: modifier stripped.
Concept registration_concept(Concept c);

// {"scheme": "table2", "cutoffs": [{"min": 0, "concept": "F", "percent": 0}, ...]}
nlohmann::json to_json(const ConceptScale& scale);
ConceptScale concept_scale_from_json(const nlohmann::json& doc);
nlohmann::json cutoffs_to_json(const CutoffTable& table);
CutoffTable cutoffs_from_json(const nlohmann::json& doc);

}  // namespace gradeforge
