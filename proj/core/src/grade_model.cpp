#include "gradeforge/grade_model.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "gradeforge/error.hpp"

namespace gradeforge {

namespace {

bool carries_modifier(Letter letter) {
  return letter == Letter::A || letter == Letter::B || letter == Letter::C || letter == Letter::D;
}

std::optional<Letter> letter_from_char(char ch) {
  switch (ch) {
    case 'A': return Letter::A;
    case 'B': return Letter::B;
    case 'C': return Letter::C;
    case 'D': return Letter::D;
    case 'E': return Letter::E;
    case 'F': return Letter::F;
    case 'O': return Letter::O;
    default: return std::nullopt;
  }
}

Rational base_points(Letter letter) {
  switch (letter) {
    case Letter::A: return 4;
    case Letter::B: return 3;
    case Letter::C: return 2;
    case Letter::D: return 1;
    default: return 0;
  }
}

}  // namespace

Concept::Concept(Letter letter, Modifier modifier) : letter_(letter), modifier_(modifier) {
  if (modifier != Modifier::none && !carries_modifier(letter)) {
    throw Error(ErrorKind::InvalidConcept,
                std::string("letter ") + letter_char(letter) + " cannot carry a modifier");
  }
}

Concept Concept::parse(std::string_view text) {
  if (text.empty() || text.size() > 2) {
    throw Error(ErrorKind::InvalidConcept, "'" + std::string(text) + "'");
  }
  const auto letter = letter_from_char(text[0]);
  if (!letter) throw Error(ErrorKind::InvalidConcept, "'" + std::string(text) + "'");
  Modifier mod = Modifier::none;
  if (text.size() == 2) {
    if (text[1] == '+') {
      mod = Modifier::plus;
    } else if (text[1] == '-') {
      mod = Modifier::minus;
    } else {
      throw Error(ErrorKind::InvalidConcept, "'" + std::string(text) + "'");
    }
  }
  return Concept(*letter, mod);
}

char letter_char(Letter letter) {
  static constexpr std::array<char, 7> kChars{'O', 'F', 'E', 'D', 'C', 'B', 'A'};
  return kChars[static_cast<std::size_t>(letter)];
}

std::string Concept::str() const {
  std::string out(1, letter_char(letter_));
  if (modifier_ == Modifier::plus) out += '+';
  if (modifier_ == Modifier::minus) out += '-';
  return out;
}

int Concept::rank() const {
  switch (letter_) {
    case Letter::O: return 0;
    case Letter::F: return 1;
    case Letter::E: return 2;
    default: break;
  }
  // D- = 3 ... A+ = 14
  const int base = 4 + 3 * (static_cast<int>(letter_) - static_cast<int>(Letter::D));
  return base + static_cast<int>(modifier_);
}

std::vector<Concept> all_concepts() {
  std::vector<Concept> out{Concept(Letter::O), Concept(Letter::F), Concept(Letter::E)};
  for (Letter l : {Letter::D, Letter::C, Letter::B, Letter::A}) {
    for (Modifier m : {Modifier::minus, Modifier::none, Modifier::plus}) out.emplace_back(l, m);
  }
  return out;
}

std::string_view to_string(SchemeName name) {
  return name == SchemeName::table2 ? "table2" : "delta02";
}

SchemeName parse_scheme_name(std::string_view text) {
  if (text == "table2") return SchemeName::table2;
  if (text == "delta02") return SchemeName::delta02;
  throw Error(ErrorKind::ParseError, "unknown modifier scheme '" + std::string(text) + "'");
}

Score ModifierScheme::score(Concept c) const {
  const Rational base = base_points(c.letter());
  if (c.modifier() == Modifier::none) return Score(base);

  if (name_ == SchemeName::delta02) {
    const Rational delta(static_cast<int>(c.modifier()) * 2, 10);
    return Score(base + delta).clamped();
  }

  // Published table: A+=4 A-=3.8 B+=3.5 B-=2.8 C+=2.5 C-=1.8 D+=1.5 D-=0.5
  switch (c.letter()) {
    case Letter::A: return c.modifier() == Modifier::plus ? Score::from_hundredths(400) : Score::from_hundredths(380);
    case Letter::B: return c.modifier() == Modifier::plus ? Score::from_hundredths(350) : Score::from_hundredths(280);
    case Letter::C: return c.modifier() == Modifier::plus ? Score::from_hundredths(250) : Score::from_hundredths(180);
    case Letter::D: return c.modifier() == Modifier::plus ? Score::from_hundredths(150) : Score::from_hundredths(50);
    default: return Score::zero();
  }
}

CutoffTable::CutoffTable(std::vector<CutoffEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorKind::InvalidCutoffs, "empty cutoff table");
  if (entries_.front().min != Score::zero()) {
    throw Error(ErrorKind::InvalidCutoffs, "first threshold must be 0, got " + entries_.front().min.exact());
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].min.in_range()) {
      throw Error(ErrorKind::InvalidCutoffs, "threshold " + entries_[i].min.exact() + " outside [0,4]");
    }
    if (i == 0) continue;
    if (entries_[i].min <= entries_[i - 1].min) {
      throw Error(ErrorKind::InvalidCutoffs, "thresholds must strictly increase at " + entries_[i].min.exact());
    }
    if (entries_[i].grade < entries_[i - 1].grade) {
      throw Error(ErrorKind::InvalidCutoffs, "concept " + entries_[i].grade.str() + " at " +
                                                 entries_[i].min.exact() + " is below the row before it");
    }
  }
}

const CutoffTable& CutoffTable::standard() {
  static const CutoffTable table = [] {
    auto row = [](int hundredths, std::string_view c, double pct) {
      return CutoffEntry{Score::from_hundredths(hundredths), Concept::parse(c), pct};
    };
    return CutoffTable({
        row(0, "F", 0.0),
        row(80, "D-", 0.4),
        row(100, "D", 0.42),
        row(150, "D+", 0.45),
        row(180, "C-", 0.48),
        row(200, "C", 0.5),
        row(250, "C+", 0.6),
        row(280, "B-", 0.65),
        row(300, "B", 0.7),
        row(340, "B+", 0.75),
        row(375, "A-", 0.8),
        row(390, "A", 0.85),
    });
  }();
  return table;
}

Concept CutoffTable::concept_for(const Score& s) const {
  if (!s.in_range()) {
    throw Error(ErrorKind::InvalidScore, "score " + s.exact() + " outside [0,4]");
  }
  // last entry whose threshold is <= s
  auto it = std::upper_bound(entries_.begin(), entries_.end(), s,
                             [](const Score& v, const CutoffEntry& e) { return v < e.min; });
  return std::prev(it)->grade;
}

CutoffTable CutoffTable::with_threshold(Concept c, const Score& threshold) const {
  std::optional<double> percent;
  std::vector<CutoffEntry> rows;
  rows.reserve(entries_.size() + 1);
  for (const auto& e : entries_) {
    if (e.grade == c) {
      percent = e.percent;
      continue;
    }
    if (e.grade < c && e.min >= threshold) continue;
    if (e.grade > c && e.min <= threshold) continue;
    rows.push_back(e);
  }
  rows.push_back(CutoffEntry{threshold, c, percent});
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.min < b.min; });
  return CutoffTable(std::move(rows));
}

Score concept_to_score(Concept c, const ModifierScheme& scheme) { return scheme.score(c); }

Concept score_to_concept(const Score& s, const CutoffTable& table) { return table.concept_for(s); }

Concept registration_concept(Concept c) { return Concept(c.letter(), Modifier::none); }

nlohmann::json cutoffs_to_json(const CutoffTable& table) {
  auto rows = nlohmann::json::array();
  for (const auto& e : table.entries()) {
    rows.push_back({{"min", e.min.to_double()},
                    {"concept", e.grade.str()},
                    {"percent", e.percent ? nlohmann::json(*e.percent) : nlohmann::json(nullptr)}});
  }
  return rows;
}

CutoffTable cutoffs_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::ParseError, "cutoffs must be an array");
  std::vector<CutoffEntry> rows;
  for (const auto& row : doc) {
    if (!row.is_object() || !row.contains("min") || !row.contains("concept")) {
      throw Error(ErrorKind::ParseError, "cutoff rows need 'min' and 'concept'");
    }
    CutoffEntry e;
    const auto& min = row.at("min");
    e.min = min.is_string() ? Score::parse(min.get<std::string>()) : Score::from_double(min.get<double>());
    e.grade = Concept::parse(row.at("concept").get<std::string>());
    if (row.contains("percent") && !row.at("percent").is_null()) e.percent = row.at("percent").get<double>();
    rows.push_back(e);
  }
  return CutoffTable(std::move(rows));
}

nlohmann::json to_json(const ConceptScale& scale) {
  return {{"scheme", std::string(to_string(scale.scheme.name()))}, {"cutoffs", cutoffs_to_json(scale.cutoffs)}};
}

ConceptScale concept_scale_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "scale must be an object");
  ConceptScale scale;
  if (doc.contains("scheme")) scale.scheme = ModifierScheme(parse_scheme_name(doc.at("scheme").get<std::string>()));
  if (doc.contains("cutoffs")) scale.cutoffs = cutoffs_from_json(doc.at("cutoffs"));
  return scale;
}

}  // namespace gradeforge
