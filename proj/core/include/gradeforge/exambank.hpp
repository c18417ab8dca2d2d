#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradeforge/score.hpp"

namespace gradeforge::exambank {

enum class Difficulty { simple, medium, complex };
enum class QuestionKind { dissertative, multiple_choice };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view text);
inline constexpr Difficulty kDifficulties[] = {Difficulty::simple, Difficulty::medium, Difficulty::complex};

struct Variant {
  std::string id;
  std::string statement;  // opaque; LaTeX is passed through untouched
  std::string answer_key;
};

struct Question {
  std::string id;
  std::string topic;
  Difficulty difficulty = Difficulty::simple;
  QuestionKind kind = QuestionKind::dissertative;
  Rational weight{0};
  std::vector<Variant> variants;  // dissertative: 4 or 5
  // multiple choice
  std::string statement;
  std::vector<std::string> options;
  std::optional<int> correct_option;
};

struct QuestionBank {
  std::vector<Question> questions;

  const Question* find(std::string_view id) const;
  // SHA-256 (hex) of the canonical JSON form; whitespace in the source file does not matter.
  std::string content_hash() const;
};

// Throws ParseError carrying line and column for malformed documents.
QuestionBank parse_bank(std::string_view json_text);
QuestionBank bank_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const QuestionBank& bank);

struct Finding {
  std::string question_id;
  std::string rule;
  std::string detail;
};

// Empty when every bank invariant holds.
std::vector<Finding> validate_bank(const QuestionBank& bank);

struct Slot {
  Difficulty difficulty;
  Rational weight;
};

struct McBlock {
  std::map<Difficulty, int> counts;
  Rational weight{0};
};

struct ExamTemplate {
  std::string assessment;
  std::vector<Slot> slots;
  std::optional<McBlock> mc_block;

  // simple/medium/complex weighted 25/35/40.
  static ExamTemplate standard(std::string assessment);
  void validate() const;
};

ExamTemplate template_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExamTemplate& t);

struct RosterEntry {
  std::string student_id;
  std::string name;
};

struct VariantAssignment {
  std::size_t slot = 0;
  std::string question_id;
  std::string variant_id;

  friend bool operator==(const VariantAssignment&, const VariantAssignment&) = default;
};

struct McItem {
  std::string question_id;
  std::vector<int> option_order;  // option_order[k] = index of the option shown in position k

  friend bool operator==(const McItem&, const McItem&) = default;
};

struct GeneratedExam {
  std::string student_id;
  std::string student_name;
  std::string assessment;
  std::vector<VariantAssignment> assignments;
  std::vector<McItem> mc_items;
  std::string barcode_payload;
  std::string document;  // path of the rendered exam, relative to the workspace

  friend bool operator==(const GeneratedExam&, const GeneratedExam&) = default;
};

// Digits of the registration number. Throws InvalidRegistration if there are none.
std::string barcode_payload(std::string_view student_id);

// One question per slot for the whole session; each student gets one variant
// of it. Variants are dealt over a seeded permutation of the sorted roster so
// per-question usage differs by at most one and full-exam tuples repeat only
// when the roster outgrows the number of distinct tuples.
// Output is sorted by student id and depends only on (seed, bank hash, roster set).
std::vector<GeneratedExam> assign_variants(std::span<const RosterEntry> roster, const ExamTemplate& tmpl,
                                           const QuestionBank& bank, std::uint64_t seed);

// Per-student sample without replacement from the multiple-choice pool, in
// simple/medium/complex order, with a per-student option shuffle.
std::vector<McItem> sample_mc_block(const QuestionBank& bank, const std::map<Difficulty, int>& counts,
                                    std::uint64_t seed, std::string_view student_id);

enum class DocFormat { markdown, latex_source };
std::string_view extension(DocFormat f);
DocFormat parse_doc_format(std::string_view text);

struct RenderedExam {
  std::string exam;
  std::string answer_key;
};

// Throws DanglingReference if an assignment names a question or variant the bank lacks.
RenderedExam render_exam(const GeneratedExam& exam, const QuestionBank& bank, const ExamTemplate& tmpl,
                         DocFormat format);

nlohmann::json manifest_json(std::string_view term, const ExamTemplate& tmpl, std::uint64_t seed,
                             const QuestionBank& bank, std::span<const GeneratedExam> exams);

// Writes exams/<term>/<assessment>/<id>.<ext>, answer_keys/<term>/<assessment>/<id>.<ext>
// and exams/<term>/<assessment>/manifest.json under `root`. Fills GeneratedExam::document.
std::filesystem::path write_session(const std::filesystem::path& root, std::string_view term,
                                    const ExamTemplate& tmpl, std::uint64_t seed, const QuestionBank& bank,
                                    std::vector<GeneratedExam>& exams, DocFormat format);

}  // namespace gradeforge::exambank
