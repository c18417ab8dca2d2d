#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gradeforge/grade_model.hpp"

namespace gradeforge::submissions {

// Grader annotation carried in a file name, e.g. "B-,2,4,5_RAaluno.pdf":
//   annotation := concept (',' code)* '_' student_id '.' ext
//   concept    := [A-F] ('+'|'-')?
//   code       := [1-9][0-9]*
//   student_id := [A-Za-z0-9]+
struct GradeAnnotation {
  Concept grade;
  std::vector<int> error_codes;  // ascending, unique
  std::string student_id;
  std::string extension;

  friend bool operator==(const GradeAnnotation&, const GradeAnnotation&) = default;
};

// Throws SyntaxError (AnnotationSyntax or UnknownConcept) with the offending index.
GradeAnnotation parse_annotation(std::string_view filename);
std::string format_annotation(const GradeAnnotation& a);

using ErrorCatalog = std::map<int, std::string>;

// JSON object mapping code (as string key) to description.
ErrorCatalog catalog_from_json(const nlohmann::json& doc);

enum class CheckStatus { unchecked, pass, fail };
std::string_view to_string(CheckStatus s);

struct Entry {
  std::string student_id;
  std::filesystem::path path;
  CheckStatus status = CheckStatus::unchecked;
  int exit_code = 0;
  bool timed_out = false;
  std::string output;  // last 2048 bytes of combined stdout/stderr
};

struct SubmissionSet {
  std::string assessment;
  std::string question_id;
  std::vector<Entry> entries;  // sorted by student id, one per student
};

// Maps a relative path onto (question, student). Segments are separated by
// '/'; each segment is a literal, '*', or text around the tokens
// {question}, {student}, {file}. Default "{question}/{student}/{file}".
struct Layout {
  std::string pattern = "{question}/{student}/{file}";
};

struct LayoutMismatch {
  std::filesystem::path path;
  std::string reason;
};

struct Shadowed {
  std::string question_id;
  std::string student_id;
  std::filesystem::path kept;
  std::filesystem::path shadowed;
};

struct IngestResult {
  std::vector<SubmissionSet> sets;  // sorted by question id
  std::vector<LayoutMismatch> mismatches;
  std::vector<Shadowed> shadowed;
  std::size_t files_scanned = 0;

  std::size_t entry_count() const;
};

// Scans `root` recursively. Unparseable paths are collected, not fatal.
// Several files for one (question, student) resolve to the newest by mtime
// (ties by path); the rest are reported as shadowed.
// Throws EmptyRoot if the directory is missing or holds no files.
IngestResult ingest_submissions(const std::filesystem::path& root, const Layout& layout,
                                std::string_view assessment = "");

// Copies every kept entry into out/<question>/<student>_<filename>, one folder per question.
void materialize(const IngestResult& result, const std::filesystem::path& out);

struct CheckOptions {
  std::string command_template;  // must contain {file}
  std::chrono::milliseconds timeout{10'000};
  unsigned parallelism = 1;
};

// Runs the command once per entry through /bin/sh with {file} replaced by the
// quoted path. Exit 0 is pass; nonzero or timeout is fail. Re-running overwrites.
// Throws CommandNotFound if the command's program cannot be resolved.
SubmissionSet run_check_command(SubmissionSet set, const CheckOptions& options);

struct QuestionAnnotation {
  std::string assessment;
  std::string question_id;
  GradeAnnotation annotation;
};

struct AnnotationScan {
  std::vector<QuestionAnnotation> annotations;
  std::vector<LayoutMismatch> rejected;  // files whose names do not parse
};

// Reads graded/<question>/<annotated file>.
AnnotationScan collect_annotations(const std::filesystem::path& graded_root, std::string_view assessment);

struct FeedbackMessage {
  std::string student_id;
  std::string text;
};

struct FeedbackError {
  std::string student_id;
  int code = 0;
  std::string message;
};

struct FeedbackResult {
  std::vector<FeedbackMessage> messages;  // sorted by student id
  std::vector<FeedbackError> errors;
};

// Placeholders in the template: {student_id}, {assessment}, {body}.
inline constexpr std::string_view kDefaultFeedbackTemplate =
    "Student: {student_id}\nAssessment: {assessment}\n\n{body}";

// One message per student; an unknown error code drops only that student's message.
FeedbackResult render_feedback(std::span<const QuestionAnnotation> annotations, const ErrorCatalog& catalog,
                               std::string_view template_text = kDefaultFeedbackTemplate);

// Writes outbox/<student_id>.txt for each message.
void write_outbox(const FeedbackResult& result, const std::filesystem::path& outbox);

// Columns student_id,assessment,question,concept,error_codes ("|"-joined);
// rows sorted by student id then question.
std::string export_grades_csv(std::span<const QuestionAnnotation> annotations, std::string_view assessment);
std::vector<QuestionAnnotation> read_grades_csv(std::string_view text);

struct SimilarityOptions {
  std::size_t shingle = 5;
  double threshold = 0.8;
  bool normalize_identifiers = true;
};

struct PairScore {
  std::string a;
  std::string b;
  double similarity = 0;
};

struct SimilarityGroup {
  std::vector<std::string> students;
  std::vector<PairScore> pairs;
};

struct SimilarityReport {
  std::vector<SimilarityGroup> groups;
  std::vector<std::string> skipped;  // binary entries
};

// Comment- and whitespace-insensitive token stream; with identifier
// normalization every non-keyword identifier becomes one placeholder token.
std::vector<std::string> tokenize_source(std::string_view text, bool normalize_identifiers);
double jaccard_similarity(std::string_view a, std::string_view b, const SimilarityOptions& options);

// Advisory baseline: connected components of pairs at or above the threshold.
SimilarityReport similarity_groups(const SubmissionSet& set, const SimilarityOptions& options);

}  // namespace gradeforge::submissions
