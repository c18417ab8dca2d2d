#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gradeforge/policy.hpp"

namespace gradeforge::analytics {

enum class Modality { in_class, blended };  // "class" / "bl"
std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);

// Distribution keys, best first. F, E and O are pooled as failures.
inline constexpr std::string_view kBuckets[] = {"A", "B", "C", "D", "F+O"};
std::string_view bucket_of(Concept c);

struct ClassInfo {
  std::string class_id;
  std::string term;
  Modality modality = Modality::in_class;
  std::size_t cancelled = 0;
};

struct ClassStats {
  std::string class_id;
  std::string term;
  Modality modality = Modality::in_class;
  std::size_t n_students = 0;
  std::map<std::string, double> distribution;  // every bucket present
  Score gpa_mean;
  double failure_fraction = 0;
  double cancellation_fraction = 0;  // cancelled / (n_students + cancelled)
};

// gpa_mean is the mean of the letter scores of the registered concepts.
// Throws EmptyClass.
ClassStats class_distribution(std::span<const Concept> registered, const ClassInfo& info = {});
ClassStats class_distribution(std::span<const GradeOutcome> outcomes, const ClassInfo& info = {});

// Sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

struct LetterDispersion {
  double mean = 0;
  double stddev = 0;
};

// Per bucket, across classes. Throws EmptyInput.
std::map<std::string, LetterDispersion> cohort_dispersion(std::span<const ClassStats> classes);

struct TermSeriesPoint {
  std::string term;
  std::size_t n_classes = 0;
  double min = 0;
  double max = 0;
  double mean = 0;
  double stddev = 0;
  bool wide_gap = false;  // max - min of at least two grade points
};

inline constexpr double kWideGap = 2.0;

// One point per term, ordered by term.
std::vector<TermSeriesPoint> term_series(std::span<const ClassStats> classes);

struct TermFailureRow {
  std::string term;
  Modality modality = Modality::in_class;
  double failure_fraction = 0;
  std::size_t n_students = 0;
  std::size_t n_classes = 0;
};

enum class Aggregation { simple, student_weighted };
std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view text);

struct ModalityAggregate {
  Modality modality = Modality::in_class;
  std::size_t n_terms = 0;
  double failure_fraction = 0;  // under the requested aggregation
  double simple = 0;
  double student_weighted = 0;
  std::size_t total_students = 0;
  std::size_t total_classes = 0;
};

struct FailureReport {
  Aggregation aggregation = Aggregation::simple;
  std::vector<ModalityAggregate> modalities;  // class before bl; absent modalities omitted
  std::vector<std::string> notes;
};

// `published` holds per-modality grand figures to compare against; each one
// that matches neither derivable aggregate (to 0.01 pp) gets a note.
FailureReport failure_report(std::span<const TermFailureRow> rows, Aggregation aggregation,
                             const std::map<Modality, double>& published = {});

struct FairnessRow {
  std::string student_id;
  Score cr;
  Score final_score;
};

struct FairnessFinding {
  std::string higher;  // better CR, worse final
  std::string lower;
  Score cr_gap;
  Score final_gap;
  std::string explanation;

  friend bool operator==(const FairnessFinding& a, const FairnessFinding& b) {
    return a.higher == b.higher && a.lower == b.lower && a.cr_gap == b.cr_gap && a.final_gap == b.final_gap;
  }
};

std::vector<FairnessRow> fairness_rows(std::span<const GradeOutcome> outcomes);

// Every pair with cr strictly higher and final score strictly lower.
// Sorted by (higher, lower).
std::vector<FairnessFinding> fairness_audit(std::span<const FairnessRow> rows);
std::vector<FairnessFinding> fairness_audit(std::span<const GradeOutcome> outcomes);

struct SurveyRow {
  std::string student_id;
  std::string term;
  int failures_class = 0;
  int failures_bl = 0;
};

struct PriorFailurePoint {
  std::string term;
  std::size_t n_students = 0;
  double class_fraction = 0;
  double bl_fraction = 0;
  double any_fraction = 0;  // per student, not from the marginals
};

// Throws InvalidRecord on negative counts.
std::vector<PriorFailurePoint> prior_failure_stats(std::span<const SurveyRow> rows);

struct RosterRow {
  std::string class_id;
  std::size_t enrolled = 0;
  std::size_t cancelled = 0;
};

struct CancellationReport {
  std::vector<std::pair<std::string, double>> per_class;
  double aggregate = 0;  // mean of the class fractions
  std::size_t total_enrolled = 0;
  std::size_t total_cancelled = 0;
};

// Throws InvalidRecord when cancelled exceeds enrolled.
CancellationReport cancellation_stats(std::span<const RosterRow> rows);

struct LabSizeChange {
  double mean_before = 0;
  double mean_after = 0;
  double relative_change = 0;  // (after - before) / before
};

LabSizeChange lab_size_change(std::size_t enrolled_before, std::size_t enrolled_after, std::size_t labs);

// Paired synthetic experiment: the same student CRs graded once with the
// standard cutoffs for every class and once with each class's thresholds
// moved independently by up to max_shift.
struct DispersionTrialOptions {
  // one in-class term: 1113 students over 40 classes
  std::size_t classes = 40;
  std::size_t students_per_class = 28;
  double max_shift = 0.5;
  // share of students on a failing trajectory; 0.3 puts the synthetic
  // failure rate near the observed per-term rates
  double disengaged_share = 0.3;
};

struct DispersionTrial {
  std::map<std::string, double> shared_stddev;
  std::map<std::string, double> perturbed_stddev;

  // shared <= perturbed for every bucket
  bool shrinks() const;
};

DispersionTrial dispersion_trial(std::uint64_t seed, const DispersionTrialOptions& options = {});

// Flat tables, one per figure analog.
std::string dispersion_csv(const std::map<std::string, LetterDispersion>& dispersion);
std::string term_series_csv(std::span<const TermSeriesPoint> points);
std::string failure_report_csv(const FailureReport& report);
std::string fairness_csv(std::span<const FairnessFinding> findings);
std::string class_stats_csv(std::span<const ClassStats> classes);

nlohmann::json to_json(const ClassStats& s);
nlohmann::json to_json(const std::map<std::string, LetterDispersion>& dispersion);
nlohmann::json to_json(std::span<const TermSeriesPoint> points);
nlohmann::json to_json(const FailureReport& report);
nlohmann::json to_json(std::span<const FairnessFinding> findings);
nlohmann::json to_json(std::span<const PriorFailurePoint> points);
nlohmann::json to_json(const CancellationReport& report);

}  // namespace gradeforge::analytics
