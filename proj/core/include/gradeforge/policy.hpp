#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradeforge/grade_model.hpp"
#include "gradeforge/score.hpp"

namespace gradeforge {

enum class RecPolicy { replace, max_of, mean_of, open_rec_max };
enum class RecEligibility { final_D_or_F, everyone };
enum class SubPolicy { separate_sub_exam, rec_substitutes };
enum class BonusStage { pre_cutoff, post_cutoff };

struct AssessmentWeight {
  std::string name;
  Rational weight;

  friend bool operator==(const AssessmentWeight&, const AssessmentWeight&) = default;
};

// Key used in CoursePolicy::cutoff_overrides for the CR -> CbREC/final conversion.
inline constexpr std::string_view kFinalCutoffs = "final";

struct CoursePolicy {
  ConceptScale scale{};
  // Ordered; the order is the column order of exported outcomes.
  std::vector<AssessmentWeight> assessments{
      {"Activities", Rational(1, 10)},
      {"Exam1", Rational(35, 100)},
      {"Project", Rational(1, 10)},
      {"Exam2", Rational(45, 100)},
  };
  // Per-assessment question weights; equal weights when absent.
  std::map<std::string, std::vector<Rational>> question_weights;

  Rational attendance_min_fraction{3, 4};
  Concept attendance_failure_concept{Letter::F};
  bool attendance_failure_allows_rec = true;

  std::optional<Concept> language_cap = Concept(Letter::B);
  // The cap applies to every assessment except these (work before the switch to Java).
  std::vector<std::string> language_cap_exempt{"Exam1"};

  RecPolicy rec_policy = RecPolicy::max_of;
  RecEligibility rec_eligibility = RecEligibility::final_D_or_F;
  SubPolicy sub_policy = SubPolicy::separate_sub_exam;

  Rational improvement_bonus_factor{1, 10};
  Rational activity_bonus_factor{1, 5};
  BonusStage bonus_stage = BonusStage::pre_cutoff;

  std::map<std::string, CutoffTable> cutoff_overrides;

  std::string activities_assessment = "Activities";
  std::string exam1_assessment = "Exam1";
  std::string exam2_assessment = "Exam2";

  // Activities 0.15, Exam1 0.30, Project 0.15, Exam2 0.40, as used before 2017.
  static CoursePolicy historical();

  const CutoffTable& cutoffs_for(const std::string& assessment) const;
  const CutoffTable& final_cutoffs() const;
  std::optional<Rational> weight_of(const std::string& assessment) const;

  // Throws InvalidPolicy / WeightSumError naming the violated invariant.
  void validate() const;

  friend bool operator==(const CoursePolicy&, const CoursePolicy&) = default;
};

struct QuestionGrade {
  Concept grade;
  std::vector<int> error_codes;

  friend bool operator==(const QuestionGrade&, const QuestionGrade&) = default;
};

struct AssessmentResult {
  std::string name;
  bool missed = false;
  std::vector<QuestionGrade> questions;

  friend bool operator==(const AssessmentResult&, const AssessmentResult&) = default;
};

struct StudentRecord {
  std::string student_id;
  std::string campus;
  std::vector<AssessmentResult> assessments;
  // Concepts of delivered weekly activities; ignored when an explicit
  // activities assessment is present in `assessments`.
  std::vector<Concept> activity_concepts;
  int activities_done = 36;  // 17 tests + 19 lists
  int activities_total = 36;
  bool uses_portugol_after_exam1 = false;
  bool cancelled = false;
  std::map<std::string, int> prior_failures;
  std::optional<Concept> sub;
  std::optional<Concept> rec;

  const AssessmentResult* find(const std::string& assessment) const;
  AssessmentResult* find(const std::string& assessment);

  friend bool operator==(const StudentRecord&, const StudentRecord&) = default;
};

struct AssessmentOutcome {
  std::string name;
  Score score;
  std::optional<Concept> grade;  // nullopt for a missed slot with no substitute
  bool missed = false;
  std::string filled_by;  // "", "SUB" or "REC"
  bool capped = false;

  friend bool operator==(const AssessmentOutcome&, const AssessmentOutcome&) = default;
};

struct Bonus {
  std::string name;
  Score amount;

  friend bool operator==(const Bonus&, const Bonus&) = default;
};

enum class AuditOp { set, add, max, mean, clamp, note };

// One rule application. Replaying the value-carrying ops in order from zero
// reproduces the final score.
struct AuditStep {
  std::string rule;
  AuditOp op = AuditOp::note;
  Score operand;
  Score result;
  std::string detail;

  friend bool operator==(const AuditStep&, const AuditStep&) = default;
};

struct GradeOutcome {
  std::string student_id;
  std::vector<AssessmentOutcome> assessments;
  Score cr;  // weighted total before bonuses and REC
  std::vector<Bonus> bonuses;
  std::optional<Concept> attendance_forced;
  Concept cbrec;
  std::optional<Concept> rec;
  Score final_score;
  Concept final_concept;
  Concept registered_concept;
  std::vector<AuditStep> audit_trail;

  const AssessmentOutcome* find(const std::string& assessment) const;

  friend bool operator==(const GradeOutcome&, const GradeOutcome&) = default;
};

Score aggregate_weighted(std::span<const std::pair<Concept, Rational>> items, const ConceptScale& scale);

std::optional<Concept> apply_attendance_rule(const StudentRecord& rec, const CoursePolicy& p);

Concept apply_language_cap(Concept assessment_concept, const StudentRecord& rec, const CoursePolicy& p);

struct ActivitySummary {
  int done = 0;
  int total = 0;
  Score mean;  // mean grade points of the delivered activities
};

struct BonusResult {
  Score score;
  std::vector<Bonus> bonuses;  // always both entries, even when zero
};

BonusResult apply_bonuses(const Score& cr, const Score& exam1, const Score& exam2,
                          const ActivitySummary& activities, const CoursePolicy& p);
BonusResult apply_bonuses(const Score& cr, Concept exam1, Concept exam2, int done, int total,
                          Concept mean_concept, const CoursePolicy& p, const ConceptScale& scale);

struct RecResult {
  Score score;
  Concept grade;
};

bool rec_eligible(Concept cbrec, const CoursePolicy& p);

RecResult resolve_rec(Concept cbrec, std::optional<Concept> rec_concept, const Score& pre_rec_score,
                      const CoursePolicy& p, const ConceptScale& scale);

StudentRecord resolve_sub(const StudentRecord& rec, const CoursePolicy& p);

GradeOutcome compute_final_record(const StudentRecord& rec, const CoursePolicy& p);

std::vector<GradeOutcome> compute_cohort(std::span<const StudentRecord> records, const CoursePolicy& p);

// Folds the audit trail; equals outcome.final_score for every computed record.
Score replay_audit(const std::vector<AuditStep>& trail);

std::string_view to_string(RecPolicy v);
std::string_view to_string(RecEligibility v);
std::string_view to_string(SubPolicy v);
std::string_view to_string(BonusStage v);
std::string_view to_string(AuditOp v);
RecPolicy parse_rec_policy(std::string_view text);
RecEligibility parse_rec_eligibility(std::string_view text);
SubPolicy parse_sub_policy(std::string_view text);
BonusStage parse_bonus_stage(std::string_view text);
AuditOp parse_audit_op(std::string_view text);

}  // namespace gradeforge
