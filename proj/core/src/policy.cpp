#include "gradeforge/policy.hpp"

#include <algorithm>
#include <set>

#include "gradeforge/error.hpp"

namespace gradeforge {

namespace {

const Rational kWeightTolerance(1, 1'000'000'000);

bool fraction_ok(const Rational& r) { return r >= 0 && r <= 1; }

Rational abs(const Rational& r) { return r < 0 ? -r : r; }

void check_weight_sum(const Rational& sum, const std::string& what) {
  if (abs(sum - 1) > kWeightTolerance) {
    throw Error(ErrorKind::WeightSumError, what + " sum to " + exact_string(sum) + ", expected 1");
  }
}

struct Audit {
  std::vector<AuditStep>& steps;
  Score running;

  void note(std::string rule, std::string detail) {
    steps.push_back({std::move(rule), AuditOp::note, Score{}, running, std::move(detail)});
  }
  void apply(std::string rule, AuditOp op, const Score& operand, std::string detail) {
    switch (op) {
      case AuditOp::set: running = operand; break;
      case AuditOp::add: running += operand; break;
      case AuditOp::max: running = std::max(running, operand); break;
      case AuditOp::mean: running = (running + operand) / Rational(2); break;
      case AuditOp::clamp: running = running.clamped(); break;
      case AuditOp::note: break;
    }
    steps.push_back({std::move(rule), op, operand, running, std::move(detail)});
  }
};

struct SubFill {
  std::string assessment;
  std::string source;  // "SUB" or "REC"
};

// Shared by resolve_sub and compute_final_record so the pipeline knows which
// slot was filled and by what.
std::pair<StudentRecord, std::optional<SubFill>> fill_missed(const StudentRecord& rec, const CoursePolicy& p) {
  std::vector<std::string> missed;
  for (const auto& a : p.assessments) {
    if (a.name == p.activities_assessment) continue;
    const AssessmentResult* r = rec.find(a.name);
    if (r == nullptr || r->missed) missed.push_back(a.name);
  }
  if (missed.size() > 1) {
    std::string names;
    for (const auto& m : missed) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::MultipleMissed, "student " + rec.student_id + " missed " + names);
  }
  if (missed.empty()) return {rec, std::nullopt};

  std::optional<Concept> filler;
  std::string source;
  if (p.sub_policy == SubPolicy::separate_sub_exam && rec.sub) {
    filler = rec.sub;
    source = "SUB";
  } else if (p.sub_policy == SubPolicy::rec_substitutes && rec.rec) {
    filler = rec.rec;
    source = "REC";
  }
  if (!filler) return {rec, std::nullopt};

  StudentRecord out = rec;
  AssessmentResult* slot = out.find(missed.front());
  if (slot == nullptr) {
    out.assessments.push_back(AssessmentResult{missed.front(), false, {}});
    slot = &out.assessments.back();
  }
  slot->missed = false;
  slot->questions = {QuestionGrade{*filler, {}}};
  return {std::move(out), SubFill{missed.front(), source}};
}

void validate_record(const StudentRecord& rec) {
  if (rec.activities_total < 0 || rec.activities_done < 0 || rec.activities_done > rec.activities_total) {
    throw Error(ErrorKind::InvalidRecord, "student " + rec.student_id + ": activity counts " +
                                              std::to_string(rec.activities_done) + "/" +
                                              std::to_string(rec.activities_total));
  }
  for (const auto& a : rec.assessments) {
    if (a.missed && !a.questions.empty()) {
      throw Error(ErrorKind::InvalidRecord, "student " + rec.student_id + ": missed " + a.name + " has grades");
    }
  }
}

RecResult rec_by_policy(const Score& pre_rec, Concept rec_concept, const CoursePolicy& p, const ConceptScale& scale) {
  const Score rec_score = concept_to_score(rec_concept, scale.scheme);
  Score out;
  switch (p.rec_policy) {
    case RecPolicy::replace: out = rec_score; break;
    case RecPolicy::max_of:
    case RecPolicy::open_rec_max: out = std::max(pre_rec, rec_score); break;
    case RecPolicy::mean_of: out = (pre_rec + rec_score) / Rational(2); break;
  }
  out = out.clamped();
  return {out, p.final_cutoffs().concept_for(out)};
}

AuditOp rec_op(RecPolicy policy) {
  switch (policy) {
    case RecPolicy::replace: return AuditOp::set;
    case RecPolicy::mean_of: return AuditOp::mean;
    default: return AuditOp::max;
  }
}

}  // namespace

CoursePolicy CoursePolicy::historical() {
  CoursePolicy p;
  p.assessments = {
      {"Exam1", Rational(30, 100)},
      {"Activities", Rational(15, 100)},
      {"Project", Rational(15, 100)},
      {"Exam2", Rational(40, 100)},
  };
  return p;
}

const CutoffTable& CoursePolicy::cutoffs_for(const std::string& assessment) const {
  auto it = cutoff_overrides.find(assessment);
  return it != cutoff_overrides.end() ? it->second : scale.cutoffs;
}

const CutoffTable& CoursePolicy::final_cutoffs() const { return cutoffs_for(std::string(kFinalCutoffs)); }

std::optional<Rational> CoursePolicy::weight_of(const std::string& assessment) const {
  for (const auto& a : assessments) {
    if (a.name == assessment) return a.weight;
  }
  return std::nullopt;
}

void CoursePolicy::validate() const {
  if (assessments.empty()) throw Error(ErrorKind::InvalidPolicy, "no assessments");
  std::set<std::string> names;
  Rational sum = 0;
  for (const auto& a : assessments) {
    if (a.name.empty()) throw Error(ErrorKind::InvalidPolicy, "assessment with empty name");
    if (a.name == kFinalCutoffs) throw Error(ErrorKind::InvalidPolicy, "'final' is reserved");
    if (!names.insert(a.name).second) throw Error(ErrorKind::InvalidPolicy, "duplicate assessment " + a.name);
    if (!fraction_ok(a.weight)) {
      throw Error(ErrorKind::InvalidPolicy, "weight of " + a.name + " outside [0,1]: " + exact_string(a.weight));
    }
    sum += a.weight;
  }
  check_weight_sum(sum, "assessment weights");

  for (const auto& [name, weights] : question_weights) {
    if (weights.empty()) throw Error(ErrorKind::InvalidPolicy, "empty question weights for " + name);
    Rational qsum = 0;
    for (const auto& w : weights) {
      if (!fraction_ok(w)) throw Error(ErrorKind::InvalidPolicy, "question weight outside [0,1] in " + name);
      qsum += w;
    }
    check_weight_sum(qsum, "question weights of " + name);
  }

  for (const auto& [what, value] : {std::pair{"attendance_min_fraction", attendance_min_fraction},
                                    std::pair{"improvement_bonus_factor", improvement_bonus_factor},
                                    std::pair{"activity_bonus_factor", activity_bonus_factor}}) {
    if (!fraction_ok(value)) {
      throw Error(ErrorKind::InvalidPolicy, std::string(what) + " outside [0,1]: " + exact_string(value));
    }
  }
  for (const auto& [name, table] : cutoff_overrides) {
    if (name != kFinalCutoffs && !names.contains(name)) {
      throw Error(ErrorKind::InvalidPolicy, "cutoff override for unknown assessment " + name);
    }
  }
}

const AssessmentResult* StudentRecord::find(const std::string& assessment) const {
  for (const auto& a : assessments) {
    if (a.name == assessment) return &a;
  }
  return nullptr;
}

AssessmentResult* StudentRecord::find(const std::string& assessment) {
  for (auto& a : assessments) {
    if (a.name == assessment) return &a;
  }
  return nullptr;
}

const AssessmentOutcome* GradeOutcome::find(const std::string& assessment) const {
  for (const auto& a : assessments) {
    if (a.name == assessment) return &a;
  }
  return nullptr;
}

Score aggregate_weighted(std::span<const std::pair<Concept, Rational>> items, const ConceptScale& scale) {
  if (items.empty()) throw Error(ErrorKind::EmptyInput, "no items to aggregate");
  Rational wsum = 0;
  Score total;
  for (const auto& [c, w] : items) {
    wsum += w;
    total += concept_to_score(c, scale.scheme) * w;
  }
  check_weight_sum(wsum, "item weights");
  return total.clamped();
}

std::optional<Concept> apply_attendance_rule(const StudentRecord& rec, const CoursePolicy& p) {
  if (rec.activities_total <= 0) return std::nullopt;
  const Rational delivered(rec.activities_done, rec.activities_total);
  if (delivered < p.attendance_min_fraction) return p.attendance_failure_concept;
  return std::nullopt;
}

Concept apply_language_cap(Concept assessment_concept, const StudentRecord& rec, const CoursePolicy& p) {
  if (!p.language_cap || !rec.uses_portugol_after_exam1) return assessment_concept;
  return std::min(assessment_concept, *p.language_cap);
}

BonusResult apply_bonuses(const Score& cr, const Score& exam1, const Score& exam2, const ActivitySummary& activities,
                          const CoursePolicy& p) {
  const Score gain = std::max(Score::zero(), exam2 - exam1);
  const Score improvement = gain * p.improvement_bonus_factor;
  Score activity;
  if (activities.total > 0) {
    activity = activities.mean * (p.activity_bonus_factor * Rational(1, Score::kMax) *
                                  Rational(activities.done, activities.total));
  }
  return {(cr + improvement + activity).clamped(), {{"improvement", improvement}, {"activity", activity}}};
}

BonusResult apply_bonuses(const Score& cr, Concept exam1, Concept exam2, int done, int total, Concept mean_concept,
                          const CoursePolicy& p, const ConceptScale& scale) {
  return apply_bonuses(cr, concept_to_score(exam1, scale.scheme), concept_to_score(exam2, scale.scheme),
                       ActivitySummary{done, total, concept_to_score(mean_concept, scale.scheme)}, p);
}

bool rec_eligible(Concept cbrec, const CoursePolicy& p) {
  if (p.rec_eligibility == RecEligibility::everyone || p.rec_policy == RecPolicy::open_rec_max) return true;
  return cbrec.letter() <= Letter::D;
}

RecResult resolve_rec(Concept cbrec, std::optional<Concept> rec_concept, const Score& pre_rec_score,
                      const CoursePolicy& p, const ConceptScale& scale) {
  if (!rec_concept) return {pre_rec_score, cbrec};
  if (!rec_eligible(cbrec, p)) {
    throw Error(ErrorKind::IneligibleRec, "CbREC " + cbrec.str() + " is not eligible for the REC");
  }
  return rec_by_policy(pre_rec_score, *rec_concept, p, scale);
}

StudentRecord resolve_sub(const StudentRecord& rec, const CoursePolicy& p) { return fill_missed(rec, p).first; }

GradeOutcome compute_final_record(const StudentRecord& record, const CoursePolicy& p) {
  p.validate();
  validate_record(record);

  GradeOutcome out;
  out.student_id = record.student_id;
  Audit audit{out.audit_trail, Score{}};
  const ModifierScheme& scheme = p.scale.scheme;

  try {
    auto [rec, fill] = fill_missed(record, p);

    // per-assessment aggregation
    Score activity_mean;
    bool have_activity_mean = false;
    for (const auto& a : p.assessments) {
      AssessmentOutcome ao;
      ao.name = a.name;
      const AssessmentResult* r = rec.find(a.name);
      const bool filled = fill && fill->assessment == a.name;

      if (a.name == p.activities_assessment && r == nullptr) {
        // Non-delivered activities count as F.
        Score sum;
        for (Concept c : rec.activity_concepts) sum += concept_to_score(c, scheme);
        if (rec.activities_total > 0) ao.score = (sum / Rational(rec.activities_total)).clamped();
        if (!rec.activity_concepts.empty()) {
          activity_mean = sum / Rational(static_cast<std::int64_t>(rec.activity_concepts.size()));
          have_activity_mean = true;
        }
        ao.grade = p.cutoffs_for(a.name).concept_for(ao.score);
        audit.note("aggregate:" + a.name, ao.grade->str() + " from " +
                                              std::to_string(rec.activity_concepts.size()) + " delivered of " +
                                              std::to_string(rec.activities_total) + ", score " + ao.score.exact());
      } else if (r == nullptr || r->missed) {
        ao.missed = true;
        audit.note("aggregate:" + a.name, "missed");
      } else if (filled) {
        ao.missed = true;
        ao.filled_by = fill->source;
      } else {
        if (r->questions.empty()) {
          throw Error(ErrorKind::InvalidRecord, "student " + rec.student_id + ": no grades for " + a.name);
        }
        std::vector<Rational> weights;
        if (auto it = p.question_weights.find(a.name); it != p.question_weights.end()) {
          weights = it->second;
        } else {
          weights.assign(r->questions.size(), Rational(1, static_cast<std::int64_t>(r->questions.size())));
        }
        if (weights.size() != r->questions.size()) {
          throw Error(ErrorKind::InvalidRecord, "student " + rec.student_id + ": " + a.name + " has " +
                                                    std::to_string(r->questions.size()) + " questions, policy " +
                                                    std::to_string(weights.size()));
        }
        std::vector<std::pair<Concept, Rational>> items;
        for (std::size_t i = 0; i < weights.size(); ++i) items.emplace_back(r->questions[i].grade, weights[i]);
        ao.score = aggregate_weighted(items, p.scale);
        ao.grade = p.cutoffs_for(a.name).concept_for(ao.score);
        audit.note("aggregate:" + a.name, ao.grade->str() + " score " + ao.score.exact());
      }
      out.assessments.push_back(std::move(ao));
    }

    // language cap
    for (auto& ao : out.assessments) {
      if (!ao.grade || !ao.filled_by.empty()) continue;
      if (std::find(p.language_cap_exempt.begin(), p.language_cap_exempt.end(), ao.name) !=
          p.language_cap_exempt.end()) {
        continue;
      }
      const Concept capped = apply_language_cap(*ao.grade, rec, p);
      if (capped != *ao.grade) {
        audit.note("language_cap:" + ao.name, ao.grade->str() + " -> " + capped.str());
        ao.grade = capped;
        ao.score = std::min(ao.score, concept_to_score(capped, scheme));
        ao.capped = true;
      }
    }

    // SUB / REC substitution of the missed slot
    for (auto& ao : out.assessments) {
      if (ao.filled_by.empty()) continue;
      const Concept c = rec.find(ao.name)->questions.front().grade;
      ao.grade = c;
      ao.score = concept_to_score(c, scheme);
      audit.note("substitute:" + ao.name, ao.filled_by + " " + c.str());
    }

    // CR
    Score cr;
    for (const auto& a : p.assessments) cr += out.find(a.name)->score * a.weight;
    out.cr = cr.clamped();
    audit.apply("weighted_total", AuditOp::set, out.cr, "CR " + out.cr.exact());

    // bonuses
    auto score_of = [&](const std::string& name) {
      const AssessmentOutcome* ao = out.find(name);
      return ao ? ao->score : Score::zero();
    };
    ActivitySummary activities{record.activities_done, record.activities_total,
                               have_activity_mean ? activity_mean : score_of(p.activities_assessment)};
    const BonusResult bonus =
        apply_bonuses(out.cr, score_of(p.exam1_assessment), score_of(p.exam2_assessment), activities, p);
    out.bonuses = bonus.bonuses;
    Score pre_rec = out.cr;
    if (p.bonus_stage == BonusStage::pre_cutoff) {
      for (const auto& b : out.bonuses) audit.apply("bonus:" + b.name, AuditOp::add, b.amount, b.amount.exact());
      audit.apply("clamp", AuditOp::clamp, Score{}, "");
      pre_rec = audit.running;
    }

    // attendance
    out.attendance_forced = apply_attendance_rule(record, p);
    if (out.attendance_forced) {
      audit.note("attendance", std::to_string(record.activities_done) + "/" +
                                   std::to_string(record.activities_total) + " delivered, forced " +
                                   out.attendance_forced->str());
    }

    // CbREC
    out.cbrec = out.attendance_forced ? *out.attendance_forced : p.final_cutoffs().concept_for(pre_rec);
    audit.note("cbrec", out.cbrec.str());

    // REC
    out.rec = record.rec;
    if (record.rec) {
      const bool via_sub = fill && fill->source == "REC";
      bool eligible = via_sub || rec_eligible(out.cbrec, p);
      if (out.attendance_forced && !p.attendance_failure_allows_rec && !via_sub) eligible = false;
      if (!eligible) {
        throw Error(ErrorKind::IneligibleRec, "student " + record.student_id + " with CbREC " + out.cbrec.str() +
                                                  " may not take the REC");
      }
      // REC composes with the performance-based score even after an attendance failure.
      audit.apply("rec_base", AuditOp::set, pre_rec, "pre-REC score");
      const RecResult r = rec_by_policy(pre_rec, *record.rec, p, p.scale);
      audit.apply(std::string("rec:") + std::string(to_string(p.rec_policy)), rec_op(p.rec_policy),
                  concept_to_score(*record.rec, scheme), "REC " + record.rec->str());
      audit.apply("clamp", AuditOp::clamp, Score{}, "");
      out.final_score = r.score;
      out.final_concept = r.grade;
    } else if (out.attendance_forced) {
      out.final_score = concept_to_score(*out.attendance_forced, scheme);
      out.final_concept = *out.attendance_forced;
      audit.apply("attendance_final", AuditOp::set, out.final_score, "no REC taken");
    } else {
      out.final_score = pre_rec;
      out.final_concept = out.cbrec;
    }

    if (p.bonus_stage == BonusStage::post_cutoff) {
      if (out.attendance_forced && !record.rec) {
        audit.note("bonus", "not applied over an attendance failure");
      } else {
        for (const auto& b : out.bonuses) audit.apply("bonus:" + b.name, AuditOp::add, b.amount, b.amount.exact());
        audit.apply("clamp", AuditOp::clamp, Score{}, "");
        out.final_score = audit.running;
        out.final_concept = p.final_cutoffs().concept_for(out.final_score);
      }
    }

    out.registered_concept = registration_concept(out.final_concept);
    audit.note("final", out.final_concept.str() + " registered " + out.registered_concept.str() + " score " +
                            out.final_score.exact());
  } catch (const Error& e) {
    std::string trail;
    for (const auto& s : out.audit_trail) trail += "\n  " + s.rule + ": " + s.detail;
    throw Error(e.kind(), std::string(e.what()) + (trail.empty() ? "" : "\naudit trail:" + trail));
  }
  return out;
}

std::vector<GradeOutcome> compute_cohort(std::span<const StudentRecord> records, const CoursePolicy& p) {
  std::vector<GradeOutcome> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(compute_final_record(r, p));
  return out;
}

Score replay_audit(const std::vector<AuditStep>& trail) {
  std::vector<AuditStep> scratch;
  Audit audit{scratch, Score{}};
  for (const auto& s : trail) {
    if (s.op != AuditOp::note) audit.apply(s.rule, s.op, s.operand, "");
  }
  return audit.running;
}

std::string_view to_string(RecPolicy v) {
  switch (v) {
    case RecPolicy::replace: return "replace";
    case RecPolicy::max_of: return "max_of";
    case RecPolicy::mean_of: return "mean_of";
    case RecPolicy::open_rec_max: return "open_rec_max";
  }
  return "";
}

std::string_view to_string(RecEligibility v) {
  return v == RecEligibility::everyone ? "everyone" : "final_D_or_F";
}

std::string_view to_string(SubPolicy v) {
  return v == SubPolicy::rec_substitutes ? "rec_substitutes" : "separate_sub_exam";
}

std::string_view to_string(BonusStage v) { return v == BonusStage::post_cutoff ? "post_cutoff" : "pre_cutoff"; }

std::string_view to_string(AuditOp v) {
  switch (v) {
    case AuditOp::set: return "set";
    case AuditOp::add: return "add";
    case AuditOp::max: return "max";
    case AuditOp::mean: return "mean";
    case AuditOp::clamp: return "clamp";
    case AuditOp::note: return "note";
  }
  return "";
}

RecPolicy parse_rec_policy(std::string_view text) {
  for (auto v : {RecPolicy::replace, RecPolicy::max_of, RecPolicy::mean_of, RecPolicy::open_rec_max}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorKind::ParseError, "unknown rec_policy '" + std::string(text) + "'");
}

RecEligibility parse_rec_eligibility(std::string_view text) {
  for (auto v : {RecEligibility::final_D_or_F, RecEligibility::everyone}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorKind::ParseError, "unknown rec_eligibility '" + std::string(text) + "'");
}

SubPolicy parse_sub_policy(std::string_view text) {
  for (auto v : {SubPolicy::separate_sub_exam, SubPolicy::rec_substitutes}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorKind::ParseError, "unknown sub_policy '" + std::string(text) + "'");
}

BonusStage parse_bonus_stage(std::string_view text) {
  for (auto v : {BonusStage::pre_cutoff, BonusStage::post_cutoff}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorKind::ParseError, "unknown bonus_stage '" + std::string(text) + "'");
}

AuditOp parse_audit_op(std::string_view text) {
  for (auto v : {AuditOp::set, AuditOp::add, AuditOp::max, AuditOp::mean, AuditOp::clamp, AuditOp::note}) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorKind::ParseError, "unknown audit op '" + std::string(text) + "'");
}

}  // namespace gradeforge
