#include "gradeforge/calibration.hpp"

#include "gradeforge/analytics.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/serialization.hpp"

namespace gradeforge {

using nlohmann::json;

namespace {

CutoffTable cutoffs_override(const CutoffTable& base, const json& doc) {
  if (doc.is_array()) return cutoffs_from_json(doc);
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "cutoffs must be a row list or an object");
  CutoffTable out = base;
  for (const auto& [name, value] : doc.items()) {
    if (!value.is_number() && !value.is_string()) {
      throw Error(ErrorKind::ParseError, "threshold for " + name + " must be a number");
    }
    out = out.with_threshold(Concept::parse(name), Score(rational_from_json(value)));
  }
  return out;
}

void apply_weights(CoursePolicy& p, const json& doc) {
  if (doc.is_array()) {
    p.assessments.clear();
    for (const auto& row : doc) {
      if (!row.is_object() || !row.contains("name") || !row.contains("weight")) {
        throw Error(ErrorKind::ParseError, "weight rows need 'name' and 'weight'");
      }
      p.assessments.push_back({row.at("name").get<std::string>(), rational_from_json(row.at("weight"))});
    }
    return;
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "weights must be an object or a row list");
  for (const auto& [name, value] : doc.items()) {
    auto it = std::find_if(p.assessments.begin(), p.assessments.end(), [&](const auto& a) { return a.name == name; });
    if (it == p.assessments.end()) throw Error(ErrorKind::InvalidPolicy, "unknown assessment " + name);
    it->weight = rational_from_json(value);
  }
}

void apply_bonuses(CoursePolicy& p, const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "bonuses must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "improvement_factor") {
      p.improvement_bonus_factor = rational_from_json(value);
    } else if (key == "activity_factor") {
      p.activity_bonus_factor = rational_from_json(value);
    } else if (key == "stage") {
      p.bonus_stage = parse_bonus_stage(value.get<std::string>());
    } else {
      throw Error(ErrorKind::ParseError, "unknown bonus field '" + key + "'");
    }
  }
}

json outcome_row(const GradeOutcome& o) {
  json row = to_json(o);
  row["cr_fixed"] = o.cr.fixed();
  row["final_fixed"] = o.final_score.fixed();
  return row;
}

json distribution_json(const std::vector<GradeOutcome>& outcomes) {
  if (outcomes.empty()) return {{"counts", json::object()}, {"fractions", json::object()}, {"gpa_mean", nullptr}};
  const auto stats = analytics::class_distribution(std::span<const GradeOutcome>(outcomes));
  std::map<std::string, int> counts;
  for (auto b : analytics::kBuckets) counts[std::string(b)] = 0;
  for (const auto& o : outcomes) ++counts[std::string(analytics::bucket_of(o.registered_concept))];
  return {{"counts", counts}, {"fractions", stats.distribution}, {"gpa_mean", stats.gpa_mean.to_double()}};
}

ServiceResponse error_response(const Error& e) {
  return {http_status_for(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}}};
}

ServiceResponse bad_request(const std::string& message) {
  return {400, {{"error", "ParseError"}, {"message", message}}};
}

}  // namespace

CoursePolicy apply_overrides(const CoursePolicy& base, const json& overrides) {
  if (!overrides.is_object()) throw Error(ErrorKind::ParseError, "overrides must be a JSON object");
  CoursePolicy p = base;
  try {
    for (const auto& [key, value] : overrides.items()) {
      if (key == "cutoffs") {
        p.cutoff_overrides.insert_or_assign(std::string(kFinalCutoffs), cutoffs_override(base.final_cutoffs(), value));
      } else if (key == "assessment_cutoffs") {
        if (!value.is_object()) throw Error(ErrorKind::ParseError, "assessment_cutoffs must be an object");
        for (const auto& [name, table] : value.items()) {
          if (!base.weight_of(name)) throw Error(ErrorKind::InvalidPolicy, "unknown assessment " + name);
          p.cutoff_overrides.insert_or_assign(name, cutoffs_override(base.cutoffs_for(name), table));
        }
      } else if (key == "weights") {
        apply_weights(p, value);
      } else if (key == "bonuses") {
        apply_bonuses(p, value);
      } else if (key == "rec_policy") {
        p.rec_policy = parse_rec_policy(value.get<std::string>());
      } else {
        throw Error(ErrorKind::ParseError, "unknown override '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("overrides: ") + e.what());
  }
  p.validate();
  return p;
}

int http_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidConcept:
      return 400;
    case ErrorKind::StaleSnapshot:
    case ErrorKind::SnapshotMismatch:
      return 409;
    case ErrorKind::InvalidPolicy:
    case ErrorKind::WeightSumError:
    case ErrorKind::InvalidCutoffs:
    case ErrorKind::InvalidScore:
      return 422;
    default:
      return 500;
  }
}

json snapshot_json(const CohortSnapshot& snapshot) { return to_json(snapshot); }

CalibrationService::CalibrationService(Workspace workspace) : workspace_(std::move(workspace)) {
  if (auto id = workspace_.latest_snapshot_id()) {
    snapshot_ = workspace_.load_snapshot(*id);
  } else {
    snapshot_ = workspace_.create_snapshot(workspace_.policy(), workspace_.records());
  }
}

CohortSnapshot CalibrationService::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

ServiceResponse CalibrationService::get_snapshot() const {
  std::lock_guard lock(mutex_);
  return {200, snapshot_json(snapshot_)};
}

ServiceResponse CalibrationService::preview(const std::string& body) {
  std::lock_guard lock(mutex_);
  json overrides;
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) {
    overrides = json::object();
  } else {
    try {
      overrides = json::parse(body);
    } catch (const json::parse_error& e) {
      return bad_request(e.what());
    }
  }
  try {
    Preview pv;
    pv.policy = apply_overrides(snapshot_.policy, overrides);
    pv.outcomes = compute_cohort(snapshot_.records, pv.policy);

    json outcomes = json::array();
    for (const auto& o : pv.outcomes) outcomes.push_back(outcome_row(o));
    json deltas = json::array();
    for (std::size_t i = 0; i < pv.outcomes.size(); ++i) {
      const auto& before = snapshot_.outcomes[i];
      const auto& after = pv.outcomes[i];
      if (before.final_concept == after.final_concept) continue;
      deltas.push_back({{"student_id", after.student_id},
                        {"cr", after.cr.fixed()},
                        {"before", before.final_concept.str()},
                        {"after", after.final_concept.str()},
                        {"before_registered", before.registered_concept.str()},
                        {"after_registered", after.registered_concept.str()}});
    }
    json response = {{"schema", kSchemaVersion},
                     {"snapshot_id", snapshot_.id},
                     {"policy", to_json(pv.policy)},
                     {"outcomes", outcomes},
                     {"distribution", distribution_json(pv.outcomes)},
                     {"deltas", deltas},
                     {"csv", outcomes_csv(pv.outcomes, pv.policy)}};
    last_preview_ = std::move(pv);
    return {200, response};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ServiceResponse CalibrationService::audit() const {
  std::lock_guard lock(mutex_);
  const auto& outcomes = last_preview_ ? last_preview_->outcomes : snapshot_.outcomes;
  const auto findings = analytics::fairness_audit(std::span<const GradeOutcome>(outcomes));
  return {200,
          {{"schema", kSchemaVersion},
           {"snapshot_id", snapshot_.id},
           {"preview", last_preview_.has_value()},
           {"findings", analytics::to_json(std::span<const analytics::FairnessFinding>(findings))}}};
}

ServiceResponse CalibrationService::persist(const std::string& body) {
  std::lock_guard lock(mutex_);
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return bad_request(e.what());
  }
  if (!doc.is_object() || !doc.contains("snapshot_id") || !doc.at("snapshot_id").is_string()) {
    return bad_request("body needs a string 'snapshot_id'");
  }
  const std::string base = doc.at("snapshot_id").get<std::string>();
  try {
    const auto latest = workspace_.latest_snapshot_id();
    if (base != snapshot_.id || (latest && *latest != snapshot_.id)) {
      throw Error(ErrorKind::StaleSnapshot,
                  "snapshot " + base + " is stale; current is " + (latest ? *latest : snapshot_.id));
    }
    CoursePolicy policy;
    if (doc.contains("overrides")) {
      policy = apply_overrides(snapshot_.policy, doc.at("overrides"));
    } else if (last_preview_) {
      policy = last_preview_->policy;
    } else {
      policy = snapshot_.policy;
    }
    workspace_.save_policy(policy);
    auto next = workspace_.create_snapshot(policy, snapshot_.records);
    const std::string previous = snapshot_.id;
    snapshot_ = std::move(next);
    last_preview_.reset();
    return {200, {{"schema", kSchemaVersion}, {"snapshot_id", snapshot_.id}, {"previous_snapshot_id", previous}}};
  } catch (const Error& e) {
    return error_response(e);
  }
}

}  // namespace gradeforge
