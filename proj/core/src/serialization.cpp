#include "gradeforge/serialization.hpp"

#include "gradeforge/csv.hpp"
#include "gradeforge/error.hpp"

namespace gradeforge {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

std::optional<Concept> optional_concept(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  const auto text = doc.at(key).get<std::string>();
  if (text.empty() || text == "-") return std::nullopt;
  return Concept::parse(text);
}

json optional_concept_json(const std::optional<Concept>& c) { return c ? json(c->str()) : json(nullptr); }

Score score_from_json(const json& v) {
  return v.is_string() ? Score::parse(v.get<std::string>()) : Score::from_double(v.get<double>());
}

}  // namespace

json rational_to_json(const Rational& value) {
  const std::string exact = exact_string(value);
  const auto dot = exact.find('.');
  const bool short_decimal =
      exact.find('/') == std::string::npos && (dot == std::string::npos || exact.size() - dot - 1 <= 6);
  if (short_decimal) return to_double(value);
  return exact;
}

Rational rational_from_json(const json& value) {
  if (value.is_string()) return parse_rational(value.get<std::string>());
  if (value.is_number()) return rational_from_double(value.get<double>());
  throw Error(ErrorKind::ParseError, "expected a number or fraction string, got " + value.dump());
}

json to_json(const CoursePolicy& p) {
  json weights = json::array();
  for (const auto& a : p.assessments) weights.push_back({{"name", a.name}, {"weight", rational_to_json(a.weight)}});
  json qweights = json::object();
  for (const auto& [name, ws] : p.question_weights) {
    json arr = json::array();
    for (const auto& w : ws) arr.push_back(rational_to_json(w));
    qweights[name] = arr;
  }
  json overrides = json::object();
  for (const auto& [name, table] : p.cutoff_overrides) overrides[name] = cutoffs_to_json(table);

  return {
      {"schema", kSchemaVersion},
      {"scale", to_json(p.scale)},
      {"weights", weights},
      {"question_weights", qweights},
      {"attendance_min_fraction", rational_to_json(p.attendance_min_fraction)},
      {"attendance_failure_concept", p.attendance_failure_concept.str()},
      {"attendance_failure_allows_rec", p.attendance_failure_allows_rec},
      {"language_cap", optional_concept_json(p.language_cap)},
      {"language_cap_exempt", p.language_cap_exempt},
      {"rec_policy", to_string(p.rec_policy)},
      {"rec_eligibility", to_string(p.rec_eligibility)},
      {"sub_policy", to_string(p.sub_policy)},
      {"improvement_bonus_factor", rational_to_json(p.improvement_bonus_factor)},
      {"activity_bonus_factor", rational_to_json(p.activity_bonus_factor)},
      {"bonus_stage", to_string(p.bonus_stage)},
      {"cutoff_overrides", overrides},
      {"activities_assessment", p.activities_assessment},
      {"exam1_assessment", p.exam1_assessment},
      {"exam2_assessment", p.exam2_assessment},
  };
}

CoursePolicy policy_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "policy document must be an object");
  try {
    CoursePolicy p;
    if (doc.contains("preset") && doc.at("preset") == "historical") p = CoursePolicy::historical();
    if (doc.contains("scale")) p.scale = concept_scale_from_json(doc.at("scale"));
    if (doc.contains("weights")) {
      const auto& w = doc.at("weights");
      p.assessments.clear();
      if (w.is_array()) {
        for (const auto& row : w) {
          p.assessments.push_back({row.at("name").get<std::string>(), rational_from_json(row.at("weight"))});
        }
      } else if (w.is_object()) {
        for (const auto& [name, value] : w.items()) p.assessments.push_back({name, rational_from_json(value)});
      } else {
        throw Error(ErrorKind::ParseError, "'weights' must be an array or object");
      }
    }
    if (doc.contains("question_weights")) {
      for (const auto& [name, arr] : doc.at("question_weights").items()) {
        std::vector<Rational> ws;
        for (const auto& v : arr) ws.push_back(rational_from_json(v));
        p.question_weights[name] = std::move(ws);
      }
    }
    if (doc.contains("attendance_min_fraction")) {
      p.attendance_min_fraction = rational_from_json(doc.at("attendance_min_fraction"));
    }
    if (auto c = optional_concept(doc, "attendance_failure_concept")) p.attendance_failure_concept = *c;
    p.attendance_failure_allows_rec = get_or(doc, "attendance_failure_allows_rec", p.attendance_failure_allows_rec);
    if (doc.contains("language_cap")) p.language_cap = optional_concept(doc, "language_cap");
    if (doc.contains("language_cap_exempt")) {
      p.language_cap_exempt = doc.at("language_cap_exempt").get<std::vector<std::string>>();
    }
    if (doc.contains("rec_policy")) p.rec_policy = parse_rec_policy(doc.at("rec_policy").get<std::string>());
    if (doc.contains("rec_eligibility")) {
      p.rec_eligibility = parse_rec_eligibility(doc.at("rec_eligibility").get<std::string>());
    }
    if (doc.contains("sub_policy")) p.sub_policy = parse_sub_policy(doc.at("sub_policy").get<std::string>());
    if (doc.contains("improvement_bonus_factor")) {
      p.improvement_bonus_factor = rational_from_json(doc.at("improvement_bonus_factor"));
    }
    if (doc.contains("activity_bonus_factor")) {
      p.activity_bonus_factor = rational_from_json(doc.at("activity_bonus_factor"));
    }
    if (doc.contains("bonus_stage")) p.bonus_stage = parse_bonus_stage(doc.at("bonus_stage").get<std::string>());
    if (doc.contains("cutoff_overrides")) {
      for (const auto& [name, rows] : doc.at("cutoff_overrides").items()) {
        p.cutoff_overrides.insert_or_assign(name, cutoffs_from_json(rows));
      }
    }
    p.activities_assessment = get_or(doc, "activities_assessment", p.activities_assessment);
    p.exam1_assessment = get_or(doc, "exam1_assessment", p.exam1_assessment);
    p.exam2_assessment = get_or(doc, "exam2_assessment", p.exam2_assessment);
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("policy document: ") + e.what());
  }
}

json to_json(const StudentRecord& r) {
  json assessments = json::array();
  for (const auto& a : r.assessments) {
    json questions = json::array();
    for (const auto& q : a.questions) questions.push_back({{"concept", q.grade.str()}, {"error_codes", q.error_codes}});
    assessments.push_back({{"name", a.name}, {"missed", a.missed}, {"questions", questions}});
  }
  json activities = json::array();
  for (Concept c : r.activity_concepts) activities.push_back(c.str());
  return {
      {"student_id", r.student_id},
      {"campus", r.campus},
      {"assessments", assessments},
      {"activity_concepts", activities},
      {"activities_done", r.activities_done},
      {"activities_total", r.activities_total},
      {"uses_portugol_after_exam1", r.uses_portugol_after_exam1},
      {"cancelled", r.cancelled},
      {"prior_failures", r.prior_failures},
      {"sub", optional_concept_json(r.sub)},
      {"rec", optional_concept_json(r.rec)},
  };
}

StudentRecord record_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "student record must be an object");
  try {
    StudentRecord r;
    r.student_id = doc.at("student_id").get<std::string>();
    r.campus = get_or<std::string>(doc, "campus", "");
    if (doc.contains("assessments")) {
      for (const auto& a : doc.at("assessments")) {
        AssessmentResult ar;
        ar.name = a.at("name").get<std::string>();
        ar.missed = get_or(a, "missed", false);
        if (a.contains("questions")) {
          for (const auto& q : a.at("questions")) {
            if (q.is_string()) {
              ar.questions.push_back({Concept::parse(q.get<std::string>()), {}});
            } else {
              ar.questions.push_back({Concept::parse(q.at("concept").get<std::string>()),
                                      get_or<std::vector<int>>(q, "error_codes", {})});
            }
          }
        }
        r.assessments.push_back(std::move(ar));
      }
    }
    if (doc.contains("activity_concepts")) {
      for (const auto& c : doc.at("activity_concepts")) r.activity_concepts.push_back(Concept::parse(c.get<std::string>()));
    }
    r.activities_done = get_or(doc, "activities_done", r.activities_done);
    r.activities_total = get_or(doc, "activities_total", r.activities_total);
    r.uses_portugol_after_exam1 = get_or(doc, "uses_portugol_after_exam1", false);
    r.cancelled = get_or(doc, "cancelled", false);
    r.prior_failures = get_or<std::map<std::string, int>>(doc, "prior_failures", {});
    r.sub = optional_concept(doc, "sub");
    r.rec = optional_concept(doc, "rec");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("student record: ") + e.what());
  }
}

json to_json(const GradeOutcome& o) {
  json assessments = json::array();
  for (const auto& a : o.assessments) {
    assessments.push_back({{"name", a.name},
                           {"score", a.score.exact()},
                           {"concept", optional_concept_json(a.grade)},
                           {"missed", a.missed},
                           {"filled_by", a.filled_by},
                           {"capped", a.capped}});
  }
  json bonuses = json::array();
  for (const auto& b : o.bonuses) bonuses.push_back({{"name", b.name}, {"amount", b.amount.exact()}});
  json trail = json::array();
  for (const auto& s : o.audit_trail) {
    trail.push_back({{"rule", s.rule},
                     {"op", to_string(s.op)},
                     {"operand", s.operand.exact()},
                     {"result", s.result.exact()},
                     {"detail", s.detail}});
  }
  return {
      {"student_id", o.student_id},
      {"assessments", assessments},
      {"cr", o.cr.exact()},
      {"bonuses", bonuses},
      {"attendance_forced", optional_concept_json(o.attendance_forced)},
      {"cbrec", o.cbrec.str()},
      {"rec", optional_concept_json(o.rec)},
      {"final_score", o.final_score.exact()},
      {"final_concept", o.final_concept.str()},
      {"registered_concept", o.registered_concept.str()},
      {"audit_trail", trail},
  };
}

GradeOutcome outcome_from_json(const json& doc) {
  try {
    GradeOutcome o;
    o.student_id = doc.at("student_id").get<std::string>();
    for (const auto& a : doc.at("assessments")) {
      AssessmentOutcome ao;
      ao.name = a.at("name").get<std::string>();
      ao.score = score_from_json(a.at("score"));
      ao.grade = optional_concept(a, "concept");
      ao.missed = get_or(a, "missed", false);
      ao.filled_by = get_or<std::string>(a, "filled_by", "");
      ao.capped = get_or(a, "capped", false);
      o.assessments.push_back(std::move(ao));
    }
    o.cr = score_from_json(doc.at("cr"));
    for (const auto& b : doc.at("bonuses")) o.bonuses.push_back({b.at("name").get<std::string>(), score_from_json(b.at("amount"))});
    o.attendance_forced = optional_concept(doc, "attendance_forced");
    o.cbrec = Concept::parse(doc.at("cbrec").get<std::string>());
    o.rec = optional_concept(doc, "rec");
    o.final_score = score_from_json(doc.at("final_score"));
    o.final_concept = Concept::parse(doc.at("final_concept").get<std::string>());
    o.registered_concept = Concept::parse(doc.at("registered_concept").get<std::string>());
    if (doc.contains("audit_trail")) {
      for (const auto& s : doc.at("audit_trail")) {
        o.audit_trail.push_back({s.at("rule").get<std::string>(), parse_audit_op(s.at("op").get<std::string>()),
                                 score_from_json(s.at("operand")), score_from_json(s.at("result")),
                                 get_or<std::string>(s, "detail", "")});
      }
    }
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("grade outcome: ") + e.what());
  }
}

std::string outcomes_csv(std::span<const GradeOutcome> outcomes, const CoursePolicy& policy) {
  csv::Row header{"student_id"};
  for (const auto& a : policy.assessments) header.push_back(a.name);
  for (const char* col : {"cr", "cbrec", "rec", "final", "registered"}) header.emplace_back(col);

  std::vector<csv::Row> rows;
  rows.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    csv::Row row{o.student_id};
    for (const auto& a : policy.assessments) {
      const AssessmentOutcome* ao = o.find(a.name);
      row.push_back(ao && ao->grade ? ao->grade->str() : "-");
    }
    row.push_back(o.cr.fixed(2));
    row.push_back(o.cbrec.str());
    row.push_back(o.rec ? o.rec->str() : "");
    row.push_back(o.final_concept.str());
    row.push_back(o.registered_concept.str());
    rows.push_back(std::move(row));
  }
  return csv::format(header, rows);
}

}  // namespace gradeforge
