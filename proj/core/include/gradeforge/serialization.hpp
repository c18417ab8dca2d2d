#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradeforge/policy.hpp"

namespace gradeforge {

inline constexpr int kSchemaVersion = 1;

// Fractions are written as JSON numbers when they terminate within six
// decimals and as "n/d" strings otherwise; both forms are accepted on input.
nlohmann::json rational_to_json(const Rational& value);
Rational rational_from_json(const nlohmann::json& value);

nlohmann::json to_json(const CoursePolicy& policy);
CoursePolicy policy_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const StudentRecord& record);
StudentRecord record_from_json(const nlohmann::json& doc);

// Scores are stored as exact strings so that a reload compares equal.
nlohmann::json to_json(const GradeOutcome& outcome);
GradeOutcome outcome_from_json(const nlohmann::json& doc);

// Columns: student_id, one concept column per policy assessment ("-" when
// missed), cr, cbrec, rec, final, registered. Scores rendered half-up to 2 decimals.
std::string outcomes_csv(std::span<const GradeOutcome> outcomes, const CoursePolicy& policy);

}  // namespace gradeforge
