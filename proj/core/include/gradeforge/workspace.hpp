#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradeforge/exambank.hpp"
#include "gradeforge/policy.hpp"
#include "gradeforge/submissions.hpp"

namespace gradeforge {

// course.json. Paths are relative to the workspace root.
struct CourseConfig {
  int schema = 1;
  std::string course;
  std::string term;
  std::string policy = "policy.json";
  std::string records = "records.json";
  std::string roster = "roster.csv";
  std::string bank = "bank.json";
  std::string catalog = "catalog.json";
  std::string layout = submissions::Layout{}.pattern;
  std::map<std::string, std::string> templates;  // assessment -> template file
  std::map<std::string, std::uint64_t> seeds;    // assessment -> exam seed
  // Optional analytics inputs: classes, failure_rows, survey, cancellations.
  std::map<std::string, std::string> analytics;
};

CourseConfig course_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CourseConfig& config);

struct CohortSnapshot {
  std::string id;  // zero-padded, increasing
  std::string term;
  std::string produced_at;  // ISO 8601 UTC; the only timestamp in the workspace
  CoursePolicy policy;
  std::vector<StudentRecord> records;
  std::vector<GradeOutcome> outcomes;
};

nlohmann::json to_json(const CohortSnapshot& snapshot);
// Parses without replaying; see Workspace::load_snapshot.
CohortSnapshot snapshot_from_json(const nlohmann::json& doc);

// Throws SnapshotMismatch unless recomputing from records + policy gives the
// stored outcomes exactly.
void verify_replay(const CohortSnapshot& snapshot);

std::string utc_timestamp();

class Workspace {
 public:
  // Parses and validates course.json and the policy it names.
  static Workspace open(const std::filesystem::path& root);
  // Writes a minimal course.json, policy.json, records.json, roster.csv,
  // catalog.json and an empty bank. Refuses to overwrite an existing course.json.
  static Workspace init(const std::filesystem::path& root, const std::string& term);

  const std::filesystem::path& root() const { return root_; }
  const CourseConfig& config() const { return config_; }

  // Resolves a relative path; throws Io if it leaves the root.
  std::filesystem::path resolve(const std::string& relative) const;

  CoursePolicy policy() const;
  void save_policy(const CoursePolicy& policy) const;
  std::vector<StudentRecord> records() const;
  std::vector<exambank::RosterEntry> roster() const;
  exambank::QuestionBank bank() const;
  // The configured template, or the standard three-slot one.
  exambank::ExamTemplate exam_template(const std::string& assessment) const;
  submissions::ErrorCatalog catalog() const;
  std::optional<std::uint64_t> seed_for(const std::string& assessment) const;

  std::filesystem::path snapshots_dir() const { return root_ / "snapshots"; }
  std::vector<std::string> snapshot_ids() const;  // ascending
  std::optional<std::string> latest_snapshot_id() const;

  // Computes outcomes and persists snapshots/<next id>.json.
  CohortSnapshot create_snapshot(const CoursePolicy& policy, const std::vector<StudentRecord>& records,
                                 const std::string& produced_at = utc_timestamp()) const;
  // Replays on load.
  CohortSnapshot load_snapshot(const std::string& id) const;

 private:
  Workspace(std::filesystem::path root, CourseConfig config) : root_(std::move(root)), config_(std::move(config)) {}

  std::filesystem::path root_;
  CourseConfig config_;
};

std::vector<StudentRecord> records_from_json(const nlohmann::json& doc);
nlohmann::json records_to_json(const std::vector<StudentRecord>& records);

}  // namespace gradeforge
