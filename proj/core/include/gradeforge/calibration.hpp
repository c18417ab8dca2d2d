#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "gradeforge/error.hpp"
#include "gradeforge/workspace.hpp"

namespace gradeforge {

// Applies a partial override document to `base`:
//   cutoffs             final CR conversion; a full row list or {"A": 3.5, ...}
//   assessment_cutoffs  {"Exam2": <same forms>} per assessment
//   weights             {"Exam1": 0.3, ...} merged into the existing list, or a full row list
//   bonuses             {"improvement_factor", "activity_factor", "stage"}
//   rec_policy          "replace" | "max_of" | "mean_of" | "open_rec_max"
// Throws ParseError for malformed documents and InvalidPolicy, WeightSumError
// or InvalidCutoffs when the result breaks a policy invariant.
CoursePolicy apply_overrides(const CoursePolicy& base, const nlohmann::json& overrides);

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// 400 for malformed input, 409 for a stale snapshot id, 422 for policy
// invariant violations, 500 otherwise.
int http_status_for(ErrorKind kind);

// State behind the calibration endpoints. Requests are serialized.
class CalibrationService {
 public:
  // Loads the latest snapshot (with replay check) or creates the first one
  // from the workspace policy and records.
  explicit CalibrationService(Workspace workspace);

  ServiceResponse get_snapshot() const;
  ServiceResponse preview(const std::string& body);
  ServiceResponse audit() const;
  ServiceResponse persist(const std::string& body);

  CohortSnapshot snapshot() const;

 private:
  struct Preview {
    CoursePolicy policy;
    std::vector<GradeOutcome> outcomes;
  };

  Workspace workspace_;
  CohortSnapshot snapshot_;
  std::optional<Preview> last_preview_;
  mutable std::mutex mutex_;
};

nlohmann::json snapshot_json(const CohortSnapshot& snapshot);

// Local HTTP front end:
//   GET /api/snapshot, POST /api/preview, GET /api/audit, POST /api/policy
class CalibrationServer {
 public:
  explicit CalibrationServer(Workspace workspace, std::string static_dir = "");
  ~CalibrationServer();

  CalibrationServer(const CalibrationServer&) = delete;
  CalibrationServer& operator=(const CalibrationServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = kDefaultPort);
  // Serves on the calling thread until stop().
  void run(const std::string& host = "127.0.0.1", int port = kDefaultPort);
  void stop();

  static constexpr int kDefaultPort = 7077;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gradeforge
