#include <fstream>
#include <random>

#include <httplib.h>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "gradeforge/calibration.hpp"
#include "gradeforge/serialization.hpp"

using namespace gradeforge;
using nlohmann::json;
using testing_support::TempDir;

namespace {

// Table 4 plus one student at CR 3.60 (A, A, A, B under 30/15/15/40).
Workspace calibration_workspace(const std::filesystem::path& dir) {
  auto ws = testing_support::copy_workspace("table4", dir);
  auto records = ws.records();
  StudentRecord r;
  r.student_id = "student10";
  for (const auto& [name, c] : {std::pair{"Exam1", "A"}, {"Activities", "A"}, {"Project", "A"}, {"Exam2", "B"}}) {
    r.assessments.push_back({name, false, {{Concept::parse(c), {}}}});
  }
  records.push_back(r);
  std::ofstream(ws.resolve(ws.config().records)) << records_to_json(records).dump(2);
  return Workspace::open(dir);
}

CoursePolicy policy_with(const json& overrides) { return apply_overrides(CoursePolicy::historical(), overrides); }

void expect_kind(ErrorKind kind, const json& overrides) {
  try {
    policy_with(overrides);
    ADD_FAILURE() << overrides.dump();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << overrides.dump() << ": " << e.what();
  }
}

}  // namespace

TEST(Overrides, EmptyOverrideIsIdentity) { EXPECT_EQ(policy_with(json::object()), CoursePolicy::historical()); }

TEST(Overrides, EachFieldApplies) {
  const auto p = policy_with({{"cutoffs", {{"A", 3.5}}},
                              {"weights", {{"Exam1", 0.25}, {"Exam2", 0.45}}},
                              {"bonuses", {{"improvement_factor", 0.2}, {"stage", "post_cutoff"}}},
                              {"rec_policy", "mean_of"}});
  EXPECT_EQ(p.final_cutoffs().concept_for(Score::parse("3.6")), Concept::parse("A"));
  EXPECT_EQ(p.weight_of("Exam1"), Rational(1, 4));
  EXPECT_EQ(p.improvement_bonus_factor, Rational(1, 5));
  EXPECT_EQ(p.bonus_stage, BonusStage::post_cutoff);
  EXPECT_EQ(p.rec_policy, RecPolicy::mean_of);

  const auto q = policy_with({{"assessment_cutoffs", {{"Exam2", {{"A", 3.5}}}}}});
  EXPECT_EQ(q.cutoffs_for("Exam2").concept_for(Score::parse("3.6")), Concept::parse("A"));
  EXPECT_EQ(q.final_cutoffs(), CoursePolicy::historical().final_cutoffs());
}

TEST(Overrides, ErrorsAreClassified) {
  expect_kind(ErrorKind::WeightSumError, {{"weights", {{"Exam1", 0.2}}}});
  expect_kind(ErrorKind::ParseError, json::array());
  expect_kind(ErrorKind::ParseError, {{"thresholds", 1}});
  expect_kind(ErrorKind::ParseError, {{"rec_policy", 3}});
  expect_kind(ErrorKind::ParseError, {{"bonuses", {{"speed", 1}}}});
  expect_kind(ErrorKind::InvalidPolicy, {{"weights", {{"Exam9", 0.1}}}});
  expect_kind(ErrorKind::InvalidPolicy, {{"assessment_cutoffs", {{"Exam9", {{"A", 3.5}}}}}});
  expect_kind(ErrorKind::InvalidConcept, {{"cutoffs", {{"Z", 3.5}}}});
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(ErrorKind::ParseError), 400);
  EXPECT_EQ(http_status_for(ErrorKind::InvalidConcept), 400);
  EXPECT_EQ(http_status_for(ErrorKind::StaleSnapshot), 409);
  EXPECT_EQ(http_status_for(ErrorKind::WeightSumError), 422);
  EXPECT_EQ(http_status_for(ErrorKind::InvalidCutoffs), 422);
  EXPECT_EQ(http_status_for(ErrorKind::Io), 500);
}

TEST(Service, LoweringTheACutoffMovesTheStudentAtThreePointSix) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  const auto r = svc.preview(R"({"cutoffs": {"A": 3.5}})");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  ASSERT_EQ(r.body.at("deltas").size(), 1u);
  const auto& d = r.body.at("deltas")[0];
  EXPECT_EQ(d.at("student_id"), "student10");
  EXPECT_EQ(d.at("cr"), "3.60");
  EXPECT_EQ(d.at("before"), "B+");
  EXPECT_EQ(d.at("after"), "A");
  EXPECT_EQ(r.body.at("outcomes").size(), 11u);
  EXPECT_EQ(r.body.at("distribution").at("counts").at("A"), 1);
}

TEST(Service, EmptyPreviewHasNoDeltas) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  for (const char* body : {"", "{}", "  \n"}) {
    const auto r = svc.preview(body);
    ASSERT_EQ(r.status, 200);
    EXPECT_TRUE(r.body.at("deltas").empty());
  }
}

TEST(Service, PreviewErrorsMapToStatuses) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  EXPECT_EQ(svc.preview("{not json").status, 400);
  EXPECT_EQ(svc.preview(R"({"cutoffs": "high"})").status, 400);
  const auto r = svc.preview(R"({"weights": {"Exam1": 0.2}})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body.at("error"), "WeightSumError");
  EXPECT_EQ(svc.persist("[]").status, 400);
}

TEST(Service, PreviewNeverMutates) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  const auto before = svc.get_snapshot().body.dump();
  const auto ids = Workspace::open(dir.path() / "ws").snapshot_ids();
  std::mt19937_64 rng(2);
  const char* bodies[] = {R"({"cutoffs": {"A": 3.5}})", R"({"rec_policy": "replace"})",
                          R"({"weights": {"Exam1": 0.5}})", R"({"bonuses": {"activity_factor": 0.3}})", "{bad"};
  for (int i = 0; i < 50; ++i) svc.preview(bodies[rng() % 5]);
  EXPECT_EQ(svc.get_snapshot().body.dump(), before);
  EXPECT_EQ(Workspace::open(dir.path() / "ws").snapshot_ids(), ids);
}

TEST(Service, PersistWritesPolicyAndAdvancesSnapshot) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  const std::string first = svc.snapshot().id;
  const auto preview = svc.preview(R"({"cutoffs": {"A": 3.5}})");
  const auto r = svc.persist(json{{"snapshot_id", first}}.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_GT(r.body.at("snapshot_id").get<std::string>(), first);
  EXPECT_EQ(r.body.at("previous_snapshot_id"), first);

  // a fresh computation under the saved policy gives the persisted preview byte for byte
  const auto ws = Workspace::open(dir.path() / "ws");
  const auto policy = ws.policy();
  EXPECT_EQ(outcomes_csv(compute_cohort(ws.records(), policy), policy), preview.body.at("csv").get<std::string>());
  EXPECT_EQ(ws.load_snapshot(r.body.at("snapshot_id")).policy, policy);
}

TEST(Service, ConcurrentPersistIsStale) {
  TempDir dir;
  const auto ws = calibration_workspace(dir.path() / "ws");
  CalibrationService a(ws);
  CalibrationService b(ws);
  const std::string id = a.snapshot().id;
  ASSERT_EQ(b.snapshot().id, id);
  ASSERT_EQ(a.persist(json{{"snapshot_id", id}, {"overrides", {{"rec_policy", "replace"}}}}.dump()).status, 200);
  const auto r = b.persist(json{{"snapshot_id", id}}.dump());
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body.at("error"), "StaleSnapshot");
  EXPECT_EQ(a.persist(json{{"snapshot_id", id}}.dump()).status, 409);
}

TEST(Service, AuditFollowsThePreview) {
  TempDir dir;
  CalibrationService svc(calibration_workspace(dir.path() / "ws"));
  const auto base = svc.audit();
  EXPECT_FALSE(base.body.at("preview").get<bool>());
  EXPECT_TRUE(base.body.at("findings").empty());
  svc.preview(R"({"rec_policy": "replace"})");
  const auto after = svc.audit();
  EXPECT_TRUE(after.body.at("preview").get<bool>());
  EXPECT_FALSE(after.body.at("findings").empty());
}

TEST(Service, LargeTermSnapshot) {
  TempDir dir;
  auto ws = Workspace::init(dir.path() / "ws", "2017.2");
  std::mt19937_64 rng(20172);
  std::vector<StudentRecord> records;
  for (int i = 0; i < 162; ++i) records.push_back(testing_support::random_record(rng, "bl" + std::to_string(i)));
  std::ofstream(ws.resolve(ws.config().records)) << records_to_json(records).dump();
  CalibrationService svc(Workspace::open(dir.path() / "ws"));
  EXPECT_EQ(svc.get_snapshot().body.at("students").size(), 162u);
}

TEST(Server, EndpointsOverHttp) {
  TempDir dir;
  CalibrationServer server(calibration_workspace(dir.path() / "ws"));
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);

  auto snap = cli.Get("/api/snapshot");
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->status, 200);
  const auto snapshot = json::parse(snap->body);
  EXPECT_EQ(snapshot.at("schema"), 1);
  const std::string id = snapshot.at("snapshot_id");

  auto bad = cli.Post("/api/preview", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto invalid = cli.Post("/api/preview", R"({"weights": {"Exam1": 0.2}})", "application/json");
  ASSERT_TRUE(invalid);
  EXPECT_EQ(invalid->status, 422);

  auto preview = cli.Post("/api/preview", R"({"cutoffs": {"A": 3.5}})", "application/json");
  ASSERT_TRUE(preview);
  EXPECT_EQ(preview->status, 200);
  EXPECT_EQ(json::parse(preview->body).at("deltas").size(), 1u);

  auto audit = cli.Get("/api/audit");
  ASSERT_TRUE(audit);
  EXPECT_EQ(audit->status, 200);

  auto unchanged = cli.Get("/api/snapshot");
  EXPECT_EQ(unchanged->body, snap->body);

  auto persisted = cli.Post("/api/policy", json{{"snapshot_id", id}}.dump(), "application/json");
  ASSERT_TRUE(persisted);
  EXPECT_EQ(persisted->status, 200);
  auto stale = cli.Post("/api/policy", json{{"snapshot_id", id}}.dump(), "application/json");
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 409);
  EXPECT_EQ(stale->get_header_value("Content-Type").rfind("application/json", 0), 0u);

  auto missing = cli.Get("/api/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
}
