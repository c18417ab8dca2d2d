#include "gradeforge/workspace.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "gradeforge/csv.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/serialization.hpp"
#include "gradeforge/util.hpp"

namespace gradeforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSnapshotDigits = 6;

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

template <typename T>
void read_opt(const json& doc, const char* key, T& into) {
  if (doc.contains(key)) into = doc.at(key).get<T>();
}

}  // namespace

CourseConfig course_config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "course.json must be an object");
  CourseConfig c;
  try {
    read_opt(doc, "schema", c.schema);
    if (c.schema != kSchemaVersion) {
      throw Error(ErrorKind::ParseError, "unsupported course.json schema " + std::to_string(c.schema));
    }
    read_opt(doc, "course", c.course);
    c.term = doc.at("term").get<std::string>();
    read_opt(doc, "policy", c.policy);
    read_opt(doc, "records", c.records);
    read_opt(doc, "roster", c.roster);
    read_opt(doc, "bank", c.bank);
    read_opt(doc, "catalog", c.catalog);
    read_opt(doc, "layout", c.layout);
    read_opt(doc, "templates", c.templates);
    read_opt(doc, "seeds", c.seeds);
    read_opt(doc, "analytics", c.analytics);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("course.json: ") + e.what());
  }
  return c;
}

json to_json(const CourseConfig& c) {
  return {{"schema", c.schema},       {"course", c.course},   {"term", c.term},
          {"policy", c.policy},       {"records", c.records}, {"roster", c.roster},
          {"bank", c.bank},           {"catalog", c.catalog}, {"layout", c.layout},
          {"templates", c.templates}, {"seeds", c.seeds},     {"analytics", c.analytics}};
}

json to_json(const CohortSnapshot& s) {
  json students = json::array();
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    students.push_back({{"record", to_json(s.records[i])}, {"outcome", to_json(s.outcomes[i])}});
  }
  return {{"schema", kSchemaVersion}, {"snapshot_id", s.id},       {"term", s.term},
          {"produced_at", s.produced_at}, {"policy", to_json(s.policy)}, {"students", students}};
}

CohortSnapshot snapshot_from_json(const json& doc) {
  CohortSnapshot s;
  try {
    s.id = doc.at("snapshot_id").get<std::string>();
    s.term = doc.at("term").get<std::string>();
    s.produced_at = doc.value("produced_at", "");
    s.policy = policy_from_json(doc.at("policy"));
    for (const auto& st : doc.at("students")) {
      s.records.push_back(record_from_json(st.at("record")));
      s.outcomes.push_back(outcome_from_json(st.at("outcome")));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("snapshot: ") + e.what());
  }
  return s;
}

void verify_replay(const CohortSnapshot& s) {
  const auto replayed = compute_cohort(s.records, s.policy);
  if (replayed != s.outcomes || outcomes_csv(replayed, s.policy) != outcomes_csv(s.outcomes, s.policy)) {
    std::string who;
    for (std::size_t i = 0; i < replayed.size() && i < s.outcomes.size(); ++i) {
      if (!(replayed[i] == s.outcomes[i])) {
        who = " (first difference: " + replayed[i].student_id + ")";
        break;
      }
    }
    throw Error(ErrorKind::SnapshotMismatch, "snapshot " + s.id + " does not replay" + who);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<StudentRecord> records_from_json(const json& doc) {
  const json& list = doc.is_object() ? doc.at("students") : doc;
  if (!list.is_array()) throw Error(ErrorKind::ParseError, "records must be an array");
  std::vector<StudentRecord> out;
  for (const auto& r : list) out.push_back(record_from_json(r));
  return out;
}

json records_to_json(const std::vector<StudentRecord>& records) {
  json list = json::array();
  for (const auto& r : records) list.push_back(to_json(r));
  return {{"schema", kSchemaVersion}, {"students", list}};
}

Workspace Workspace::open(const fs::path& root) {
  const fs::path file = root / "course.json";
  if (!fs::exists(file)) throw Error(ErrorKind::Io, "no course.json in " + root.string());
  Workspace ws(fs::absolute(root).lexically_normal(), course_config_from_json(read_json(file)));
  ws.policy().validate();
  return ws;
}

Workspace Workspace::init(const fs::path& root, const std::string& term) {
  if (fs::exists(root / "course.json")) throw Error(ErrorKind::Io, root.string() + " already holds a course.json");
  CourseConfig config;
  config.term = term;
  write_json(root / "course.json", to_json(config));
  write_json(root / config.policy, to_json(CoursePolicy{}));
  write_json(root / config.records, records_to_json({}));
  write_file(root / config.roster, "student_id,name\n");
  write_json(root / config.catalog, json::object());
  write_json(root / config.bank, {{"schema", kSchemaVersion}, {"questions", json::array()}});
  return open(root);
}

fs::path Workspace::resolve(const std::string& relative) const {
  const fs::path p = (root_ / relative).lexically_normal();
  const auto rel = p.lexically_relative(root_);
  if (rel.empty() || *rel.begin() == "..") throw Error(ErrorKind::Io, "path '" + relative + "' leaves the workspace");
  return p;
}

CoursePolicy Workspace::policy() const {
  auto p = policy_from_json(read_json(resolve(config_.policy)));
  p.validate();
  return p;
}

void Workspace::save_policy(const CoursePolicy& policy) const {
  policy.validate();
  write_json(resolve(config_.policy), to_json(policy));
}

std::vector<StudentRecord> Workspace::records() const { return records_from_json(read_json(resolve(config_.records))); }

std::vector<exambank::RosterEntry> Workspace::roster() const {
  const auto table = csv::parse_table(read_file(resolve(config_.roster)));
  const auto id = table.column("student_id");
  std::optional<std::size_t> name;
  if (std::find(table.header.begin(), table.header.end(), "name") != table.header.end()) name = table.column("name");
  std::vector<exambank::RosterEntry> out;
  for (const auto& row : table.rows) out.push_back({row[id], name ? row[*name] : ""});
  return out;
}

exambank::QuestionBank Workspace::bank() const { return exambank::parse_bank(read_file(resolve(config_.bank))); }

exambank::ExamTemplate Workspace::exam_template(const std::string& assessment) const {
  auto it = config_.templates.find(assessment);
  if (it == config_.templates.end()) return exambank::ExamTemplate::standard(assessment);
  auto t = exambank::template_from_json(read_json(resolve(it->second)));
  t.validate();
  return t;
}

submissions::ErrorCatalog Workspace::catalog() const {
  return submissions::catalog_from_json(read_json(resolve(config_.catalog)));
}

std::optional<std::uint64_t> Workspace::seed_for(const std::string& assessment) const {
  auto it = config_.seeds.find(assessment);
  if (it == config_.seeds.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Workspace::snapshot_ids() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(snapshots_dir(), ec)) {
    if (e.path().extension() != ".json") continue;
    const auto stem = e.path().stem().string();
    if (stem.size() == kSnapshotDigits && std::all_of(stem.begin(), stem.end(), ::isdigit)) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<std::string> Workspace::latest_snapshot_id() const {
  const auto ids = snapshot_ids();
  if (ids.empty()) return std::nullopt;
  return ids.back();
}

CohortSnapshot Workspace::create_snapshot(const CoursePolicy& policy, const std::vector<StudentRecord>& records,
                                          const std::string& produced_at) const {
  policy.validate();
  CohortSnapshot s;
  const auto latest = latest_snapshot_id();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*d", kSnapshotDigits, latest ? std::stoi(*latest) + 1 : 1);
  s.id = buf;
  s.term = config_.term;
  s.produced_at = produced_at;
  s.policy = policy;
  s.records = records;
  s.outcomes = compute_cohort(records, policy);
  write_json(snapshots_dir() / (s.id + ".json"), to_json(s));
  return s;
}

CohortSnapshot Workspace::load_snapshot(const std::string& id) const {
  const fs::path file = snapshots_dir() / (id + ".json");
  if (!fs::exists(file)) throw Error(ErrorKind::Io, "no snapshot " + id);
  auto s = snapshot_from_json(read_json(file));
  if (s.id != id) throw Error(ErrorKind::SnapshotMismatch, "file " + id + ".json holds snapshot " + s.id);
  verify_replay(s);
  return s;
}

}  // namespace gradeforge
