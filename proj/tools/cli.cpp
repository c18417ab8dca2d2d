#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "gradeforge/analytics.hpp"
#include "gradeforge/calibration.hpp"
#include "gradeforge/csv.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/exambank.hpp"
#include "gradeforge/serialization.hpp"
#include "gradeforge/submissions.hpp"
#include "gradeforge/util.hpp"
#include "gradeforge/workspace.hpp"

namespace gradeforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string workspace = ".";

  std::string term;
  std::string assessment;
  std::optional<std::uint64_t> seed;
  std::string format = "markdown";
  std::string student;
  std::string root;
  std::string layout;
  std::string command;
  int timeout_ms = 10'000;
  unsigned jobs = 1;
  std::string graded;
  std::string outbox;
  std::string template_file;
  std::string out;
  bool no_snapshot = false;
  std::string cf_file;
  std::string host = "127.0.0.1";
  int port = CalibrationServer::kDefaultPort;
  std::string static_dir;
  std::map<std::string, int> mc_counts;
};

std::size_t to_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, what + ": '" + text + "' is not a count");
  }
}

// "12.94%" or "0.1294"
double to_fraction(const std::string& text) {
  try {
    if (!text.empty() && text.back() == '%') return std::stod(text.substr(0, text.size() - 1)) / 100.0;
    return std::stod(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, "'" + text + "' is not a fraction");
  }
}

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, p.string() + ": " + e.what());
  }
}

fs::path output_path(const Workspace& ws, const std::string& given, const std::string& fallback) {
  return given.empty() ? ws.resolve(fallback) : fs::path(given);
}

int cmd_init(const Options& o, std::ostream& out) {
  const auto ws = Workspace::init(o.workspace, o.term.empty() ? "term" : o.term);
  out << "initialized workspace " << ws.root().string() << " for term " << ws.config().term << "\n";
  return kOk;
}

int cmd_bank_validate(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto bank = ws.bank();
  const auto findings = exambank::validate_bank(bank);
  for (const auto& f : findings) out << f.rule << "\t" << f.question_id << "\t" << f.detail << "\n";
  out << bank.questions.size() << " questions, " << findings.size() << " findings, hash " << bank.content_hash()
      << "\n";
  return findings.empty() ? kOk : kFindings;
}

std::uint64_t seed_or_config(const Options& o, const Workspace& ws) {
  if (o.seed) return *o.seed;
  if (auto s = ws.seed_for(o.assessment)) return *s;
  throw Error(ErrorKind::InvalidPolicy, "no --seed given and course.json has no seed for " + o.assessment);
}

int cmd_exam_generate(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto bank = ws.bank();
  const auto findings = exambank::validate_bank(bank);
  if (!findings.empty()) {
    for (const auto& f : findings) out << f.rule << "\t" << f.question_id << "\t" << f.detail << "\n";
    return kFindings;
  }
  const auto tmpl = ws.exam_template(o.assessment);
  const auto roster = ws.roster();
  const std::uint64_t seed = seed_or_config(o, ws);
  auto exams = exambank::assign_variants(roster, tmpl, bank, seed);
  const auto manifest = exambank::write_session(ws.root(), ws.config().term, tmpl, seed, bank, exams,
                                                exambank::parse_doc_format(o.format));
  out << exams.size() << " exams written; manifest " << fs::relative(manifest, ws.root()).generic_string() << "\n";
  return kOk;
}

int cmd_mc_sample(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto bank = ws.bank();
  const auto tmpl = ws.exam_template(o.assessment);
  std::map<exambank::Difficulty, int> counts;
  for (const auto& [name, n] : o.mc_counts) {
    if (n > 0) counts[exambank::parse_difficulty(name)] = n;
  }
  if (counts.empty() && tmpl.mc_block) counts = tmpl.mc_block->counts;
  if (counts.empty()) throw Error(ErrorKind::InvalidPolicy, "no multiple-choice counts for " + o.assessment);
  const std::uint64_t seed = seed_or_config(o, ws);
  const auto items = exambank::sample_mc_block(bank, counts, seed, o.student);
  json doc = json::array();
  for (const auto& it : items) doc.push_back({{"question_id", it.question_id}, {"option_order", it.option_order}});
  out << json{{"student_id", o.student}, {"assessment", o.assessment}, {"items", doc}}.dump(2) << "\n";
  return kOk;
}

submissions::IngestResult ingest(const Options& o, const Workspace& ws) {
  submissions::Layout layout{o.layout.empty() ? ws.config().layout : o.layout};
  return submissions::ingest_submissions(o.root, layout, o.assessment);
}

void print_ingest(const submissions::IngestResult& r, std::ostream& out) {
  for (const auto& m : r.mismatches) out << "mismatch\t" << m.path.string() << "\t" << m.reason << "\n";
  for (const auto& s : r.shadowed) {
    out << "shadowed\t" << s.question_id << "\t" << s.student_id << "\t" << s.shadowed.string() << " (kept "
        << s.kept.filename().string() << ")\n";
  }
  out << r.files_scanned << " files, " << r.entry_count() << " entries in " << r.sets.size() << " questions, "
      << r.shadowed.size() << " shadowed, " << r.mismatches.size() << " mismatched\n";
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto result = ingest(o, ws);
  const fs::path dest = output_path(ws, o.out, "submissions/" + ws.config().term + "/" + o.assessment);
  submissions::materialize(result, dest);
  print_ingest(result, out);
  return result.mismatches.empty() ? kOk : kFindings;
}

int cmd_check(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto result = ingest(o, ws);
  submissions::CheckOptions opts{o.command, std::chrono::milliseconds(o.timeout_ms), o.jobs};
  std::vector<csv::Row> rows;
  std::size_t failed = 0;
  for (const auto& set : result.sets) {
    const auto checked = submissions::run_check_command(set, opts);
    for (const auto& e : checked.entries) {
      rows.push_back({checked.question_id, e.student_id, std::string(submissions::to_string(e.status)),
                      std::to_string(e.exit_code), e.timed_out ? "1" : "0", e.output});
      if (e.status == submissions::CheckStatus::fail) {
        ++failed;
        out << "fail\t" << checked.question_id << "\t" << e.student_id << (e.timed_out ? "\ttimeout" : "")
            << "\texit " << e.exit_code << "\n";
      }
    }
  }
  const fs::path report = output_path(ws, o.out, "reports/check_" + o.assessment + ".csv");
  write_file(report, csv::format({"question", "student_id", "status", "exit_code", "timed_out", "output"}, rows));
  out << rows.size() << " checked, " << failed << " failed; report " << report.string() << "\n";
  return failed == 0 && result.mismatches.empty() ? kOk : kFindings;
}

int cmd_feedback_render(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const fs::path graded =
      o.graded.empty() ? ws.resolve("graded/" + ws.config().term + "/" + o.assessment) : fs::path(o.graded);
  const auto scan = submissions::collect_annotations(graded, o.assessment);
  const std::string tmpl = o.template_file.empty() ? std::string(submissions::kDefaultFeedbackTemplate)
                                                   : read_file(o.template_file);
  const auto result = submissions::render_feedback(scan.annotations, ws.catalog(), tmpl);
  const fs::path outbox = o.outbox.empty() ? ws.resolve("outbox/" + ws.config().term + "/" + o.assessment)
                                           : fs::path(o.outbox);
  submissions::write_outbox(result, outbox);
  write_file(ws.resolve("grades/" + o.assessment + ".csv"),
             submissions::export_grades_csv(scan.annotations, o.assessment));
  for (const auto& r : scan.rejected) out << "rejected\t" << r.path.string() << "\t" << r.reason << "\n";
  for (const auto& e : result.errors) out << "error\t" << e.student_id << "\t" << e.message << "\n";
  out << result.messages.size() << " messages written to " << outbox.string() << "\n";
  return scan.rejected.empty() && result.errors.empty() ? kOk : kFindings;
}

struct Computed {
  CoursePolicy policy;
  std::vector<StudentRecord> records;
  std::vector<GradeOutcome> outcomes;
  std::vector<std::pair<std::string, std::string>> failures;
};

Computed compute_all(const Workspace& ws) {
  Computed c;
  c.policy = ws.policy();
  for (auto& r : ws.records()) {
    try {
      c.outcomes.push_back(compute_final_record(r, c.policy));
      c.records.push_back(std::move(r));
    } catch (const Error& e) {
      c.failures.emplace_back(r.student_id, e.what());
    }
  }
  return c;
}

int cmd_grades_compute(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ws = Workspace::open(o.workspace);
  const auto c = compute_all(ws);
  const std::string table = outcomes_csv(c.outcomes, c.policy);
  if (o.out == "-") {
    out << table;
  } else {
    const fs::path dest = output_path(ws, o.out, "grades/outcomes.csv");
    write_file(dest, table);
    out << c.outcomes.size() << " outcomes written to " << dest.string() << "\n";
  }
  for (const auto& [id, why] : c.failures) err << "failed\t" << id << "\t" << why << "\n";
  if (!c.failures.empty()) return kFindings;
  if (!o.no_snapshot) {
    const auto snap = ws.create_snapshot(c.policy, c.records);
    err << "snapshot " << snap.id << "\n";
  }
  return kOk;
}

std::vector<analytics::ClassStats> read_classes(const fs::path& p) {
  const auto t = csv::parse_table(read_file(p));
  std::vector<analytics::ClassStats> out;
  const auto id = t.column("class_id"), term = t.column("term"), mod = t.column("modality");
  std::optional<std::size_t> cancelled;
  if (std::find(t.header.begin(), t.header.end(), "cancelled") != t.header.end()) cancelled = t.column("cancelled");
  for (const auto& row : t.rows) {
    std::vector<Concept> concepts;
    for (auto [bucket, letter] : {std::pair{"A", Letter::A}, {"B", Letter::B}, {"C", Letter::C}, {"D", Letter::D},
                                  {"F+O", Letter::F}}) {
      const auto n = to_count(row[t.column(bucket)], bucket);
      concepts.insert(concepts.end(), n, Concept(letter));
    }
    analytics::ClassInfo info{row[id], row[term], analytics::parse_modality(row[mod]),
                              cancelled ? to_count(row[*cancelled], "cancelled") : 0};
    out.push_back(analytics::class_distribution(std::span<const Concept>(concepts), info));
  }
  return out;
}

std::vector<analytics::TermFailureRow> read_failure_rows(const fs::path& p) {
  const auto t = csv::parse_table(read_file(p));
  std::vector<analytics::TermFailureRow> out;
  for (const auto& row : t.rows) {
    out.push_back({row[t.column("term")], analytics::parse_modality(row[t.column("modality")]),
                   to_fraction(row[t.column("failure_fraction")]), to_count(row[t.column("n_students")], "n_students"),
                   to_count(row[t.column("n_classes")], "n_classes")});
  }
  return out;
}

std::vector<analytics::SurveyRow> read_survey(const fs::path& p) {
  const auto t = csv::parse_table(read_file(p));
  std::vector<analytics::SurveyRow> out;
  for (const auto& row : t.rows) {
    out.push_back({row[t.column("student_id")], row[t.column("term")],
                   static_cast<int>(to_count(row[t.column("failures_class")], "failures_class")),
                   static_cast<int>(to_count(row[t.column("failures_bl")], "failures_bl"))});
  }
  return out;
}

std::vector<analytics::RosterRow> read_cancellations(const fs::path& p) {
  const auto t = csv::parse_table(read_file(p));
  std::vector<analytics::RosterRow> out;
  for (const auto& row : t.rows) {
    out.push_back({row[t.column("class_id")], to_count(row[t.column("enrolled")], "enrolled"),
                   to_count(row[t.column("cancelled")], "cancelled")});
  }
  return out;
}

int cmd_report_stats(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  const auto& inputs = ws.config().analytics;
  auto input = [&](const std::string& key) -> std::optional<fs::path> {
    auto it = inputs.find(key);
    if (it == inputs.end()) return std::nullopt;
    return ws.resolve(it->second);
  };
  const fs::path dir = output_path(ws, o.out, "reports");
  json report = {{"schema", kSchemaVersion}, {"term", ws.config().term}};

  std::vector<analytics::ClassStats> classes;
  if (auto p = input("classes")) classes = read_classes(*p);
  const auto c = compute_all(ws);
  if (!c.outcomes.empty()) {
    classes.push_back(analytics::class_distribution(
        std::span<const GradeOutcome>(c.outcomes),
        {ws.config().course.empty() ? "cohort" : ws.config().course, ws.config().term, analytics::Modality::blended, 0}));
  }
  json class_json = json::array();
  for (const auto& s : classes) class_json.push_back(analytics::to_json(s));
  report["classes"] = class_json;
  write_file(dir / "class_stats.csv", analytics::class_stats_csv(classes));

  if (!classes.empty()) {
    const auto dispersion = analytics::cohort_dispersion(classes);
    const auto series = analytics::term_series(classes);
    report["dispersion"] = analytics::to_json(dispersion);
    report["term_series"] = analytics::to_json(std::span<const analytics::TermSeriesPoint>(series));
    write_file(dir / "dist_dispersion.csv", analytics::dispersion_csv(dispersion));
    write_file(dir / "term_series.csv", analytics::term_series_csv(series));
    for (const auto& p : series) {
      if (p.wide_gap) out << "wide gap\t" << p.term << "\tclass GPAs span " << p.min << " to " << p.max << "\n";
    }
  }

  if (auto p = input("failure_rows")) {
    std::map<analytics::Modality, double> published;
    if (auto pub = input("published")) {
      for (const auto& [k, v] : read_json_file(*pub).items()) published[analytics::parse_modality(k)] = v.get<double>();
    }
    const auto rows = read_failure_rows(*p);
    json both = json::object();
    for (auto agg : {analytics::Aggregation::simple, analytics::Aggregation::student_weighted}) {
      const auto fr = analytics::failure_report(rows, agg, published);
      both[std::string(analytics::to_string(agg))] = analytics::to_json(fr);
      if (agg == analytics::Aggregation::simple) {
        write_file(dir / "failure_report.csv", analytics::failure_report_csv(fr));
        for (const auto& n : fr.notes) out << "note\t" << n << "\n";
      }
    }
    report["failure_report"] = both;
  }

  if (auto p = input("survey")) {
    const auto points = analytics::prior_failure_stats(read_survey(*p));
    report["prior_failures"] = analytics::to_json(std::span<const analytics::PriorFailurePoint>(points));
  }
  if (auto p = input("cancellations")) {
    report["cancellations"] = analytics::to_json(analytics::cancellation_stats(read_cancellations(*p)));
  }

  const auto findings = analytics::fairness_audit(std::span<const GradeOutcome>(c.outcomes));
  report["fairness"] = analytics::to_json(std::span<const analytics::FairnessFinding>(findings));
  write_file(dir / "fairness.csv", analytics::fairness_csv(findings));
  write_file(dir / "report.json", report.dump(2) + "\n");
  out << "report written to " << (dir / "report.json").string() << "\n";
  return kOk;
}

int cmd_audit_fairness(const Options& o, std::ostream& out) {
  const auto ws = Workspace::open(o.workspace);
  std::vector<analytics::FairnessRow> rows;
  if (!o.cf_file.empty()) {
    // externally assigned final concepts: student_id,cr,cf
    const auto t = csv::parse_table(read_file(o.cf_file));
    const ModifierScheme letters(SchemeName::table2);
    for (const auto& row : t.rows) {
      rows.push_back({row[t.column("student_id")], Score::parse(row[t.column("cr")]),
                      letters.score(registration_concept(Concept::parse(row[t.column("cf")])))});
    }
  } else {
    const auto c = compute_all(ws);
    rows = analytics::fairness_rows(c.outcomes);
  }
  const auto findings = analytics::fairness_audit(rows);
  for (const auto& f : findings) out << f.higher << "\t" << f.lower << "\t" << f.explanation << "\n";
  write_file(output_path(ws, o.out, "reports/fairness.csv"), analytics::fairness_csv(findings));
  out << findings.size() << " findings\n";
  return findings.empty() ? kOk : kFindings;
}

int cmd_calibrate_serve(const Options& o, std::ostream& out) {
  auto ws = Workspace::open(o.workspace);
  CalibrationServer server(std::move(ws), o.static_dir);
  out << "serving calibration API on http://" << o.host << ":" << o.port << "/api/snapshot" << std::endl;
  server.run(o.host, o.port);
  return kOk;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gradeforge: course assessment pipeline", "gradeforge"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-w,--workspace", o.workspace, "Workspace root")->capture_default_str();

  auto* init = app.add_subcommand("init", "Create a workspace skeleton");
  init->add_option("--term", o.term, "Term label, e.g. 2017.2");

  auto* bank = app.add_subcommand("bank", "Question bank commands")->require_subcommand(1);
  auto* bank_validate = bank->add_subcommand("validate", "Check bank invariants");

  auto* exam = app.add_subcommand("exam", "Exam commands")->require_subcommand(1);
  auto* exam_generate = exam->add_subcommand("generate", "Assign variants and render one exam per student");
  exam_generate->add_option("--assessment", o.assessment)->required();
  exam_generate->add_option("--seed", o.seed);
  exam_generate->add_option("--format", o.format)->check(CLI::IsMember({"markdown", "latex"}));

  auto* mc = app.add_subcommand("mc", "Multiple-choice commands")->require_subcommand(1);
  auto* mc_sample = mc->add_subcommand("sample", "Sample one student's multiple-choice block");
  mc_sample->add_option("--assessment", o.assessment)->required();
  mc_sample->add_option("--student", o.student)->required();
  mc_sample->add_option("--seed", o.seed);
  for (const char* d : {"simple", "medium", "complex"}) {
    mc_sample->add_option(std::string("--") + d, o.mc_counts[d], std::string("Number of ") + d + " questions");
  }

  auto* ingest_cmd = app.add_subcommand("ingest", "Collect submissions into per-question folders");
  auto* check_cmd = app.add_subcommand("check", "Run a command over every submission");
  for (auto* c : {ingest_cmd, check_cmd}) {
    c->add_option("--root", o.root, "Directory of raw submissions")->required();
    c->add_option("--assessment", o.assessment)->required();
    c->add_option("--layout", o.layout, "Path pattern, default from course.json");
    c->add_option("--out", o.out);
  }
  check_cmd->add_option("--command", o.command, "Shell command containing {file}")->required();
  check_cmd->add_option("--timeout-ms", o.timeout_ms)->capture_default_str();
  check_cmd->add_option("--jobs", o.jobs)->capture_default_str();

  auto* feedback = app.add_subcommand("feedback", "Feedback commands")->require_subcommand(1);
  auto* feedback_render = feedback->add_subcommand("render", "Render feedback from annotated file names");
  feedback_render->add_option("--assessment", o.assessment)->required();
  feedback_render->add_option("--graded", o.graded);
  feedback_render->add_option("--outbox", o.outbox);
  feedback_render->add_option("--template", o.template_file);

  auto* grades = app.add_subcommand("grades", "Grade commands")->require_subcommand(1);
  auto* grades_compute = grades->add_subcommand("compute", "Compute final outcomes for every record");
  grades_compute->add_option("--out", o.out, "CSV destination, '-' for stdout");
  grades_compute->add_flag("--no-snapshot", o.no_snapshot);

  auto* report = app.add_subcommand("report", "Report commands")->require_subcommand(1);
  auto* report_stats = report->add_subcommand("stats", "Cohort statistics and flat tables");
  report_stats->add_option("--out", o.out, "Output directory");

  auto* audit = app.add_subcommand("audit", "Audit commands")->require_subcommand(1);
  auto* audit_fairness = audit->add_subcommand("fairness", "Find students ranked above by CR but below by final");
  audit_fairness->add_option("--cf", o.cf_file, "CSV student_id,cr,cf of externally assigned concepts");
  audit_fairness->add_option("--out", o.out);

  auto* calibrate = app.add_subcommand("calibrate", "Calibration service")->require_subcommand(1);
  auto* serve = calibrate->add_subcommand("serve", "Serve the calibration API");
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--static", o.static_dir, "Directory of console assets");

  std::vector<std::string> argv_storage{"gradeforge"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kError;
  }

  try {
    if (*init) return cmd_init(o, out);
    if (*bank_validate) return cmd_bank_validate(o, out);
    if (*exam_generate) return cmd_exam_generate(o, out);
    if (*mc_sample) return cmd_mc_sample(o, out);
    if (*ingest_cmd) return cmd_ingest(o, out);
    if (*check_cmd) return cmd_check(o, out);
    if (*feedback_render) return cmd_feedback_render(o, out);
    if (*grades_compute) return cmd_grades_compute(o, out, err);
    if (*report_stats) return cmd_report_stats(o, out);
    if (*audit_fairness) return cmd_audit_fairness(o, out);
    if (*serve) return cmd_calibrate_serve(o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  err << app.help();
  return kError;
}

}  // namespace gradeforge::cli
