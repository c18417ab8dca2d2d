#include "gradeforge/submissions.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "gradeforge/csv.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/util.hpp"

namespace gradeforge::submissions {

namespace fs = std::filesystem;

namespace {

bool is_alnum(char ch) {
  return (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9');
}

[[noreturn]] void syntax(std::string_view filename, std::string what, std::size_t pos) {
  throw SyntaxError(ErrorKind::AnnotationSyntax, "'" + std::string(filename) + "': " + what, pos);
}

}  // namespace

GradeAnnotation parse_annotation(std::string_view s) {
  std::size_t i = 0;
  if (s.empty()) syntax(s, "empty name", 0);

  const char letter = s[0];
  if (letter < 'A' || letter > 'Z') syntax(s, "expected a concept letter", 0);
  if (letter > 'F') {
    throw SyntaxError(ErrorKind::UnknownConcept, "'" + std::string(s) + "': letter " + letter, 0);
  }
  Modifier mod = Modifier::none;
  i = 1;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    if (letter == 'E' || letter == 'F') syntax(s, std::string("modifier on ") + letter, i);
    mod = s[i] == '+' ? Modifier::plus : Modifier::minus;
    ++i;
  }

  GradeAnnotation out;
  out.grade = Concept(Concept::parse(std::string_view(&letter, 1)).letter(), mod);

  while (i < s.size() && s[i] == ',') {
    ++i;
    if (i >= s.size() || s[i] < '1' || s[i] > '9') syntax(s, "expected an error code", i);
    const std::size_t start = i;
    int code = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      if (i - start >= 9) syntax(s, "error code too long", i);
      code = code * 10 + (s[i] - '0');
      ++i;
    }
    out.error_codes.push_back(code);
  }

  if (i >= s.size() || s[i] != '_') syntax(s, "expected '_'", i);
  ++i;
  const std::size_t id_start = i;
  while (i < s.size() && is_alnum(s[i])) ++i;
  if (i == id_start) syntax(s, "expected a student id", i);
  out.student_id = std::string(s.substr(id_start, i - id_start));

  if (i >= s.size() || s[i] != '.') syntax(s, "expected '.' before the extension", i);
  ++i;
  const std::size_t ext_start = i;
  bool need_char = true;
  for (; i < s.size(); ++i) {
    if (is_alnum(s[i])) {
      need_char = false;
    } else if (s[i] == '.' && !need_char) {
      need_char = true;
    } else {
      syntax(s, "unexpected character in extension", i);
    }
  }
  if (need_char) syntax(s, "expected an extension", i);
  out.extension = std::string(s.substr(ext_start));

  std::sort(out.error_codes.begin(), out.error_codes.end());
  out.error_codes.erase(std::unique(out.error_codes.begin(), out.error_codes.end()), out.error_codes.end());
  return out;
}

std::string format_annotation(const GradeAnnotation& a) {
  std::vector<int> codes = a.error_codes;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::string out = a.grade.str();
  for (int c : codes) out += "," + std::to_string(c);
  return out + "_" + a.student_id + "." + a.extension;
}

ErrorCatalog catalog_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "error catalog must be an object");
  ErrorCatalog out;
  for (const auto& [key, value] : doc.items()) {
    int code = 0;
    try {
      std::size_t used = 0;
      code = std::stoi(key, &used);
      if (used != key.size() || code <= 0) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "error catalog key '" + key + "' is not a positive integer");
    }
    if (!value.is_string()) throw Error(ErrorKind::ParseError, "description of code " + key + " must be a string");
    out[code] = value.get<std::string>();
  }
  return out;
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::unchecked: return "unchecked";
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
  }
  return "";
}

std::size_t IngestResult::entry_count() const {
  std::size_t n = 0;
  for (const auto& s : sets) n += s.entries.size();
  return n;
}

namespace {

struct SegmentMatch {
  std::string question;
  std::string student;
};

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// One path segment of a layout: "*", a literal, or literal text around
// {question}, {student} and {file} tokens.
struct SegmentPattern {
  std::string text;
  bool wildcard = false;
  std::vector<std::string> tokens;
  std::optional<std::regex> regex;
};

SegmentPattern compile_segment(const std::string& text) {
  SegmentPattern out{text, text == "*", {}, std::nullopt};
  if (out.wildcard || text.find('{') == std::string::npos) return out;
  static const std::regex token(R"(\{(question|student|file)\})");
  static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
  std::string re;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator(); ++it) {
    re += std::regex_replace(text.substr(last, it->position() - last), special, R"(\$&)");
    const std::string name = (*it)[1];
    re += name == "file" ? "(.+)" : "(.+?)";
    out.tokens.push_back(name);
    last = it->position() + it->length();
  }
  re += std::regex_replace(text.substr(last), special, R"(\$&)");
  out.regex.emplace(re);
  return out;
}

std::optional<std::string> match_segment(const SegmentPattern& pattern, const std::string& segment,
                                         SegmentMatch& into) {
  if (pattern.wildcard) return std::nullopt;
  if (!pattern.regex) {
    if (pattern.text != segment) return "segment '" + segment + "' is not '" + pattern.text + "'";
    return std::nullopt;
  }
  std::smatch m;
  if (!std::regex_match(segment, m, *pattern.regex)) {
    return "segment '" + segment + "' does not match '" + pattern.text + "'";
  }
  for (std::size_t i = 0; i < pattern.tokens.size(); ++i) {
    if (pattern.tokens[i] == "question") into.question = m[i + 1];
    if (pattern.tokens[i] == "student") into.student = m[i + 1];
  }
  return std::nullopt;
}

}  // namespace

IngestResult ingest_submissions(const fs::path& root, const Layout& layout, std::string_view assessment) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorKind::EmptyRoot, root.string() + " is not a directory");

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file()) files.push_back(it->path());
  }
  if (files.empty()) throw Error(ErrorKind::EmptyRoot, root.string() + " holds no files");
  std::sort(files.begin(), files.end());

  std::vector<SegmentPattern> pattern;
  for (const auto& segment : split(layout.pattern, '/')) pattern.push_back(compile_segment(segment));
  IngestResult result;
  result.files_scanned = files.size();

  struct Candidate {
    fs::path path;
    fs::file_time_type mtime;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Candidate>> grouped;

  for (const auto& file : files) {
    const auto rel = fs::relative(file, root).generic_string();
    const auto segments = split(rel, '/');
    if (segments.size() != pattern.size()) {
      result.mismatches.push_back({file, "expected " + std::to_string(pattern.size()) + " path segments, got " +
                                             std::to_string(segments.size())});
      continue;
    }
    SegmentMatch m;
    std::optional<std::string> problem;
    for (std::size_t i = 0; i < segments.size() && !problem; ++i) problem = match_segment(pattern[i], segments[i], m);
    if (!problem && m.student.empty()) problem = "no student id in path";
    if (problem) {
      result.mismatches.push_back({file, *problem});
      continue;
    }
    if (m.question.empty()) m.question = "all";
    grouped[{m.question, m.student}].push_back({file, fs::last_write_time(file)});
  }

  std::map<std::string, SubmissionSet> sets;
  for (auto& [key, candidates] : grouped) {
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return a.mtime != b.mtime ? a.mtime > b.mtime : a.path > b.path;
    });
    auto& set = sets[key.first];
    set.assessment = std::string(assessment);
    set.question_id = key.first;
    Entry entry;
    entry.student_id = key.second;
    entry.path = candidates.front().path;
    set.entries.push_back(std::move(entry));
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      result.shadowed.push_back({key.first, key.second, candidates.front().path, candidates[i].path});
    }
  }
  for (auto& [q, set] : sets) result.sets.push_back(std::move(set));
  return result;
}

void materialize(const IngestResult& result, const fs::path& out) {
  for (const auto& set : result.sets) {
    for (const auto& e : set.entries) {
      const fs::path target = out / set.question_id / (e.student_id + "_" + e.path.filename().string());
      write_file(target, read_file(e.path));
    }
  }
}

AnnotationScan collect_annotations(const fs::path& graded_root, std::string_view assessment) {
  std::error_code ec;
  if (!fs::is_directory(graded_root, ec)) throw Error(ErrorKind::EmptyRoot, graded_root.string() + " is not a directory");
  AnnotationScan scan;
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(graded_root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file()) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto rel = fs::relative(f, graded_root);
    const std::string question = rel.has_parent_path() ? rel.parent_path().generic_string() : "all";
    try {
      scan.annotations.push_back({std::string(assessment), question, parse_annotation(f.filename().string())});
    } catch (const Error& e) {
      scan.rejected.push_back({f, e.what()});
    }
  }
  return scan;
}

FeedbackResult render_feedback(std::span<const QuestionAnnotation> annotations, const ErrorCatalog& catalog,
                               std::string_view template_text) {
  std::map<std::string, std::vector<const QuestionAnnotation*>> by_student;
  for (const auto& a : annotations) by_student[a.annotation.student_id].push_back(&a);

  FeedbackResult result;
  for (auto& [student, items] : by_student) {
    std::sort(items.begin(), items.end(), [](auto* a, auto* b) { return a->question_id < b->question_id; });
    std::string body;
    bool ok = true;
    for (const auto* qa : items) {
      body += "Question " + qa->question_id + ": " + qa->annotation.grade.str() + "\n";
      for (int code : qa->annotation.error_codes) {
        auto it = catalog.find(code);
        if (it == catalog.end()) {
          result.errors.push_back({student, code,
                                   "UnknownErrorCode: code " + std::to_string(code) + " for student " + student});
          ok = false;
          continue;
        }
        body += "  - [" + std::to_string(code) + "] " + it->second + "\n";
      }
    }
    if (!ok) continue;

    std::string text(template_text);
    auto replace_all = [&](std::string_view key, const std::string& value) {
      for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
      }
    };
    replace_all("{student_id}", student);
    replace_all("{assessment}", items.front()->assessment);
    replace_all("{body}", body);
    result.messages.push_back({student, std::move(text)});
  }
  return result;
}

void write_outbox(const FeedbackResult& result, const fs::path& outbox) {
  for (const auto& m : result.messages) write_file(outbox / (m.student_id + ".txt"), m.text);
}

std::string export_grades_csv(std::span<const QuestionAnnotation> annotations, std::string_view assessment) {
  std::vector<const QuestionAnnotation*> sorted;
  for (const auto& a : annotations) sorted.push_back(&a);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    if (a->annotation.student_id != b->annotation.student_id) return a->annotation.student_id < b->annotation.student_id;
    return a->question_id < b->question_id;
  });
  std::vector<csv::Row> rows;
  for (const auto* a : sorted) {
    std::string codes;
    for (int c : a->annotation.error_codes) codes += (codes.empty() ? "" : "|") + std::to_string(c);
    rows.push_back({a->annotation.student_id, assessment.empty() ? a->assessment : std::string(assessment),
                    a->question_id, a->annotation.grade.str(), codes});
  }
  return csv::format({"student_id", "assessment", "question", "concept", "error_codes"}, rows);
}

std::vector<QuestionAnnotation> read_grades_csv(std::string_view text) {
  const auto table = csv::parse_table(text);
  const auto sid = table.column("student_id"), asmt = table.column("assessment"), q = table.column("question"),
             con = table.column("concept"), codes = table.column("error_codes");
  std::vector<QuestionAnnotation> out;
  for (const auto& row : table.rows) {
    QuestionAnnotation qa;
    qa.assessment = row[asmt];
    qa.question_id = row[q];
    qa.annotation.student_id = row[sid];
    qa.annotation.grade = Concept::parse(row[con]);
    if (!row[codes].empty()) {
      std::size_t start = 0;
      const std::string& f = row[codes];
      while (start <= f.size()) {
        const auto bar = f.find('|', start);
        qa.annotation.error_codes.push_back(std::stoi(f.substr(start, bar == std::string::npos ? std::string::npos : bar - start)));
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
    }
    out.push_back(std::move(qa));
  }
  return out;
}

}  // namespace gradeforge::submissions
