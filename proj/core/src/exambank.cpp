#include "gradeforge/exambank.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "gradeforge/error.hpp"
#include "gradeforge/serialization.hpp"
#include "gradeforge/util.hpp"

namespace gradeforge::exambank {

using nlohmann::json;

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::simple: return "simple";
    case Difficulty::medium: return "medium";
    case Difficulty::complex: return "complex";
  }
  return "";
}

Difficulty parse_difficulty(std::string_view text) {
  for (Difficulty d : kDifficulties) {
    if (to_string(d) == text) return d;
  }
  throw Error(ErrorKind::ParseError, "unknown difficulty '" + std::string(text) + "'");
}

const Question* QuestionBank::find(std::string_view id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::string QuestionBank::content_hash() const { return sha256_hex(to_json(*this).dump()); }

namespace {

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

QuestionBank parse_bank(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "bank " + line_col(json_text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return bank_from_json(doc);
}

QuestionBank bank_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("questions") || !doc.at("questions").is_array()) {
    throw Error(ErrorKind::ParseError, "bank must be an object with a 'questions' array");
  }
  QuestionBank bank;
  std::size_t index = 0;
  for (const auto& q : doc.at("questions")) {
    try {
      Question out;
      out.id = q.at("id").get<std::string>();
      out.topic = q.value("topic", "");
      out.difficulty = parse_difficulty(q.at("difficulty").get<std::string>());
      const std::string kind = q.value("kind", "dissertative");
      if (kind == "mc" || kind == "multiple_choice") {
        out.kind = QuestionKind::multiple_choice;
      } else if (kind != "dissertative") {
        throw Error(ErrorKind::ParseError, "unknown question kind '" + kind + "'");
      }
      if (q.contains("weight")) out.weight = rational_from_json(q.at("weight"));
      for (const auto& v : q.value("variants", json::array())) {
        out.variants.push_back(
            {v.at("id").get<std::string>(), v.value("statement", ""), v.value("answer_key", "")});
      }
      out.statement = q.value("statement", "");
      out.options = q.value("options", std::vector<std::string>{});
      if (q.contains("correct") && !q.at("correct").is_null()) out.correct_option = q.at("correct").get<int>();
      bank.questions.push_back(std::move(out));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "question #" + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }
  return bank;
}

json to_json(const QuestionBank& bank) {
  json questions = json::array();
  for (const auto& q : bank.questions) {
    json item{{"id", q.id},
              {"topic", q.topic},
              {"difficulty", to_string(q.difficulty)},
              {"weight", rational_to_json(q.weight)}};
    if (q.kind == QuestionKind::multiple_choice) {
      item["kind"] = "mc";
      item["statement"] = q.statement;
      item["options"] = q.options;
      item["correct"] = q.correct_option ? json(*q.correct_option) : json(nullptr);
    } else {
      json variants = json::array();
      for (const auto& v : q.variants) {
        variants.push_back({{"id", v.id}, {"statement", v.statement}, {"answer_key", v.answer_key}});
      }
      item["variants"] = variants;
    }
    questions.push_back(std::move(item));
  }
  return {{"questions", questions}};
}

std::vector<Finding> validate_bank(const QuestionBank& bank) {
  std::vector<Finding> findings;
  std::set<std::string> ids;
  for (const auto& q : bank.questions) {
    if (q.id.empty()) findings.push_back({q.id, "empty id", "question without id"});
    if (!ids.insert(q.id).second) findings.push_back({q.id, "duplicate question", "id used more than once"});
    if (q.weight < 0 || q.weight > 1) {
      findings.push_back({q.id, "weight out of range", "weight " + exact_string(q.weight) + " outside [0,1]"});
    }
    if (q.kind == QuestionKind::dissertative) {
      if (q.variants.size() < 4 || q.variants.size() > 5) {
        findings.push_back({q.id, "variant count out of range",
                            std::to_string(q.variants.size()) + " variants, expected 4 or 5"});
      }
      std::set<std::string> vids;
      for (const auto& v : q.variants) {
        if (!vids.insert(v.id).second) findings.push_back({q.id, "duplicate variant", "variant id " + v.id});
        if (v.statement.empty()) findings.push_back({q.id, "empty statement", "variant " + v.id});
      }
    } else {
      if (q.options.size() < 2) {
        findings.push_back({q.id, "too few options", std::to_string(q.options.size()) + " options"});
      }
      if (!q.correct_option || *q.correct_option < 0 ||
          *q.correct_option >= static_cast<int>(q.options.size())) {
        findings.push_back({q.id, "missing correct option", "no valid correct option index"});
      }
    }
  }
  return findings;
}

ExamTemplate ExamTemplate::standard(std::string assessment) {
  return ExamTemplate{std::move(assessment),
                      {{Difficulty::simple, Rational(25, 100)},
                       {Difficulty::medium, Rational(35, 100)},
                       {Difficulty::complex, Rational(40, 100)}},
                      std::nullopt};
}

void ExamTemplate::validate() const {
  if (slots.empty() && !mc_block) throw Error(ErrorKind::EmptyInput, "template without slots");
  Rational sum = 0;
  for (const auto& s : slots) sum += s.weight;
  if (mc_block) {
    sum += mc_block->weight;
    for (const auto& [d, n] : mc_block->counts) {
      if (n < 0) throw Error(ErrorKind::InvalidPolicy, "negative count for " + std::string(to_string(d)));
    }
  }
  const Rational diff = sum - 1;
  if (diff > Rational(1, 1'000'000'000) || diff < Rational(-1, 1'000'000'000)) {
    throw Error(ErrorKind::WeightSumError, "template weights sum to " + exact_string(sum));
  }
}

ExamTemplate template_from_json(const json& doc) {
  try {
    ExamTemplate t;
    t.assessment = doc.at("assessment").get<std::string>();
    if (!doc.contains("slots")) {
      t.slots = ExamTemplate::standard(t.assessment).slots;
    } else {
      for (const auto& s : doc.at("slots")) {
        t.slots.push_back({parse_difficulty(s.at("difficulty").get<std::string>()), rational_from_json(s.at("weight"))});
      }
    }
    if (doc.contains("mc_block") && !doc.at("mc_block").is_null()) {
      McBlock mc;
      for (const auto& [name, n] : doc.at("mc_block").at("counts").items()) mc.counts[parse_difficulty(name)] = n.get<int>();
      mc.weight = rational_from_json(doc.at("mc_block").at("weight"));
      t.mc_block = std::move(mc);
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("exam template: ") + e.what());
  }
}

json to_json(const ExamTemplate& t) {
  json slots = json::array();
  for (const auto& s : t.slots) slots.push_back({{"difficulty", to_string(s.difficulty)}, {"weight", rational_to_json(s.weight)}});
  json out{{"assessment", t.assessment}, {"slots", slots}};
  if (t.mc_block) {
    json counts = json::object();
    for (const auto& [d, n] : t.mc_block->counts) counts[std::string(to_string(d))] = n;
    out["mc_block"] = {{"counts", counts}, {"weight", rational_to_json(t.mc_block->weight)}};
  }
  return out;
}

std::string barcode_payload(std::string_view student_id) {
  std::string digits;
  for (char ch : student_id) {
    if (ch >= '0' && ch <= '9') digits += ch;
  }
  if (digits.empty()) {
    throw Error(ErrorKind::InvalidRegistration, "registration '" + std::string(student_id) + "' has no digits");
  }
  return digits;
}

namespace {

std::vector<RosterEntry> sorted_roster(std::span<const RosterEntry> roster) {
  std::vector<RosterEntry> out(roster.begin(), roster.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.student_id < b.student_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].student_id == out[i - 1].student_id) {
      throw Error(ErrorKind::InvalidRecord, "duplicate roster entry " + out[i].student_id);
    }
  }
  return out;
}

// Questions chosen for the session, one per slot; distinct when the bank allows.
std::vector<const Question*> pick_questions(const ExamTemplate& tmpl, const QuestionBank& bank, SeededRng& rng) {
  std::vector<const Question*> chosen;
  std::set<std::string> used;
  for (const auto& slot : tmpl.slots) {
    std::vector<const Question*> pool, fresh;
    for (const auto& q : bank.questions) {
      if (q.kind != QuestionKind::dissertative || q.difficulty != slot.difficulty || q.variants.empty()) continue;
      pool.push_back(&q);
      if (!used.contains(q.id)) fresh.push_back(&q);
    }
    if (pool.empty()) {
      throw Error(ErrorKind::MissingDifficulty,
                  "no " + std::string(to_string(slot.difficulty)) + " question for " + tmpl.assessment);
    }
    const auto& from = fresh.empty() ? pool : fresh;
    const Question* q = from[rng.below(from.size())];
    used.insert(q->id);
    chosen.push_back(q);
  }
  return chosen;
}

}  // namespace

std::vector<GeneratedExam> assign_variants(std::span<const RosterEntry> roster, const ExamTemplate& tmpl,
                                           const QuestionBank& bank, std::uint64_t seed) {
  if (roster.empty()) throw Error(ErrorKind::EmptyInput, "empty roster");
  tmpl.validate();
  const auto students = sorted_roster(roster);
  const std::uint64_t base = SeededRng::derive(seed, bank.content_hash() + '/' + tmpl.assessment);

  SeededRng rng(base);
  const auto questions = pick_questions(tmpl, bank, rng);
  const std::size_t n_slots = questions.size();

  // Seeded relabelling of each question's variants, so that ties do not
  // always favour the first variant listed in the bank.
  std::vector<std::vector<std::size_t>> order(n_slots);
  for (std::size_t s = 0; s < n_slots; ++s) {
    order[s].resize(questions[s]->variants.size());
    std::iota(order[s].begin(), order[s].end(), 0);
    rng.shuffle(std::span(order[s]));
  }
  std::vector<std::size_t> deal(students.size());
  std::iota(deal.begin(), deal.end(), 0);
  rng.shuffle(std::span(deal));

  // Deal: each slot picks among its least-used variants (keeps usage within
  // one of each other); among those combinations the least-used full tuple wins.
  std::vector<std::vector<int>> usage(n_slots);
  for (std::size_t s = 0; s < n_slots; ++s) usage[s].assign(questions[s]->variants.size(), 0);
  std::map<std::vector<std::size_t>, int> tuple_use;
  std::vector<std::vector<std::size_t>> picked(students.size());

  for (std::size_t student : deal) {
    std::vector<std::vector<std::size_t>> allowed(n_slots);
    for (std::size_t s = 0; s < n_slots; ++s) {
      const int least = *std::min_element(usage[s].begin(), usage[s].end());
      for (std::size_t v : order[s]) {
        if (usage[s][v] == least) allowed[s].push_back(v);
      }
    }
    std::vector<std::size_t> cursor(n_slots, 0), best, current(n_slots);
    auto advance = [&] {
      for (std::size_t s = n_slots; s-- > 0;) {
        if (++cursor[s] < allowed[s].size()) return true;
        cursor[s] = 0;
      }
      return false;
    };
    int best_use = -1;
    do {
      for (std::size_t s = 0; s < n_slots; ++s) current[s] = allowed[s][cursor[s]];
      auto it = tuple_use.find(current);
      const int use = it == tuple_use.end() ? 0 : it->second;
      if (best_use < 0 || use < best_use) {
        best = current;
        best_use = use;
      }
    } while (best_use > 0 && advance());
    for (std::size_t s = 0; s < n_slots; ++s) ++usage[s][best[s]];
    ++tuple_use[best];
    picked[student] = best;
  }

  std::vector<GeneratedExam> exams;
  exams.reserve(students.size());
  for (std::size_t i = 0; i < students.size(); ++i) {
    GeneratedExam e;
    e.student_id = students[i].student_id;
    e.student_name = students[i].name;
    e.assessment = tmpl.assessment;
    e.barcode_payload = barcode_payload(e.student_id);
    for (std::size_t s = 0; s < n_slots; ++s) {
      e.assignments.push_back({s, questions[s]->id, questions[s]->variants[picked[i][s]].id});
    }
    if (tmpl.mc_block) e.mc_items = sample_mc_block(bank, tmpl.mc_block->counts, base, e.student_id);
    exams.push_back(std::move(e));
  }
  return exams;
}

std::vector<McItem> sample_mc_block(const QuestionBank& bank, const std::map<Difficulty, int>& counts,
                                    std::uint64_t seed, std::string_view student_id) {
  SeededRng rng(SeededRng::derive(seed, "mc/" + std::string(student_id)));
  std::vector<McItem> out;
  for (Difficulty d : kDifficulties) {
    auto it = counts.find(d);
    const int want = it == counts.end() ? 0 : it->second;
    if (want <= 0) continue;
    std::vector<const Question*> pool;
    for (const auto& q : bank.questions) {
      if (q.kind == QuestionKind::multiple_choice && q.difficulty == d) pool.push_back(&q);
    }
    if (static_cast<int>(pool.size()) < want) {
      throw Error(ErrorKind::InsufficientBank, std::string(to_string(d)) + ": need " + std::to_string(want) +
                                                   ", bank has " + std::to_string(pool.size()));
    }
    // partial Fisher-Yates
    for (int k = 0; k < want; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      McItem item{pool[k]->id, {}};
      item.option_order.resize(pool[k]->options.size());
      std::iota(item.option_order.begin(), item.option_order.end(), 0);
      rng.shuffle(std::span(item.option_order));
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::string_view extension(DocFormat f) { return f == DocFormat::markdown ? "md" : "tex"; }

DocFormat parse_doc_format(std::string_view text) {
  if (text == "markdown" || text == "md") return DocFormat::markdown;
  if (text == "latex_source" || text == "latex" || text == "tex") return DocFormat::latex_source;
  throw Error(ErrorKind::ParseError, "unknown document format '" + std::string(text) + "'");
}

namespace {

std::string percent(const Rational& w) { return to_fixed(w * 100, 0) + "%"; }

std::string latex_escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '%': case '&': case '#': case '_': case '$': case '{': case '}':
        out += '\\';
        out += ch;
        break;
      default: out += ch;
    }
  }
  return out;
}

struct Resolved {
  const Question* question;
  const Variant* variant;
};

Resolved resolve(const QuestionBank& bank, const VariantAssignment& a) {
  const Question* q = bank.find(a.question_id);
  if (q == nullptr) throw Error(ErrorKind::DanglingReference, "question " + a.question_id);
  for (const auto& v : q->variants) {
    if (v.id == a.variant_id) return {q, &v};
  }
  throw Error(ErrorKind::DanglingReference, "variant " + a.variant_id + " of question " + a.question_id);
}

}  // namespace

RenderedExam render_exam(const GeneratedExam& exam, const QuestionBank& bank, const ExamTemplate& tmpl,
                         DocFormat format) {
  const std::string barcode = "{{barcode:" + exam.barcode_payload + "}}";
  const std::string name = exam.student_name.empty() ? exam.student_id : exam.student_name;
  std::string doc, key;
  const bool md = format == DocFormat::markdown;
  auto esc = [&](std::string_view s) { return md ? std::string(s) : latex_escape(s); };

  if (md) {
    doc = "# " + exam.assessment + "\n\nStudent: " + name + "\nRegistration: " + exam.student_id + "\n" + barcode + "\n";
    key = "# Answer key: " + exam.assessment + "\n\nStudent: " + name + "\nRegistration: " + exam.student_id + "\n";
  } else {
    const std::string head = "\\documentclass{article}\n\\begin{document}\n";
    doc = head + "\\section*{" + esc(exam.assessment) + "}\nStudent: " + esc(name) + "\\\\\nRegistration: " +
          esc(exam.student_id) + "\\\\\n" + barcode + "\n";
    key = head + "\\section*{Answer key: " + esc(exam.assessment) + "}\nStudent: " + esc(name) + "\\\\\nRegistration: " +
          esc(exam.student_id) + "\n";
  }

  for (std::size_t i = 0; i < exam.assignments.size(); ++i) {
    const auto& a = exam.assignments[i];
    const auto [q, v] = resolve(bank, a);
    const Rational weight = a.slot < tmpl.slots.size() ? tmpl.slots[a.slot].weight : q->weight;
    const std::string title = "Question " + std::to_string(i + 1) + " (weight " + percent(weight) + ")";
    if (md) {
      doc += "\n## " + title + "\n\n" + v->statement + "\n";
      key += "\n## Question " + std::to_string(i + 1) + " [" + q->id + "/" + v->id + "]\n\n" + v->answer_key + "\n";
    } else {
      doc += "\n\\subsection*{" + latex_escape(title) + "}\n" + v->statement + "\n";
      key += "\n\\subsection*{Question " + std::to_string(i + 1) + " [" + latex_escape(q->id + "/" + v->id) + "]}\n" +
             v->answer_key + "\n";
    }
  }

  if (!exam.mc_items.empty()) {
    const std::string weight = tmpl.mc_block ? " (weight " + percent(tmpl.mc_block->weight) + ")" : "";
    doc += md ? "\n## Multiple choice" + weight + "\n" : "\n\\subsection*{Multiple choice" + latex_escape(weight) + "}\n";
    key += md ? "\n## Multiple choice\n" : "\n\\subsection*{Multiple choice}\n";
    for (std::size_t i = 0; i < exam.mc_items.size(); ++i) {
      const auto& item = exam.mc_items[i];
      const Question* q = bank.find(item.question_id);
      if (q == nullptr) throw Error(ErrorKind::DanglingReference, "question " + item.question_id);
      doc += "\n" + std::to_string(i + 1) + ". " + q->statement + "\n";
      char correct = '?';
      for (std::size_t k = 0; k < item.option_order.size(); ++k) {
        const auto opt = static_cast<std::size_t>(item.option_order[k]);
        if (opt >= q->options.size()) throw Error(ErrorKind::DanglingReference, "option of " + q->id);
        const char label = static_cast<char>('a' + k);
        doc += std::string("   ") + label + ") " + esc(q->options[opt]) + (md ? "\n" : "\\\\\n");
        if (q->correct_option && *q->correct_option == static_cast<int>(opt)) correct = label;
      }
      key += std::to_string(i + 1) + ". " + q->id + ": " + correct + (md ? "\n" : "\\\\\n");
    }
  }

  if (!md) {
    doc += "\\end{document}\n";
    key += "\\end{document}\n";
  }
  return {doc, key};
}

json manifest_json(std::string_view term, const ExamTemplate& tmpl, std::uint64_t seed, const QuestionBank& bank,
                   std::span<const GeneratedExam> exams) {
  json assignments = json::array();
  for (const auto& e : exams) {
    json variants = json::array();
    for (const auto& a : e.assignments) {
      variants.push_back({{"slot", a.slot}, {"question_id", a.question_id}, {"variant_id", a.variant_id}});
    }
    json mc = json::array();
    for (const auto& item : e.mc_items) mc.push_back({{"question_id", item.question_id}, {"option_order", item.option_order}});
    assignments.push_back({{"student_id", e.student_id},
                           {"barcode", e.barcode_payload},
                           {"document", e.document},
                           {"variants", variants},
                           {"mc", mc}});
  }
  return {{"schema", kSchemaVersion},
          {"term", term},
          {"assessment", tmpl.assessment},
          {"seed", seed},
          {"bank_hash", bank.content_hash()},
          {"template", to_json(tmpl)},
          {"assignments", assignments}};
}

std::filesystem::path write_session(const std::filesystem::path& root, std::string_view term, const ExamTemplate& tmpl,
                                    std::uint64_t seed, const QuestionBank& bank, std::vector<GeneratedExam>& exams,
                                    DocFormat format) {
  const std::filesystem::path exam_dir = std::filesystem::path("exams") / std::string(term) / tmpl.assessment;
  const std::filesystem::path key_dir = std::filesystem::path("answer_keys") / std::string(term) / tmpl.assessment;
  const std::string ext = "." + std::string(extension(format));
  for (auto& e : exams) {
    const RenderedExam r = render_exam(e, bank, tmpl, format);
    e.document = (exam_dir / (e.student_id + ext)).generic_string();
    write_file(root / exam_dir / (e.student_id + ext), r.exam);
    write_file(root / key_dir / (e.student_id + ext), r.answer_key);
  }
  const auto manifest = root / exam_dir / "manifest.json";
  write_file(manifest, manifest_json(term, tmpl, seed, bank, exams).dump(2) + "\n");
  return manifest;
}

}  // namespace gradeforge::exambank
