#include "gradeforge/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "gradeforge/csv.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/util.hpp"

namespace gradeforge::analytics {

namespace {

std::string num(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string percent(double fraction) { return num(fraction * 100.0, 2) + "%"; }

}  // namespace

std::string_view to_string(Modality m) { return m == Modality::in_class ? "class" : "bl"; }

Modality parse_modality(std::string_view text) {
  if (text == "class") return Modality::in_class;
  if (text == "bl") return Modality::blended;
  throw Error(ErrorKind::ParseError, "unknown modality '" + std::string(text) + "'");
}

std::string_view to_string(Aggregation a) { return a == Aggregation::simple ? "simple" : "student_weighted"; }

Aggregation parse_aggregation(std::string_view text) {
  if (text == "simple") return Aggregation::simple;
  if (text == "student_weighted") return Aggregation::student_weighted;
  throw Error(ErrorKind::ParseError, "unknown aggregation '" + std::string(text) + "'");
}

std::string_view bucket_of(Concept c) {
  switch (c.letter()) {
    case Letter::A: return kBuckets[0];
    case Letter::B: return kBuckets[1];
    case Letter::C: return kBuckets[2];
    case Letter::D: return kBuckets[3];
    default: return kBuckets[4];
  }
}

ClassStats class_distribution(std::span<const Concept> registered, const ClassInfo& info) {
  if (registered.empty()) throw Error(ErrorKind::EmptyClass, "class '" + info.class_id + "' has no students");
  ClassStats s;
  s.class_id = info.class_id;
  s.term = info.term;
  s.modality = info.modality;
  s.n_students = registered.size();
  for (auto b : kBuckets) s.distribution[std::string(b)] = 0;

  const ModifierScheme letters(SchemeName::table2);
  std::map<std::string, std::size_t> counts;
  Score total;
  for (Concept c : registered) {
    const Concept r = registration_concept(c);
    ++counts[std::string(bucket_of(r))];
    total += letters.score(r);
  }
  const double n = static_cast<double>(registered.size());
  for (const auto& [bucket, count] : counts) s.distribution[bucket] = static_cast<double>(count) / n;
  s.gpa_mean = total / Rational(static_cast<std::int64_t>(registered.size()));
  s.failure_fraction = s.distribution["F+O"];
  s.cancellation_fraction = static_cast<double>(info.cancelled) / (n + static_cast<double>(info.cancelled));
  return s;
}

ClassStats class_distribution(std::span<const GradeOutcome> outcomes, const ClassInfo& info) {
  std::vector<Concept> registered;
  registered.reserve(outcomes.size());
  for (const auto& o : outcomes) registered.push_back(o.registered_concept);
  return class_distribution(std::span<const Concept>(registered), info);
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::map<std::string, LetterDispersion> cohort_dispersion(std::span<const ClassStats> classes) {
  if (classes.empty()) throw Error(ErrorKind::EmptyInput, "no classes to compare");
  std::map<std::string, LetterDispersion> out;
  for (auto b : kBuckets) {
    const std::string key(b);
    std::vector<double> fractions;
    for (const auto& c : classes) {
      auto it = c.distribution.find(key);
      fractions.push_back(it == c.distribution.end() ? 0.0 : it->second);
    }
    double mean = 0;
    for (double f : fractions) mean += f;
    mean /= static_cast<double>(fractions.size());
    out[key] = {mean, sample_stddev(fractions)};
  }
  return out;
}

std::vector<TermSeriesPoint> term_series(std::span<const ClassStats> classes) {
  std::map<std::string, std::vector<double>> by_term;
  for (const auto& c : classes) by_term[c.term].push_back(c.gpa_mean.to_double());
  std::vector<TermSeriesPoint> out;
  for (const auto& [term, gpas] : by_term) {
    TermSeriesPoint p;
    p.term = term;
    p.n_classes = gpas.size();
    p.min = *std::min_element(gpas.begin(), gpas.end());
    p.max = *std::max_element(gpas.begin(), gpas.end());
    double sum = 0;
    for (double g : gpas) sum += g;
    p.mean = sum / static_cast<double>(gpas.size());
    p.stddev = sample_stddev(gpas);
    p.wide_gap = p.max - p.min >= kWideGap - 1e-9;
    out.push_back(p);
  }
  return out;
}

FailureReport failure_report(std::span<const TermFailureRow> rows, Aggregation aggregation,
                             const std::map<Modality, double>& published) {
  FailureReport report;
  report.aggregation = aggregation;
  for (Modality m : {Modality::in_class, Modality::blended}) {
    ModalityAggregate agg;
    agg.modality = m;
    double sum = 0, weighted = 0;
    for (const auto& r : rows) {
      if (r.modality != m) continue;
      if (!(r.failure_fraction >= 0 && r.failure_fraction <= 1)) {
        throw Error(ErrorKind::InvalidRecord, "failure fraction of term " + r.term + " outside [0,1]");
      }
      ++agg.n_terms;
      sum += r.failure_fraction;
      weighted += r.failure_fraction * static_cast<double>(r.n_students);
      agg.total_students += r.n_students;
      agg.total_classes += r.n_classes;
    }
    if (agg.n_terms == 0) continue;
    agg.simple = sum / static_cast<double>(agg.n_terms);
    agg.student_weighted = agg.total_students ? weighted / static_cast<double>(agg.total_students) : agg.simple;
    agg.failure_fraction = aggregation == Aggregation::simple ? agg.simple : agg.student_weighted;

    auto pub = published.find(m);
    if (pub != published.end()) {
      const double tol = 1e-4;
      if (std::abs(pub->second - agg.simple) > tol && std::abs(pub->second - agg.student_weighted) > tol) {
        report.notes.push_back("published " + std::string(to_string(m)) + " grand figure " + percent(pub->second) +
                               " is not reproducible from term rows: simple mean " + percent(agg.simple) +
                               ", student-weighted " + percent(agg.student_weighted) + " over " +
                               std::to_string(agg.n_terms) + " terms");
      }
    }
    report.modalities.push_back(agg);
  }
  return report;
}

std::vector<FairnessRow> fairness_rows(std::span<const GradeOutcome> outcomes) {
  std::vector<FairnessRow> rows;
  rows.reserve(outcomes.size());
  for (const auto& o : outcomes) rows.push_back({o.student_id, o.cr, o.final_score});
  return rows;
}

std::vector<FairnessFinding> fairness_audit(std::span<const FairnessRow> rows) {
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].cr < rows[b].cr; });

  // Lower-CR students seen so far, ordered by final score.
  auto by_final = [&](const std::pair<Score, std::size_t>& a, const std::pair<Score, std::size_t>& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  };
  std::set<std::pair<Score, std::size_t>, decltype(by_final)> seen(by_final);

  std::vector<FairnessFinding> out;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && rows[order[j]].cr == rows[order[i]].cr) ++j;
    for (std::size_t k = i; k < j; ++k) {
      const auto& h = rows[order[k]];
      for (auto it = seen.upper_bound({h.final_score, std::numeric_limits<std::size_t>::max()}); it != seen.end();
           ++it) {
        const auto& l = rows[it->second];
        FairnessFinding f;
        f.higher = h.student_id;
        f.lower = l.student_id;
        f.cr_gap = h.cr - l.cr;
        f.final_gap = l.final_score - h.final_score;
        f.explanation = h.student_id + " has CR " + h.cr.fixed() + " above " + l.student_id + "'s " + l.cr.fixed() +
                        " but final score " + h.final_score.fixed() + " below " + l.final_score.fixed();
        out.push_back(std::move(f));
      }
    }
    for (std::size_t k = i; k < j; ++k) seen.insert({rows[order[k]].final_score, order[k]});
    i = j;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.higher != b.higher ? a.higher < b.higher : a.lower < b.lower;
  });
  return out;
}

std::vector<FairnessFinding> fairness_audit(std::span<const GradeOutcome> outcomes) {
  const auto rows = fairness_rows(outcomes);
  return fairness_audit(std::span<const FairnessRow>(rows));
}

std::vector<PriorFailurePoint> prior_failure_stats(std::span<const SurveyRow> rows) {
  struct Counts {
    std::size_t n = 0, cls = 0, bl = 0, any = 0;
  };
  std::map<std::string, Counts> by_term;
  for (const auto& r : rows) {
    if (r.failures_class < 0 || r.failures_bl < 0) {
      throw Error(ErrorKind::InvalidRecord, "negative failure count for " + r.student_id);
    }
    auto& c = by_term[r.term];
    ++c.n;
    c.cls += r.failures_class >= 1;
    c.bl += r.failures_bl >= 1;
    c.any += (r.failures_class + r.failures_bl) >= 1;
  }
  std::vector<PriorFailurePoint> out;
  for (const auto& [term, c] : by_term) {
    const double n = static_cast<double>(c.n);
    out.push_back({term, c.n, static_cast<double>(c.cls) / n, static_cast<double>(c.bl) / n,
                   static_cast<double>(c.any) / n});
  }
  return out;
}

CancellationReport cancellation_stats(std::span<const RosterRow> rows) {
  CancellationReport report;
  double sum = 0;
  for (const auto& r : rows) {
    if (r.cancelled > r.enrolled) {
      throw Error(ErrorKind::InvalidRecord, "class " + r.class_id + " cancels more students than it enrolled");
    }
    const double f = r.enrolled ? static_cast<double>(r.cancelled) / static_cast<double>(r.enrolled) : 0.0;
    report.per_class.emplace_back(r.class_id, f);
    sum += f;
    report.total_enrolled += r.enrolled;
    report.total_cancelled += r.cancelled;
  }
  if (!rows.empty()) report.aggregate = sum / static_cast<double>(rows.size());
  return report;
}

LabSizeChange lab_size_change(std::size_t enrolled_before, std::size_t enrolled_after, std::size_t labs) {
  if (labs == 0) throw Error(ErrorKind::EmptyInput, "no labs");
  LabSizeChange c;
  c.mean_before = static_cast<double>(enrolled_before) / static_cast<double>(labs);
  c.mean_after = static_cast<double>(enrolled_after) / static_cast<double>(labs);
  c.relative_change = c.mean_before > 0 ? (c.mean_after - c.mean_before) / c.mean_before : 0.0;
  return c;
}

bool DispersionTrial::shrinks() const {
  for (const auto& [bucket, shared] : shared_stddev) {
    if (shared > perturbed_stddev.at(bucket) + 1e-12) return false;
  }
  return true;
}

namespace {

// Each threshold moves by its own offset, so band widths vary per class as
// they do when teachers close concepts independently. Thresholds are re-sorted
// to keep the table increasing.
CutoffTable perturbed_cutoffs(const CutoffTable& base, SeededRng& rng, std::int64_t max_shift) {
  std::vector<CutoffEntry> entries;
  std::vector<Rational> moved;
  for (const auto& e : base.entries()) {
    if (e.min == Score::zero()) {
      entries.push_back(e);
      continue;
    }
    const auto offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * max_shift + 1))) - max_shift;
    moved.push_back(e.min.value() + Rational(offset, 100));
  }
  std::sort(moved.begin(), moved.end());
  std::size_t i = 0;
  for (const auto& e : base.entries()) {
    if (e.min == Score::zero()) continue;
    Rational m = moved[i++];
    if (m <= entries.back().min.value()) m = entries.back().min.value() + Rational(1, 100);
    if (m > 0 && m <= 4) entries.push_back({Score(m), e.grade, std::nullopt});
  }
  return CutoffTable(std::move(entries));
}

}  // namespace

DispersionTrial dispersion_trial(std::uint64_t seed, const DispersionTrialOptions& options) {
  SeededRng rng(seed);
  const auto& standard = CutoffTable::standard();
  const auto max_shift = static_cast<std::int64_t>(std::llround(options.max_shift * 100));

  std::vector<ClassStats> shared, perturbed;
  for (std::size_t c = 0; c < options.classes; ++c) {
    const CutoffTable own = perturbed_cutoffs(standard, rng, max_shift);
    std::vector<Concept> a, b;
    for (std::size_t s = 0; s < options.students_per_class; ++s) {
      // disengaged students spread over [0, 1.8); the rest are the mean of
      // three uniform draws over [0, 4]
      const bool disengaged = rng.below(10000) < static_cast<std::uint64_t>(std::llround(options.disengaged_share * 10000));
      const auto h = disengaged ? static_cast<std::int64_t>(rng.below(180))
                                : static_cast<std::int64_t>(rng.below(401) + rng.below(401) + rng.below(401)) / 3;
      const Score cr = Score::from_hundredths(h);
      a.push_back(standard.concept_for(cr));
      b.push_back(own.concept_for(cr));
    }
    shared.push_back(class_distribution(std::span<const Concept>(a)));
    perturbed.push_back(class_distribution(std::span<const Concept>(b)));
  }
  DispersionTrial t;
  for (const auto& [k, d] : cohort_dispersion(shared)) t.shared_stddev[k] = d.stddev;
  for (const auto& [k, d] : cohort_dispersion(perturbed)) t.perturbed_stddev[k] = d.stddev;
  return t;
}

std::string dispersion_csv(const std::map<std::string, LetterDispersion>& dispersion) {
  std::vector<csv::Row> rows;
  for (auto b : kBuckets) {
    auto it = dispersion.find(std::string(b));
    if (it == dispersion.end()) continue;
    rows.push_back({std::string(b), num(it->second.mean), num(it->second.stddev)});
  }
  return csv::format({"bucket", "mean_fraction", "stddev"}, rows);
}

std::string term_series_csv(std::span<const TermSeriesPoint> points) {
  std::vector<csv::Row> rows;
  for (const auto& p : points) {
    rows.push_back({p.term, std::to_string(p.n_classes), num(p.min), num(p.max), num(p.mean), num(p.stddev),
                    p.wide_gap ? "1" : "0"});
  }
  return csv::format({"term", "classes", "min_gpa", "max_gpa", "mean_gpa", "stddev", "wide_gap"}, rows);
}

std::string failure_report_csv(const FailureReport& report) {
  std::vector<csv::Row> rows;
  for (const auto& m : report.modalities) {
    rows.push_back({std::string(to_string(m.modality)), std::to_string(m.n_terms), num(m.simple),
                    num(m.student_weighted), num(m.failure_fraction), std::to_string(m.total_students),
                    std::to_string(m.total_classes)});
  }
  return csv::format({"modality", "terms", "simple", "student_weighted", std::string(to_string(report.aggregation)),
                      "students", "classes"},
                     rows);
}

std::string fairness_csv(std::span<const FairnessFinding> findings) {
  std::vector<csv::Row> rows;
  for (const auto& f : findings) rows.push_back({f.higher, f.lower, f.cr_gap.fixed(), f.final_gap.fixed()});
  return csv::format({"higher", "lower", "cr_gap", "final_gap"}, rows);
}

std::string class_stats_csv(std::span<const ClassStats> classes) {
  std::vector<csv::Row> rows;
  for (const auto& c : classes) {
    csv::Row r{c.class_id, c.term, std::string(to_string(c.modality)), std::to_string(c.n_students)};
    for (auto b : kBuckets) r.push_back(num(c.distribution.at(std::string(b))));
    r.push_back(c.gpa_mean.fixed(4));
    r.push_back(num(c.cancellation_fraction));
    rows.push_back(std::move(r));
  }
  return csv::format({"class_id", "term", "modality", "students", "A", "B", "C", "D", "F+O", "gpa_mean",
                      "cancellation_fraction"},
                     rows);
}

nlohmann::json to_json(const ClassStats& s) {
  return {{"class_id", s.class_id},
          {"term", s.term},
          {"modality", to_string(s.modality)},
          {"n_students", s.n_students},
          {"distribution", s.distribution},
          {"gpa_mean", s.gpa_mean.to_double()},
          {"failure_fraction", s.failure_fraction},
          {"cancellation_fraction", s.cancellation_fraction}};
}

nlohmann::json to_json(const std::map<std::string, LetterDispersion>& dispersion) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, d] : dispersion) out[k] = {{"mean", d.mean}, {"stddev", d.stddev}};
  return out;
}

nlohmann::json to_json(std::span<const TermSeriesPoint> points) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : points) {
    out.push_back({{"term", p.term},
                   {"n_classes", p.n_classes},
                   {"min", p.min},
                   {"max", p.max},
                   {"mean", p.mean},
                   {"stddev", p.stddev},
                   {"wide_gap", p.wide_gap}});
  }
  return out;
}

nlohmann::json to_json(const FailureReport& report) {
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : report.modalities) {
    mods.push_back({{"modality", to_string(m.modality)},
                    {"n_terms", m.n_terms},
                    {"failure_fraction", m.failure_fraction},
                    {"simple", m.simple},
                    {"student_weighted", m.student_weighted},
                    {"total_students", m.total_students},
                    {"total_classes", m.total_classes}});
  }
  return {{"aggregation", to_string(report.aggregation)}, {"modalities", mods}, {"notes", report.notes}};
}

nlohmann::json to_json(std::span<const FairnessFinding> findings) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : findings) {
    out.push_back({{"higher", f.higher},
                   {"lower", f.lower},
                   {"cr_gap", f.cr_gap.exact()},
                   {"final_gap", f.final_gap.exact()},
                   {"explanation", f.explanation}});
  }
  return out;
}

nlohmann::json to_json(std::span<const PriorFailurePoint> points) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : points) {
    out.push_back({{"term", p.term},
                   {"n_students", p.n_students},
                   {"class_fraction", p.class_fraction},
                   {"bl_fraction", p.bl_fraction},
                   {"any_fraction", p.any_fraction}});
  }
  return out;
}

nlohmann::json to_json(const CancellationReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [id, f] : report.per_class) per.push_back({{"class_id", id}, {"fraction", f}});
  return {{"per_class", per},
          {"aggregate", report.aggregate},
          {"total_enrolled", report.total_enrolled},
          {"total_cancelled", report.total_cancelled}};
}

}  // namespace gradeforge::analytics
