#include <random>

#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "gradeforge/analytics.hpp"
#include "gradeforge/exambank.hpp"
#include "gradeforge/policy.hpp"
#include "gradeforge/submissions.hpp"

using namespace gradeforge;

static void BM_compute_cohort(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<StudentRecord> records;
  for (int i = 0; i < state.range(0); ++i) records.push_back(testing_support::random_record(rng, "s" + std::to_string(i)));
  const auto policy = CoursePolicy::historical();
  for (auto _ : state) benchmark::DoNotOptimize(compute_cohort(records, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_compute_cohort)->Arg(40)->Arg(1000);

static void BM_assign_variants(benchmark::State& state) {
  exambank::QuestionBank bank;
  for (auto d : exambank::kDifficulties) {
    for (int q = 0; q < 3; ++q) {
      exambank::Question question;
      question.id = std::string(exambank::to_string(d)) + std::to_string(q);
      question.difficulty = d;
      for (int v = 0; v < 5; ++v) question.variants.push_back({question.id + "v" + std::to_string(v), "text", "key"});
      bank.questions.push_back(question);
    }
  }
  std::vector<exambank::RosterEntry> roster;
  for (int i = 0; i < state.range(0); ++i) roster.push_back({"RA" + std::to_string(10000 + i), "Student"});
  const auto tmpl = exambank::ExamTemplate::standard("Exam1");
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(exambank::assign_variants(roster, tmpl, bank, ++seed));
}
BENCHMARK(BM_assign_variants)->Arg(40)->Arg(250);

static void BM_fairness_audit(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<analytics::FairnessRow> rows;
  for (int i = 0; i < state.range(0); ++i) {
    rows.push_back({"s" + std::to_string(i), Score::from_hundredths(static_cast<std::int64_t>(rng() % 401)),
                    Score::from_hundredths(static_cast<std::int64_t>(rng() % 401))});
  }
  for (auto _ : state) benchmark::DoNotOptimize(analytics::fairness_audit(std::span<const analytics::FairnessRow>(rows)));
}
BENCHMARK(BM_fairness_audit)->Arg(100)->Arg(1000);

static void BM_parse_annotation(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(submissions::parse_annotation("B-,2,4,5_RAaluno.pdf"));
}
BENCHMARK(BM_parse_annotation);

BENCHMARK_MAIN();
