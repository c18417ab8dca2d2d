#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include "gradeforge/error.hpp"
#include "gradeforge/grade_model.hpp"
#include "oracle.hpp"

using namespace gradeforge;

namespace {

const char* const kTable2Letters[] = {"A", "A-", "B+", "B", "B-", "C+", "C", "C-", "D+", "D", "D-", "E", "F", "O"};

}  // namespace

TEST(Concept, ParsesAndPrints) {
  for (const auto& c : all_concepts()) EXPECT_EQ(Concept::parse(c.str()), c);
  EXPECT_EQ(all_concepts().size(), 15u);
  EXPECT_EQ(Concept::parse("B-"), Concept(Letter::B, Modifier::minus));
}

TEST(Concept, RejectsModifiersOnFailingLetters) {
  for (const char* bad : {"F+", "E-", "O+", "G", "", "A++", "b", "AB"}) {
    EXPECT_THROW(Concept::parse(bad), Error) << bad;
  }
}

TEST(Concept, OrderIsGradeOrder) {
  const auto all = all_concepts();
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1], all[i]);
  EXPECT_LT(Concept::parse("O"), Concept::parse("F"));
  EXPECT_LT(Concept::parse("F"), Concept::parse("E"));
  EXPECT_LT(Concept::parse("E"), Concept::parse("D-"));
  EXPECT_LT(Concept::parse("A"), Concept::parse("A+"));
}

TEST(Table2, EveryEntryMatchesThePublishedValue) {
  const ModifierScheme table2(SchemeName::table2);
  int checked = 0;
  for (const char* letter : kTable2Letters) {
    EXPECT_EQ(table2.score(Concept::parse(letter)), Score::from_hundredths(oracle::table2_hundredths(letter)))
        << letter;
    ++checked;
  }
  EXPECT_EQ(checked, 14);
}

TEST(Delta02, ModifiersMovePointTwo) {
  const ModifierScheme delta(SchemeName::delta02);
  for (const auto& c : all_concepts()) {
    EXPECT_EQ(delta.score(c), Score::from_hundredths(oracle::delta02_hundredths(c.str()))) << c.str();
  }
  EXPECT_EQ(delta.score(Concept::parse("A+")), Score::max());
  EXPECT_EQ(delta.score(Concept::parse("D+")), Score::parse("1.2"));
}

TEST(Table3, EveryBoundaryIsLeftClosed) {
  const auto& table = CutoffTable::standard();
  ASSERT_EQ(table.entries().size(), 12u);
  const auto& rows = oracle::standard_cutoffs();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [min, name] = rows[i];
    EXPECT_EQ(table.entries()[i].min, Score::from_hundredths(min));
    EXPECT_EQ(score_to_concept(Score::from_hundredths(min), table).str(), name) << "at " << min;
    if (min > 0) {
      // just below the boundary belongs to the previous row
      const Score below(Rational(min, 100) - Rational(1, 1'000'000));
      EXPECT_EQ(score_to_concept(below, table).str(), rows[i - 1].second) << "below " << min;
    }
  }
  EXPECT_EQ(score_to_concept(Score::max(), table).str(), "A");
}

TEST(Table3, MatchesOracleOnEveryHundredth) {
  for (int h = 0; h <= 400; ++h) {
    EXPECT_EQ(score_to_concept(Score::from_hundredths(h), CutoffTable::standard()).str(),
              oracle::standard_concept(h * 100))
        << h;
  }
}

TEST(Table3, OutOfRangeScoresThrow) {
  try {
    score_to_concept(Score::parse("4.01"), CutoffTable::standard());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidScore);
  }
  EXPECT_THROW(score_to_concept(Score::parse("-0.01"), CutoffTable::standard()), Error);
}

TEST(CutoffTable, RejectsBrokenTables) {
  const auto expect_invalid = [](std::vector<CutoffEntry> rows) {
    try {
      CutoffTable t(std::move(rows));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidCutoffs);
    }
  };
  expect_invalid({});
  expect_invalid({{Score::parse("0.5"), Concept::parse("F"), {}}});
  expect_invalid({{Score::zero(), Concept::parse("F"), {}}, {Score::parse("2"), Concept::parse("C"), {}},
                  {Score::parse("1.5"), Concept::parse("D"), {}}});
  expect_invalid({{Score::zero(), Concept::parse("B"), {}}, {Score::parse("2"), Concept::parse("C"), {}}});
  expect_invalid({{Score::zero(), Concept::parse("F"), {}}, {Score::parse("4.5"), Concept::parse("A"), {}}});
}

TEST(CutoffTable, LoweringTheATopThresholdDropsAMinus) {
  const auto edited = CutoffTable::standard().with_threshold(Concept::parse("A"), Score::parse("3.5"));
  EXPECT_EQ(edited.entries().size(), 11u);
  EXPECT_EQ(score_to_concept(Score::parse("3.6"), CutoffTable::standard()).str(), "B+");
  EXPECT_EQ(score_to_concept(Score::parse("3.6"), edited).str(), "A");
  EXPECT_EQ(score_to_concept(Score::parse("3.49"), edited).str(), "B+");
  for (const auto& e : edited.entries()) EXPECT_NE(e.grade.str(), "A-");
}

TEST(CutoffTable, RecalibrationTouchesOnlyTheEditedBand) {
  const auto edited = CutoffTable::standard().with_threshold(Concept::parse("A"), Score::parse("3.5"));
  for (int h = 0; h <= 400; ++h) {
    const Score s = Score::from_hundredths(h);
    const bool changed = CutoffTable::standard().concept_for(s) != edited.concept_for(s);
    EXPECT_EQ(changed, h >= 350 && h < 390) << h;
  }
}

TEST(CutoffTable, EditsOnlyMoveScoresAcrossEditedBoundaries) {
  // For every single-threshold edit on a grid of targets, a score changes
  // concept only inside the band swept by the moved boundary, widened by the
  // extent of any row the edit had to drop.
  const auto& base = CutoffTable::standard();
  const auto& rows = base.entries();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (int target = 1; target < 400; target += 7) {
      const Score t = Score::from_hundredths(target);
      const CutoffTable edited = base.with_threshold(rows[r].grade, t);
      Score lo = std::min(rows[r].min, t);
      Score hi = std::max(rows[r].min, t);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const bool kept = std::find(edited.entries().begin(), edited.entries().end(), rows[k]) != edited.entries().end();
        if (kept || k == r) continue;
        const Score upper = k + 1 < rows.size() ? rows[k + 1].min : Score::max();
        lo = std::min(lo, rows[k].min);
        hi = std::max(hi, upper);
      }
      for (int h = 0; h <= 400; ++h) {
        const Score s = Score::from_hundredths(h);
        if (base.concept_for(s) != edited.concept_for(s)) {
          EXPECT_TRUE(s >= lo && (s < hi || hi == Score::max())) << rows[r].grade.str() << " -> " << target << " moved " << h;
        }
      }
    }
  }
}

TEST(Registration, StripsModifiers) {
  for (const auto& c : all_concepts()) {
    EXPECT_EQ(registration_concept(c).str(), oracle::strip_modifier(c.str()));
  }
}

TEST(ConceptScaleJson, RoundTrips) {
  ConceptScale scale;
  scale.scheme = ModifierScheme(SchemeName::delta02);
  scale.cutoffs = CutoffTable::standard().with_threshold(Concept::parse("A"), Score::parse("3.5"));
  EXPECT_EQ(concept_scale_from_json(to_json(scale)), scale);
  EXPECT_EQ(concept_scale_from_json(nlohmann::json::object()), ConceptScale{});
}
