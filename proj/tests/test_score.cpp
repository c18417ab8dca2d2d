#include <random>

#include <gtest/gtest.h>

#include "gradeforge/error.hpp"
#include "gradeforge/score.hpp"

using namespace gradeforge;

TEST(ParseRational, DecimalsAreExact) {
  EXPECT_EQ(parse_rational("0.35"), Rational(35, 100));
  EXPECT_EQ(parse_rational("3"), Rational(3));
  EXPECT_EQ(parse_rational("-1.25"), Rational(-5, 4));
  EXPECT_EQ(parse_rational("1/3"), Rational(1, 3));
  EXPECT_EQ(parse_rational(".5"), Rational(1, 2));
}

TEST(ParseRational, RejectsGarbage) {
  for (const char* bad : {"", "abc", "1/0", "1.2.3", "--1", "."}) {
    EXPECT_THROW(parse_rational(bad), Error) << bad;
  }
}

TEST(RationalFromDouble, SnapsToMicroUnits) {
  EXPECT_EQ(rational_from_double(0.1), Rational(1, 10));
  EXPECT_EQ(rational_from_double(0.35), Rational(35, 100));
  EXPECT_EQ(rational_from_double(2.8), Rational(14, 5));
}

TEST(ExactString, RoundTripsRandomFractions) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Rational r(static_cast<std::int64_t>(rng() % 200001) - 100000,
                     static_cast<std::int64_t>(rng() % 999) + 1);
    EXPECT_EQ(parse_rational(exact_string(r)), r) << exact_string(r);
  }
  EXPECT_EQ(exact_string(Rational(1, 3)), "1/3");
  EXPECT_EQ(exact_string(Rational(13, 5)), "2.6");
}

TEST(ToFixed, RoundsHalfAwayFromZero) {
  EXPECT_EQ(to_fixed(Rational(795, 1000), 2), "0.80");
  EXPECT_EQ(to_fixed(Rational(975, 1000), 2), "0.98");
  EXPECT_EQ(to_fixed(Rational(-975, 1000), 2), "-0.98");
  EXPECT_EQ(to_fixed(Rational(1, 3), 2), "0.33");
  EXPECT_EQ(to_fixed(Rational(7), 2), "7.00");
  EXPECT_EQ(to_fixed(Rational(5, 2), 0), "3");
}

TEST(Score, ClampsIntoRange) {
  EXPECT_EQ(Score::parse("4.6").clamped(), Score::max());
  EXPECT_EQ(Score::parse("-0.1").clamped(), Score::zero());
  EXPECT_EQ(Score::parse("2.5").clamped(), Score::parse("2.5"));
  EXPECT_FALSE(Score::parse("4.01").in_range());
  EXPECT_TRUE(Score::max().in_range());
}

TEST(Score, ArithmeticStaysExact) {
  // 0.1 + 0.2 == 0.3 exactly, unlike binary floating point.
  EXPECT_EQ(Score::parse("0.1") + Score::parse("0.2"), Score::parse("0.3"));
  EXPECT_EQ(Score::from_hundredths(280) * Rational(35, 100), Score::parse("0.98"));
  EXPECT_LT(Score::parse("2.79"), Score::parse("2.8"));
}
