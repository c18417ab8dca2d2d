#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace gradeforge {

// Exact arithmetic for grade points and weight fractions. Cutoff comparisons
// at values like 2.5 and 2.8 must never be subject to binary rounding.
using Rational = boost::rational<std::int64_t>;

// Parses "0.35", "3", "-1.25" or "1/3" exactly.
Rational parse_rational(std::string_view text);

// JSON numbers arrive as doubles; they are snapped to the nearest 1e-6.
Rational rational_from_double(double value);

double to_double(const Rational& value);

// Decimal form when the value terminates within 12 digits, "n/d" otherwise.
// parse_rational(exact_string(x)) == x for every x.
std::string exact_string(const Rational& value);

// Rounds half away from zero to `decimals` places.
std::string to_fixed(const Rational& value, int decimals);

// A grade-point value on the 0..4 scale used for concepts and CRs.
// Intermediate values (bonus deltas, unclamped sums) may leave the range;
// clamped() brings them back.
class Score {
 public:
  static constexpr std::int64_t kMax = 4;

  constexpr Score() = default;
  explicit Score(Rational value) : value_(value) {}

  static Score from_hundredths(std::int64_t hundredths) { return Score(Rational(hundredths, 100)); }
  static Score parse(std::string_view text) { return Score(parse_rational(text)); }
  static Score from_double(double value) { return Score(rational_from_double(value)); }
  static Score zero() { return Score(); }
  static Score max() { return Score(Rational(kMax)); }

  const Rational& value() const { return value_; }
  double to_double() const { return gradeforge::to_double(value_); }

  bool in_range() const { return value_ >= 0 && value_ <= kMax; }
  Score clamped() const;

  std::string fixed(int decimals = 2) const { return to_fixed(value_, decimals); }
  std::string exact() const { return exact_string(value_); }

  Score& operator+=(const Score& other) {
    value_ += other.value_;
    return *this;
  }
  Score& operator-=(const Score& other) {
    value_ -= other.value_;
    return *this;
  }

  friend Score operator+(Score a, const Score& b) { return a += b; }
  friend Score operator-(Score a, const Score& b) { return a -= b; }
  friend Score operator*(const Score& a, const Rational& w) { return Score(a.value_ * w); }
  friend Score operator*(const Rational& w, const Score& a) { return Score(a.value_ * w); }
  friend Score operator/(const Score& a, const Rational& d) { return Score(a.value_ / d); }

  friend bool operator==(const Score& a, const Score& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Score& a, const Score& b) {
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (b.value_ < a.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  Rational value_{0};
};

}  // namespace gradeforge
