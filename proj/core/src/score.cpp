#include "gradeforge/score.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "gradeforge/error.hpp"

namespace gradeforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidScore: return "InvalidScore";
    case ErrorKind::InvalidConcept: return "InvalidConcept";
    case ErrorKind::InvalidCutoffs: return "InvalidCutoffs";
    case ErrorKind::WeightSumError: return "WeightSumError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::InvalidRecord: return "InvalidRecord";
    case ErrorKind::IneligibleRec: return "IneligibleRec";
    case ErrorKind::MultipleMissed: return "MultipleMissed";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingDifficulty: return "MissingDifficulty";
    case ErrorKind::InsufficientBank: return "InsufficientBank";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::InvalidRegistration: return "InvalidRegistration";
    case ErrorKind::EmptyRoot: return "EmptyRoot";
    case ErrorKind::CommandNotFound: return "CommandNotFound";
    case ErrorKind::AnnotationSyntax: return "AnnotationSyntax";
    case ErrorKind::UnknownConcept: return "UnknownConcept";
    case ErrorKind::UnknownErrorCode: return "UnknownErrorCode";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::SnapshotMismatch: return "SnapshotMismatch";
    case ErrorKind::StaleSnapshot: return "StaleSnapshot";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

// Only the numerator of an "n/d" form may carry a sign.
std::int64_t parse_int(std::string_view digits, std::string_view whole, bool allow_sign = false) {
  const auto body = allow_sign && digits.starts_with('-') ? digits.substr(1) : digits;
  if (body.empty() || body.find_first_not_of("0123456789") != std::string_view::npos) {
    throw Error(ErrorKind::ParseError, "not a number: '" + std::string(whole) + "'");
  }
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(ErrorKind::ParseError, "not a number: '" + std::string(whole) + "'");
  }
  return out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorKind::ParseError, "empty number");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = parse_int(text.substr(0, slash), whole, true);
    const auto den = parse_int(text.substr(slash + 1), whole);
    if (den == 0) throw Error(ErrorKind::ParseError, "zero denominator in '" + std::string(whole) + "'");
    return Rational(num, den);
  }

  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view int_part = text.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (int_part.empty() && frac_part.empty()) {
    throw Error(ErrorKind::ParseError, "not a number: '" + std::string(whole) + "'");
  }
  if (frac_part.size() > 15) {
    throw Error(ErrorKind::ParseError, "too many decimals: '" + std::string(whole) + "'");
  }
  Rational value(int_part.empty() ? 0 : parse_int(int_part, whole));
  if (!frac_part.empty()) {
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
    value += Rational(parse_int(frac_part, whole), scale);
  }
  return negative ? -value : value;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value) || std::fabs(value) > 1e12) {
    throw Error(ErrorKind::ParseError, "number out of range");
  }
  return Rational(static_cast<std::int64_t>(std::llround(value * 1e6)), 1'000'000);
}

double to_double(const Rational& value) {
  return static_cast<double>(value.numerator()) / static_cast<double>(value.denominator());
}

std::string to_fixed(const Rational& value, int decimals) {
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const bool negative = value < 0;
  const Rational magnitude = negative ? -value : value;
  // half-up on the magnitude: floor(x * scale + 1/2)
  const Rational scaled = magnitude * scale + Rational(1, 2);
  const std::int64_t units = scaled.numerator() / scaled.denominator();

  std::string digits = std::to_string(units);
  if (decimals > 0) {
    if (static_cast<int>(digits.size()) <= decimals) {
      digits.insert(0, static_cast<std::size_t>(decimals + 1) - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), 1, '.');
  }
  if (negative && units != 0) digits.insert(0, 1, '-');
  return digits;
}

std::string exact_string(const Rational& value) {
  // Terminating decimal iff the reduced denominator has only factors 2 and 5.
  std::int64_t den = value.denominator();
  int twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  const int places = std::max(twos, fives);
  if (den != 1 || places > 12) {
    return std::to_string(value.numerator()) + "/" + std::to_string(value.denominator());
  }
  std::string out = to_fixed(value, places);
  return out;
}

Score Score::clamped() const {
  if (value_ < 0) return Score::zero();
  if (value_ > kMax) return Score::max();
  return *this;
}

}  // namespace gradeforge
