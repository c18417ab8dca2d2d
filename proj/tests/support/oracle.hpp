#pragma once

// Independent reference computations. Everything here works in plain integers
// (hundredths of a grade point, hundredths of a weight) and never calls into
// gradeforge, so a test comparing the library against it checks two separate
// derivations of the same number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Letter-to-points conversion table, in hundredths.
inline int table2_hundredths(const std::string& c) {
  static const std::map<std::string, int> kTable = {
      {"A+", 400}, {"A", 400},  {"A-", 380}, {"B+", 350}, {"B", 300}, {"B-", 280}, {"C+", 250}, {"C", 200},
      {"C-", 180}, {"D+", 150}, {"D", 100},  {"D-", 50},  {"E", 0},   {"F", 0},    {"O", 0}};
  return kTable.at(c);
}

// Base letter plus or minus 0.2 per modifier, clamped to [0, 4].
inline int delta02_hundredths(const std::string& c) {
  int base = 0;
  switch (c.at(0)) {
    case 'A': base = 400; break;
    case 'B': base = 300; break;
    case 'C': base = 200; break;
    case 'D': base = 100; break;
    default: base = 0;
  }
  if (c.size() == 2) base += c[1] == '+' ? 20 : -20;
  return std::clamp(base, 0, 400);
}

// Standard CR cutoffs, in hundredths, ascending.
inline const std::vector<std::pair<int, std::string>>& standard_cutoffs() {
  static const std::vector<std::pair<int, std::string>> kRows = {
      {0, "F"},    {80, "D-"}, {100, "D"}, {150, "D+"}, {180, "C-"}, {200, "C"},
      {250, "C+"}, {280, "B-"}, {300, "B"}, {340, "B+"}, {375, "A-"}, {390, "A"}};
  return kRows;
}

// Left-closed lookup for a value given in ten-thousandths of a point.
inline std::string standard_concept(std::int64_t ten_thousandths) {
  if (ten_thousandths < 0 || ten_thousandths > 40000) throw std::out_of_range("score outside [0,4]");
  std::string out;
  for (const auto& [min, c] : standard_cutoffs()) {
    if (ten_thousandths >= static_cast<std::int64_t>(min) * 100) out = c;
  }
  return out;
}

// Weighted sum in ten-thousandths: points (hundredths) times weights (hundredths).
inline std::int64_t weighted_ten_thousandths(const std::vector<std::pair<int, int>>& points_weights) {
  std::int64_t total = 0;
  for (const auto& [points, weight] : points_weights) total += static_cast<std::int64_t>(points) * weight;
  return total;
}

// Half-up rounding of ten-thousandths to a "x.yz" string.
inline std::string fixed2(std::int64_t ten_thousandths) {
  const std::int64_t hundredths = (ten_thousandths + 50) / 100;
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return std::to_string(hundredths / 100) + "." + frac;
}

inline std::string strip_modifier(const std::string& c) { return c.substr(0, 1); }

struct Pair {
  std::string higher;
  std::string lower;
  friend bool operator==(const Pair&, const Pair&) = default;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

// All ordered pairs with a strictly better CR and a strictly worse final.
// Values are compared as exact integers.
inline std::vector<Pair> inversions(const std::vector<std::string>& ids, const std::vector<std::int64_t>& cr,
                                    const std::vector<std::int64_t>& final_score) {
  std::vector<Pair> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (cr[i] > cr[j] && final_score[i] < final_score[j]) out.push_back({ids[i], ids[j]});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct TermRow {
  double percent;
  int students;
};

inline double simple_mean_percent(const std::vector<TermRow>& rows) {
  double sum = 0;
  for (const auto& r : rows) sum += r.percent;
  return sum / static_cast<double>(rows.size());
}

inline double weighted_mean_percent(const std::vector<TermRow>& rows) {
  double failed = 0;
  double total = 0;
  for (const auto& r : rows) {
    failed += r.percent * r.students;
    total += r.students;
  }
  return failed / total;
}

inline double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace oracle
