#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace friable {

// Compensated (Kahan) accumulator for sums of a few thousand terms where
// we want identity tests to hold at the 1e-12 level.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Streaming pairwise summation: partial sums are merged in a binary-counter
// fashion, so the reduction tree depth is O(log n) regardless of how many
// values are pushed. Order of pushes fixes the result bit-for-bit.
class PairwiseSum {
 public:
  void add(double x) {
    std::uint64_t slot = count_++;
    for (; slot & 1u; slot >>= 1) {
      x += levels_.back();
      levels_.pop_back();
    }
    levels_.push_back(x);
  }
  double value() const {
    double total = 0.0;
    for (std::size_t i = levels_.size(); i-- > 0;) total += levels_[i];
    return total;
  }
  std::uint64_t count() const { return count_; }

 private:
  std::vector<double> levels_;
  std::uint64_t count_ = 0;
};

inline bool rel_close(double a, double b, double tol) {
  double scale = std::fmax(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= tol * scale;
}

// Fixed-width float formatting for CSV/JSON fixtures (%.17g round-trips
// doubles exactly and is locale-independent here).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace friable
