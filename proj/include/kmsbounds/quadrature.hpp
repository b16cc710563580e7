#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kmsbounds/errors.hpp"

namespace kmsbounds {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  if (n < 1) throw invalid_argument_error("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    const auto lo = static_cast<std::size_t>(i - 1), hi = static_cast<std::size_t>(n - i);
    rule.nodes[lo] = xm - xl * z;
    rule.nodes[hi] = xm + xl * z;
    rule.weights[lo] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    rule.weights[hi] = rule.weights[lo];
  }
  return rule;
}

/// Iterated Gauss-Legendre on the ordered simplex 0 <= s_n <= ... <= s_1 <= upper.
/// Node k carries times (s_1, ..., s_n) with s_1 the largest.
class SimplexQuadrature {
 public:
  SimplexQuadrature(int order, double upper, int points_per_axis = 8)
      : order_(order), upper_(upper), points_(points_per_axis) {
    if (order < 0) throw invalid_argument_error("SimplexQuadrature: order must be >= 0");
    if (points_per_axis < 1) throw invalid_argument_error("SimplexQuadrature: need >= 1 point per axis");
    const auto base = gauss_legendre(points_per_axis, 0.0, 1.0);
    std::vector<double> times;
    build(base, 0, upper, 1.0, times);
  }

  int order() const { return order_; }
  double upper() const { return upper_; }
  int points_per_axis() const { return points_; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& times(std::size_t k) const { return times_[k]; }
  double weight(std::size_t k) const { return weights_[k]; }

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  void build(const QuadratureRule& base, int level, double top, double w, std::vector<double>& times) {
    if (level == order_) {
      times_.push_back(times);
      weights_.push_back(w);
      return;
    }
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      times.push_back(base.nodes[i] * top);
      build(base, level + 1, times.back(), w * base.weights[i] * top, times);
      times.pop_back();
    }
  }

  int order_;
  double upper_;
  int points_;
  std::vector<std::vector<double>> times_;
  std::vector<double> weights_;
};

}  // namespace kmsbounds
