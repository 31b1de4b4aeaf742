#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "logsplit/bspline.hpp"

namespace logsplit {

/// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 2n-1.
class GaussLegendre {
 public:
  explicit GaussLegendre(std::size_t points);

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

  /// Node i mapped to [lo, hi], with the matching scaled weight.
  [[nodiscard]] double node(std::size_t i, double lo, double hi) const noexcept {
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes_[i];
  }
  [[nodiscard]] double weight(std::size_t i, double lo, double hi) const noexcept {
    return 0.5 * (hi - lo) * weights_[i];
  }

  template <class F>
  double integrate(F&& f, double lo, double hi) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weight(i, lo, hi) * f(node(i, lo, hi));
    return sum;
  }

  /// Sum of the rule over consecutive intervals [breaks[i], breaks[i+1]].
  template <class F>
  double integrate_composite(F&& f, std::span<const double> breaks) const {
    double sum = 0.0;
    for (std::size_t i = 1; i < breaks.size(); ++i) sum += integrate(f, breaks[i - 1], breaks[i]);
    return sum;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Adaptive composite Gauss-Legendre: each cell is bisected until the
/// 10-point estimate on the cell agrees with the sum over its halves to
/// within the cell's share of abs_tol. Optional breakpoints seed the cells
/// (kinks and jumps of f should be listed there).
[[nodiscard]] double integrate_adaptive(const std::function<double(double)>& f, Interval range,
                                        double abs_tol, std::span<const double> breakpoints = {});

}  // namespace logsplit
