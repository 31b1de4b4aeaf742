#include "logsplit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/legendre.hpp>
#include <fmt/format.h>

#include "logsplit/errors.hpp"

namespace logsplit {

GaussLegendre::GaussLegendre(std::size_t points) {
  if (points == 0 || points > 200) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("Gauss-Legendre rule with {} points is not supported", points));
  }
  const int n = static_cast<int>(points);
  // Nonnegative zeros in ascending order; mirror them for the full rule.
  const std::vector<double> positive = boost::math::legendre_p_zeros<double>(n);
  nodes_.reserve(points);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it != 0.0) nodes_.push_back(-*it);
  }
  for (double x : positive) nodes_.push_back(x);
  weights_.reserve(points);
  for (double x : nodes_) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    weights_.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
}

namespace {

double adaptive_cell(const std::function<double(double)>& f, const GaussLegendre& rule,
                     double lo, double hi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = rule.integrate(f, lo, mid);
  const double right = rule.integrate(f, mid, hi);
  const double refined = left + right;
  // Roundoff floor: tolerances below the accumulated summation error are unreachable.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(left) + std::abs(right));
  if (depth <= 0 || std::abs(refined - whole) <= std::max(tol, floor)) return refined;
  return adaptive_cell(f, rule, lo, mid, left, 0.5 * tol, depth - 1) +
         adaptive_cell(f, rule, mid, hi, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, Interval range, double abs_tol,
                          std::span<const double> breakpoints) {
  static const GaussLegendre rule(10);
  constexpr int kMaxDepth = 40;
  std::vector<double> cells{range.lo};
  for (double x : breakpoints) {
    if (x > range.lo && x < range.hi) cells.push_back(x);
  }
  cells.push_back(range.hi);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  const double cell_tol = abs_tol / static_cast<double>(cells.size() - 1);
  double total = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const double whole = rule.integrate(f, cells[i - 1], cells[i]);
    total += adaptive_cell(f, rule, cells[i - 1], cells[i], whole, cell_tol, kMaxDepth);
  }
  return total;
}

}  // namespace logsplit
