#include "logsplit/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <fmt/format.h>

#include "logsplit/errors.hpp"

namespace logsplit {

namespace {

void require_order(int order) {
  if (order < 1 || order > kMaxSplineOrder) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("spline order {} outside [1, {}]", order, kMaxSplineOrder));
  }
}

}  // namespace

KnotSequence::KnotSequence(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  require_order(order_);
  const auto k = static_cast<std::size_t>(order_);
  if (knots_.size() < 2 * k) {
    throw Error(ErrorCode::DegenerateKnots,
                fmt::format("{} knots cannot carry order {} endpoint multiplicity", knots_.size(),
                            order_));
  }
  for (double t : knots_) {
    if (!std::isfinite(t)) throw Error(ErrorCode::DegenerateKnots, "non-finite knot");
  }
  const double a = knots_.front();
  const double b = knots_.back();
  if (!(a < b)) {
    throw Error(ErrorCode::InvalidSupport, fmt::format("knot support [{}, {}] is empty", a, b));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (knots_[i] != a || knots_[knots_.size() - 1 - i] != b) {
      throw Error(ErrorCode::DegenerateKnots,
                  fmt::format("endpoint knots must repeat {} times", order_));
    }
  }
  // t_{k-1} < t_k < ... < t_{N-k+1}
  for (std::size_t i = k; i + k <= knots_.size(); ++i) {
    if (!(knots_[i - 1] < knots_[i])) {
      throw Error(ErrorCode::DegenerateKnots,
                  fmt::format("interior knots must be simple and increasing at index {}", i));
    }
  }
}

KnotSequence KnotSequence::uniform(Interval support, std::size_t intervals, int order) {
  require_order(order);
  if (!(support.lo < support.hi) || !std::isfinite(support.lo) || !std::isfinite(support.hi)) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support [{}, {}] is degenerate", support.lo, support.hi));
  }
  if (intervals == 0) throw Error(ErrorCode::InvalidArgument, "uniform knots need >= 1 interval");
  const auto k = static_cast<std::size_t>(order);
  std::vector<double> t(2 * k + intervals - 1);
  const double h = support.length() / static_cast<double>(intervals);
  std::fill_n(t.begin(), k, support.lo);
  for (std::size_t i = 1; i < intervals; ++i) {
    t[k - 1 + i] = support.lo + static_cast<double>(i) * h;
  }
  std::fill_n(t.end() - static_cast<std::ptrdiff_t>(k), k, support.hi);
  return KnotSequence(std::move(t), order);
}

KnotSequence KnotSequence::clamped(Interval support, std::span<const double> interior,
                                   int order) {
  require_order(order);
  const auto k = static_cast<std::size_t>(order);
  std::vector<double> t;
  t.reserve(2 * k + interior.size());
  t.insert(t.end(), k, support.lo);
  t.insert(t.end(), interior.begin(), interior.end());
  t.insert(t.end(), k, support.hi);
  return KnotSequence(std::move(t), order);
}

Interval KnotSequence::basic_interval() const noexcept {
  const auto k = static_cast<std::size_t>(order_);
  return {knots_[k - 1], knots_[last_index() - k + 1]};
}

std::span<const double> KnotSequence::breakpoints() const noexcept {
  const auto k = static_cast<std::size_t>(order_);
  return std::span<const double>(knots_).subspan(k - 1, num_intervals() + 1);
}

double KnotSequence::max_gap() const noexcept {
  const auto bp = breakpoints();
  double gap = 0.0;
  for (std::size_t i = 1; i < bp.size(); ++i) gap = std::max(gap, bp[i] - bp[i - 1]);
  return gap;
}

double KnotSequence::min_gap() const noexcept {
  const auto bp = breakpoints();
  double gap = bp.back() - bp.front();
  for (std::size_t i = 1; i < bp.size(); ++i) gap = std::min(gap, bp[i] - bp[i - 1]);
  return gap;
}

std::size_t KnotSequence::span_index(double x) const noexcept {
  const auto k = static_cast<std::size_t>(order_);
  const std::size_t lo = k - 1;
  const std::size_t hi = last_index() - k;  // last nonempty interval
  if (x >= knots_[hi]) return hi;
  if (x <= knots_[lo]) return lo;
  const auto begin = knots_.begin() + static_cast<std::ptrdiff_t>(lo);
  const auto end = knots_.begin() + static_cast<std::ptrdiff_t>(hi + 1);
  const auto it = std::upper_bound(begin, end, x);
  return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
}

LocalBasis local_basis(const KnotSequence& knots, double x) {
  const auto t = knots.knots();
  const int p = knots.order() - 1;
  const std::size_t mu = knots.span_index(x);

  LocalBasis out;
  out.first = mu - static_cast<std::size_t>(p);
  std::array<double, kMaxSplineOrder> left{};
  std::array<double, kMaxSplineOrder> right{};
  auto& b = out.values;
  b[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[mu + 1 - static_cast<std::size_t>(j)];
    right[j] = t[mu + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = b[r] / (right[r + 1] + left[j - r]);
      b[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    b[j] = saved;
  }
  return out;
}

Eigen::MatrixXd local_basis_derivatives(const KnotSequence& knots, double x, int max_derivative,
                                        std::size_t* first) {
  const auto t = knots.knots();
  const int k = knots.order();
  const int p = k - 1;
  const std::size_t mu = knots.span_index(x);
  if (first != nullptr) *first = mu - static_cast<std::size_t>(p);

  // ndu holds basis values (upper triangle) and knot differences (lower).
  Eigen::MatrixXd ndu(k, k);
  std::array<double, kMaxSplineOrder> left{};
  std::array<double, kMaxSplineOrder> right{};
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[mu + 1 - static_cast<std::size_t>(j)];
    right[j] = t[mu + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(max_derivative + 1, k);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  const int top = std::min(max_derivative, p);
  Eigen::MatrixXd a(2, k);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a.setZero();
    a(0, 0) = 1.0;
    for (int d = 1; d <= top; ++d) {
      double value = 0.0;
      const int rk = r - d;
      const int pk = p - d;
      if (r >= d) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        value = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? d - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        value += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, d) = -a(s1, d - 1) / ndu(pk + 1, r);
        value += a(s2, d) * ndu(r, pk);
      }
      ders(d, r) = value;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int d = 1; d <= top; ++d) {
    ders.row(d) *= factor;
    factor *= (p - d);
  }
  return ders;
}

double divided_difference(std::span<const double> abscissae, std::span<const double> values) {
  if (abscissae.empty() || abscissae.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "divided difference needs equally many (>= 1) abscissae and values");
  }
  std::vector<double> sorted(abscissae.begin(), abscissae.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::DegenerateKnots, "divided difference abscissae must be distinct");
  }
  // Newton table, overwritten in place column by column.
  std::vector<double> table(values.begin(), values.end());
  const std::size_t n = table.size();
  for (std::size_t order = 1; order < n; ++order) {
    for (std::size_t i = n - 1; i >= order; --i) {
      table[i] = (table[i] - table[i - 1]) / (abscissae[i] - abscissae[i - order]);
    }
  }
  return table.back();
}

double bspline_eval(const KnotSequence& knots, std::size_t j, double x) {
  if (j >= knots.num_basis()) {
    throw Error(ErrorCode::IndexError,
                fmt::format("B-spline index {} outside [0, {}]", j, knots.last_basis_index()));
  }
  if (!knots.support().contains(x)) return 0.0;
  const LocalBasis local = local_basis(knots, x);
  if (j < local.first || j >= local.first + static_cast<std::size_t>(knots.order())) return 0.0;
  return local.values[j - local.first];
}

double bspline_derivative(const KnotSequence& knots, std::size_t j, double x, int alpha) {
  if (j >= knots.num_basis()) {
    throw Error(ErrorCode::IndexError,
                fmt::format("B-spline index {} outside [0, {}]", j, knots.last_basis_index()));
  }
  if (alpha < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 0");
  if (alpha == 0) return bspline_eval(knots, j, x);
  if (alpha >= knots.order() || !knots.support().contains(x)) return 0.0;
  std::size_t first = 0;
  const Eigen::MatrixXd ders = local_basis_derivatives(knots, x, alpha, &first);
  if (j < first || j >= first + static_cast<std::size_t>(knots.order())) return 0.0;
  return ders(alpha, static_cast<Eigen::Index>(j - first));
}

SplineFunction::SplineFunction(KnotSequence knots, std::vector<double> coefficients)
    : knots_(std::move(knots)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != knots_.num_basis()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("spline needs {} coefficients, got {}", knots_.num_basis(),
                            coefficients_.size()));
  }
}

double SplineFunction::operator()(double x) const { return spline_eval(*this, x, 0); }

double spline_eval(const SplineFunction& s, double x, int alpha) {
  const KnotSequence& knots = s.knots();
  const auto y = s.coefficients();
  if (alpha < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 0");
  if (!knots.support().contains(x)) {
    if (alpha == 0) return 0.0;
    throw Error(ErrorCode::OutOfSupport,
                fmt::format("derivative requested at {} outside [{}, {}]", x, knots.support().lo,
                            knots.support().hi));
  }
  const int k = knots.order();
  if (alpha == 0) {
    const LocalBasis local = local_basis(knots, x);
    double sum = 0.0;
    for (int r = 0; r < k; ++r) sum += y[local.first + static_cast<std::size_t>(r)] * local.values[r];
    return sum;
  }
  if (alpha >= k) return 0.0;
  std::size_t first = 0;
  const Eigen::MatrixXd ders = local_basis_derivatives(knots, x, alpha, &first);
  double sum = 0.0;
  for (int r = 0; r < k; ++r) sum += y[first + static_cast<std::size_t>(r)] * ders(alpha, r);
  return sum;
}

double spline_distance(const std::function<double(double)>& g, const KnotSequence& knots,
                       std::size_t grid_size) {
  const std::size_t dim = knots.num_basis();
  if (grid_size < 10 * dim) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("grid of {} points is below 10 x {} basis functions", grid_size, dim));
  }
  const Interval support = knots.support();
  const double step = support.length() / static_cast<double>(grid_size - 1);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid_size),
                                                 static_cast<Eigen::Index>(dim));
  Eigen::VectorXd target(static_cast<Eigen::Index>(grid_size));
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = i + 1 == grid_size ? support.hi : support.lo + static_cast<double>(i) * step;
    const LocalBasis local = local_basis(knots, x);
    for (int r = 0; r < knots.order(); ++r) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(local.first) + r) =
          local.values[r];
    }
    target(static_cast<Eigen::Index>(i)) = g(x);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(dim)) {
    throw Error(ErrorCode::SingularSystem,
                fmt::format("least-squares design has rank {} < {}", qr.rank(), dim));
  }
  const Eigen::VectorXd coef = qr.solve(target);
  return (design * coef - target).cwiseAbs().maxCoeff();
}

}  // namespace logsplit
