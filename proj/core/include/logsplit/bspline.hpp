#pragma once

// B-splines of order k (degree k-1) over clamped knot sequences.
//
// A knot sequence t_0 <= ... <= t_N carries the endpoint multiplicity
// t_0 = ... = t_{k-1} = a and t_{N-k+1} = ... = t_N = b, so the N-k+1
// B-splines B_{j,k} form a partition of unity on the whole of [a,b].
// Each B_{j,k} is supported on [t_j, t_{j+k}) and is extended left
// continuously at x = b.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace logsplit {

/// Closed interval [lo, hi] in parameter units.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] double length() const noexcept { return hi - lo; }
  [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Largest spline order supported by the fixed-size evaluation buffers.
inline constexpr int kMaxSplineOrder = 16;

class KnotSequence {
 public:
  /// Validates endpoint multiplicity, monotonicity and simple interior knots.
  KnotSequence(std::vector<double> knots, int order);

  /// Clamped knots with `intervals` equal gaps on `support`.
  static KnotSequence uniform(Interval support, std::size_t intervals, int order);

  /// Clamped knots with the given strictly increasing interior breakpoints.
  static KnotSequence clamped(Interval support, std::span<const double> interior, int order);

  [[nodiscard]] std::span<const double> knots() const noexcept { return knots_; }
  [[nodiscard]] double knot(std::size_t i) const { return knots_.at(i); }
  [[nodiscard]] int order() const noexcept { return order_; }

  /// N, the index of the last knot.
  [[nodiscard]] std::size_t last_index() const noexcept { return knots_.size() - 1; }
  /// L = N - k; coefficient vectors have L+1 entries.
  [[nodiscard]] std::size_t last_basis_index() const noexcept {
    return last_index() - static_cast<std::size_t>(order_);
  }
  [[nodiscard]] std::size_t num_basis() const noexcept { return last_basis_index() + 1; }
  /// Number of nonempty knot intervals inside [a,b].
  [[nodiscard]] std::size_t num_intervals() const noexcept {
    return knots_.size() - 2 * static_cast<std::size_t>(order_) + 1;
  }

  [[nodiscard]] Interval support() const noexcept { return {knots_.front(), knots_.back()}; }
  /// [t_{k-1}, t_{N-k+1}]; equals the support for clamped sequences.
  [[nodiscard]] Interval basic_interval() const noexcept;

  /// Largest and smallest gap between consecutive distinct knots on [a,b].
  [[nodiscard]] double max_gap() const noexcept;
  [[nodiscard]] double min_gap() const noexcept;
  /// max_gap / min_gap.
  [[nodiscard]] double mesh_ratio() const noexcept { return max_gap() / min_gap(); }

  /// Breakpoints a = t_{k-1} < t_k < ... < t_{N-k+1} = b.
  [[nodiscard]] std::span<const double> breakpoints() const noexcept;

  /// Index mu with t_mu <= x < t_{mu+1}, restricted to the nonempty
  /// intervals; x >= b maps to the last interval and x <= a to the first.
  [[nodiscard]] std::size_t span_index(double x) const noexcept;

  friend bool operator==(const KnotSequence& lhs, const KnotSequence& rhs) {
    return lhs.order_ == rhs.order_ && lhs.knots_ == rhs.knots_;
  }

 private:
  std::vector<double> knots_;
  int order_;
};

/// The k B-splines that can be nonzero at a point: B_{first}, ..., B_{first+k-1}.
struct LocalBasis {
  std::size_t first = 0;
  std::array<double, kMaxSplineOrder> values{};
};

/// Evaluates the nonzero B-splines at x by the triangular de Boor recurrence.
/// x must lie in [a,b].
[[nodiscard]] LocalBasis local_basis(const KnotSequence& knots, double x);

/// Rows 0..max_derivative hold the derivatives of the k local B-splines
/// at x; derivatives of order >= k are zero. Interior knots take the
/// right limit, x = b the left limit.
[[nodiscard]] Eigen::MatrixXd local_basis_derivatives(const KnotSequence& knots, double x,
                                                      int max_derivative, std::size_t* first);

/// Leading coefficient of the polynomial interpolating (abscissae, values).
/// Abscissae must be pairwise distinct.
[[nodiscard]] double divided_difference(std::span<const double> abscissae,
                                        std::span<const double> values);

/// B_{j,k}(x) for the sequence's order k.
[[nodiscard]] double bspline_eval(const KnotSequence& knots, std::size_t j, double x);

/// d^alpha/dx^alpha B_{j,k}(x), alpha >= 1.
[[nodiscard]] double bspline_derivative(const KnotSequence& knots, std::size_t j, double x,
                                        int alpha);

class SplineFunction {
 public:
  SplineFunction(KnotSequence knots, std::vector<double> coefficients);

  [[nodiscard]] const KnotSequence& knots() const noexcept { return knots_; }
  [[nodiscard]] std::span<const double> coefficients() const noexcept { return coefficients_; }

  double operator()(double x) const;

 private:
  KnotSequence knots_;
  std::vector<double> coefficients_;
};

/// Sum_j y_j B_j^{(alpha)}(x). Outside [a,b] the value is 0 for alpha = 0
/// and OutOfSupport is raised for alpha >= 1.
[[nodiscard]] double spline_eval(const SplineFunction& s, double x, int alpha = 0);

/// Sup-norm residual, on a uniform grid of grid_size points, of the discrete
/// least-squares approximation to g from the spline space of `knots`.
[[nodiscard]] double spline_distance(const std::function<double(double)>& g,
                                     const KnotSequence& knots, std::size_t grid_size);

}  // namespace logsplit
