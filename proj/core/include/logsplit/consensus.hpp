#pragma once

// Combination of subset logspline fits.
//
// The unnormalized product p*(x) = prod_m f_m(x) is sampled once at the
// uniform nodes x_i = a + i*dx, i = 0..pieces*l, and replaced on each piece
// [x_{il}, x_{(i+1)l}] by its degree-l Lagrange interpolant. The composite
// polynomial integrates exactly, which gives the normalizing constant.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "logsplit/bspline.hpp"
#include "logsplit/logspline.hpp"

namespace logsplit {

class ProductEstimator {
 public:
  /// Requires M >= 1 converged fits on one common support.
  explicit ProductEstimator(std::vector<LogsplineFit> fits);

  [[nodiscard]] const std::vector<LogsplineFit>& fits() const noexcept { return fits_; }
  [[nodiscard]] std::size_t size() const noexcept { return fits_.size(); }
  [[nodiscard]] Interval support() const noexcept { return support_; }
  /// Smallest spline order among the fits.
  [[nodiscard]] int spline_order() const noexcept { return order_; }

  /// sum_m log f_m(x); -infinity outside the support.
  [[nodiscard]] double log_eval(double x) const;

 private:
  std::vector<LogsplineFit> fits_;
  Interval support_;
  int order_ = 0;
};

/// prod_m f_m(x), accumulated in log space.
[[nodiscard]] double product_eval(const ProductEstimator& product, double x);

class InterpolationGrid {
 public:
  InterpolationGrid(Interval support, int degree, std::size_t pieces);

  [[nodiscard]] Interval support() const noexcept { return support_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] std::size_t pieces() const noexcept { return pieces_; }
  [[nodiscard]] std::size_t num_nodes() const noexcept {
    return pieces_ * static_cast<std::size_t>(degree_) + 1;
  }
  /// Node spacing (b-a)/(pieces*l).
  [[nodiscard]] double dx() const noexcept {
    return support_.length() / static_cast<double>(num_nodes() - 1);
  }
  [[nodiscard]] double node(std::size_t i) const;

  /// Owning piece of x: shared nodes go to the left piece, x <= a to piece 0.
  [[nodiscard]] std::size_t piece_of(double x) const noexcept;

 private:
  Interval support_;
  int degree_;
  std::size_t pieces_;
};

/// tau-th Lagrange basis polynomial of `piece`, evaluated at x.
[[nodiscard]] double lagrange_basis(const InterpolationGrid& grid, std::size_t piece, int tau,
                                    double x);

class CompositeInterpolant {
 public:
  [[nodiscard]] const InterpolationGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> node_values() const noexcept { return values_; }
  [[nodiscard]] double lambda_tilde() const noexcept { return lambda_tilde_; }
  /// Approximate integral of the negative part; nonzero only when the
  /// interpolant overshoots below zero.
  [[nodiscard]] double negative_lobe_mass() const noexcept { return negative_mass_; }

  /// Unnormalized interpolant; 0 outside [a,b].
  double operator()(double x) const;

 private:
  friend CompositeInterpolant build_interpolant(const ProductEstimator&, const InterpolationGrid&);
  friend CompositeInterpolant interpolate_function(const std::function<double(double)>&,
                                                   const InterpolationGrid&);

  CompositeInterpolant(InterpolationGrid grid, std::vector<double> values);

  InterpolationGrid grid_;
  std::vector<double> values_;
  double lambda_tilde_ = 0.0;
  double negative_mass_ = 0.0;
};

/// Samples the product at the grid nodes and integrates the interpolant.
/// Raises SupportMismatch when grid and product disagree on [a,b],
/// DegreeTooHigh when l > k-3, DegenerateProduct when the integral is not positive.
[[nodiscard]] CompositeInterpolant build_interpolant(const ProductEstimator& product,
                                                     const InterpolationGrid& grid);

/// Composite interpolant of an arbitrary function; no smoothness check on l.
[[nodiscard]] CompositeInterpolant interpolate_function(const std::function<double(double)>& f,
                                                        const InterpolationGrid& grid);

/// Exact integral of the piecewise polynomial (ceil((l+1)/2)-point
/// Gauss-Legendre per piece).
[[nodiscard]] double integrate_interpolant(const CompositeInterpolant& interpolant);

/// Interpolant divided by its integral.
[[nodiscard]] double normalized_eval(const CompositeInterpolant& interpolant, double x);

/// dx = c * N^{-beta (1/(l+1) + 1/(j+1))}.
[[nodiscard]] double choose_dx(double sample_norm, double beta, int degree, int j,
                               double constant = 1.0);

/// Grid whose spacing is choose_dx rounded down so that (b-a)/(dx*l) is an
/// integer. Raises GridTooCoarse when a single piece of that spacing would
/// not fit in the support.
[[nodiscard]] InterpolationGrid choose_grid(Interval support, double sample_norm, double beta,
                                            int degree, int j, double constant = 1.0);

}  // namespace logsplit
