#pragma once

// Logspline density estimation.
//
// The model family is f(x; y) = exp(B(x; y) - c(y)) on [a,b], where
// B(x; y) = sum_j y_j B_j(x) is a spline over a clamped knot sequence and
// c(y) = log int_a^b exp(B(x; y)) dx. Adding a constant to every y_j leaves
// f unchanged, so coefficients are kept in Y0 = { y : sum_j y_j = 0 }.
//
// Fitting maximizes the concave log-likelihood
//   l_n(y) = sum_i B(theta_i; y) - n c(y)
// over Y0. The data enter only through the sufficient statistic
// sum_i B_j(theta_i), so each Newton step costs one pass of quadrature.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "logsplit/bspline.hpp"

namespace logsplit {

/// i.i.d. draws theta_1..theta_n with a declared support [a,b].
class SampleSet {
 public:
  /// Raises EmptySubset for no values and OutOfSupport for values outside [a,b].
  SampleSet(std::vector<double> values, Interval support);

  /// Values outside the support are clamped onto its nearest endpoint.
  static SampleSet clamped(std::vector<double> values, Interval support,
                           std::size_t* clamped_count = nullptr);

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] Interval support() const noexcept { return support_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  Interval support_;
};

/// [min - pad*R, max + pad*R] with R = max - min over all values.
/// Raises EmptySubset for no values and InvalidSupport when R = 0.
[[nodiscard]] Interval padded_range(std::span<const double> values, double pad_fraction = 0.01);

class LogsplineModel {
 public:
  /// Raises InvalidArgument when the spline space has fewer than two B-splines.
  explicit LogsplineModel(KnotSequence knots);

  [[nodiscard]] const KnotSequence& knots() const noexcept { return knots_; }
  [[nodiscard]] Interval support() const noexcept { return knots_.support(); }
  /// L+1, the length of coefficient vectors.
  [[nodiscard]] std::size_t dimension() const noexcept { return knots_.num_basis(); }

  /// B(x; y); x must lie in [a,b].
  [[nodiscard]] double spline_value(std::span<const double> y, double x) const;

  /// sum_i B_j(theta_i) for j = 0..L.
  [[nodiscard]] Eigen::VectorXd sufficient_statistic(std::span<const double> samples) const;

  /// int B_j(x) p(x) dx over [a,b], by the model quadrature.
  [[nodiscard]] Eigen::VectorXd basis_moments(const std::function<double(double)>& density) const;

  // Quadrature nodes: 2k Gauss-Legendre points on each of 4 equal cells per knot interval.
  [[nodiscard]] std::span<const double> quadrature_nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> quadrature_weights() const noexcept { return weights_; }
  [[nodiscard]] const LocalBasis& quadrature_basis(std::size_t q) const { return basis_[q]; }

 private:
  KnotSequence knots_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<LocalBasis> basis_;
};

/// Coefficient vector in Y0 (entries sum to zero).
class CoefficientVector {
 public:
  /// Raises InvalidArgument unless the entries are finite and sum to zero
  /// up to rounding.
  explicit CoefficientVector(Eigen::VectorXd y);

  /// Projects onto Y0 by subtracting the mean; the density is unchanged.
  static CoefficientVector centered(Eigen::VectorXd y);
  static CoefficientVector zero(std::size_t dimension);

  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return y_; }
  [[nodiscard]] std::span<const double> span() const noexcept {
    return {y_.data(), static_cast<std::size_t>(y_.size())};
  }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(y_.size()); }
  double operator[](std::size_t i) const { return y_(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::VectorXd y_;
};

struct FitOptions {
  /// Convergence when the max-norm of the log-likelihood gradient is <= tolerance * n.
  double tolerance = 1e-8;
  int max_iterations = 200;
  /// Iterates with max|y_j| above this cap are taken as diverging.
  double divergence_cap = 1e3;
  /// Reject up front any sample that leaves some B-spline without mass; the
  /// likelihood is then unbounded along that coefficient.
  bool screen_empty_basis = true;
};

struct LogsplineFit {
  LogsplineModel model;
  CoefficientVector y_hat;
  double log_normalizer = 0.0;
  std::size_t sample_count = 0;
  bool converged = false;
  int iterations = 0;
  /// max_j |d l_n / d y_j| at y_hat.
  double gradient_norm = 0.0;
};

/// Value, gradient and Hessian of the log-likelihood at y.
struct LikelihoodDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// c(y) = log int exp(B(x; y)) dx, evaluated with the exponent shifted by its
/// maximum so finite y never overflows.
[[nodiscard]] double log_normalizer(const LogsplineModel& model, std::span<const double> y);

[[nodiscard]] double log_likelihood(const LogsplineModel& model, std::span<const double> y,
                                    const SampleSet& samples);

/// Gradient sum_i B_j(theta_i) - n E_f[B_j], Hessian -n Cov_f(B).
[[nodiscard]] LikelihoodDerivatives log_likelihood_derivatives(const LogsplineModel& model,
                                                               std::span<const double> y,
                                                               const SampleSet& samples);

/// Maximum-likelihood fit over Y0 by damped Newton in reduced coordinates.
/// Raises NoMaximizer when the likelihood has no maximizer for the sample
/// and NonConvergence when the iteration budget runs out.
[[nodiscard]] LogsplineFit fit(const LogsplineModel& model, const SampleSet& samples,
                               const FitOptions& options = {});

/// Maximizer over Y0 of -c(y) + int B(x; y) p(x) dx, the expected
/// log-likelihood per sample for a known density p.
[[nodiscard]] CoefficientVector fit_expected(const LogsplineModel& model,
                                             const std::function<double(double)>& density,
                                             const FitOptions& options = {});

/// f(x; y_hat); 0 outside [a,b].
[[nodiscard]] double density_eval(const LogsplineFit& fit, double x);

/// log f(x; y_hat); -infinity outside [a,b].
[[nodiscard]] double log_density_eval(const LogsplineFit& fit, double x);

/// Uniform clamped knots whose spacing h satisfies h^{j+1} ~ n^{-beta}:
/// ceil((b-a) n^{beta/(j+1)}) equal intervals. Requires k >= 4, 0 <= j < k
/// and 0 < beta <= 1/2; beta = 1/2 emits a warning.
[[nodiscard]] KnotSequence choose_knots(std::size_t n, Interval support, double beta, int j,
                                        int k);

}  // namespace logsplit
