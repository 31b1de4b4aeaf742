#include "logsplit/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "logsplit/errors.hpp"
#include "logsplit/quadrature.hpp"

namespace logsplit {

namespace {

bool same_support(Interval lhs, Interval rhs) {
  const double tol = 1e-12 * std::max({1.0, std::abs(lhs.lo), std::abs(lhs.hi)});
  return std::abs(lhs.lo - rhs.lo) <= tol && std::abs(lhs.hi - rhs.hi) <= tol;
}

}  // namespace

ProductEstimator::ProductEstimator(std::vector<LogsplineFit> fits) : fits_(std::move(fits)) {
  if (fits_.empty()) throw Error(ErrorCode::InvalidArgument, "product needs at least one fit");
  support_ = fits_.front().model.support();
  order_ = fits_.front().model.knots().order();
  for (std::size_t m = 0; m < fits_.size(); ++m) {
    const LogsplineFit& f = fits_[m];
    if (!f.converged) {
      throw Error(ErrorCode::FitNotConverged, fmt::format("subset fit {} did not converge", m));
    }
    if (!same_support(f.model.support(), support_)) {
      throw Error(ErrorCode::SupportMismatch,
                  fmt::format("fit {} lives on [{}, {}], fit 0 on [{}, {}]", m,
                              f.model.support().lo, f.model.support().hi, support_.lo,
                              support_.hi));
    }
    order_ = std::min(order_, f.model.knots().order());
  }
}

double ProductEstimator::log_eval(double x) const {
  if (!support_.contains(x)) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const LogsplineFit& f : fits_) {
    // Clamp for fits whose support differs from fit 0 by rounding.
    const Interval s = f.model.support();
    sum += log_density_eval(f, std::clamp(x, s.lo, s.hi));
  }
  return sum;
}

double product_eval(const ProductEstimator& product, double x) {
  return std::exp(product.log_eval(x));
}

InterpolationGrid::InterpolationGrid(Interval support, int degree, std::size_t pieces)
    : support_(support), degree_(degree), pieces_(pieces) {
  if (!(support_.lo < support_.hi) || !std::isfinite(support_.lo) ||
      !std::isfinite(support_.hi)) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support [{}, {}] is degenerate", support_.lo, support_.hi));
  }
  if (degree_ < 1) throw Error(ErrorCode::InvalidArgument, "interpolation degree must be >= 1");
  if (pieces_ < 1) throw Error(ErrorCode::GridTooCoarse, "grid needs at least one piece");
}

double InterpolationGrid::node(std::size_t i) const {
  const std::size_t last = num_nodes() - 1;
  if (i > last) {
    throw Error(ErrorCode::IndexError, fmt::format("node {} outside [0, {}]", i, last));
  }
  if (i == last) return support_.hi;
  return support_.lo + support_.length() * (static_cast<double>(i) / static_cast<double>(last));
}

std::size_t InterpolationGrid::piece_of(double x) const noexcept {
  const double u = (x - support_.lo) / support_.length() * static_cast<double>(pieces_);
  if (!(u > 0.0)) return 0;
  const double piece = std::ceil(u) - 1.0;
  return std::min(static_cast<std::size_t>(std::max(piece, 0.0)), pieces_ - 1);
}

double lagrange_basis(const InterpolationGrid& grid, std::size_t piece, int tau, double x) {
  const int l = grid.degree();
  if (piece >= grid.pieces() || tau < 0 || tau > l) {
    throw Error(ErrorCode::IndexError,
                fmt::format("Lagrange basis (piece {}, tau {}) outside {} pieces of degree {}",
                            piece, tau, grid.pieces(), l));
  }
  const std::size_t base = piece * static_cast<std::size_t>(l);
  const double x_tau = grid.node(base + static_cast<std::size_t>(tau));
  double value = 1.0;
  for (int j = 0; j <= l; ++j) {
    if (j == tau) continue;
    const double x_j = grid.node(base + static_cast<std::size_t>(j));
    value *= (x - x_j) / (x_tau - x_j);
  }
  return value;
}

CompositeInterpolant::CompositeInterpolant(InterpolationGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  const int l = grid_.degree();
  lambda_tilde_ = integrate_interpolant(*this);

  // Negative part is not polynomial; a 16-point rule per piece estimates it.
  static const GaussLegendre dense(16);
  bool any_negative = false;
  for (double v : values_) any_negative |= v < 0.0;
  if (l > 1 || any_negative) {
    double mass = 0.0;
    for (std::size_t i = 0; i < grid_.pieces(); ++i) {
      const double lo = grid_.node(i * static_cast<std::size_t>(l));
      const double hi = grid_.node((i + 1) * static_cast<std::size_t>(l));
      mass += dense.integrate([&](double x) { return std::max(-(*this)(x), 0.0); }, lo, hi);
    }
    negative_mass_ = mass;
  }
}

double CompositeInterpolant::operator()(double x) const {
  if (!grid_.support().contains(x)) return 0.0;
  const int l = grid_.degree();
  const std::size_t piece = grid_.piece_of(x);
  const std::size_t base = piece * static_cast<std::size_t>(l);
  double sum = 0.0;
  for (int tau = 0; tau <= l; ++tau) {
    sum += values_[base + static_cast<std::size_t>(tau)] * lagrange_basis(grid_, piece, tau, x);
  }
  return sum;
}

CompositeInterpolant build_interpolant(const ProductEstimator& product,
                                       const InterpolationGrid& grid) {
  if (!same_support(product.support(), grid.support())) {
    throw Error(ErrorCode::SupportMismatch,
                fmt::format("grid on [{}, {}], product on [{}, {}]", grid.support().lo,
                            grid.support().hi, product.support().lo, product.support().hi));
  }
  const int k = product.spline_order();
  if (grid.degree() > k - 3) {
    throw Error(ErrorCode::DegreeTooHigh,
                fmt::format("interpolation degree {} exceeds k - 3 = {} for splines of order {}",
                            grid.degree(), k - 3, k));
  }
  std::vector<double> values(grid.num_nodes());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = product_eval(product, grid.node(i));
  return CompositeInterpolant(grid, std::move(values));
}

CompositeInterpolant interpolate_function(const std::function<double(double)>& f,
                                          const InterpolationGrid& grid) {
  std::vector<double> values(grid.num_nodes());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = f(grid.node(i));
  return CompositeInterpolant(grid, std::move(values));
}

double integrate_interpolant(const CompositeInterpolant& interpolant) {
  const InterpolationGrid& grid = interpolant.grid();
  const int l = grid.degree();
  const GaussLegendre rule(static_cast<std::size_t>((l + 2) / 2));
  double total = 0.0;
  for (std::size_t i = 0; i < grid.pieces(); ++i) {
    const std::size_t base = i * static_cast<std::size_t>(l);
    const double lo = grid.node(base);
    const double hi = grid.node(base + static_cast<std::size_t>(l));
    total += rule.integrate(
        [&](double x) {
          double sum = 0.0;
          for (int tau = 0; tau <= l; ++tau) {
            sum += interpolant.node_values()[base + static_cast<std::size_t>(tau)] *
                   lagrange_basis(grid, i, tau, x);
          }
          return sum;
        },
        lo, hi);
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::DegenerateProduct,
                fmt::format("interpolant integrates to {}; the product vanished numerically",
                            total));
  }
  return total;
}

double normalized_eval(const CompositeInterpolant& interpolant, double x) {
  return interpolant(x) / interpolant.lambda_tilde();
}

double choose_dx(double sample_norm, double beta, int degree, int j, double constant) {
  if (!(sample_norm > 0.0) || !(constant > 0.0) || degree < 1 || j < 0) {
    throw Error(ErrorCode::InvalidArgument,
                "choose_dx needs positive sample norm and constant, l >= 1, j >= 0");
  }
  if (!(beta > 0.0) || beta > 0.5) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("beta = {} outside (0, 1/2]", beta));
  }
  const double exponent = -beta * (1.0 / (degree + 1.0) + 1.0 / (j + 1.0));
  return constant * std::pow(sample_norm, exponent);
}

InterpolationGrid choose_grid(Interval support, double sample_norm, double beta, int degree,
                              int j, double constant) {
  const double dx = choose_dx(sample_norm, beta, degree, j, constant);
  const double ratio = support.length() / (dx * degree);
  if (!(ratio >= 1.0)) {
    throw Error(ErrorCode::GridTooCoarse,
                fmt::format("spacing {} with degree {} leaves {} pieces on [{}, {}]", dx, degree,
                            ratio, support.lo, support.hi));
  }
  const double pieces = std::ceil(ratio * (1.0 - 1e-12));
  return InterpolationGrid(support, degree, static_cast<std::size_t>(pieces));
}

}  // namespace logsplit
