#include "logsplit/logspline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "logsplit/diagnostics.hpp"
#include "logsplit/errors.hpp"
#include "logsplit/quadrature.hpp"

namespace logsplit {

SampleSet::SampleSet(std::vector<double> values, Interval support)
    : values_(std::move(values)), support_(support) {
  if (values_.empty()) throw Error(ErrorCode::EmptySubset, "sample set has no values");
  if (!(support_.lo < support_.hi)) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support [{}, {}] is degenerate", support_.lo, support_.hi));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!support_.contains(values_[i])) {
      throw Error(ErrorCode::OutOfSupport,
                  fmt::format("sample {} = {} lies outside [{}, {}]", i, values_[i], support_.lo,
                              support_.hi));
    }
  }
}

SampleSet SampleSet::clamped(std::vector<double> values, Interval support,
                             std::size_t* clamped_count) {
  std::size_t count = 0;
  for (double& v : values) {
    const double c = std::clamp(v, support.lo, support.hi);
    if (c != v) ++count;
    v = c;
  }
  if (clamped_count != nullptr) *clamped_count = count;
  return SampleSet(std::move(values), support);
}

Interval padded_range(std::span<const double> values, double pad_fraction) {
  if (values.empty()) throw Error(ErrorCode::EmptySubset, "no values to take a range of");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    throw Error(ErrorCode::InvalidSupport, "all values coincide; support cannot be inferred");
  }
  return {*lo - pad_fraction * range, *hi + pad_fraction * range};
}

LogsplineModel::LogsplineModel(KnotSequence knots) : knots_(std::move(knots)) {
  if (knots_.num_basis() < 2) {
    throw Error(ErrorCode::InvalidArgument, "logspline model needs at least two B-splines");
  }
  const GaussLegendre rule(2 * static_cast<std::size_t>(knots_.order()));
  const auto breaks = knots_.breakpoints();
  constexpr std::size_t cells = 4;
  const std::size_t count = cells * rule.size() * (breaks.size() - 1);
  nodes_.reserve(count);
  weights_.reserve(count);
  basis_.reserve(count);
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double h = (breaks[i] - breaks[i - 1]) / static_cast<double>(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      const double lo = breaks[i - 1] + h * static_cast<double>(c);
      const double hi = c + 1 == cells ? breaks[i] : lo + h;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double x = rule.node(q, lo, hi);
        nodes_.push_back(x);
        weights_.push_back(rule.weight(q, lo, hi));
        basis_.push_back(local_basis(knots_, x));
      }
    }
  }
}

double LogsplineModel::spline_value(std::span<const double> y, double x) const {
  const LocalBasis local = local_basis(knots_, x);
  double sum = 0.0;
  for (int r = 0; r < knots_.order(); ++r) {
    sum += y[local.first + static_cast<std::size_t>(r)] * local.values[r];
  }
  return sum;
}

Eigen::VectorXd LogsplineModel::sufficient_statistic(std::span<const double> samples) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  for (double theta : samples) {
    const LocalBasis local = local_basis(knots_, theta);
    for (int r = 0; r < knots_.order(); ++r) {
      s(static_cast<Eigen::Index>(local.first) + r) += local.values[r];
    }
  }
  return s;
}

Eigen::VectorXd LogsplineModel::basis_moments(const std::function<double(double)>& density) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  for (std::size_t q = 0; q < nodes_.size(); ++q) {
    const double w = weights_[q] * density(nodes_[q]);
    const LocalBasis& local = basis_[q];
    for (int r = 0; r < knots_.order(); ++r) {
      m(static_cast<Eigen::Index>(local.first) + r) += w * local.values[r];
    }
  }
  return m;
}

CoefficientVector::CoefficientVector(Eigen::VectorXd y) : y_(std::move(y)) {
  if (!y_.allFinite()) throw Error(ErrorCode::InvalidArgument, "coefficients must be finite");
  const double sum = y_.sum();
  const double scale = 1.0 + y_.cwiseAbs().sum();
  if (std::abs(sum) > 1e-9 * scale) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("coefficients sum to {}, not zero", sum));
  }
}

CoefficientVector CoefficientVector::centered(Eigen::VectorXd y) {
  y.array() -= y.mean();
  return CoefficientVector(std::move(y));
}

CoefficientVector CoefficientVector::zero(std::size_t dimension) {
  return CoefficientVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension)));
}

namespace {

void require_dimension(const LogsplineModel& model, std::span<const double> y) {
  if (y.size() != model.dimension()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("expected {} coefficients, got {}", model.dimension(), y.size()));
  }
}

// Quantities of f(.; y) needed by Newton: c(y), E[B] and optionally Cov(B).
struct Moments {
  double log_normalizer = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

Moments moments(const LogsplineModel& model, std::span<const double> y, bool with_covariance) {
  const auto nodes = model.quadrature_nodes();
  const auto weights = model.quadrature_weights();
  const int k = model.knots().order();
  const auto dim = static_cast<Eigen::Index>(model.dimension());

  std::vector<double> exponent(nodes.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const LocalBasis& local = model.quadrature_basis(q);
    double s = 0.0;
    for (int r = 0; r < k; ++r) s += y[local.first + static_cast<std::size_t>(r)] * local.values[r];
    exponent[q] = s;
    peak = std::max(peak, s);
  }

  Moments out;
  out.mean = Eigen::VectorXd::Zero(dim);
  if (with_covariance) out.covariance = Eigen::MatrixXd::Zero(dim, dim);
  double total = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double mass = weights[q] * std::exp(exponent[q] - peak);
    total += mass;
    const LocalBasis& local = model.quadrature_basis(q);
    const auto first = static_cast<Eigen::Index>(local.first);
    for (int r = 0; r < k; ++r) {
      const double br = mass * local.values[r];
      out.mean(first + r) += br;
      if (with_covariance) {
        for (int s = 0; s < k; ++s) out.covariance(first + r, first + s) += br * local.values[s];
      }
    }
  }
  out.log_normalizer = peak + std::log(total);
  out.mean /= total;
  if (with_covariance) {
    out.covariance /= total;
    out.covariance.noalias() -= out.mean * out.mean.transpose();
  }
  return out;
}

// Y0 is parameterized by z in R^L via y = (z_0, ..., z_{L-1}, -sum z).
Eigen::VectorXd expand(const Eigen::VectorXd& z) {
  Eigen::VectorXd y(z.size() + 1);
  y.head(z.size()) = z;
  y(z.size()) = -z.sum();
  return y;
}

// P^T v for P = d y / d z.
Eigen::VectorXd reduce_vector(const Eigen::VectorXd& v) {
  const Eigen::Index L = v.size() - 1;
  return v.head(L).array() - v(L);
}

// P^T A P.
Eigen::MatrixXd reduce_matrix(const Eigen::MatrixXd& a) {
  const Eigen::Index L = a.rows() - 1;
  Eigen::MatrixXd r = a.topLeftCorner(L, L);
  r.colwise() -= a.col(L).head(L);
  r.rowwise() -= a.row(L).head(L);
  r.array() += a(L, L);
  return r;
}

struct NewtonResult {
  Eigen::VectorXd y;
  double log_normalizer = 0.0;
  double gradient_norm = 0.0;  // per unit weight
  int iterations = 0;
};

// Maximizes target . y - c(y) over Y0, the log-likelihood per sample when
// target is the mean sufficient statistic. `target` sums to one.
NewtonResult maximize(const LogsplineModel& model, const Eigen::VectorXd& target,
                      const FitOptions& options) {
  const Eigen::Index L = static_cast<Eigen::Index>(model.dimension()) - 1;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd y = expand(z);

  auto objective = [&](const Eigen::VectorXd& yy, double c) { return target.dot(yy) - c; };

  Moments m = moments(model, {y.data(), static_cast<std::size_t>(y.size())}, true);
  double value = objective(y, m.log_normalizer);
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd gradient = target - m.mean;  // per unit weight, already in Y0
    const double gnorm = gradient.cwiseAbs().maxCoeff();
    if (gnorm <= options.tolerance) {
      return {y, m.log_normalizer, gnorm, iter};
    }
    if (iter >= options.max_iterations) {
      throw Error(ErrorCode::NonConvergence,
                  fmt::format("no convergence in {} Newton iterations (gradient {:.3g} per "
                              "sample, tolerance {:.3g})",
                              options.max_iterations, gnorm, options.tolerance));
    }

    const Eigen::VectorXd g = reduce_vector(gradient);
    Eigen::MatrixXd h = reduce_matrix(m.covariance);  // negated Hessian per unit weight
    Eigen::VectorXd direction;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    const double diag_scale = std::max(h.diagonal().maxCoeff(), 1e-300);
    double ridge = 0.0;
    while (true) {
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          (ldlt.vectorD().array() > 1e-14 * diag_scale).all()) {
        direction = ldlt.solve(g);
        if (direction.allFinite()) break;
      }
      ridge = ridge == 0.0 ? 1e-10 * diag_scale : ridge * 10.0;
      if (ridge > 1e10 * diag_scale) {
        throw Error(ErrorCode::NoMaximizer, "Newton system degenerate; likelihood is flat");
      }
      h.diagonal().array() += ridge;
      ldlt.compute(h);
    }

    // Armijo backtracking on the concave objective.
    const double slope = g.dot(direction);
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd z_next;
    Eigen::VectorXd y_next;
    double c_next = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
      z_next = z + step * direction;
      y_next = expand(z_next);
      c_next = log_normalizer(model, {y_next.data(), static_cast<std::size_t>(y_next.size())});
      const double next_value = objective(y_next, c_next);
      if (next_value >= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // The ascent direction yields no measurable progress. Near the optimum
      // this is roundoff; far from it the likelihood has no interior maximum.
      if (gnorm <= std::sqrt(options.tolerance)) {
        throw Error(ErrorCode::NonConvergence,
                    fmt::format("line search stalled at gradient {:.3g} per sample", gnorm));
      }
      throw Error(ErrorCode::NoMaximizer,
                  fmt::format("line search stalled at gradient {:.3g} per sample", gnorm));
    }
    z = std::move(z_next);
    y = std::move(y_next);
    if (y.cwiseAbs().maxCoeff() > options.divergence_cap) {
      throw Error(ErrorCode::NoMaximizer,
                  fmt::format("coefficients exceeded {} after {} iterations; the likelihood "
                              "increases without bound",
                              options.divergence_cap, iter + 1));
    }
    m = moments(model, {y.data(), static_cast<std::size_t>(y.size())}, true);
    value = objective(y, m.log_normalizer);
  }
}

}  // namespace

double log_normalizer(const LogsplineModel& model, std::span<const double> y) {
  require_dimension(model, y);
  const auto nodes = model.quadrature_nodes();
  const auto weights = model.quadrature_weights();
  const int k = model.knots().order();
  std::vector<double> exponent(nodes.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const LocalBasis& local = model.quadrature_basis(q);
    double s = 0.0;
    for (int r = 0; r < k; ++r) s += y[local.first + static_cast<std::size_t>(r)] * local.values[r];
    exponent[q] = s;
    peak = std::max(peak, s);
  }
  double total = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) total += weights[q] * std::exp(exponent[q] - peak);
  return peak + std::log(total);
}

double log_likelihood(const LogsplineModel& model, std::span<const double> y,
                      const SampleSet& samples) {
  require_dimension(model, y);
  const Eigen::VectorXd s = model.sufficient_statistic(samples.values());
  const Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
  return s.dot(yy) - static_cast<double>(samples.size()) * log_normalizer(model, y);
}

LikelihoodDerivatives log_likelihood_derivatives(const LogsplineModel& model,
                                                 std::span<const double> y,
                                                 const SampleSet& samples) {
  require_dimension(model, y);
  const Eigen::VectorXd s = model.sufficient_statistic(samples.values());
  const Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
  const double n = static_cast<double>(samples.size());
  const Moments m = moments(model, y, true);
  LikelihoodDerivatives out;
  out.value = s.dot(yy) - n * m.log_normalizer;
  out.gradient = s - n * m.mean;
  out.hessian = -n * m.covariance;
  return out;
}

LogsplineFit fit(const LogsplineModel& model, const SampleSet& samples, const FitOptions& options) {
  if (samples.support() != model.support()) {
    throw Error(ErrorCode::SupportMismatch,
                fmt::format("samples declared on [{}, {}], model on [{}, {}]",
                            samples.support().lo, samples.support().hi, model.support().lo,
                            model.support().hi));
  }
  const double n = static_cast<double>(samples.size());
  const Eigen::VectorXd target = model.sufficient_statistic(samples.values()) / n;
  if (options.screen_empty_basis) {
    Eigen::Index empty = 0;
    if (target.minCoeff(&empty) <= 0.0) {
      throw Error(ErrorCode::NoMaximizer,
                  fmt::format("no sample falls inside the support of B-spline {}; the "
                              "likelihood increases without bound",
                              empty));
    }
  }
  const NewtonResult r = maximize(model, target, options);
  return LogsplineFit{model,
                      CoefficientVector::centered(r.y),
                      r.log_normalizer,
                      samples.size(),
                      true,
                      r.iterations,
                      r.gradient_norm * n};
}

CoefficientVector fit_expected(const LogsplineModel& model,
                               const std::function<double(double)>& density,
                               const FitOptions& options) {
  Eigen::VectorXd target = model.basis_moments(density);
  const double mass = target.sum();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error(ErrorCode::InvalidArgument, "density has no positive mass on the support");
  }
  target /= mass;
  return CoefficientVector::centered(maximize(model, target, options).y);
}

double log_density_eval(const LogsplineFit& fit, double x) {
  if (!fit.model.support().contains(x)) return -std::numeric_limits<double>::infinity();
  return fit.model.spline_value(fit.y_hat.span(), x) - fit.log_normalizer;
}

double density_eval(const LogsplineFit& fit, double x) {
  if (!fit.model.support().contains(x)) return 0.0;
  return std::exp(log_density_eval(fit, x));
}

KnotSequence choose_knots(std::size_t n, Interval support, double beta, int j, int k) {
  if (!(support.lo < support.hi) || !std::isfinite(support.lo) || !std::isfinite(support.hi)) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support [{}, {}] is degenerate", support.lo, support.hi));
  }
  if (k < 4) throw Error(ErrorCode::InvalidArgument, fmt::format("order k = {} below 4", k));
  if (j < 0 || j >= k) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("j = {} outside [0, {}]", j, k - 1));
  }
  if (!(beta > 0.0) || beta > 0.5) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("beta = {} outside (0, 1/2]", beta));
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  if (beta == 0.5) {
    static std::once_flag once;
    std::call_once(once, [] {
      warn("beta = 1/2 sits on the boundary of the knot-growth condition (0 < beta < 1/2)");
    });
  }
  const double scale = std::pow(static_cast<double>(n), beta / (j + 1.0));
  // Guard against pow landing a hair above an exact integer.
  const double raw = support.length() * scale;
  const double intervals = std::max(1.0, std::ceil(raw * (1.0 - 1e-12)));
  return KnotSequence::uniform(support, static_cast<std::size_t>(intervals), k);
}

}  // namespace logsplit
