#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "helpers.hpp"
#include "logsplit/diagnostics.hpp"
#include "logsplit/logspline.hpp"
#include "oracles.hpp"

using namespace logsplit;
using testing_support::code_of;

namespace {

std::vector<double> uniform_draws(std::size_t n, double a, double b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(a, b);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Unnormalized exp(B(x; y)) straight from the basis functions.
double family_kernel(const KnotSequence& t, const std::vector<double>& y, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < t.num_basis(); ++j) s += y[j] * bspline_eval(t, j, x);
  return std::exp(s);
}

}  // namespace

TEST_SUITE("logspline") {

TEST_CASE("sample sets") {
  CHECK(code_of([] { SampleSet({}, {0.0, 1.0}); }) == ErrorCode::EmptySubset);
  CHECK(code_of([] { SampleSet({0.5, 1.5}, {0.0, 1.0}); }) == ErrorCode::OutOfSupport);
  std::size_t moved = 0;
  const SampleSet s = SampleSet::clamped({-0.5, 0.5, 2.0}, {0.0, 1.0}, &moved);
  CHECK(moved == 2);
  CHECK(s.values()[0] == 0.0);
  CHECK(s.values()[2] == 1.0);
  const std::vector<double> v{1.0, 3.0, 2.0};
  const Interval r = padded_range(v, 0.01);
  CHECK(r.lo == doctest::Approx(0.98));
  CHECK(r.hi == doctest::Approx(3.02));
}

TEST_CASE("coefficient vectors live in Y0") {
  CHECK(code_of([] { CoefficientVector(Eigen::Vector3d(1.0, 0.0, 0.0)); }) ==
        ErrorCode::InvalidArgument);
  const CoefficientVector c = CoefficientVector::centered(Eigen::Vector3d(1.0, 2.0, 6.0));
  CHECK(std::abs(c.values().sum()) <= 1e-14);
  CHECK(c[2] == doctest::Approx(3.0));
}

TEST_CASE("log normalizer closed forms") {
  const LogsplineModel on02(KnotSequence::uniform({0.0, 2.0}, 4, 4));
  const LogsplineModel on01(KnotSequence::uniform({0.0, 1.0}, 4, 4));
  const std::vector<double> zero(on02.dimension(), 0.0);
  CHECK(log_normalizer(on02, zero) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(log_normalizer(on01, zero)) <= 1e-14);
}

TEST_CASE("log normalizer matches a dense trapezoid rule") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const KnotSequence t = KnotSequence::uniform({-1.0, 2.0}, 6, 4);
  const LogsplineModel model(t);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> y(model.dimension());
    for (double& v : y) v = g(rng);
    const double exact = oracle::trapezoid([&](double x) { return family_kernel(t, y, x); }, -1.0,
                                           2.0, 1000001);
    CHECK(std::exp(log_normalizer(model, y)) == doctest::Approx(exact).epsilon(1e-7));
  }
}

TEST_CASE("log normalizer stays finite for large coefficients") {
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 3, 4));
  std::vector<double> y(model.dimension(), 0.0);
  y[2] = 900.0;
  y[4] = -900.0;
  CHECK(std::isfinite(log_normalizer(model, y)));
}

TEST_CASE("log-likelihood closed forms") {
  const LogsplineModel on01(KnotSequence::uniform({0.0, 1.0}, 3, 4));
  const LogsplineModel on02(KnotSequence::uniform({0.0, 2.0}, 3, 4));
  const std::vector<double> zero(on01.dimension(), 0.0);
  const SampleSet s01(uniform_draws(10, 0.0, 1.0, 1), {0.0, 1.0});
  const SampleSet s02(uniform_draws(5, 0.0, 2.0, 2), {0.0, 2.0});
  CHECK(std::abs(log_likelihood(on01, zero, s01)) <= 1e-12);
  CHECK(log_likelihood(on02, zero, s02) == doctest::Approx(-5.0 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("gradient matches finite differences and the Hessian is negative semidefinite") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 5, 4));
  const SampleSet samples(uniform_draws(200, 0.0, 1.0, 3), {0.0, 1.0});
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> y(model.dimension());
    for (double& v : y) v = g(rng);
    const LikelihoodDerivatives d = log_likelihood_derivatives(model, y, samples);
    for (std::size_t j = 0; j < y.size(); ++j) {
      auto along = [&](double s) {
        std::vector<double> yy = y;
        yy[j] = s;
        return log_likelihood(model, yy, samples);
      };
      const double fd = oracle::derivative(along, y[j], 1e-3);
      CHECK(d.gradient(static_cast<Eigen::Index>(j)) ==
            doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    // Restricted to Y0 the Hessian is negative definite.
    const Eigen::Index L = d.hessian.rows() - 1;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(L + 1, L);
    p.topRows(L).setIdentity();
    p.row(L).setConstant(-1.0);
    const Eigen::MatrixXd reduced = -(p.transpose() * d.hessian * p);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(reduced).info() == Eigen::Success);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d.hessian).eigenvalues();
    CHECK(ev.maxCoeff() <= 1e-9 * std::max(1.0, -ev.minCoeff()));
  }
}

TEST_CASE("uniform samples fit to zero coefficients") {
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 3, 4));
  const SampleSet samples(uniform_draws(100000, 0.0, 1.0, 12), {0.0, 1.0});
  const LogsplineFit f = fit(model, samples);
  CHECK(f.converged);
  CHECK(f.y_hat.values().cwiseAbs().maxCoeff() <= 0.05);
  CHECK(std::abs(f.y_hat.values().sum()) <= 1e-12);
  CHECK(f.sample_count == 100000);
}

TEST_CASE("fit recovers a member of the family") {
  const KnotSequence t = KnotSequence::uniform({0.0, 1.0}, 3, 4);
  const std::vector<double> y_star{-1.0, 0.5, 1.2, 0.3, -0.4, -0.6};
  REQUIRE(y_star.size() == t.num_basis());
  double ceiling = 0.0;
  for (double x : oracle::linspace(0.0, 1.0, 2001)) ceiling = std::max(ceiling, family_kernel(t, y_star, x));
  const LogsplineModel model(t);
  std::mt19937_64 rng(77);
  const std::vector<double> draws = oracle::rejection_sample(
      [&](double x) { return family_kernel(t, y_star, x); }, 0.0, 1.0, 1.01 * ceiling, 100000, rng);
  const LogsplineFit f = fit(model, SampleSet(draws, {0.0, 1.0}));
  for (std::size_t j = 0; j < y_star.size(); ++j) CHECK(std::abs(f.y_hat[j] - y_star[j]) <= 0.05);
}

TEST_CASE("fitted densities integrate to one and ignore coefficient shifts") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.5, 0.2);
  std::vector<double> v(4000);
  for (double& x : v) x = std::clamp(g(rng), 0.0, 1.0);
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 6, 4));
  const LogsplineFit f = fit(model, SampleSet(v, {0.0, 1.0}));
  const double mass = oracle::trapezoid([&](double x) { return density_eval(f, x); }, 0.0, 1.0, 400001);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

  std::vector<double> shifted(f.y_hat.span().begin(), f.y_hat.span().end());
  for (double& y : shifted) y += 3.7;
  const double c_shifted = log_normalizer(model, shifted);
  for (double x : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    const double direct = std::exp(model.spline_value(shifted, x) - c_shifted);
    CHECK(std::abs(direct - density_eval(f, x)) <= 1e-12 * std::max(1.0, direct));
  }
  CHECK(density_eval(f, -0.1) == 0.0);
  CHECK(density_eval(f, 1.1) == 0.0);
}

TEST_CASE("flat density value") {
  const LogsplineModel model(KnotSequence::uniform({0.0, 2.0}, 3, 4));
  const LogsplineFit f{model, CoefficientVector::zero(model.dimension()), std::log(2.0), 0, true, 0, 0.0};
  CHECK(density_eval(f, 1.0) == doctest::Approx(0.5));
  CHECK(density_eval(f, 3.0) == 0.0);
}

TEST_CASE("samples at one point have no maximizer") {
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 3, 4));
  const SampleSet point(std::vector<double>(50, 0.0), {0.0, 1.0});
  CHECK(code_of([&] { (void)fit(model, point); }) == ErrorCode::NoMaximizer);
  FitOptions unscreened;
  unscreened.screen_empty_basis = false;
  CHECK(code_of([&] { (void)fit(model, point, unscreened); }) == ErrorCode::NoMaximizer);
}

TEST_CASE("iteration budget and support checks") {
  const LogsplineModel model(KnotSequence::uniform({0.0, 1.0}, 3, 4));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.5, 0.2);
  std::vector<double> v(2000);
  for (double& x : v) x = std::clamp(g(rng), 0.0, 1.0);
  FitOptions tight;
  tight.max_iterations = 1;
  CHECK(code_of([&] { (void)fit(model, SampleSet(v, {0.0, 1.0}), tight); }) ==
        ErrorCode::NonConvergence);
  CHECK(code_of([&] { (void)fit(model, SampleSet(v, {0.0, 2.0})); }) == ErrorCode::SupportMismatch);
}

TEST_CASE("expected fit") {
  const KnotSequence t = KnotSequence::uniform({0.0, 1.0}, 4, 4);
  const LogsplineModel model(t);
  const CoefficientVector flat = fit_expected(model, [](double) { return 1.0; });
  CHECK(flat.values().cwiseAbs().maxCoeff() <= 1e-10);

  std::vector<double> y_star{0.4, -0.2, 0.9, -0.5, 0.1, -0.3, -0.4};
  REQUIRE(y_star.size() == t.num_basis());
  const double c = std::log(oracle::trapezoid([&](double x) { return family_kernel(t, y_star, x); },
                                              0.0, 1.0, 200001));
  const CoefficientVector member =
      fit_expected(model, [&](double x) { return family_kernel(t, y_star, x) * std::exp(-c); });
  for (std::size_t j = 0; j < y_star.size(); ++j) CHECK(std::abs(member[j] - y_star[j]) <= 1e-6);
}

TEST_CASE("expected fit approaches a non-spline log density as knots double") {
  // A normal's log density is quadratic and already in the spline space.
  auto log_p = [](double x) { return -2.0 * std::log1p((x - 0.4) * (x - 0.4) / 0.02); };
  std::vector<double> errors;
  for (std::size_t intervals : {2, 4, 8, 16}) {
    const KnotSequence t = KnotSequence::uniform({0.0, 1.0}, intervals, 4);
    const LogsplineModel model(t);
    const CoefficientVector y = fit_expected(model, [&](double x) { return std::exp(log_p(x)); });
    const double c = log_normalizer(model, y.span());
    const double z = std::log(oracle::trapezoid([&](double x) { return std::exp(log_p(x)); }, 0.0, 1.0, 100001));
    double worst = 0.0;
    for (double x : oracle::linspace(0.0, 1.0, 501)) {
      worst = std::max(worst, std::abs((log_p(x) - z) - (model.spline_value(y.span(), x) - c)));
    }
    errors.push_back(worst);
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] < errors[i - 1]);
}

TEST_CASE("knot count rule") {
  const KnotSequence a = choose_knots(10000, {0.0, 1.0}, 0.5, 1, 4);
  CHECK(a.max_gap() == doctest::Approx(0.1));
  CHECK(a.min_gap() == doctest::Approx(0.1));
  const KnotSequence b = choose_knots(16, {0.0, 1.0}, 0.5, 1, 4);
  CHECK(b.max_gap() == doctest::Approx(0.5));
  const KnotSequence c = choose_knots(16 * 10000, {0.0, 1.0}, 0.5, 1, 4);
  CHECK(c.max_gap() == doctest::Approx(0.05));
  CHECK(code_of([] { (void)choose_knots(100, {1.0, 1.0}, 0.4, 1, 4); }) == ErrorCode::InvalidSupport);
  CHECK(code_of([] { (void)choose_knots(100, {0.0, 1.0}, 0.4, 1, 3); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { (void)choose_knots(100, {0.0, 1.0}, 0.6, 1, 4); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { (void)choose_knots(100, {0.0, 1.0}, 0.4, 4, 4); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
