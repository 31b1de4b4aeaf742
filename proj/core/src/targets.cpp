#include "logsplit/targets.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "logsplit/errors.hpp"

namespace logsplit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shape of gamma^M; must stay positive for the product to be a density.
double product_shape(const GammaTarget& g, std::size_t subsets) {
  return static_cast<double>(subsets) * (g.shape - 1.0) + 1.0;
}

}  // namespace

std::string describe(const SyntheticTarget& target) {
  return std::visit(
      Overloaded{
          [](const NormalTarget& t) { return fmt::format("normal({}, {})", t.mu, t.sigma); },
          [](const GammaTarget& t) { return fmt::format("gamma({}, {})", t.shape, t.rate); },
          [](const UniformTarget& t) { return fmt::format("uniform({}, {})", t.lo, t.hi); },
      },
      target);
}

void validate(const SyntheticTarget& target) {
  std::visit(Overloaded{
                 [](const NormalTarget& t) {
                   if (!(t.sigma > 0.0) || !std::isfinite(t.mu)) {
                     throw Error(ErrorCode::InvalidArgument, "normal target needs sigma > 0");
                   }
                 },
                 [](const GammaTarget& t) {
                   if (!(t.shape > 0.0) || !(t.rate > 0.0)) {
                     throw Error(ErrorCode::InvalidArgument,
                                 "gamma target needs shape > 0 and rate > 0");
                   }
                 },
                 [](const UniformTarget& t) {
                   if (!(t.lo < t.hi)) {
                     throw Error(ErrorCode::InvalidArgument, "uniform target needs lo < hi");
                   }
                 },
             },
             target);
}

Interval natural_support(const SyntheticTarget& target) {
  return std::visit(Overloaded{
                        [](const NormalTarget&) { return Interval{-kInf, kInf}; },
                        [](const GammaTarget&) { return Interval{0.0, kInf}; },
                        [](const UniformTarget& t) { return Interval{t.lo, t.hi}; },
                    },
                    target);
}

double draw_subset(const SyntheticTarget& target, std::mt19937_64& rng) {
  return std::visit(Overloaded{
                        [&](const NormalTarget& t) {
                          return std::normal_distribution<double>(t.mu, t.sigma)(rng);
                        },
                        [&](const GammaTarget& t) {
                          return std::gamma_distribution<double>(t.shape, 1.0 / t.rate)(rng);
                        },
                        [&](const UniformTarget& t) {
                          return std::uniform_real_distribution<double>(t.lo, t.hi)(rng);
                        },
                    },
                    target);
}

double draw_truncated(const SyntheticTarget& target, Interval support, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double x = draw_subset(target, rng);
    if (support.contains(x)) return x;
  }
  throw Error(ErrorCode::InvalidSupport,
              fmt::format("[{}, {}] holds almost no mass of {}", support.lo, support.hi,
                          describe(target)));
}

double draw_full(const SyntheticTarget& target, std::size_t subsets, std::mt19937_64& rng) {
  const double m = static_cast<double>(subsets);
  return std::visit(
      Overloaded{
          [&](const NormalTarget& t) {
            return std::normal_distribution<double>(t.mu, t.sigma / std::sqrt(m))(rng);
          },
          [&](const GammaTarget& t) {
            const double shape = product_shape(t, subsets);
            if (!(shape > 0.0)) {
              throw Error(ErrorCode::InvalidArgument, "gamma product is not normalizable");
            }
            return std::gamma_distribution<double>(shape, 1.0 / (m * t.rate))(rng);
          },
          [&](const UniformTarget& t) {
            return std::uniform_real_distribution<double>(t.lo, t.hi)(rng);
          },
      },
      target);
}

double subset_density(const SyntheticTarget& target, double x) {
  return std::visit(Overloaded{
                        [&](const NormalTarget& t) {
                          return boost::math::pdf(boost::math::normal(t.mu, t.sigma), x);
                        },
                        [&](const GammaTarget& t) {
                          if (x < 0.0) return 0.0;
                          return boost::math::pdf(
                              boost::math::gamma_distribution<>(t.shape, 1.0 / t.rate), x);
                        },
                        [&](const UniformTarget& t) {
                          return (x >= t.lo && x <= t.hi) ? 1.0 / (t.hi - t.lo) : 0.0;
                        },
                    },
                    target);
}

std::function<double(double)> full_data_density(const SyntheticTarget& target,
                                                std::size_t subsets, Interval support) {
  validate(target);
  if (subsets == 0) throw Error(ErrorCode::InvalidArgument, "need at least one subset");
  const Interval natural = natural_support(target);
  const Interval s{std::max(support.lo, natural.lo), std::min(support.hi, natural.hi)};
  if (!(s.lo < s.hi)) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support [{}, {}] misses the target {}", support.lo, support.hi,
                            describe(target)));
  }
  const double m = static_cast<double>(subsets);
  return std::visit(
      Overloaded{
          [&](const NormalTarget& t) -> std::function<double(double)> {
            const boost::math::normal dist(t.mu, t.sigma / std::sqrt(m));
            const double mass = boost::math::cdf(dist, s.hi) - boost::math::cdf(dist, s.lo);
            return [dist, mass, s](double x) {
              return s.contains(x) ? boost::math::pdf(dist, x) / mass : 0.0;
            };
          },
          [&](const GammaTarget& t) -> std::function<double(double)> {
            const double shape = product_shape(t, subsets);
            if (!(shape > 0.0)) {
              throw Error(ErrorCode::InvalidArgument, "gamma product is not normalizable");
            }
            const boost::math::gamma_distribution<> dist(shape, 1.0 / (m * t.rate));
            const double mass = boost::math::cdf(dist, s.hi) - boost::math::cdf(dist, s.lo);
            return [dist, mass, s](double x) {
              return s.contains(x) ? boost::math::pdf(dist, x) / mass : 0.0;
            };
          },
          [&](const UniformTarget&) -> std::function<double(double)> {
            const double height = 1.0 / s.length();
            return [height, s](double x) { return s.contains(x) ? height : 0.0; };
          },
      },
      target);
}

}  // namespace logsplit
