#pragma once

// Synthetic subset posteriors with closed-form full-data densities.
//
// Every subset draws from the same density p_m = p, so the full-data
// density is p^M renormalized on the working support:
//   normal(mu, sigma)^M  ~ normal(mu, sigma / sqrt(M))
//   gamma(shape, rate)^M ~ gamma(M (shape - 1) + 1, M rate)
//   uniform(lo, hi)^M    ~ uniform(lo, hi)

#include <functional>
#include <random>
#include <string>
#include <variant>

#include "logsplit/bspline.hpp"

namespace logsplit {

struct NormalTarget {
  double mu = 0.0;
  double sigma = 1.0;
};

struct GammaTarget {
  double shape = 1.0;
  double rate = 1.0;
};

struct UniformTarget {
  double lo = 0.0;
  double hi = 1.0;
};

using SyntheticTarget = std::variant<NormalTarget, GammaTarget, UniformTarget>;

[[nodiscard]] std::string describe(const SyntheticTarget& target);

/// Raises InvalidArgument for non-positive scales or an empty uniform range.
void validate(const SyntheticTarget& target);

/// Where the subset density is positive (may be unbounded).
[[nodiscard]] Interval natural_support(const SyntheticTarget& target);

/// One draw from the subset density.
[[nodiscard]] double draw_subset(const SyntheticTarget& target, std::mt19937_64& rng);

/// One draw from the subset density truncated to support, by rejection.
[[nodiscard]] double draw_truncated(const SyntheticTarget& target, Interval support,
                                    std::mt19937_64& rng);
/// One draw from the (untruncated) full-data density for M subsets.
[[nodiscard]] double draw_full(const SyntheticTarget& target, std::size_t subsets,
                               std::mt19937_64& rng);

[[nodiscard]] double subset_density(const SyntheticTarget& target, double x);

/// p^M normalized on support (intersected with the natural support); 0 elsewhere.
[[nodiscard]] std::function<double(double)> full_data_density(const SyntheticTarget& target,
                                                              std::size_t subsets,
                                                              Interval support);

}  // namespace logsplit
