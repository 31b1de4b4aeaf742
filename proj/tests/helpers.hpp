#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <doctest.h>

#include "logsplit/bspline.hpp"
#include "logsplit/errors.hpp"

namespace testing_support {

// Clamped sequence on [a,b] with `interior` random simple interior knots,
// no two closer than 1% of the support.
inline logsplit::KnotSequence random_knots(std::mt19937_64& rng, int k, std::size_t interior,
                                           double a = 0.0, double b = 1.0) {
  std::uniform_real_distribution<double> u(a, b);
  const double min_gap = 0.01 * (b - a);
  std::vector<double> inner;
  while (inner.size() < interior) {
    const double x = u(rng);
    bool ok = x - a > min_gap && b - x > min_gap;
    for (double y : inner) ok = ok && std::abs(x - y) > min_gap;
    if (ok) inner.push_back(x);
  }
  std::sort(inner.begin(), inner.end());
  return logsplit::KnotSequence::clamped({a, b}, inner, k);
}

// Error code raised by f; fails the test when f returns normally.
template <class F>
logsplit::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const logsplit::Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return logsplit::ErrorCode::InvalidArgument;
}

}  // namespace testing_support
