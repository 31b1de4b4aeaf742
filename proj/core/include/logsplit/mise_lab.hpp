#pragma once

// Empirical MISE of the combined estimator.
//
// One replication draws n samples for each of M subsets, fits a logspline
// per subset with knots from choose_knots, multiplies the fits, interpolates
// the product on a grid from choose_grid and normalizes it. Its integrated
// squared error against the full-data density estimates MISE once averaged
// over replications. A least-squares line through (log n, log mean ISE) is
// compared with the theoretical slope -2 beta.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "logsplit/bspline.hpp"
#include "logsplit/consensus.hpp"
#include "logsplit/logspline.hpp"
#include "logsplit/targets.hpp"

namespace logsplit {

/// Subset sample pools read from files, plus an optional pool drawn from the
/// full-data posterior. Experiments work on the overlap of the padded
/// per-pool ranges, dropping pool values outside it, and bootstrap n values
/// from each pool. The reference pool is fitted on its own padded range and
/// taken as zero outside it.
struct IngestedTarget {
  std::vector<SampleSet> subsets;
  std::optional<std::vector<double>> reference;
};

using ExperimentTarget = std::variant<SyntheticTarget, IngestedTarget>;

struct ExperimentConfig {
  std::size_t subsets = 3;  // M
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  double beta = 0.5;
  int j = 1;
  int k = 4;
  int l = 1;
  ExperimentTarget target = SyntheticTarget{NormalTarget{2.0, 1.0}};
  /// Synthetic targets only: fixed [a,b] to which the subset densities are
  /// truncated. Unset means the padded range of each replication's draws.
  std::optional<Interval> support;
  std::uint64_t seed = 0;
  double dx_constant = 1.0;
  /// Fraction of the sample range added on each side of the support.
  double support_padding = 0.01;
  /// Fresh draws allowed after a subset fit has no maximizer.
  std::size_t max_retries = 5;
  /// Concurrent replication jobs; 0 means hardware concurrency.
  std::size_t jobs = 1;
  FitOptions fit_options;
};

/// Raises InvalidArgument naming the offending field.
void validate(const ExperimentConfig& config);

/// Seed of replication `rep` at sample size n, independent of scheduling.
[[nodiscard]] std::uint64_t replication_seed(std::uint64_t seed, std::size_t n, std::size_t rep);

/// Integral of (f - g)^2 over the support by adaptive Gauss-Legendre to
/// absolute tolerance 1e-10. Kinks of either function belong in breakpoints.
[[nodiscard]] double ise(const std::function<double(double)>& truth,
                         const std::function<double(double)>& estimate, Interval support,
                         std::span<const double> breakpoints = {});

/// Everything one replication produced.
struct ReplicationOutcome {
  bool ok = false;
  double ise = 0.0;
  std::size_t attempts = 0;
  std::string failure;
};

/// Subset draws of one replication with their common support and the
/// density they estimate.
struct ReplicationDraws {
  std::vector<std::vector<double>> draws;
  Interval support;
  std::function<double(double)> truth;
  /// Kinks or jumps of truth inside the support.
  std::vector<double> truth_breaks;
};

/// Subset fits, their product and the normalized interpolant.
struct CombinedEstimate {
  ProductEstimator product;
  CompositeInterpolant interpolant;
};

/// Fits every subset with knots from choose_knots(n) on `support` and
/// interpolates the product on the grid from choose_grid(n).
[[nodiscard]] CombinedEstimate estimate(const ExperimentConfig& config,
                                        const std::vector<std::vector<double>>& draws,
                                        Interval support, std::size_t n);

/// Per-experiment state that does not depend on the replication: the
/// reference density for ingested pools.
class PreparedExperiment {
 public:
  explicit PreparedExperiment(ExperimentConfig config);

  [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
  /// Ingested targets: overlap of the padded per-pool ranges.
  [[nodiscard]] Interval ingest_support() const noexcept { return ingest_support_; }

  /// Draws n values per subset from the target or the ingested pools.
  [[nodiscard]] ReplicationDraws draw(std::size_t n, std::mt19937_64& rng) const;

  [[nodiscard]] ReplicationOutcome run_replication(std::size_t n, std::uint64_t rep_seed) const;

 private:
  ExperimentConfig config_;
  // Ingested targets only: working support, trimmed pools, reference density.
  Interval ingest_support_{};
  std::vector<std::vector<double>> pools_;
  std::function<double(double)> ingest_reference_;
  std::vector<double> ingest_breaks_;
};

[[nodiscard]] ReplicationOutcome run_replication(const ExperimentConfig& config, std::size_t n,
                                                 std::uint64_t rep_seed);

struct MiseRow {
  std::size_t n = 0;
  double mean_ise = 0.0;
  double std_ise = 0.0;
  double bound_value = 0.0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

struct MiseReport {
  std::vector<MiseRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double theoretical_slope = 0.0;
  /// C in bound_value = C * n^{-2 beta}, chosen so the line passes through
  /// the first row's mean ISE.
  double bound_constant = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
[[nodiscard]] LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

/// Runs every (n, replication) job, then aggregates. Raises ExperimentAborted
/// when more than half of the replications at some n fail.
[[nodiscard]] MiseReport run_experiment(const ExperimentConfig& config);

/// Reads one pool per file. The common support is the union of the ranges
/// widened by `padding` of its length on each side.
[[nodiscard]] std::vector<SampleSet> ingest_subsets(
    const std::vector<std::filesystem::path>& paths, double padding = 0.01);

/// Writes subset_<m>.csv (m = 1..M, `rows` draws each from the subset
/// density) and reference.csv (`reference_rows` draws from the full-data
/// density) into `directory`.
std::vector<std::filesystem::path> write_synthetic_subsets(const SyntheticTarget& target,
                                                           std::size_t subsets, std::size_t rows,
                                                           std::size_t reference_rows,
                                                           std::uint64_t seed,
                                                           const std::filesystem::path& directory);

}  // namespace logsplit
