#include "logsplit/mise_lab.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "logsplit/errors.hpp"
#include "logsplit/quadrature.hpp"
#include "logsplit/sample_io.hpp"

namespace logsplit {

namespace {

void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, fmt::format("{}: {}", field, what));
}

bool retryable(ErrorCode code) {
  return code == ErrorCode::NoMaximizer || code == ErrorCode::NonConvergence ||
         code == ErrorCode::DegenerateProduct;
}

Interval intersect(Interval a, Interval b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

std::vector<double> piece_boundaries(const InterpolationGrid& grid) {
  std::vector<double> out;
  out.reserve(grid.pieces() + 1);
  for (std::size_t i = 0; i <= grid.pieces(); ++i) {
    out.push_back(grid.node(i * static_cast<std::size_t>(grid.degree())));
  }
  return out;
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (config.subsets < 1) invalid("/M", "must be >= 1");
  if (config.n_grid.empty()) invalid("/n_grid", "must list at least one sample size");
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    if (config.n_grid[i] < 2) invalid(fmt::format("/n_grid/{}", i), "must be >= 2");
    if (i > 0 && config.n_grid[i] <= config.n_grid[i - 1]) {
      invalid(fmt::format("/n_grid/{}", i), "must be strictly increasing");
    }
  }
  if (config.replications < 2) invalid("/replications", "must be >= 2");
  if (!(config.beta > 0.0) || config.beta > 0.5) invalid("/beta", "must lie in (0, 1/2]");
  if (config.k < 4 || config.k > kMaxSplineOrder) {
    invalid("/k", fmt::format("must lie in [4, {}]", kMaxSplineOrder));
  }
  if (config.j < 0 || config.j > config.k - 1) invalid("/j", "must lie in [0, k-1]");
  if (config.l < 1 || config.l > config.k - 3) invalid("/l", "must lie in [1, k-3]");
  if (!(config.dx_constant > 0.0)) invalid("/dx_constant", "must be positive");
  if (!(config.support_padding >= 0.0)) invalid("/support_padding", "must be >= 0");
  if (const auto* synthetic = std::get_if<SyntheticTarget>(&config.target)) {
    try {
      validate(*synthetic);
    } catch (const Error& e) {
      invalid("/target", e.what());
    }
    if (config.support) {
      const Interval s = intersect(*config.support, natural_support(*synthetic));
      if (!std::isfinite(config.support->lo) || !std::isfinite(config.support->hi) ||
          !(s.lo < s.hi)) {
        invalid("/support", "must be a finite interval overlapping the target's support");
      }
    }
  } else {
    if (config.support) invalid("/support", "only synthetic targets take a fixed support");
    const auto& ingested = std::get<IngestedTarget>(config.target);
    if (ingested.subsets.size() != config.subsets) {
      invalid("/M", fmt::format("config says {} subsets but {} pools were ingested",
                                config.subsets, ingested.subsets.size()));
    }
    for (const SampleSet& s : ingested.subsets) {
      if (s.support() != ingested.subsets.front().support()) {
        invalid("/target/subsets", "ingested pools must share one support");
      }
    }
  }
}

CombinedEstimate estimate(const ExperimentConfig& config,
                          const std::vector<std::vector<double>>& draws, Interval support,
                          std::size_t n) {
  const LogsplineModel model(choose_knots(n, support, config.beta, config.j, config.k));
  std::vector<LogsplineFit> fits;
  fits.reserve(draws.size());
  for (const auto& values : draws) {
    fits.push_back(fit(model, SampleSet(values, support), config.fit_options));
  }
  ProductEstimator product(std::move(fits));
  const InterpolationGrid grid = choose_grid(support, static_cast<double>(n), config.beta,
                                             config.l, config.j, config.dx_constant);
  CompositeInterpolant interpolant = build_interpolant(product, grid);
  return {std::move(product), std::move(interpolant)};
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t n, std::size_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(rep)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

double ise(const std::function<double(double)>& truth,
           const std::function<double(double)>& estimate, Interval support,
           std::span<const double> breakpoints) {
  return integrate_adaptive(
      [&](double x) {
        const double d = truth(x) - estimate(x);
        return d * d;
      },
      support, 1e-10, breakpoints);
}

PreparedExperiment::PreparedExperiment(ExperimentConfig config) : config_(std::move(config)) {
  validate(config_);
  const auto* ingested = std::get_if<IngestedTarget>(&config_.target);
  if (ingested == nullptr) return;

  ingest_support_ = ingested->subsets.front().support();
  for (const SampleSet& s : ingested->subsets) {
    ingest_support_ = intersect(ingest_support_, padded_range(s.values(), config_.support_padding));
  }
  if (!(ingest_support_.lo < ingest_support_.hi)) {
    throw Error(ErrorCode::InvalidSupport, "the ranges of the ingested pools do not overlap");
  }
  for (const SampleSet& s : ingested->subsets) {
    auto& pool = pools_.emplace_back();
    for (double v : s.values()) {
      if (ingest_support_.contains(v)) pool.push_back(v);
    }
    if (pool.empty()) {
      throw Error(ErrorCode::EmptySubset, "a pool has no values inside the common range");
    }
  }
  if (ingested->reference) {
    const Interval range = intersect(
        padded_range(*ingested->reference, config_.support_padding), ingest_support_);
    const SampleSet reference = SampleSet::clamped(*ingested->reference, range);
    const LogsplineModel model(
        choose_knots(reference.size(), range, config_.beta, config_.j, config_.k));
    ingest_breaks_ = {range.lo, range.hi};
    auto ref_fit = std::make_shared<const LogsplineFit>(fit(model, reference, config_.fit_options));
    ingest_reference_ = [ref_fit](double x) { return density_eval(*ref_fit, x); };
  } else {
    // Without full-data draws the whole pools stand in for the truth.
    std::size_t largest = 0;
    for (const auto& pool : pools_) largest = std::max(largest, pool.size());
    auto reference = std::make_shared<const CompositeInterpolant>(
        estimate(config_, pools_, ingest_support_, largest).interpolant);
    ingest_reference_ = [reference](double x) { return normalized_eval(*reference, x); };
  }
}

ReplicationDraws PreparedExperiment::draw(std::size_t n, std::mt19937_64& rng) const {
  const std::size_t subsets = config_.subsets;
  ReplicationDraws out;
  out.draws.assign(subsets, std::vector<double>(n));
  if (const auto* synthetic = std::get_if<SyntheticTarget>(&config_.target)) {
    if (config_.support) {
      out.support = intersect(*config_.support, natural_support(*synthetic));
      for (auto& d : out.draws) {
        for (double& v : d) v = draw_truncated(*synthetic, out.support, rng);
      }
    } else {
      for (auto& d : out.draws) {
        for (double& v : d) v = draw_subset(*synthetic, rng);
      }
      std::vector<double> all;
      all.reserve(subsets * n);
      for (const auto& d : out.draws) all.insert(all.end(), d.begin(), d.end());
      out.support =
          intersect(padded_range(all, config_.support_padding), natural_support(*synthetic));
    }
    out.truth = full_data_density(*synthetic, subsets, out.support);
  } else {
    for (std::size_t m = 0; m < subsets; ++m) {
      const auto& pool = pools_[m];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (double& v : out.draws[m]) v = pool[pick(rng)];
    }
    out.support = ingest_support_;
    out.truth = ingest_reference_;
    out.truth_breaks = ingest_breaks_;
  }
  return out;
}

ReplicationOutcome PreparedExperiment::run_replication(std::size_t n,
                                                       std::uint64_t rep_seed) const {
  std::mt19937_64 rng(rep_seed);
  ReplicationOutcome outcome;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    outcome.attempts = attempt + 1;
    const ReplicationDraws data = draw(n, rng);
    try {
      const CompositeInterpolant interpolant =
          estimate(config_, data.draws, data.support, n).interpolant;
      std::vector<double> breaks = piece_boundaries(interpolant.grid());
      breaks.insert(breaks.end(), data.truth_breaks.begin(), data.truth_breaks.end());
      outcome.ise = ise(
          data.truth, [&](double x) { return normalized_eval(interpolant, x); }, data.support,
          breaks);
      outcome.ok = true;
      outcome.failure.clear();
      return outcome;
    } catch (const Error& e) {
      if (!retryable(e.code())) throw;
      outcome.failure = e.what();
    }
  }
  return outcome;
}

ReplicationOutcome run_replication(const ExperimentConfig& config, std::size_t n,
                                   std::uint64_t rep_seed) {
  return PreparedExperiment(config).run_replication(n, rep_seed);
}

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "line fit needs >= 2 paired points");
  }
  const double count = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / count;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "line fit needs distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

MiseReport run_experiment(const ExperimentConfig& config) {
  const PreparedExperiment experiment(config);
  const std::size_t reps = config.replications;
  const std::size_t total = config.n_grid.size() * reps;
  std::vector<ReplicationOutcome> outcomes(total);
  std::vector<std::exception_ptr> errors(total);

  std::size_t jobs = config.jobs == 0 ? std::thread::hardware_concurrency() : config.jobs;
  jobs = std::clamp<std::size_t>(jobs, 1, total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t n = config.n_grid[task / reps];
      const std::size_t rep = task % reps;
      try {
        outcomes[task] = experiment.run_replication(n, replication_seed(config.seed, n, rep));
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MiseReport report;
  report.theoretical_slope = -2.0 * config.beta;
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    MiseRow row;
    row.n = config.n_grid[i];
    std::vector<double> values;
    std::string first_failure;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const ReplicationOutcome& o = outcomes[i * reps + rep];
      if (o.ok) {
        values.push_back(o.ise);
      } else if (first_failure.empty()) {
        first_failure = o.failure;
      }
    }
    row.succeeded = values.size();
    row.failed = reps - values.size();
    if (2 * row.failed > reps) {
      throw Error(ErrorCode::ExperimentAborted,
                  fmt::format("n = {}: {} of {} replications failed after retries (first: {})",
                              row.n, row.failed, reps, first_failure));
    }
    const double count = static_cast<double>(values.size());
    row.mean_ise = std::accumulate(values.begin(), values.end(), 0.0) / count;
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean_ise) * (v - row.mean_ise);
    row.std_ise = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    report.rows.push_back(row);
  }

  const double first_n = static_cast<double>(report.rows.front().n);
  report.bound_constant = report.rows.front().mean_ise * std::pow(first_n, 2.0 * config.beta);
  std::vector<double> log_n;
  std::vector<double> log_ise;
  for (MiseRow& row : report.rows) {
    row.bound_value =
        report.bound_constant * std::pow(static_cast<double>(row.n), report.theoretical_slope);
    if (row.mean_ise > 0.0) {
      log_n.push_back(std::log(static_cast<double>(row.n)));
      log_ise.push_back(std::log(row.mean_ise));
    }
  }
  if (log_n.size() >= 2) {
    const LineFit line = least_squares_line(log_n, log_ise);
    report.slope = line.slope;
    report.intercept = line.intercept;
  }
  return report;
}

std::vector<SampleSet> ingest_subsets(const std::vector<std::filesystem::path>& paths,
                                      double padding) {
  if (paths.empty()) throw Error(ErrorCode::InvalidArgument, "no subset files given");
  std::vector<std::vector<double>> pools;
  pools.reserve(paths.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& path : paths) {
    pools.push_back(read_samples_csv(path));
    const auto [mn, mx] = std::minmax_element(pools.back().begin(), pools.back().end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  const std::array<double, 2> ends{lo, hi};
  const Interval support = padded_range(ends, padding);
  std::vector<SampleSet> sets;
  sets.reserve(pools.size());
  for (auto& pool : pools) sets.emplace_back(std::move(pool), support);
  return sets;
}

std::vector<std::filesystem::path> write_synthetic_subsets(const SyntheticTarget& target,
                                                           std::size_t subsets, std::size_t rows,
                                                           std::size_t reference_rows,
                                                           std::uint64_t seed,
                                                           const std::filesystem::path& directory) {
  validate(target);
  if (subsets == 0 || rows == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one subset and one row");
  }
  std::filesystem::create_directories(directory);
  std::mt19937_64 rng(seed);
  std::vector<std::filesystem::path> written;
  std::vector<double> values(rows);
  for (std::size_t m = 1; m <= subsets; ++m) {
    for (double& v : values) v = draw_subset(target, rng);
    written.push_back(directory / fmt::format("subset_{}.csv", m));
    write_samples_csv(written.back(), values);
  }
  if (reference_rows > 0) {
    values.resize(reference_rows);
    for (double& v : values) v = draw_full(target, subsets, rng);
    written.push_back(directory / "reference.csv");
    write_samples_csv(written.back(), values);
  }
  return written;
}

}  // namespace logsplit
