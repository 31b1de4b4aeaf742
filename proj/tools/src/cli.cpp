#include "logsplit_cli/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "artifacts.hpp"
#include "logsplit/diagnostics.hpp"
#include "logsplit/errors.hpp"
#include "logsplit/sample_io.hpp"

namespace logsplit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct FitArgs {
  std::string samples;
  std::vector<double> support;
  double beta = 0.5;
  int j = 1;
  int k = 4;
  std::size_t points = 1000;
  double padding = 0.01;
  std::string out = ".";
};

struct CombineArgs {
  std::vector<std::string> fits;
  int l = 1;
  double dx_constant = 1.0;
  double beta = 0.5;
  int j = 1;
  std::size_t points = 1000;
  std::string out = ".";
};

struct ExperimentArgs {
  std::string config;
  std::vector<std::string> subsets;
  std::string reference;
  std::string out;
  std::size_t jobs = 0;
  bool jobs_set = false;
};

struct GenerateArgs {
  std::string target;
  std::size_t subsets = 5;
  std::size_t rows = 2420;
  std::size_t reference_rows = 20000;
  std::uint64_t seed = 0;
  std::string out = ".";
};

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("LOGSPLIT_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text(raw);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used, 10);
    if (used == text.size() && text.front() != '-') return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("LOGSPLIT_SEED='{}' is not an unsigned 64-bit integer", text));
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  }
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const std::vector<double> values = read_samples_csv(a.samples);
  Interval support{};
  if (a.support.empty()) {
    support = padded_range(values, a.padding);
  } else {
    support = {a.support[0], a.support[1]};
    if (!(support.lo < support.hi)) {
      throw Error(ErrorCode::InvalidSupport,
                  fmt::format("--support {} {} is empty", support.lo, support.hi));
    }
  }
  const SampleSet samples(values, support);
  const LogsplineModel model(choose_knots(samples.size(), support, a.beta, a.j, a.k));
  const LogsplineFit f = fit(model, samples);

  const fs::path dir(a.out);
  make_dir(dir);
  write_json(dir / "fit.json", fit_to_json(f));
  write_density_table(dir / "density.csv", [&](double x) { return density_eval(f, x); }, support,
                      a.points);
  out << fmt::format("fit: n = {}, {} B-splines of order {} on [{}, {}], {} Newton steps -> {}\n",
                     samples.size(), model.dimension(), a.k, support.lo, support.hi, f.iterations,
                     dir.string());
  return 0;
}

int cmd_combine(const CombineArgs& a, std::ostream& out) {
  std::vector<LogsplineFit> fits;
  std::size_t largest = 0;
  for (const auto& path : a.fits) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open {}", path));
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path, e.what()));
    }
    fits.push_back(fit_from_json(doc, path));
    largest = std::max(largest, fits.back().sample_count);
  }
  if (largest == 0) {
    throw Error(ErrorCode::InvalidArgument, "fits carry no sample_count; cannot choose dx");
  }
  const ProductEstimator product(std::move(fits));
  const double norm = static_cast<double>(largest);
  const InterpolationGrid grid =
      choose_grid(product.support(), norm, a.beta, a.l, a.j, a.dx_constant);
  const CompositeInterpolant interpolant = build_interpolant(product, grid);

  const fs::path dir(a.out);
  make_dir(dir);
  write_combined_table(dir / "combined.csv", product, interpolant, a.points);
  json meta = combined_meta(product, interpolant, norm);
  meta["dx_constant"] = a.dx_constant;
  meta["beta"] = a.beta;
  meta["j"] = a.j;
  meta["seed"] = nullptr;
  write_json(dir / "meta.json", meta);
  out << fmt::format("combine: M = {}, l = {}, {} pieces, lambda_tilde = {:.6g} -> {}\n",
                     product.size(), a.l, grid.pieces(), interpolant.lambda_tilde(),
                     dir.string());
  return 0;
}

// Fits, product and interpolant for one extra draw at the illustration size,
// written for plotting next to the MISE table.
void write_illustration(const RunConfig& run, const PreparedExperiment& prepared,
                        const fs::path& dir, json& report) {
  const ExperimentConfig& c = run.experiment;
  const std::size_t n = run.illustration_n != 0 ? run.illustration_n : c.n_grid.back();
  std::mt19937_64 rng(replication_seed(c.seed, n, c.replications));
  std::string last_failure;
  for (std::size_t attempt = 0; attempt <= c.max_retries; ++attempt) {
    const ReplicationDraws data = prepared.draw(n, rng);
    try {
      const CombinedEstimate est = estimate(c, data.draws, data.support, n);
      make_dir(dir / "densities");
      for (std::size_t m = 0; m < est.product.size(); ++m) {
        const LogsplineFit& f = est.product.fits()[m];
        write_density_table(dir / "densities" / fmt::format("subset_{}.csv", m + 1),
                            [&](double x) { return density_eval(f, x); }, data.support, 1000);
      }
      write_density_table(dir / "densities" / "full.csv", data.truth, data.support, 1000);
      write_combined_table(dir / "combined.csv", est.product, est.interpolant, 1000);
      json meta = combined_meta(est.product, est.interpolant, static_cast<double>(n));
      meta["n"] = n;
      meta["seed"] = c.seed;
      meta["attempts"] = attempt + 1;
      write_json(dir / "meta.json", meta);
      report["illustration"] = {{"n", n}, {"attempts", attempt + 1}};
      return;
    } catch (const Error& e) {
      if (!is_statistical_failure(e.code()) && e.code() != ErrorCode::DegenerateProduct) throw;
      last_failure = e.what();
    }
  }
  throw Error(ErrorCode::NoMaximizer,
              fmt::format("illustration draw at n = {} failed {} times (last: {})", n,
                          c.max_retries + 1, last_failure));
}

int cmd_experiment(const ExperimentArgs& a, bool ingest, std::ostream& out) {
  std::ifstream in(a.config);
  if (!in) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open {}", a.config));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", a.config, e.what()));
  }
  const fs::path base = fs::path(a.config).parent_path();
  if (ingest && (!a.subsets.empty() || !a.reference.empty())) {
    if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
    json target = {{"family", "csv"}};
    const fs::path cwd = fs::current_path();
    json files = json::array();
    for (const auto& s : a.subsets) files.push_back(fs::absolute(s).string());
    if (!files.empty()) {
      target["subsets"] = files;
    } else if (doc.contains("target") && doc["target"].contains("subsets")) {
      target["subsets"] = doc["target"]["subsets"];
    }
    if (!a.reference.empty()) target["reference"] = fs::absolute(a.reference).string();
    doc["target"] = target;
    doc.erase("M");
  }
  RunConfig run = parse_run_config(doc, base);
  ExperimentConfig& c = run.experiment;
  const bool is_ingest = std::holds_alternative<IngestedTarget>(c.target);
  if (ingest && !is_ingest) {
    throw ConfigError("/target/family", "ingest-experiment needs the csv family");
  }
  if (!ingest && is_ingest) {
    throw ConfigError("/target/family", "csv targets run through ingest-experiment");
  }
  if (const auto seed = seed_from_env()) c.seed = *seed;
  if (a.jobs_set) c.jobs = a.jobs;
  if (!a.out.empty()) run.output_dir = a.out;

  const MiseReport report = run_experiment(c);
  const PreparedExperiment prepared(c);

  const fs::path dir = run.output_dir;
  make_dir(dir);
  json doc_out = report_json(report);
  write_illustration(run, prepared, dir, doc_out);
  doc_out["config"] = to_json(run);
  doc_out["seed"] = c.seed;
  write_results_csv(dir / "results.csv", report);
  write_json(dir / "report.json", doc_out);

  std::size_t failed = 0;
  for (const MiseRow& row : report.rows) failed += row.failed;
  out << fmt::format(
      "slope {:.4f} vs theoretical {:.4f} over {} sample sizes ({} failed replications); "
      "results in {}\n",
      report.slope, report.theoretical_slope, report.rows.size(), failed, dir.string());
  return 0;
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const SyntheticTarget target = parse_target_spec(a.target);
  const std::uint64_t seed = seed_from_env().value_or(a.seed);
  const auto written =
      write_synthetic_subsets(target, a.subsets, a.rows, a.reference_rows, seed, a.out);
  for (const auto& p : written) out << p.string() << '\n';
  return 0;
}

std::string failure_message(const Error& e) {
  if (e.code() == ErrorCode::NoMaximizer) {
    return fmt::format(
        "{}\nthe sample lies in Omega_n^c, the event on which the log-likelihood has no "
        "maximizer",
        e.what());
  }
  return e.what();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parallel logspline density estimation"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a logspline density to one sample file");
  fit_cmd->add_option("samples", fa.samples, "CSV with one value per line")->required();
  fit_cmd->add_option("--support", fa.support, "Support a b (default: padded sample range)")
      ->expected(2);
  fit_cmd->add_option("--beta", fa.beta, "Knot growth exponent")->capture_default_str();
  fit_cmd->add_option("--j", fa.j, "Smoothness index j")->capture_default_str();
  fit_cmd->add_option("--k", fa.k, "B-spline order")->capture_default_str();
  fit_cmd->add_option("--points", fa.points, "Rows of density.csv")->capture_default_str();
  fit_cmd->add_option("--padding", fa.padding, "Range padding when --support is absent")
      ->capture_default_str();
  fit_cmd->add_option("--out", fa.out, "Output directory")->capture_default_str();

  CombineArgs ca;
  auto* combine_cmd = app.add_subcommand("combine", "Combine subset fits into one density");
  combine_cmd->add_option("fits", ca.fits, "fit.json files")->required();
  combine_cmd->add_option("--l", ca.l, "Interpolation degree")->capture_default_str();
  combine_cmd->add_option("--dx-constant", ca.dx_constant, "Constant in dx = c N^-e")
      ->capture_default_str();
  combine_cmd->add_option("--beta", ca.beta, "Rate exponent for dx")->capture_default_str();
  combine_cmd->add_option("--j", ca.j, "Smoothness index for dx")->capture_default_str();
  combine_cmd->add_option("--points", ca.points, "Minimum rows of combined.csv")
      ->capture_default_str();
  combine_cmd->add_option("--out", ca.out, "Output directory")->capture_default_str();

  ExperimentArgs ea;
  auto* exp_cmd = app.add_subcommand("experiment", "MISE experiment on a synthetic target");
  exp_cmd->add_option("config", ea.config, "Config JSON")->required();
  exp_cmd->add_option("--out", ea.out, "Output directory (overrides output_dir)");
  auto* jobs_opt = exp_cmd->add_option("--jobs", ea.jobs, "Concurrent replications (0: all cores)");

  ExperimentArgs ia;
  auto* ing_cmd = app.add_subcommand("ingest-experiment", "MISE experiment on sample files");
  ing_cmd->add_option("config", ia.config, "Config JSON")->required();
  ing_cmd->add_option("--subsets", ia.subsets, "Subset CSVs (override the config's list)");
  ing_cmd->add_option("--reference", ia.reference, "Full-data CSV (overrides the config)");
  ing_cmd->add_option("--out", ia.out, "Output directory (overrides output_dir)");
  auto* ing_jobs_opt =
      ing_cmd->add_option("--jobs", ia.jobs, "Concurrent replications (0: all cores)");

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic subset and reference CSVs");
  gen_cmd->add_option("--target", ga.target, "family,p1,p2 e.g. gamma,2,1")->required();
  gen_cmd->add_option("--subsets", ga.subsets, "Number of subset files")->capture_default_str();
  gen_cmd->add_option("--rows", ga.rows, "Rows per subset file")->capture_default_str();
  gen_cmd->add_option("--reference-rows", ga.reference_rows, "Rows of reference.csv (0: none)")
      ->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "RNG seed (LOGSPLIT_SEED overrides)")
      ->capture_default_str();
  gen_cmd->add_option("--out", ga.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  std::ostream* warn_stream = quiet ? nullptr : &err;
  const WarningSink previous = set_warning_sink([warn_stream](const std::string& message) {
    if (warn_stream != nullptr) *warn_stream << "logsplit: warning: " << message << '\n';
  });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{previous};

  try {
    if (*fit_cmd) return cmd_fit(fa, out);
    if (*combine_cmd) return cmd_combine(ca, out);
    if (*exp_cmd) {
      ea.jobs_set = jobs_opt->count() > 0;
      return cmd_experiment(ea, false, out);
    }
    if (*ing_cmd) {
      ia.jobs_set = ing_jobs_opt->count() > 0;
      return cmd_experiment(ia, true, out);
    }
    if (*gen_cmd) return cmd_generate(ga, out);
  } catch (const ConfigError& e) {
    err << "logsplit: config error at " << (e.path().empty() ? "/" : e.path()) << ": "
        << std::string(e.what()).substr(e.path().size() + 2) << '\n';
    return 1;
  } catch (const Error& e) {
    err << "logsplit: " << failure_message(e) << '\n';
    return is_statistical_failure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "logsplit: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace logsplit::cli
