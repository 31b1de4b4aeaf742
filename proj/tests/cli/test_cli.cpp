#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "logsplit/sample_io.hpp"
#include "logsplit_cli/cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "logsplit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = logsplit::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("logsplit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Table {
  std::string header;
  std::vector<std::vector<double>> rows;
  [[nodiscard]] std::vector<double> column(std::size_t c) const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[c]);
    return v;
  }
};

Table read_table(const fs::path& p) {
  std::ifstream in(p);
  Table t;
  std::getline(in, t.header);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    t.rows.push_back(row);
  }
  return t;
}

void write_draws(const fs::path& p, std::size_t n, std::uint64_t seed, bool normal) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.5, 0.15);
  std::vector<double> v;
  while (v.size() < n) {
    const double x = normal ? g(rng) : u(rng);
    if (x >= 0.0 && x <= 1.0) v.push_back(x);
  }
  logsplit::write_samples_csv(p, v);
}

void write_config(const fs::path& p, const json& doc) { std::ofstream(p) << doc.dump(2); }

json small_config() {
  return json{{"M", 2},
              {"n_grid", {400, 800}},
              {"replications", 3},
              {"target", {{"family", "normal"}, {"mu", 0.5}, {"sigma", 0.3}}},
              {"support", {0.0, 1.0}},
              {"seed", 5}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit writes a density table") {
  const fs::path dir = scratch("fit");
  write_draws(dir / "u.csv", 1000000, 1, false);
  const auto r = invoke({"-q", "fit", (dir / "u.csv").string(), "--support", "0", "1", "--out",
                         (dir / "f").string()});
  REQUIRE(r.code == 0);
  const Table t = read_table(dir / "f" / "density.csv");
  CHECK(t.header == "x,density");
  CHECK(t.rows.size() == 1000);
  for (const auto& row : t.rows) CHECK(std::abs(row[1] - 1.0) <= 0.05);
  CHECK(std::abs(oracle::trapezoid(t.column(0), t.column(1)) - 1.0) <= 1e-6);
  const json fit = json::parse(slurp(dir / "f" / "fit.json"));
  CHECK(fit.contains("coefficients"));
  CHECK(fit.contains("knots"));
  CHECK(fit.contains("log_normalizer"));
  fs::remove_all(dir);
}

TEST_CASE("combine of one fit reproduces the fit") {
  const fs::path dir = scratch("combine1");
  write_draws(dir / "s.csv", 5000, 2, true);
  REQUIRE(invoke({"-q", "fit", (dir / "s.csv").string(), "--support", "0", "1", "--out",
                  (dir / "f").string()})
              .code == 0);
  const auto r = invoke({"-q", "combine", (dir / "f" / "fit.json").string(), "--out",
                         (dir / "c").string()});
  REQUIRE(r.code == 0);
  const Table t = read_table(dir / "c" / "combined.csv");
  CHECK(t.header == "x,p_hat_star,p_tilde,p_tilde_normalized");
  CHECK(t.rows.size() >= 1000);
  const logsplit::LogsplineFit fit =
      logsplit::cli::fit_from_json(json::parse(slurp(dir / "f" / "fit.json")), "fit.json");
  double worst = 0.0;
  for (const auto& row : t.rows) {
    CHECK(row[1] == doctest::Approx(logsplit::density_eval(fit, row[0])).epsilon(1e-12));
    worst = std::max(worst, std::abs(row[3] - row[1]));
  }
  CHECK(worst <= 1e-2);
  const json meta = json::parse(slurp(dir / "c" / "meta.json"));
  const double lambda = meta.at("lambda_tilde").get<double>();
  CHECK(std::abs(oracle::trapezoid(t.column(0), t.column(2)) - lambda) <= 1e-6);
  CHECK(std::abs(oracle::trapezoid(t.column(0), t.column(3)) - 1.0) <= 1e-6);
  CHECK(meta.at("M").get<int>() == 1);
  fs::remove_all(dir);
}

TEST_CASE("combine rejects l above k - 3") {
  const fs::path dir = scratch("degree");
  write_draws(dir / "s.csv", 2000, 3, true);
  REQUIRE(invoke({"-q", "fit", (dir / "s.csv").string(), "--k", "4", "--support", "0", "1",
                  "--out", (dir / "f").string()})
              .code == 0);
  const auto r = invoke({"-q", "combine", (dir / "f" / "fit.json").string(), "--l", "2", "--out",
                         (dir / "c").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("DegreeTooHigh") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("combine rejects mismatched supports") {
  const fs::path dir = scratch("mismatch");
  write_draws(dir / "s.csv", 2000, 4, true);
  REQUIRE(invoke({"-q", "fit", (dir / "s.csv").string(), "--support", "0", "1", "--out",
                  (dir / "a").string()})
              .code == 0);
  REQUIRE(invoke({"-q", "fit", (dir / "s.csv").string(), "--support", "0", "1.01", "--out",
                  (dir / "b").string()})
              .code == 0);
  const auto r = invoke({"-q", "combine", (dir / "a" / "fit.json").string(),
                         (dir / "b" / "fit.json").string(), "--out", (dir / "c").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("SupportMismatch") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  std::ofstream(dir / "empty.csv") << "";
  auto r = invoke({"fit", (dir / "empty.csv").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("EmptySubset") != std::string::npos);

  logsplit::write_samples_csv(dir / "point.csv", std::vector<double>(500, 0.5));
  r = invoke({"fit", (dir / "point.csv").string(), "--support", "0", "1", "--out",
              (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("Omega_n^c") != std::string::npos);

  json bad = small_config();
  bad["bogus"] = 1;
  write_config(dir / "bad.json", bad);
  r = invoke({"experiment", (dir / "bad.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/bogus") != std::string::npos);

  bad = small_config();
  bad["n_grid"] = {800, 400};
  write_config(dir / "bad2.json", bad);
  r = invoke({"experiment", (dir / "bad2.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/n_grid") != std::string::npos);

  json aborting = small_config();
  aborting["fit"] = {{"max_iterations", 1}};
  aborting["max_retries"] = 1;
  write_config(dir / "abort.json", aborting);
  r = invoke({"-q", "experiment", (dir / "abort.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("ExperimentAborted") != std::string::npos);

  r = invoke({"no-such-command"});
  CHECK(r.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("experiment artifacts are stable and seeded") {
  const fs::path dir = scratch("experiment");
  write_config(dir / "cfg.json", small_config());
  const auto a = invoke({"-q", "experiment", (dir / "cfg.json").string(), "--out",
                         (dir / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("slope") != std::string::npos);
  const auto b = invoke({"-q", "experiment", (dir / "cfg.json").string(), "--out",
                         (dir / "b").string(), "--jobs", "2"});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));

  const Table t = read_table(dir / "a" / "results.csv");
  CHECK(t.header == "n,mean_ise,std_ise,bound_value");
  CHECK(t.rows.size() == 2);
  const json report = json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report.at("seed").get<std::uint64_t>() == 5);
  CHECK(report.at("theoretical_slope").get<double>() == -1.0);
  CHECK(report.at("rows").size() == 2);

  CHECK(read_table(dir / "a" / "densities" / "subset_1.csv").header == "x,density");
  CHECK(read_table(dir / "a" / "densities" / "subset_2.csv").rows.size() == 1000);
  CHECK(read_table(dir / "a" / "densities" / "full.csv").rows.size() == 1000);
  const Table combined = read_table(dir / "a" / "combined.csv");
  CHECK(combined.header == "x,p_hat_star,p_tilde,p_tilde_normalized");
  CHECK(std::abs(oracle::trapezoid(combined.column(0), combined.column(3)) - 1.0) <= 1e-6);
  CHECK(json::parse(slurp(dir / "a" / "meta.json")).at("seed").get<std::uint64_t>() == 5);

  ::setenv("LOGSPLIT_SEED", "7", 1);
  const auto c = invoke({"-q", "experiment", (dir / "cfg.json").string(), "--out",
                         (dir / "c").string()});
  ::unsetenv("LOGSPLIT_SEED");
  REQUIRE(c.code == 0);
  CHECK(json::parse(slurp(dir / "c" / "report.json")).at("seed").get<std::uint64_t>() == 7);
  CHECK(slurp(dir / "a" / "results.csv") != slurp(dir / "c" / "results.csv"));
  fs::remove_all(dir);
}

TEST_CASE("generate then ingest") {
  const fs::path dir = scratch("ingest");
  const auto g = invoke({"-q", "generate", "--target", "gamma,120,60", "--subsets", "3", "--rows",
                         "600", "--reference-rows", "3000", "--seed", "11", "--out",
                         (dir / "data").string()});
  REQUIRE(g.code == 0);
  CHECK(logsplit::read_samples_csv(dir / "data" / "subset_3.csv").size() == 600);
  const json cfg{{"n_grid", {200, 400}},
                 {"replications", 3},
                 {"target",
                  {{"family", "csv"},
                   {"subsets", {"data/subset_1.csv", "data/subset_2.csv", "data/subset_3.csv"}},
                   {"reference", "data/reference.csv"}}},
                 {"seed", 3},
                 {"output_dir", "run"}};
  write_config(dir / "cfg.json", cfg);
  const auto r = invoke({"-q", "ingest-experiment", (dir / "cfg.json").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"results.csv", "report.json", "combined.csv", "meta.json",
                        "densities/subset_1.csv", "densities/subset_3.csv", "densities/full.csv"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  CHECK(invoke({"-q", "experiment", (dir / "cfg.json").string()}).code == 1);
  fs::remove_all(dir);
}

}  // TEST_SUITE
