#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "logsplit/errors.hpp"
#include "logsplit/sample_io.hpp"
#include "logsplit_cli/cli.hpp"

namespace logsplit::cli {

namespace {

using nlohmann::json;

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(child(path, key), "unknown field");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(child(path, key), "required field missing");
  return obj.at(key);
}

double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ConfigError(path, "expected a non-negative integer");
  throw ConfigError(path, "expected an integer");
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

template <typename Parse>
void optional_field(const json& obj, const std::string& key, const std::string& path,
                    Parse&& parse) {
  if (obj.contains(key)) parse(obj.at(key), child(path, key));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

SyntheticTarget parse_synthetic(const json& t, const std::string& path,
                                const std::string& family) {
  auto param = [&](const char* key) { return as_real(require(t, key, path), child(path, key)); };
  if (family == "normal") {
    reject_unknown(t, path, {"family", "mu", "sigma"});
    return NormalTarget{param("mu"), param("sigma")};
  }
  if (family == "gamma") {
    reject_unknown(t, path, {"family", "shape", "rate"});
    return GammaTarget{param("shape"), param("rate")};
  }
  if (family == "uniform") {
    reject_unknown(t, path, {"family", "lo", "hi"});
    return UniformTarget{param("lo"), param("hi")};
  }
  throw ConfigError(child(path, "family"),
                    fmt::format("unknown family '{}' (normal, gamma, uniform, csv)", family));
}

// Moves an InvalidArgument from validate() ("/field: what") into a ConfigError.
[[noreturn]] void rethrow_as_config(const Error& e) {
  std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (what.starts_with(prefix)) what.erase(0, prefix.size());
  const auto colon = what.find(": ");
  if (what.starts_with("/") && colon != std::string::npos) {
    throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
  }
  throw ConfigError("", what);
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  reject_unknown(doc, "",
                 {"M", "n_grid", "replications", "beta", "j", "k", "l", "target", "support",
                  "support_padding", "seed", "dx_constant", "max_retries", "jobs", "fit",
                  "output_dir", "illustration_n"});
  RunConfig run;
  ExperimentConfig& c = run.experiment;

  const json& grid = require(doc, "n_grid", "");
  if (!grid.is_array()) throw ConfigError("/n_grid", "expected an array of sample sizes");
  c.n_grid.clear();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    c.n_grid.push_back(as_count(grid[i], fmt::format("/n_grid/{}", i)));
  }
  optional_field(doc, "replications", "", [&](const json& v, const std::string& p) {
    c.replications = as_count(v, p);
  });
  optional_field(doc, "beta", "", [&](const json& v, const std::string& p) { c.beta = as_real(v, p); });
  optional_field(doc, "j", "", [&](const json& v, const std::string& p) { c.j = as_int(v, p); });
  optional_field(doc, "k", "", [&](const json& v, const std::string& p) { c.k = as_int(v, p); });
  optional_field(doc, "l", "", [&](const json& v, const std::string& p) { c.l = as_int(v, p); });
  optional_field(doc, "seed", "", [&](const json& v, const std::string& p) { c.seed = as_count(v, p); });
  optional_field(doc, "dx_constant", "", [&](const json& v, const std::string& p) {
    c.dx_constant = as_real(v, p);
  });
  optional_field(doc, "support_padding", "", [&](const json& v, const std::string& p) {
    c.support_padding = as_real(v, p);
  });
  optional_field(doc, "max_retries", "", [&](const json& v, const std::string& p) {
    c.max_retries = as_count(v, p);
  });
  optional_field(doc, "jobs", "", [&](const json& v, const std::string& p) { c.jobs = as_count(v, p); });
  optional_field(doc, "output_dir", "", [&](const json& v, const std::string& p) {
    run.output_dir = resolve(base_dir, as_string(v, p));
  });
  optional_field(doc, "illustration_n", "", [&](const json& v, const std::string& p) {
    run.illustration_n = as_count(v, p);
  });
  optional_field(doc, "support", "", [&](const json& v, const std::string& p) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(p, "expected [a, b]");
    c.support = Interval{as_real(v[0], p + "/0"), as_real(v[1], p + "/1")};
  });
  optional_field(doc, "fit", "", [&](const json& v, const std::string& p) {
    if (!v.is_object()) throw ConfigError(p, "expected an object");
    reject_unknown(v, p, {"tolerance", "max_iterations", "divergence_cap", "screen_empty_basis"});
    FitOptions& f = c.fit_options;
    optional_field(v, "tolerance", p, [&](const json& x, const std::string& q) {
      f.tolerance = as_real(x, q);
      if (!(f.tolerance > 0.0)) throw ConfigError(q, "must be positive");
    });
    optional_field(v, "max_iterations", p, [&](const json& x, const std::string& q) {
      f.max_iterations = as_int(x, q);
      if (f.max_iterations < 1) throw ConfigError(q, "must be >= 1");
    });
    optional_field(v, "divergence_cap", p, [&](const json& x, const std::string& q) {
      f.divergence_cap = as_real(x, q);
      if (!(f.divergence_cap > 0.0)) throw ConfigError(q, "must be positive");
    });
    optional_field(v, "screen_empty_basis", p, [&](const json& x, const std::string& q) {
      if (!x.is_boolean()) throw ConfigError(q, "expected true or false");
      f.screen_empty_basis = x.get<bool>();
    });
  });

  const json& target = require(doc, "target", "");
  if (!target.is_object()) throw ConfigError("/target", "expected an object");
  const std::string family = as_string(require(target, "family", "/target"), "/target/family");
  if (family == "csv") {
    reject_unknown(target, "/target", {"family", "subsets", "reference"});
    const json& files = require(target, "subsets", "/target");
    if (!files.is_array() || files.empty()) {
      throw ConfigError("/target/subsets", "expected a non-empty array of CSV paths");
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      run.subset_paths.push_back(
          resolve(base_dir, as_string(files[i], fmt::format("/target/subsets/{}", i))));
    }
    optional_field(target, "reference", "/target", [&](const json& v, const std::string& p) {
      run.reference_path = resolve(base_dir, as_string(v, p));
    });
    IngestedTarget ingested;
    ingested.subsets = ingest_subsets(run.subset_paths, c.support_padding);
    if (run.reference_path) ingested.reference = read_samples_csv(*run.reference_path);
    c.subsets = ingested.subsets.size();
    c.target = std::move(ingested);
  } else {
    c.target = parse_synthetic(target, "/target", family);
  }
  optional_field(doc, "M", "", [&](const json& v, const std::string& p) {
    const std::size_t m = as_count(v, p);
    if (family == "csv" && m != c.subsets) {
      throw ConfigError(p, fmt::format("{} subsets declared but {} files listed", m, c.subsets));
    }
    c.subsets = m;
  });
  if (family != "csv" && !doc.contains("M")) throw ConfigError("/M", "required field missing");

  try {
    validate(c);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    rethrow_as_config(e);
  }
  if (run.illustration_n == 1) throw ConfigError("/illustration_n", "must be 0 or >= 2");
  return run;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_run_config(doc, path.parent_path());
}

json to_json(const RunConfig& run) {
  const ExperimentConfig& c = run.experiment;
  json doc;
  doc["M"] = c.subsets;
  doc["n_grid"] = c.n_grid;
  doc["replications"] = c.replications;
  doc["beta"] = c.beta;
  doc["j"] = c.j;
  doc["k"] = c.k;
  doc["l"] = c.l;
  doc["seed"] = c.seed;
  doc["dx_constant"] = c.dx_constant;
  doc["support_padding"] = c.support_padding;
  doc["max_retries"] = c.max_retries;
  doc["fit"] = {{"tolerance", c.fit_options.tolerance},
                {"max_iterations", c.fit_options.max_iterations},
                {"divergence_cap", c.fit_options.divergence_cap},
                {"screen_empty_basis", c.fit_options.screen_empty_basis}};
  if (c.support) doc["support"] = {c.support->lo, c.support->hi};
  if (const auto* synthetic = std::get_if<SyntheticTarget>(&c.target)) {
    doc["target"] = std::visit(
        [](const auto& t) -> json {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, NormalTarget>) {
            return {{"family", "normal"}, {"mu", t.mu}, {"sigma", t.sigma}};
          } else if constexpr (std::is_same_v<T, GammaTarget>) {
            return {{"family", "gamma"}, {"shape", t.shape}, {"rate", t.rate}};
          } else {
            return {{"family", "uniform"}, {"lo", t.lo}, {"hi", t.hi}};
          }
        },
        *synthetic);
  } else {
    json files = json::array();
    for (const auto& p : run.subset_paths) files.push_back(p.generic_string());
    doc["target"] = {{"family", "csv"}, {"subsets", files}};
    if (run.reference_path) doc["target"]["reference"] = run.reference_path->generic_string();
  }
  return doc;
}

SyntheticTarget parse_target_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("target '{}' is not family,param1,param2", spec));
  }
  double p[2];
  for (int i = 0; i < 2; ++i) {
    try {
      std::size_t used = 0;
      p[i] = std::stod(parts[i + 1], &used);
      if (used != parts[i + 1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("target parameter '{}' is not a number", parts[i + 1]));
    }
  }
  json t;
  if (parts[0] == "normal") t = {{"family", "normal"}, {"mu", p[0]}, {"sigma", p[1]}};
  else if (parts[0] == "gamma") t = {{"family", "gamma"}, {"shape", p[0]}, {"rate", p[1]}};
  else if (parts[0] == "uniform") t = {{"family", "uniform"}, {"lo", p[0]}, {"hi", p[1]}};
  else throw Error(ErrorCode::InvalidArgument, fmt::format("unknown family '{}'", parts[0]));
  SyntheticTarget target = parse_synthetic(t, "/target", parts[0]);
  validate(target);
  return target;
}

json fit_to_json(const LogsplineFit& f) {
  const KnotSequence& knots = f.model.knots();
  return {{"support", {knots.support().lo, knots.support().hi}},
          {"order", knots.order()},
          {"knots", knots.knots()},
          {"coefficients", std::vector<double>(f.y_hat.span().begin(), f.y_hat.span().end())},
          {"log_normalizer", f.log_normalizer},
          {"sample_count", f.sample_count},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"seed", nullptr}};
}

LogsplineFit fit_from_json(const json& doc, const std::string& source) {
  auto fail = [&](const std::string& field, const std::string& what) -> Error {
    return Error(ErrorCode::ParseError, fmt::format("{}: /{}: {}", source, field, what));
  };
  try {
    const auto knots = doc.at("knots").get<std::vector<double>>();
    const int order = doc.at("order").get<int>();
    const auto coeffs = doc.at("coefficients").get<std::vector<double>>();
    LogsplineModel model(KnotSequence(knots, order));
    if (coeffs.size() != model.dimension()) {
      throw fail("coefficients", fmt::format("{} values for {} B-splines", coeffs.size(),
                                             model.dimension()));
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                          static_cast<Eigen::Index>(coeffs.size()));
    CoefficientVector yv = CoefficientVector::centered(std::move(y));
    const double c = log_normalizer(model, yv.span());
    const std::size_t count = doc.value("sample_count", std::size_t{0});
    const bool converged = doc.value("converged", true);
    return LogsplineFit{std::move(model), std::move(yv), c, count, converged,
                        doc.value("iterations", 0), 0.0};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", source, e.what()));
  }
}

}  // namespace logsplit::cli
