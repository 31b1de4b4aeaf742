#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "logsplit/logspline.hpp"
#include "logsplit/mise_lab.hpp"

namespace logsplit::cli {

/// Schema violation in a config document; path is a JSON pointer.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::filesystem::path output_dir = "out";
  /// Sample size of the illustrative fit written next to the MISE table;
  /// 0 means the largest n in the grid.
  std::size_t illustration_n = 0;
  // csv targets: where the pools came from.
  std::vector<std::filesystem::path> subset_paths;
  std::optional<std::filesystem::path> reference_path;
};

/// Relative paths in the document resolve against base_dir.
[[nodiscard]] RunConfig parse_run_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);
/// Inverse of parse_run_config for the echo in report.json.
[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// "normal,2,1" | "gamma,1,1" | "uniform,0,1".
[[nodiscard]] SyntheticTarget parse_target_spec(const std::string& spec);

/// Fit written by `fit`, reloaded by `combine`.
[[nodiscard]] nlohmann::json fit_to_json(const LogsplineFit& fit);
[[nodiscard]] LogsplineFit fit_from_json(const nlohmann::json& doc, const std::string& source);

/// Entry point; returns the process exit code (0 ok, 1 usage or config
/// error, 2 statistical failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logsplit::cli
