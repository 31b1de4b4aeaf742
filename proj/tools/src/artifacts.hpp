#pragma once

#include <filesystem>
#include <functional>

#include <json.hpp>

#include "logsplit/consensus.hpp"
#include "logsplit/mise_lab.hpp"

namespace logsplit::cli {

/// x,density on `points` equally spaced abscissae covering [a,b].
void write_density_table(const std::filesystem::path& path,
                         const std::function<double(double)>& density, Interval support,
                         std::size_t points);

/// x,p_hat_star,p_tilde,p_tilde_normalized on the interpolation nodes, each
/// gap split evenly so that there are at least `min_rows` rows.
void write_combined_table(const std::filesystem::path& path, const ProductEstimator& product,
                          const CompositeInterpolant& interpolant, std::size_t min_rows);

[[nodiscard]] nlohmann::json combined_meta(const ProductEstimator& product,
                                           const CompositeInterpolant& interpolant,
                                           double sample_norm);

/// n,mean_ise,std_ise,bound_value
void write_results_csv(const std::filesystem::path& path, const MiseReport& report);

[[nodiscard]] nlohmann::json report_json(const MiseReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace logsplit::cli
