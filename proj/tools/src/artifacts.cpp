#include "artifacts.hpp"

#include <cmath>
#include <fstream>

#include <fmt/os.h>

#include "logsplit/errors.hpp"

namespace logsplit::cli {

namespace {

double grid_point(Interval s, std::size_t i, std::size_t last) {
  if (i == last) return s.hi;
  return s.lo + s.length() * (static_cast<double>(i) / static_cast<double>(last));
}

}  // namespace

void write_density_table(const std::filesystem::path& path,
                         const std::function<double(double)>& density, Interval support,
                         std::size_t points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "density table needs >= 2 points");
  auto out = fmt::output_file(path.string());
  out.print("x,density\n");
  for (std::size_t i = 0; i < points; ++i) {
    const double x = grid_point(support, i, points - 1);
    out.print("{:.17g},{:.17g}\n", x, density(x));
  }
}

void write_combined_table(const std::filesystem::path& path, const ProductEstimator& product,
                          const CompositeInterpolant& interpolant, std::size_t min_rows) {
  const InterpolationGrid& grid = interpolant.grid();
  const std::size_t gaps = grid.num_nodes() - 1;
  const std::size_t split = std::max<std::size_t>(1, (min_rows + gaps - 2) / gaps);
  const std::size_t last = gaps * split;
  auto out = fmt::output_file(path.string());
  out.print("x,p_hat_star,p_tilde,p_tilde_normalized\n");
  for (std::size_t i = 0; i <= last; ++i) {
    const double x = i % split == 0 ? grid.node(i / split) : grid_point(grid.support(), i, last);
    out.print("{:.17g},{:.17g},{:.17g},{:.17g}\n", x, product_eval(product, x), interpolant(x),
              normalized_eval(interpolant, x));
  }
}

nlohmann::json combined_meta(const ProductEstimator& product,
                             const CompositeInterpolant& interpolant, double sample_norm) {
  const InterpolationGrid& grid = interpolant.grid();
  return {{"a", grid.support().lo},
          {"b", grid.support().hi},
          {"l", grid.degree()},
          {"dx", grid.dx()},
          {"pieces", grid.pieces()},
          {"lambda_tilde", interpolant.lambda_tilde()},
          {"M", product.size()},
          {"k", product.spline_order()},
          {"sample_norm", sample_norm},
          {"negative_lobe_mass", interpolant.negative_lobe_mass()}};
}

void write_results_csv(const std::filesystem::path& path, const MiseReport& report) {
  auto out = fmt::output_file(path.string());
  out.print("n,mean_ise,std_ise,bound_value\n");
  for (const MiseRow& row : report.rows) {
    out.print("{},{:.17g},{:.17g},{:.17g}\n", row.n, row.mean_ise, row.std_ise, row.bound_value);
  }
}

nlohmann::json report_json(const MiseReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MiseRow& row : report.rows) {
    rows.push_back({{"n", row.n},
                    {"mean_ise", row.mean_ise},
                    {"std_ise", row.std_ise},
                    {"bound_value", row.bound_value},
                    {"succeeded", row.succeeded},
                    {"failed", row.failed}});
  }
  return {{"slope", report.slope},
          {"intercept", report.intercept},
          {"theoretical_slope", report.theoretical_slope},
          {"bound_constant", report.bound_constant},
          {"rows", rows}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace logsplit::cli
