#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace logsplit {

/// One real per line; an optional first line `theta` is skipped, as are
/// blank lines. Raises ParseError (with the 1-based line number) on a
/// non-numeric row and EmptySubset when no values remain.
[[nodiscard]] std::vector<double> parse_samples(std::istream& in, const std::string& source);

[[nodiscard]] std::vector<double> read_samples_csv(const std::filesystem::path& path);

/// Writes the `theta` header and one value per line at round-trip precision.
void write_samples_csv(const std::filesystem::path& path, std::span<const double> values);

}  // namespace logsplit
