#include "logsplit/sample_io.hpp"

#include <cerrno>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "logsplit/errors.hpp"

namespace logsplit {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<double> parse_samples(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view field = trim(line);
    if (field.empty()) continue;
    if (line_no == 1 && field == "theta") continue;
    // strtod accepts the forms the writer emits and common exponent spellings.
    const std::string text(field);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: '{}' is not a finite real number", source, line_no, text));
    }
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorCode::EmptySubset, fmt::format("{}: no samples", source));
  return values;
}

std::vector<double> read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open '{}'", path.string()));
  }
  return parse_samples(in, path.string());
}

void write_samples_csv(const std::filesystem::path& path, std::span<const double> values) {
  auto out = fmt::output_file(path.string());
  out.print("theta\n");
  for (double v : values) out.print("{:.17g}\n", v);
}

}  // namespace logsplit
