#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pscape {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// Fixed-point text with `digits` decimals (used by the trajectory format).
std::string format_fixed(double x, int digits);

/// Strict parse of a whole token; returns false on trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

/// Reproducibility header written at the top of every output artifact.
///
/// All lines start with '#'. The `# created:` line is the only field that is
/// allowed to differ between two runs with identical configuration.
struct ArtifactHeader {
  std::string tool = "pscape";
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  bool timestamp = true;
};

void write_header(std::ostream& os, const ArtifactHeader& header);

/// Flat `key = value` records; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& is);
void write_key_values(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv);

} // namespace pscape
