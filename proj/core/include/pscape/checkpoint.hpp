#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pscape/model.hpp"
#include "pscape/text_io.hpp"

namespace pscape {

/// Text checkpoint:
///
///     PSCAPE-CKPT v1
///     config <key> <value>        (one line per ModelConfig field)
///     norm t_lo <v> / norm t_hi <v> / norm pd_scale <v>
///     norm pd_mean <count>
///     <values...>
///     tensor <name> <rows> <cols>
///     <one line per row>
///     end
///
/// Values are written in shortest round-trip form, so a reload is bitwise
/// identical. Leading '#' lines are ignored on read.
void write_checkpoint(std::ostream& os, const ModelParams& params,
                      const std::optional<ArtifactHeader>& header = std::nullopt);
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      const std::optional<ArtifactHeader>& header = std::nullopt);

ModelParams read_checkpoint(std::istream& is);
ModelParams read_checkpoint(const std::filesystem::path& path);

/// ModelConfig as ordered key/value strings (also used for artifact headers).
std::vector<std::pair<std::string, std::string>> config_pairs(const ModelConfig& config);

/// Applies one key/value to a config; throws ArgumentError for unknown keys.
void apply_config_value(ModelConfig& config, const std::string& key, const std::string& value);

} // namespace pscape
