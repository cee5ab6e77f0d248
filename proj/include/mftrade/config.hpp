#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mftrade/mean_field.hpp"

namespace mftrade {

using Json = nlohmann::ordered_json;

// Built-in experiment: 100 identical assets with eps = psi = 1e-3, Gamma = 1,
// beta M = 1, plus the sweep settings of the rate and slope experiments.
Json default_config();

// default_config() patched by the file (if any), then by key=value overrides.
// Keys are dotted paths ("lambda", "assets.0.epsilon", "slope_search.theta");
// values are parsed as JSON when possible and kept as strings otherwise.
Json load_config(const std::string& path,
                 const std::vector<std::pair<std::string, std::string>>& overrides);

// One per-asset block of the config; count > 1 repeats the asset.
struct AssetBlock {
  AssetSpec asset;
  std::size_t count = 1;
};

std::vector<AssetBlock> asset_blocks(const Json& config);
PortfolioSpec portfolio_from_config(const Json& config);

// Typed lookups that report the offending key as a parse error.
double get_double(const Json& config, const std::string& dotted);
std::size_t get_size(const Json& config, const std::string& dotted);
std::vector<double> get_doubles(const Json& config, const std::string& dotted);

}  // namespace mftrade
