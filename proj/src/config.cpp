#include "mftrade/config.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "mftrade/errors.hpp"

namespace mftrade {

namespace {

Json::json_pointer pointer_for(const std::string& dotted) {
  std::string ptr;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) detail::fail(ErrorKind::parse, dotted, "empty component in key '" + dotted + "'");
    ptr += '/' + part;
  }
  return Json::json_pointer(ptr);
}

const Json& at(const Json& config, const std::string& dotted) {
  const auto ptr = pointer_for(dotted);
  if (!config.contains(ptr)) detail::fail(ErrorKind::parse, dotted, "missing config key '" + dotted + "'");
  return config.at(ptr);
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

double number(const Json& v, const std::string& key) {
  if (!v.is_number()) detail::fail(ErrorKind::parse, key, "config key '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

Json default_config() {
  return Json::parse(R"({
    "lambda": 0.0,
    "seed": 42,
    "horizon": 2500000,
    "band": "corrected",
    "assets": [
      {"count": 100, "epsilon": 0.001, "psi": 0.001, "gamma": 1.0,
       "m_cap": 1.0, "beta": 1.0, "sigma": 0.0}
    ],
    "rate": {"q_hat": [0.05, 0.1, 0.2, 0.362, 1.0, 2.0, 3.0], "horizon": 2500000, "seeds": 20},
    "fig2": {"q_hat": [0.1, 0.2, 0.362, 0.5, 1.0], "horizon": 1000000},
    "slope_search": {"theta": 0.005, "jbar_over_eps": [1, 2, 5, 10], "grid_points": 11,
                     "rounds": 3, "horizon": 2500000, "seed_p": 1, "seed_r": 2},
    "risk": {"rho_model": "gaussian"},
    "simulate": {"write_r_path": false},
    "fit_ou": {"horizon": 2500000}
  })");
}

Json load_config(const std::string& path,
                 const std::vector<std::pair<std::string, std::string>>& overrides) {
  Json config = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorKind::io, "config", "cannot open config file '" + path + "'");
    Json file;
    try {
      file = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const Json::parse_error& e) {
      detail::fail(ErrorKind::parse, "config", std::string("config file is not valid JSON: ") + e.what());
    }
    if (!file.is_object()) detail::fail(ErrorKind::parse, "config", "config root must be an object");
    // Asset lists replace the default book instead of merging element-wise.
    config.merge_patch(file);
  }
  for (const auto& [key, value] : overrides) {
    try {
      config[pointer_for(key)] = parse_value(value);
    } catch (const Json::exception& e) {
      detail::fail(ErrorKind::parse, key, "cannot apply override '" + key + "': " + e.what());
    }
  }
  return config;
}

std::vector<AssetBlock> asset_blocks(const Json& config) {
  const Json& list = at(config, "assets");
  if (!list.is_array() || list.empty()) {
    detail::fail(ErrorKind::parse, "assets", "'assets' must be a non-empty array of asset blocks");
  }
  std::vector<AssetBlock> blocks;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& b = list[i];
    const std::string prefix = "assets." + std::to_string(i) + ".";
    auto field = [&](const char* name, std::optional<double> fallback = std::nullopt) {
      if (!b.contains(name)) {
        if (fallback) return *fallback;
        detail::fail(ErrorKind::parse, prefix + name, "missing config key '" + prefix + name + "'");
      }
      return number(b[name], prefix + name);
    };
    AssetBlock block{AssetSpec{OuParams::make(field("epsilon"), field("psi")), field("gamma"),
                               field("m_cap", 1.0), field("beta", 1.0), field("sigma", 0.0)}};
    const double count = field("count", 1.0);
    if (!(count >= 1.0) || count != std::floor(count)) {
      detail::fail(ErrorKind::parse, prefix + "count", "asset count must be a positive integer");
    }
    block.count = static_cast<std::size_t>(count);
    try {
      block.asset.validate();
    } catch (const Error& e) {
      throw Error(e.kind(), prefix + e.field(), e.what());
    }
    blocks.push_back(block);
  }
  return blocks;
}

PortfolioSpec portfolio_from_config(const Json& config) {
  PortfolioSpec p;
  for (const auto& block : asset_blocks(config)) {
    p.assets.insert(p.assets.end(), block.count, block.asset);
  }
  p.lambda_risk = get_double(config, "lambda");
  p.master_seed = get_size(config, "seed");
  p.validate();
  return p;
}

double get_double(const Json& config, const std::string& dotted) {
  return number(at(config, dotted), dotted);
}

std::size_t get_size(const Json& config, const std::string& dotted) {
  const Json& v = at(config, dotted);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d)) return static_cast<std::size_t>(d);
  }
  detail::fail(ErrorKind::parse, dotted, "config key '" + dotted + "' must be a non-negative integer");
}

std::vector<double> get_doubles(const Json& config, const std::string& dotted) {
  const Json& v = at(config, dotted);
  if (!v.is_array()) detail::fail(ErrorKind::parse, dotted, "config key '" + dotted + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, dotted));
  return out;
}

}  // namespace mftrade
