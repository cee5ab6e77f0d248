#include "mftrade/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mftrade/config.hpp"
#include "mftrade/errors.hpp"
#include "mftrade/mean_field.hpp"
#include "mftrade/ou_processes.hpp"
#include "mftrade/risk_calibration.hpp"
#include "mftrade/rng.hpp"
#include "mftrade/slope_optimizer.hpp"
#include "mftrade/threshold.hpp"
#include "mftrade/trading_rate.hpp"

namespace mftrade::cli {

namespace fs = std::filesystem;
using namespace nlohmann::literals;

namespace {

struct Context {
  std::string command;
  Json config;
  fs::path out_dir;
  std::size_t repetitions = 0;  // 0: use the config value
  std::ostream* out = nullptr;
};

// Walks a report and rejects NaN/Inf before anything is written.
void require_finite(const Json& j, const std::string& where) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>())) {
      throw NumericalFailureError("non-finite value in output field '" + where + "'",
                                  std::numeric_limits<double>::infinity());
    }
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) require_finite(v, where.empty() ? k : where + "." + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], where + "." + std::to_string(i));
  }
}

Json envelope(const Context& ctx) {
  Json j;
  j["command"] = ctx.command;
  j["config"] = ctx.config;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) detail::fail(ErrorKind::io, "out", "cannot write '" + path.string() + "'");
  f << text;
  if (!f) detail::fail(ErrorKind::io, "out", "write failed for '" + path.string() + "'");
}

void write_json(const Context& ctx, const std::string& name, const Json& result) {
  Json doc = envelope(ctx);
  doc["result"] = result;
  require_finite(doc, "");
  const fs::path path = ctx.out_dir / name;
  write_text(path, doc.dump(2) + "\n");
  *ctx.out << path.string() << "\n";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// First line is a '#' comment carrying the resolved config.
void write_csv(const Context& ctx, const std::string& name, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::string text = "# " + envelope(ctx).dump() + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) text += (c ? "," : "") + columns[c];
  text += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const double v = rows[r][c];
      if (!std::isfinite(v)) {
        throw NumericalFailureError("non-finite value in " + name + " column '" + columns[c] + "'",
                                    std::numeric_limits<double>::infinity());
      }
      text += (c ? "," : "") + format_double(v);
    }
    text += "\n";
  }
  const fs::path path = ctx.out_dir / name;
  write_text(path, text);
  *ctx.out << path.string() << "\n";
}

Json fit_json(const MleFit& f) {
  return Json{{"kappa_hat", f.kappa_hat},       {"diffusion_hat", f.diffusion_hat},
              {"stderr_kappa", f.stderr_kappa}, {"stderr_diffusion", f.stderr_diffusion},
              {"phi_hat", f.phi_hat},           {"n_obs", f.n_obs}};
}

Json rate_json(const RateResult& r) {
  Json j{{"j", r.j}, {"q_hat", r.q_hat}, {"method", std::string(to_string(r.method))}};
  if (r.method == RateMethod::monte_carlo) {
    j["stderr"] = r.std_error;
    j["flips"] = r.n_events;
  }
  j["warnings"] = r.warnings;
  return j;
}

std::size_t reps(const Context& ctx, const std::string& key) {
  return ctx.repetitions ? ctx.repetitions : get_size(ctx.config, key);
}

// ---------------------------------------------------------------- threshold

void cmd_threshold(const Context& ctx) {
  const auto blocks = asset_blocks(ctx.config);
  const PortfolioSpec portfolio = portfolio_from_config(ctx.config);
  const PortfolioCalibration cal = calibrate_portfolio(portfolio);
  Json assets = Json::array();
  std::size_t first = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const AssetSpec& a = blocks[b].asset;
    const RegimeReport regime = classify_regime(a.ou, a.gamma);
    const double q_star = base_threshold(a.ou, a.gamma);
    assets.push_back(Json{
        {"block", b},
        {"count", blocks[b].count},
        {"epsilon", a.ou.epsilon()},
        {"psi", a.ou.psi()},
        {"gamma", a.gamma},
        {"p_star", a.ou.p_star()},
        {"stationary_std", stationary_std(a.ou)},
        {"regime", std::string(to_string(regime.regime))},
        {"weak_ratio", regime.weak_ratio},
        {"strong_ratio", regime.strong_ratio},
        {"q_star", q_star},
        {"band_ratio_squared", band_ratio_squared(a.ou, a.gamma)},
        {"q1", cal.bands[first]},
        {"q_hat", band_to_q_hat(a.ou, cal.bands[first])},
        {"jbar_over_eps", cal.mf.jbar / a.ou.epsilon()},
        {"slope", cal.slopes[first]},
        {"theta", portfolio.theta(first)},
    });
    first += blocks[b].count;
  }
  write_json(ctx, "threshold.json",
             Json{{"jbar", cal.mf.jbar}, {"sigma_mf", cal.mf.sigma_mf}, {"assets", assets}});
}

// ---------------------------------------------------------------- rate

void cmd_rate(const Context& ctx) {
  const OuParams ou = asset_blocks(ctx.config).front().asset.ou;
  const std::size_t horizon = get_size(ctx.config, "rate.horizon");
  const std::uint64_t seed = get_size(ctx.config, "seed");
  std::vector<std::uint64_t> seeds(reps(ctx, "rate.seeds"));
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = stream_seed(seed, k);

  std::vector<std::vector<double>> rows;
  Json points = Json::array();
  for (double q_hat : get_doubles(ctx.config, "rate.q_hat")) {
    const double q = q_hat * ou.p_star();
    const RateResult exact = rate_exact(ou, q);
    const RateResult small = rate_small_band(ou, q);
    const RateResult large = rate_large_band(ou, q);
    const RateResult mc = rate_monte_carlo_pooled(ou, q, horizon, seeds);
    rows.push_back({q_hat, exact.j, small.j, large.j, mc.j, mc.std_error,
                    static_cast<double>(mc.n_events)});
    points.push_back(Json{{"q_hat", q_hat},
                          {"exact", rate_json(exact)},
                          {"small_band", rate_json(small)},
                          {"large_band", rate_json(large)},
                          {"monte_carlo", rate_json(mc)}});
  }
  write_csv(ctx, "rate.csv", {"q_hat", "j_exact", "j_small", "j_large", "j_mc", "stderr", "flips"},
            rows);
  write_json(ctx, "rate.json",
             Json{{"epsilon", ou.epsilon()}, {"psi", ou.psi()}, {"seeds", seeds}, {"points", points}});
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const Context& ctx) {
  const PortfolioSpec portfolio = portfolio_from_config(ctx.config);
  const PortfolioCalibration cal = calibrate_portfolio(portfolio);
  const std::string band = ctx.config.value("band", std::string("corrected"));
  if (band != "corrected" && band != "base") {
    detail::fail(ErrorKind::parse, "band", "band must be \"corrected\" or \"base\"");
  }
  std::vector<ThresholdPolicy> policies;
  for (std::size_t i = 0; i < portfolio.size(); ++i) {
    const auto& a = portfolio.assets[i];
    const double q = band == "base" ? base_threshold(a.ou, a.gamma) : cal.bands[i];
    policies.push_back({q, cal.slopes[i], portfolio.theta(i), a.m_cap});
  }
  SimulationOptions opts;
  if (ctx.config.contains("burn_in")) opts.burn_in = get_size(ctx.config, "burn_in");
  const SimulationReport rep =
      simulate_portfolio(portfolio, policies, get_size(ctx.config, "horizon"), opts);
  const RiskReport theory = realized_risk(portfolio, cal.slopes, cal.rhos);

  double r2 = 0.0;
  for (double r : rep.r_path.values) r2 += r * r;
  r2 /= static_cast<double>(rep.r_path.values.size());

  Json result{
      {"horizon", rep.horizon},
      {"burn_in", rep.burn_in},
      {"master_seed", portfolio.master_seed},
      {"pnl", rep.pnl},
      {"realized_risk", rep.realized_risk},
      {"risk_idiosyncratic", rep.risk_idiosyncratic},
      {"risk_factor", rep.risk_factor},
      {"r_mean_square", r2},
      {"flips", rep.flips},
      {"fraction_long", rep.fraction_long},
      {"pnl_per_asset", rep.pnl_per_asset},
      {"theory",
       Json{{"jbar", cal.mf.jbar},
            {"kappa", 2.0 * cal.mf.jbar},
            {"sigma_mf", cal.mf.sigma_mf},
            {"xi2", theory.xi2},
            {"er2", theory.er2},
            {"realized_risk", theory.realized},
            {"validity_margin", theory.validity_margin ? Json(*theory.validity_margin) : Json()},
            {"warnings", theory.warnings}}},
  };
  if (rep.mle) {
    result["mle"] = fit_json(*rep.mle);
  } else {
    result["mle"] = nullptr;
    result["mle_error"] = rep.mle_error;
  }
  write_json(ctx, "simulate.json", result);

  if (ctx.config.value("/simulate/write_r_path"_json_pointer, false)) {
    std::ostringstream csv;
    csv << "# " << envelope(ctx).dump() << "\n";
    write_path_csv(rep.r_path, csv);
    write_text(ctx.out_dir / "r_path.csv", csv.str());
    *ctx.out << (ctx.out_dir / "r_path.csv").string() << "\n";
  }
}

// ---------------------------------------------------------------- slope search

struct SlopeSetup {
  OuParams ou;
  double gamma;
  double theta;
  double sigma_mf;
  SlopeSearchConfig cfg;
};

SlopeSetup slope_setup(const Context& ctx) {
  const Json& c = ctx.config;
  const AssetSpec asset = asset_blocks(c).front().asset;
  const PortfolioSpec portfolio = portfolio_from_config(c);
  SlopeSearchConfig cfg;
  cfg.grid_points = get_size(c, "slope_search.grid_points");
  cfg.rounds = get_size(c, "slope_search.rounds");
  cfg.horizon = get_size(c, "slope_search.horizon");
  cfg.seed_p = get_size(c, "slope_search.seed_p");
  cfg.seed_r = get_size(c, "slope_search.seed_r");
  cfg.throw_on_boundary = c.value("/slope_search/fail_on_boundary"_json_pointer, false);
  if (c.contains("/slope_search/range"_json_pointer)) {
    const auto r = get_doubles(c, "slope_search.range");
    if (r.size() != 2) detail::fail(ErrorKind::parse, "slope_search.range", "range must be [lo, hi]");
    cfg.initial_range = std::pair{r[0], r[1]};
  }
  cfg.validate();
  return {asset.ou, asset.gamma, get_double(c, "slope_search.theta"),
          std::sqrt(portfolio.sigma2()), cfg};
}

void cmd_slope_search(const Context& ctx) {
  const SlopeSetup s = slope_setup(ctx);
  const double ratio = get_doubles(ctx.config, "slope_search.jbar_over_eps").at(0);
  const MeanFieldParams mf{ratio * s.ou.epsilon(), s.sigma_mf};
  const SlopeSearchResult res = search_optimal_slope(s.ou, s.gamma, s.theta, mf, s.cfg);

  std::vector<std::vector<double>> rows;
  Json ranges = Json::array();
  for (const auto& p : res.pnl_curve) {
    rows.push_back({static_cast<double>(p.round), p.slope, p.pnl});
  }
  for (const auto& [lo, hi] : res.ranges) ranges.push_back(Json::array({lo, hi}));
  write_csv(ctx, "pnl_curve.csv", {"round", "slope", "pnl"}, rows);
  write_json(ctx, "slope_search.json",
             Json{{"jbar_over_eps", ratio},
                  {"s_hat", res.s_hat},
                  {"s_theory", res.s_theory},
                  {"relative_error", std::abs(res.s_hat - res.s_theory) / res.s_theory},
                  {"ranges", ranges},
                  {"boundary_hit", res.boundary_hit},
                  {"flat_curve", res.flat_curve},
                  {"warnings", res.warnings}});
}

void cmd_fig3(const Context& ctx) {
  const SlopeSetup s = slope_setup(ctx);
  const auto ratios = get_doubles(ctx.config, "slope_search.jbar_over_eps");
  const std::size_t n_rep = ctx.repetitions ? ctx.repetitions : 1;
  const auto rows = sweep_optimal_slope(s.ou, s.gamma, s.theta, s.sigma_mf, ratios, s.cfg, n_rep);

  std::vector<std::vector<double>> table;
  Json list = Json::array();
  for (const auto& r : rows) {
    table.push_back({r.jbar_over_eps, r.s_hat, r.s_theory});
    list.push_back(Json{{"jbar_over_eps", r.jbar_over_eps},
                        {"s_hat", r.s_hat},
                        {"s_theory", r.s_theory},
                        {"s_hat_runs", r.s_hat_runs}});
  }
  write_csv(ctx, "fig3.csv", {"jbar_over_eps", "s_hat", "s_theory"}, table);
  write_json(ctx, "fig3.json", Json{{"repetitions", n_rep}, {"rows", list}});
}

// ---------------------------------------------------------------- fig2

void cmd_fig2(const Context& ctx) {
  PortfolioSpec portfolio = portfolio_from_config(ctx.config);
  portfolio.lambda_risk = 0.0;  // theta = 0: plain bands
  const std::size_t horizon = get_size(ctx.config, "fig2.horizon");
  const OuParams ou = portfolio.assets.front().ou;

  std::vector<std::vector<double>> rows;
  Json points = Json::array();
  const auto q_hats = get_doubles(ctx.config, "fig2.q_hat");
  for (std::size_t k = 0; k < q_hats.size(); ++k) {
    std::vector<double> bands;
    std::vector<ThresholdPolicy> policies;
    for (const auto& a : portfolio.assets) {
      bands.push_back(q_hats[k] * a.ou.p_star());
      policies.push_back({bands.back(), 0.0, 0.0, a.m_cap});
    }
    PortfolioSpec run = portfolio;
    run.master_seed = stream_seed(portfolio.master_seed, k);
    const SimulationReport rep = simulate_portfolio(run, policies, horizon);
    if (!rep.mle) throw Error(ErrorKind::non_stationary_fit, "fig2", rep.mle_error);
    const double q = bands.front();
    const double j_exact = mean_field_params(run, bands).jbar;
    const double j_small = rate_small_band(ou, q).j;
    const double jbar_sim = rep.mle->kappa_hat / 2.0;
    const double se = rep.mle->stderr_kappa / 2.0;
    rows.push_back({q_hats[k], jbar_sim, se, j_small, j_exact});
    points.push_back(Json{{"q_hat", q_hats[k]},
                          {"master_seed", run.master_seed},
                          {"jbar_simulated", jbar_sim},
                          {"stderr", se},
                          {"j_small_band", j_small},
                          {"j_exact", j_exact},
                          {"mle", fit_json(*rep.mle)}});
  }
  write_csv(ctx, "fig2.csv", {"q_hat", "jbar_simulated", "stderr", "j_small_band", "j_exact"}, rows);
  write_json(ctx, "fig2.json", Json{{"horizon", horizon}, {"points", points}});
}

// ---------------------------------------------------------------- risk

void cmd_risk(const Context& ctx) {
  PortfolioSpec portfolio = portfolio_from_config(ctx.config);
  const std::string model_name = ctx.config.value("/risk/rho_model"_json_pointer, std::string("gaussian"));
  RhoModel model;
  if (model_name == "gaussian") {
    model = RhoModel::gaussian;
  } else if (model_name == "conditional") {
    model = RhoModel::conditional;
  } else {
    detail::fail(ErrorKind::parse, "risk.rho_model", "rho_model must be \"gaussian\" or \"conditional\"");
  }
  const PortfolioCalibration cal = calibrate_portfolio(portfolio, model);
  Json result;
  const auto target_ptr = "/risk/target"_json_pointer;
  if (ctx.config.contains(target_ptr) && !ctx.config.at(target_ptr).is_null()) {
    const double target = get_double(ctx.config, "risk.target");
    portfolio.lambda_risk = lambda_for_target_risk(portfolio, cal.slopes, cal.rhos, target);
    result["target"] = target;
  }
  const RiskReport r = realized_risk(portfolio, cal.slopes, cal.rhos);
  result["lambda"] = r.lambda_risk;
  result["rho_model"] = model_name;
  result["r0"] = r.r0;
  result["r_min"] = r.r_min;
  result["sigma2"] = r.sigma2;
  result["xi2"] = r.xi2;
  result["er2"] = r.er2;
  result["realized"] = r.realized;
  result["validity_margin"] = r.validity_margin ? Json(*r.validity_margin) : Json();
  result["jbar"] = cal.mf.jbar;
  result["warnings"] = r.warnings;
  write_json(ctx, "risk.json", result);
}

// ---------------------------------------------------------------- fit-ou

Path read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) detail::fail(ErrorKind::io, "fit_ou.path", "cannot open '" + file + "'");
  Path path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("step", 0) == 0) continue;
    const auto comma = line.find(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || !std::isfinite(v)) {
      detail::fail(ErrorKind::parse, "fit_ou.path",
                   "bad value on line " + std::to_string(lineno) + " of '" + file + "'");
    }
    path.values.push_back(v);
  }
  return path;
}

void cmd_fit_ou(const Context& ctx) {
  Json result;
  Path path;
  const auto path_ptr = "/fit_ou/path"_json_pointer;
  if (ctx.config.contains(path_ptr) && ctx.config.at(path_ptr).is_string()) {
    const std::string file = ctx.config.at(path_ptr).get<std::string>();
    path = read_path_csv(file);
    result["source"] = file;
  } else {
    const OuParams ou = asset_blocks(ctx.config).front().asset.ou;
    const std::uint64_t seed = get_size(ctx.config, "seed");
    path = simulate_ar1(ou, get_size(ctx.config, "fit_ou.horizon"), seed);
    result["source"] = "simulated";
    result["seed"] = seed;
    result["kappa_true"] = -std::log1p(-ou.epsilon());
    result["epsilon"] = ou.epsilon();
    result["psi"] = ou.psi();
  }
  result["fit"] = fit_json(fit_ou_mle(path));
  write_json(ctx, "fit_ou.json", result);
}

void dispatch(const Context& ctx) {
  const std::string& c = ctx.command;
  if (c == "threshold") return cmd_threshold(ctx);
  if (c == "rate") return cmd_rate(ctx);
  if (c == "simulate") return cmd_simulate(ctx);
  if (c == "slope-search") return cmd_slope_search(ctx);
  if (c == "risk-calibrate") return cmd_risk(ctx);
  if (c == "fit-ou") return cmd_fit_ou(ctx);
  if (c == "fig2") return cmd_fig2(ctx);
  if (c == "fig3") return cmd_fig3(ctx);
  detail::fail(ErrorKind::input, "command", "unknown command '" + c + "'");
}

std::string usage_text() {
  std::string s = "usage: mftrade <command> [--config FILE] [--out DIR] [--seed N] "
                  "[--set KEY=VALUE]... [--repetitions N]\ncommands:";
  for (auto c : kCommands) s += " " + std::string(c);
  return s + "\n";
}

}  // namespace

bool is_command(std::string_view name) {
  return std::find(kCommands.begin(), kCommands.end(), name) != kCommands.end();
}

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (!is_command(rc.command)) {
    err << "unknown command '" << rc.command << "'\n" << usage_text();
    return 1;
  }
  const fs::path out_dir = rc.output_dir.empty() ? fs::path(".") : fs::path(rc.output_dir);
  try {
    Context ctx;
    ctx.command = rc.command;
    ctx.out = &out;
    ctx.out_dir = out_dir;
    auto overrides = rc.overrides;
    if (rc.master_seed) overrides.emplace_back("seed", std::to_string(*rc.master_seed));
    ctx.config = load_config(rc.config_path, overrides);
    if (rc.repetitions) {
      if (*rc.repetitions == 0) detail::fail(ErrorKind::parse, "repetitions", "repetitions must be >= 1");
      ctx.repetitions = *rc.repetitions;
      ctx.config["repetitions"] = *rc.repetitions;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
      detail::fail(ErrorKind::io, "out", "cannot create output directory '" + out_dir.string() + "'");
    }
    dispatch(ctx);
    return 0;
  } catch (const Error& e) {
    Json rec{{"error",
              Json{{"kind", std::string(to_string(e.kind()))},
                   {"field", e.field()},
                   {"message", e.what()},
                   {"exit_code", exit_code(e.kind())}}}};
    err << rec.dump() << "\n";
    std::error_code ec;
    if (fs::is_directory(out_dir, ec)) {
      std::ofstream f(out_dir / "error.json");
      if (f) f << rec.dump(2) << "\n";
    }
    return exit_code(e.kind());
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Mean-field multi-asset trading with linear costs"};
  RunConfig rc;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::size_t repetitions = 0;
  app.add_option("command", rc.command, "one of: threshold rate simulate slope-search "
                                        "risk-calibrate fit-ou fig2 fig3")
      ->required();
  app.add_option("--config", rc.config_path, "JSON experiment file (defaults built in)");
  app.add_option("--out", rc.output_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--set", sets, "override KEY=VALUE, KEY is a dotted config path");
  auto* rep_opt = app.add_option("--repetitions", repetitions, "Monte Carlo repetitions");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << usage_text();
    return 1;
  }
  if (*seed_opt) rc.master_seed = seed;
  if (*rep_opt) rc.repetitions = repetitions;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << Json{{"error", Json{{"kind", "parse"},
                                       {"field", "--set"},
                                       {"message", "expected KEY=VALUE, got '" + s + "'"},
                                       {"exit_code", exit_code(ErrorKind::parse)}}}}
                       .dump()
                << "\n";
      return exit_code(ErrorKind::parse);
    }
    rc.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return run(rc, std::cout, std::cerr);
}

}  // namespace mftrade::cli
