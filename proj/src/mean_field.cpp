#include "mftrade/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mftrade/errors.hpp"
#include "mftrade/trading_rate.hpp"

namespace mftrade {

double PortfolioSpec::theta(std::size_t i) const {
  return lambda_risk * assets.at(i).beta / std::sqrt(static_cast<double>(assets.size()));
}

double PortfolioSpec::sigma2() const {
  double s = 0.0;
  for (const auto& a : assets) s += a.beta * a.beta * a.m_cap * a.m_cap;
  return s / static_cast<double>(assets.size());
}

void PortfolioSpec::validate() const {
  detail::require(!assets.empty(), ErrorKind::input, "assets", "portfolio needs at least one asset");
  detail::require(std::isfinite(lambda_risk), ErrorKind::parameter_domain, "lambda",
                  "lambda must be finite");
  for (const auto& a : assets) a.validate();
}

void MeanFieldParams::validate() const {
  detail::require(jbar > 0.0 && std::isfinite(jbar), ErrorKind::parameter_domain, "jbar",
                  "jbar must be > 0");
  detail::require(sigma_mf > 0.0 && std::isfinite(sigma_mf), ErrorKind::parameter_domain,
                  "sigma_mf", "sigma_mf must be > 0");
}

ConditionalProb conditional_position_prob(const AssetSpec& asset, double r, double sigma_mf,
                                          std::size_t n_assets) {
  detail::require(sigma_mf > 0.0, ErrorKind::degenerate, "sigma_mf",
                  "Sigma = 0: the conditional law of the position is undefined");
  detail::require(n_assets >= 1, ErrorKind::parameter_domain, "n_assets", "n_assets must be >= 1");
  const double shift =
      r * asset.beta * asset.m_cap / (sigma_mf * sigma_mf * std::sqrt(static_cast<double>(n_assets)));
  ConditionalProb out;
  out.clamped = std::abs(shift) > 1.0;
  out.p_plus = 0.5 * (1.0 + std::clamp(shift, -1.0, 1.0));
  out.p_minus = 1.0 - out.p_plus;
  return out;
}

MeanFieldParams mean_field_params(const PortfolioSpec& portfolio, std::span<const double> bands) {
  portfolio.validate();
  MeanFieldParams mf;
  mf.jbar = portfolio_rate(portfolio.assets, bands);
  mf.sigma_mf = std::sqrt(portfolio.sigma2());
  return mf;
}

Path simulate_mean_field_ou(const MeanFieldParams& params, std::size_t horizon, std::uint64_t seed) {
  params.validate();
  detail::require(horizon >= 2, ErrorKind::parameter_domain, "horizon", "horizon must be >= 2");
  if (2.0 * params.jbar >= 1.0) {
    std::ostringstream os;
    os << "2 jbar dt = " << 2.0 * params.jbar << " >= 1: unstable discretisation, reduce dt";
    detail::fail(ErrorKind::stability, "jbar", os.str());
  }
  const auto ou = OuParams::make(2.0 * params.jbar, 2.0 * params.sigma_mf * std::sqrt(params.jbar));
  return simulate_ar1(ou, horizon, seed);
}

namespace {

struct AssetState {
  Ar1Stepper stepper;
  double p = 0.0;
  double pos = 0.0;
  double theta = 0.0;
  double band_slope = 0.0;  // S theta
  double q1 = 0.0;
  double m = 1.0;
  double gamma = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
};

}  // namespace

SimulationReport simulate_portfolio(const PortfolioSpec& portfolio,
                                    std::span<const ThresholdPolicy> policies, std::size_t horizon,
                                    const SimulationOptions& options) {
  portfolio.validate();
  const std::size_t n = portfolio.size();
  detail::require(policies.size() == n, ErrorKind::input, "policies", "one policy per asset is required");
  detail::require(options.bins >= 2, ErrorKind::parameter_domain, "bins", "need at least 2 bins");

  double min_eps = 1.0;
  for (const auto& a : portfolio.assets) min_eps = std::min(min_eps, a.ou.epsilon());
  const std::size_t burn_in =
      options.burn_in.value_or(static_cast<std::size_t>(std::ceil(10.0 / min_eps)));
  if (horizon < burn_in + 1000) {
    std::ostringstream os;
    os << "horizon " << horizon << " must exceed burn-in " << burn_in << " by at least 1000 steps";
    detail::fail(ErrorKind::parameter_domain, "horizon", os.str());
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::vector<AssetState> state;
  state.reserve(n);
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = portfolio.assets[i];
    policies[i].validate();
    AssetState s{Ar1Stepper(a.ou, make_engine(portfolio.master_seed, i))};
    s.p = s.stepper.stationary_draw();
    s.m = a.m_cap;
    s.pos = s.p >= 0.0 ? s.m : -s.m;
    s.theta = portfolio.theta(i);
    s.band_slope = policies[i].slope * s.theta;
    s.q1 = policies[i].q1;
    s.gamma = a.gamma;
    s.beta = a.beta;
    s.sigma2 = a.sigma_idio * a.sigma_idio;
    r += s.beta * s.pos;
    state.push_back(std::move(s));
  }
  r /= sqrt_n;

  SimulationReport rep;
  rep.horizon = horizon;
  rep.burn_in = burn_in;
  rep.flips.assign(n, 0);
  rep.pnl_per_asset.assign(n, 0.0);
  rep.pi_r_mean.assign(n, 0.0);
  std::vector<std::uint64_t> long_steps(n, 0);
  rep.r_path.dt = 1.0;
  rep.r_path.seed = portfolio.master_seed;
  rep.r_path.values.reserve(horizon - burn_in);

  const double sigma = std::sqrt(portfolio.sigma2());
  auto& table = rep.table;
  const std::size_t bins = options.bins;
  table.r_hi = options.bin_range_sigmas * (sigma > 0.0 ? sigma : 1.0);
  table.r_lo = -table.r_hi;
  table.steps.assign(bins, 0);
  table.r_sum.assign(bins, 0.0);
  table.longs.assign(n, std::vector<std::uint64_t>(bins, 0));
  const double bin_width = (table.r_hi - table.r_lo) / static_cast<double>(bins);

  std::vector<double> trade(n, 0.0);
  double risk_idio = 0.0;
  double risk_factor = 0.0;

  // R_{t-1} drives the bands at step t; R_t is rebuilt after all assets trade.
  for (std::size_t t = 1; t < horizon; ++t) {
    const double r_prev = r;
    double r_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = state[i];
      s.p = s.stepper.step(s.p);
      const double shift = s.band_slope * r_prev;
      double pos = s.pos;
      if (s.p >= s.q1 + shift) {
        pos = s.m;
      } else if (s.p <= -s.q1 + shift) {
        pos = -s.m;
      }
      trade[i] = std::abs(pos - s.pos);
      s.pos = pos;
      r_next += s.beta * pos;
    }
    r = r_next / sqrt_n;

    if (t < burn_in) continue;
    rep.r_path.values.push_back(r);
    double idio = 0.0;
    long bin = static_cast<long>(std::floor((r - table.r_lo) / bin_width));
    const bool in_table = bin >= 0 && bin < static_cast<long>(bins);
    if (in_table) {
      ++table.steps[bin];
      table.r_sum[bin] += r;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = state[i];
      const double gain = (s.p - s.theta * r) * s.pos - s.gamma * trade[i];
      rep.pnl_per_asset[i] += gain;
      rep.pi_r_mean[i] += s.pos * r;
      idio += s.sigma2 * s.pos * s.pos;
      if (trade[i] > 0.0) ++rep.flips[i];
      if (s.pos > 0.0) {
        ++long_steps[i];
        if (in_table) ++table.longs[i][bin];
      }
    }
    risk_idio += idio / static_cast<double>(n);
    risk_factor += r * r;
  }

  const double steps = static_cast<double>(rep.r_path.values.size());
  rep.fraction_long.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.pi_r_mean[i] /= steps;
    rep.fraction_long[i] = static_cast<double>(long_steps[i]) / steps;
    rep.pnl += rep.pnl_per_asset[i];
  }
  rep.risk_idiosyncratic = risk_idio / steps;
  rep.risk_factor = risk_factor / steps;
  rep.realized_risk = rep.risk_idiosyncratic + rep.risk_factor;

  try {
    rep.mle = fit_ou_mle(rep.r_path);
  } catch (const Error& e) {
    rep.mle_error = e.what();
  }
  return rep;
}

ConditionalSlope conditional_slope(const SimulationReport& report, const PortfolioSpec& portfolio,
                                   std::span<const std::size_t> assets, std::uint64_t min_bin_steps) {
  detail::require(!assets.empty(), ErrorKind::input, "assets", "select at least one asset");
  const auto& table = report.table;
  const double sigma2 = portfolio.sigma2();
  detail::require(sigma2 > 0.0, ErrorKind::degenerate, "beta", "Sigma = 0: no conditioning signal");

  const auto& ref = portfolio.assets.at(assets.front());
  ConditionalSlope out;
  out.theory = ref.beta * ref.m_cap / (sigma2 * std::sqrt(static_cast<double>(portfolio.size())));

  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t b = 0; b < table.steps.size(); ++b) {
    if (table.steps[b] < min_bin_steps) continue;
    std::uint64_t longs = 0;
    for (std::size_t i : assets) longs += table.longs.at(i)[b];
    const double total = static_cast<double>(table.steps[b]) * static_cast<double>(assets.size());
    const double x = table.r_sum[b] / static_cast<double>(table.steps[b]);
    const double y = 2.0 * static_cast<double>(longs) / total - 1.0;
    const double w = static_cast<double>(table.steps[b]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++out.bins_used;
  }
  detail::require(out.bins_used >= 3, ErrorKind::insufficient_horizon, "horizon",
                  "fewer than 3 populated bins for the conditional regression");
  const double mx = sx / sw;
  const double my = sy / sw;
  out.slope_mean_position = (sxy / sw - mx * my) / (sxx / sw - mx * mx);
  out.slope_probability = 0.5 * out.slope_mean_position;
  return out;
}

}  // namespace mftrade
