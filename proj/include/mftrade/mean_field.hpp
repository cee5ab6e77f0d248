#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mftrade/ou_processes.hpp"
#include "mftrade/threshold.hpp"

namespace mftrade {

struct PortfolioSpec {
  std::vector<AssetSpec> assets;
  double lambda_risk = 0.0;
  std::uint64_t master_seed = 0;

  std::size_t size() const noexcept { return assets.size(); }
  // theta_i = lambda beta_i / sqrt(N)
  double theta(std::size_t i) const;
  // Sigma^2 = sum beta^2 M^2 / N
  double sigma2() const;
  void validate() const;
};

// Aggregate position dR = -2 jbar R dt + 2 sigma_mf sqrt(jbar) dW; Var[R] = sigma_mf^2.
struct MeanFieldParams {
  double jbar = 0.0;
  double sigma_mf = 0.0;

  double stationary_variance() const noexcept { return sigma_mf * sigma_mf; }
  void validate() const;
};

struct ConditionalProb {
  double p_plus = 0.5;
  double p_minus = 0.5;
  bool clamped = false;
};

// P(pi = +-M | R = r) = (1 +- r beta M / (Sigma^2 sqrt(N))) / 2, clamped to [0, 1].
ConditionalProb conditional_position_prob(const AssetSpec& asset, double r, double sigma_mf,
                                          std::size_t n_assets);

MeanFieldParams mean_field_params(const PortfolioSpec& portfolio, std::span<const double> bands);

// AR(1) discretisation with mean reversion 2 jbar and step noise 2 sigma_mf sqrt(jbar).
Path simulate_mean_field_ou(const MeanFieldParams& params, std::size_t horizon, std::uint64_t seed);

// Per-bin occupation of R_t and long counts per asset.
struct ConditionalTable {
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::vector<std::uint64_t> steps;                // steps with R_t in bin
  std::vector<double> r_sum;                       // sum of R_t in bin
  std::vector<std::vector<std::uint64_t>> longs;   // [asset][bin]: steps at +M
};

struct SimulationOptions {
  std::optional<std::size_t> burn_in;  // default ceil(10 / min eps)
  std::size_t bins = 41;
  double bin_range_sigmas = 4.0;
};

struct SimulationReport {
  Path r_path;
  std::size_t horizon = 0;
  std::size_t burn_in = 0;
  std::vector<std::uint64_t> flips;     // per asset, after burn-in
  std::vector<double> fraction_long;    // per asset
  std::vector<double> pnl_per_asset;    // risk-adjusted P&L
  double pnl = 0.0;
  double realized_risk = 0.0;           // time average of pi' C pi / N
  double risk_idiosyncratic = 0.0;      // sum sigma_i^2 pi_i^2 / N part
  double risk_factor = 0.0;             // R^2 part
  std::vector<double> pi_r_mean;        // time average of pi_i R_t
  ConditionalTable table;
  std::optional<MleFit> mle;
  std::string mle_error;                // set when the R path cannot be fitted
};

// Runs every asset's band rule against the lagged aggregate R_{t-1}.
SimulationReport simulate_portfolio(const PortfolioSpec& portfolio,
                                    std::span<const ThresholdPolicy> policies, std::size_t horizon,
                                    const SimulationOptions& options = {});

struct ConditionalSlope {
  double slope_mean_position = 0.0;  // d E[pi/M | R] / dR
  double slope_probability = 0.0;    // d P(pi = +M | R) / dR
  double theory = 0.0;               // beta M / (Sigma^2 sqrt(N))
  std::size_t bins_used = 0;
};

// Weighted regression of the binned long frequency on the bin-mean R, pooling
// the given assets (which should share beta M).
ConditionalSlope conditional_slope(const SimulationReport& report, const PortfolioSpec& portfolio,
                                   std::span<const std::size_t> assets,
                                   std::uint64_t min_bin_steps = 1000);

}  // namespace mftrade
