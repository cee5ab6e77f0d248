#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mftrade/ou_processes.hpp"
#include "mftrade/threshold.hpp"

namespace mftrade {

enum class RateMethod { exact_quadrature, small_band, large_band, monte_carlo };

std::string_view to_string(RateMethod method);

// Stationary rate at which the position leaves a given side of the band,
// i.e. the probability per step of a flip for an asset that holds +M (or -M).
// Summed over both sides this is also the unconditional flip rate.
struct RateResult {
  double j = 0.0;
  double q_hat = 0.0;
  RateMethod method = RateMethod::exact_quadrature;
  double std_error = 0.0;
  std::size_t n_events = 0;  // flips observed (Monte Carlo only)
  std::vector<std::string> warnings;
};

// Dimensionless band q / p*.
double band_to_q_hat(const OuParams& ou, double q);

// 1/J = (2/eps) [I1 + I2] in the rescaled variable x = p / p*, by nested
// adaptive Gauss-Kronrod quadrature to relative 1e-8.
RateResult rate_exact(const OuParams& ou, double q);

// eps / (2 sqrt(pi) q_hat), for q_hat << 1.
RateResult rate_small_band(const OuParams& ou, double q);

// eps q_hat exp(-q_hat^2) / sqrt(pi), for q_hat >> 1.
RateResult rate_large_band(const OuParams& ou, double q);

// Density of the predictor conditional on holding +M. Evaluates J once.
class ConditionalDensity {
 public:
  ConditionalDensity(const OuParams& ou, double q);

  double operator()(double p) const;
  double rate() const noexcept { return j_; }
  double band() const noexcept { return q_; }

 private:
  OuParams ou_;
  double q_;
  double j_;
};

double stationary_density(const OuParams& ou, double q, double p);

struct MonteCarloOptions {
  // Flip inside a step with the Brownian-bridge probability of touching the
  // opposite threshold between two samples. Removes the discrete-monitoring
  // bias of the AR(1) oracle.
  bool bridge_correction = true;
};

// Flip statistics of the two-threshold rule on one simulated AR(1) path.
struct FlipCount {
  std::size_t flips = 0;
  std::size_t horizon = 0;
  std::size_t n_intervals = 0;
  double sum_intervals = 0.0;
  double sum_sq_intervals = 0.0;
};

FlipCount count_flips(const OuParams& ou, double q, std::size_t horizon, std::uint64_t seed,
                      const MonteCarloOptions& options = {});

// J = flips / horizon. The standard error uses the renewal CLT,
// J cv / sqrt(flips), with cv the coefficient of variation of inter-flip times.
RateResult rate_from_flips(const OuParams& ou, double q, std::span<const FlipCount> runs);

RateResult rate_monte_carlo(const OuParams& ou, double q, std::size_t horizon, std::uint64_t seed,
                            const MonteCarloOptions& options = {});

// Pools independent runs (seeds processed in parallel, aggregated in seed order).
RateResult rate_monte_carlo_pooled(const OuParams& ou, double q, std::size_t horizon,
                                   std::span<const std::uint64_t> seeds,
                                   const MonteCarloOptions& options = {});

// Weighted average sum beta^2 M^2 J_i / sum beta^2 M^2 of per-asset exact rates.
double portfolio_rate(std::span<const AssetSpec> assets, std::span<const double> bands);

}  // namespace mftrade
