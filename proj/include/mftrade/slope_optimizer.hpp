#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mftrade/mean_field.hpp"
#include "mftrade/ou_processes.hpp"
#include "mftrade/threshold.hpp"

namespace mftrade {

struct SlopeSearchConfig {
  std::size_t grid_points = 11;
  std::size_t rounds = 3;
  // Defaults to [0, 2 s_theory].
  std::optional<std::pair<double, double>> initial_range;
  std::size_t horizon = 2'500'000;
  std::uint64_t seed_p = 1;
  std::uint64_t seed_r = 2;
  // Throw when the final argmax sits on the edge of its grid.
  bool throw_on_boundary = true;

  void validate() const;
};

struct PnlPoint {
  double slope = 0.0;
  double pnl = 0.0;
  std::size_t round = 0;
};

struct SlopeSearchResult {
  double s_hat = 0.0;
  double s_theory = 0.0;
  std::vector<PnlPoint> pnl_curve;
  std::vector<std::pair<double, double>> ranges;  // grid range per round
  bool boundary_hit = false;
  bool flat_curve = false;
  std::vector<std::string> warnings;
};

// Total sum_t [(p_t - theta R_t) pi_t - Gamma |pi_t - pi_{t-1}|] of the band
// rule driven by (p_t, R_{t-1}). The first sample seeds the position at no cost.
double backtest_pnl(const Path& p_path, const Path& r_path, const ThresholdPolicy& policy,
                    double gamma);

// Grid refinement over S on fixed paths (common random numbers).
SlopeSearchResult search_slope_on_paths(const Path& p_path, const Path& r_path, double q1,
                                        double theta, double gamma, double s_theory,
                                        const SlopeSearchConfig& cfg);

// Generates the predictor path and the OU surrogate of R from the configured
// seeds, then searches. s_theory = slope(ou, gamma, mf.jbar).
SlopeSearchResult search_optimal_slope(const OuParams& ou, double gamma, double theta,
                                       const MeanFieldParams& mf, const SlopeSearchConfig& cfg);

struct SlopeSweepRow {
  double jbar_over_eps = 0.0;
  double s_hat = 0.0;  // median over repetitions
  double s_theory = 0.0;
  std::vector<double> s_hat_runs;
};

// Seed pair k is derived from (cfg.seed_p, k) and (cfg.seed_r, k).
std::vector<SlopeSweepRow> sweep_optimal_slope(const OuParams& ou, double gamma, double theta,
                                               double sigma_mf,
                                               std::span<const double> jbar_over_eps,
                                               const SlopeSearchConfig& cfg,
                                               std::size_t repetitions = 1);

double median(std::vector<double> values);

}  // namespace mftrade
