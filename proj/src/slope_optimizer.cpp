#include "mftrade/slope_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mftrade/errors.hpp"
#include "mftrade/parallel.hpp"

namespace mftrade {

void SlopeSearchConfig::validate() const {
  detail::require(grid_points >= 3, ErrorKind::parameter_domain, "grid_points",
                  "grid_points must be >= 3");
  detail::require(rounds >= 1, ErrorKind::parameter_domain, "rounds", "rounds must be >= 1");
  detail::require(horizon >= 100'000, ErrorKind::parameter_domain, "horizon",
                  "horizon must be >= 1e5");
  if (initial_range) {
    detail::require(initial_range->first < initial_range->second, ErrorKind::parameter_domain,
                    "initial_range", "initial range must satisfy S_lo < S_hi");
    detail::require(initial_range->first >= 0.0, ErrorKind::parameter_domain, "initial_range",
                    "slopes must be >= 0");
  }
}

double backtest_pnl(const Path& p_path, const Path& r_path, const ThresholdPolicy& policy,
                    double gamma) {
  const auto& p = p_path.values;
  const auto& r = r_path.values;
  detail::require(p.size() == r.size(), ErrorKind::input, "r_path",
                  "predictor and mean-field paths differ in length");
  detail::require(!p.empty(), ErrorKind::input, "p_path", "paths are empty");
  detail::require(gamma >= 0.0, ErrorKind::parameter_domain, "gamma", "gamma must be >= 0");
  policy.validate();

  const double m = policy.m_cap;
  const double shift_per_r = policy.slope * policy.theta;
  double pos = p[0] >= 0.0 ? m : -m;
  if (p[0] >= policy.upper(r[0])) {
    pos = m;
  } else if (p[0] <= policy.lower(r[0])) {
    pos = -m;
  }
  double pnl = (p[0] - policy.theta * r[0]) * pos;
  for (std::size_t t = 1; t < p.size(); ++t) {
    const double shift = shift_per_r * r[t - 1];
    double next = pos;
    if (p[t] >= policy.q1 + shift) {
      next = m;
    } else if (p[t] <= -policy.q1 + shift) {
      next = -m;
    }
    pnl += (p[t] - policy.theta * r[t]) * next - gamma * std::abs(next - pos);
    pos = next;
  }
  return pnl;
}

SlopeSearchResult search_slope_on_paths(const Path& p_path, const Path& r_path, double q1,
                                        double theta, double gamma, double s_theory,
                                        const SlopeSearchConfig& cfg) {
  cfg.validate();
  SlopeSearchResult res;
  res.s_theory = s_theory;
  auto [lo, hi] = cfg.initial_range.value_or(std::make_pair(0.0, 2.0 * s_theory));
  detail::require(lo < hi, ErrorKind::parameter_domain, "initial_range",
                  "empty slope range (s_theory must be > 0)");

  const std::size_t k = cfg.grid_points;
  std::size_t best = 0;
  std::vector<double> grid(k);
  std::vector<double> pnl;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    res.ranges.emplace_back(lo, hi);
    for (std::size_t j = 0; j < k; ++j) {
      grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(k - 1);
    }
    pnl = parallel_map(k, [&](std::size_t j) {
      ThresholdPolicy policy{q1, grid[j], theta, 1.0};
      return backtest_pnl(p_path, r_path, policy, gamma);
    });
    // First maximum wins ties, so a flat curve lands on the lower edge.
    best = static_cast<std::size_t>(std::max_element(pnl.begin(), pnl.end()) - pnl.begin());
    for (std::size_t j = 0; j < k; ++j) res.pnl_curve.push_back({grid[j], pnl[j], round});

    if (round + 1 == cfg.rounds) break;
    const double half = (hi - lo) / static_cast<double>(k - 1);
    double new_lo = grid[best] - half;
    double new_hi = grid[best] + half;
    if (new_lo < lo) {
      new_hi += lo - new_lo;
      new_lo = lo;
    }
    if (new_hi > hi) {
      new_lo -= new_hi - hi;
      new_hi = hi;
    }
    lo = new_lo;
    hi = new_hi;
  }

  res.s_hat = grid[best];
  const auto [mn, mx] = std::minmax_element(pnl.begin(), pnl.end());
  res.flat_curve = *mn == *mx;
  res.boundary_hit = best == 0 || best + 1 == k;
  if (res.boundary_hit && cfg.throw_on_boundary) {
    std::ostringstream os;
    os << "optimal slope " << res.s_hat << " sits on the edge of the final grid [" << lo << ", "
       << hi << "]" << (res.flat_curve ? " (P&L is flat in S)" : "; widen the initial range");
    detail::fail(ErrorKind::boundary_hit, "initial_range", os.str());
  }
  return res;
}

SlopeSearchResult search_optimal_slope(const OuParams& ou, double gamma, double theta,
                                       const MeanFieldParams& mf, const SlopeSearchConfig& cfg) {
  cfg.validate();
  mf.validate();
  const double q1 = corrected_threshold(ou, gamma);
  const double s_theory = slope(ou, gamma, mf.jbar);
  const Path p_path = simulate_ar1(ou, cfg.horizon, cfg.seed_p);
  const Path r_path = simulate_mean_field_ou(mf, cfg.horizon, cfg.seed_r);
  auto res = search_slope_on_paths(p_path, r_path, q1, theta, gamma, s_theory, cfg);
  const double risk_scale = theta * mf.sigma_mf / ou.p_star();
  if (risk_scale * risk_scale > 0.1) {
    res.warnings.push_back("(theta Sigma / p*)^2 > 0.1: first-order slope theory may not apply");
  }
  return res;
}

double median(std::vector<double> values) {
  detail::require(!values.empty(), ErrorKind::input, "values", "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SlopeSweepRow> sweep_optimal_slope(const OuParams& ou, double gamma, double theta,
                                               double sigma_mf,
                                               std::span<const double> jbar_over_eps,
                                               const SlopeSearchConfig& cfg,
                                               std::size_t repetitions) {
  detail::require(repetitions >= 1, ErrorKind::parameter_domain, "repetitions",
                  "repetitions must be >= 1");
  std::vector<SlopeSweepRow> rows;
  for (double ratio : jbar_over_eps) {
    SlopeSweepRow row;
    row.jbar_over_eps = ratio;
    const MeanFieldParams mf{ratio * ou.epsilon(), sigma_mf};
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      SlopeSearchConfig run = cfg;
      run.seed_p = stream_seed(cfg.seed_p, rep);
      run.seed_r = stream_seed(cfg.seed_r, rep);
      const auto res = search_optimal_slope(ou, gamma, theta, mf, run);
      row.s_theory = res.s_theory;
      row.s_hat_runs.push_back(res.s_hat);
    }
    row.s_hat = median(row.s_hat_runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mftrade
