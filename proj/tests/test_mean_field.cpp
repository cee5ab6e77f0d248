#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mftrade/errors.hpp"
#include "mftrade/mean_field.hpp"
#include "mftrade/trading_rate.hpp"
#include "oracles.hpp"

using namespace mftrade;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

const OuParams kPaper = OuParams::make(1e-3, 1e-3);

PortfolioSpec homogeneous(std::size_t n, std::uint64_t seed, double sigma_idio = 0.0) {
  PortfolioSpec p;
  p.assets.assign(n, AssetSpec{kPaper, 1.0, 1.0, 1.0, sigma_idio});
  p.master_seed = seed;
  return p;
}

std::vector<ThresholdPolicy> plain_bands(const PortfolioSpec& p, double q) {
  return std::vector<ThresholdPolicy>(p.size(), ThresholdPolicy{q, 0.0, 0.0, 1.0});
}

}  // namespace

TEST_CASE("conditional_position_prob") {
  const AssetSpec a{kPaper, 1.0, 1.0, 1.0, 0.0};
  const ConditionalProb mid = conditional_position_prob(a, 0.0, 1.0, 100);
  CHECK(mid.p_plus == 0.5);
  CHECK(mid.p_minus == 0.5);
  const ConditionalProb two = conditional_position_prob(a, 2.0, 1.0, 100);
  CHECK(two.p_plus == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(two.p_minus == doctest::Approx(0.4).epsilon(1e-14));
  CHECK_FALSE(two.clamped);
  for (double r : {-30.0, -3.0, 0.7, 12.0, 25.0}) {
    const ConditionalProb c = conditional_position_prob(a, r, 1.0, 100);
    CHECK(c.p_plus + c.p_minus == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.p_plus >= 0.0);
    CHECK(c.p_plus <= 1.0);
  }
  CHECK(conditional_position_prob(a, 25.0, 1.0, 100).clamped);
  CHECK(kind_of([&] { conditional_position_prob(a, 1.0, 0.0, 100); }) == ErrorKind::degenerate);
}

TEST_CASE("mean_field_params") {
  const PortfolioSpec p = homogeneous(100, 1);
  const double q = base_threshold(kPaper, 1.0);
  const std::vector<double> bands(100, q);
  const MeanFieldParams mf = mean_field_params(p, bands);
  CHECK(mf.sigma_mf == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mf.jbar == doctest::Approx(rate_exact(kPaper, q).j).epsilon(1e-14));

  PortfolioSpec groups;
  const auto fast = OuParams::make(4e-3, 2e-3);
  groups.assets = {AssetSpec{kPaper, 1.0, 1.0, 1.0, 0.0}, AssetSpec{kPaper, 1.0, 1.0, 1.0, 0.0},
                   AssetSpec{fast, 1.0, 2.0, 0.5, 0.0}};
  const std::vector<double> gb{q, q, 0.02};
  const double j1 = oracle::rate(1e-3, q / kPaper.p_star());
  const double j2 = oracle::rate(4e-3, 0.02 / fast.p_star());
  const MeanFieldParams g = mean_field_params(groups, gb);
  CHECK(g.jbar == doctest::Approx((2.0 * j1 + 1.0 * j2) / 3.0).epsilon(1e-8));
  CHECK(g.sigma_mf == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("simulate_mean_field_ou") {
  const MeanFieldParams mf{7.5e-4, 1.0};
  const std::size_t n = 1'000'000;
  const Path r = simulate_mean_field_ou(mf, n, 5);
  REQUIRE(r.values.size() == n);
  const double phi = 1.0 - 2.0 * mf.jbar;
  const double target = 4.0 * mf.jbar / (1.0 - phi * phi);  // exact AR(1) variance
  CHECK(target == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(oracle::variance(r.values) - target) < 3.0 * oracle::ar1_variance_stderr(target, phi, n));

  const MleFit f = fit_ou_mle(r);
  CHECK(std::abs(f.kappa_hat - 2.0 * mf.jbar) < 3.0 * f.stderr_kappa);
  CHECK(std::abs(f.diffusion_hat - 2.0 * mf.sigma_mf * std::sqrt(mf.jbar)) < 3.0 * f.stderr_diffusion);

  const Path faster = simulate_mean_field_ou(MeanFieldParams{3e-3, 1.0}, 200'000, 5);
  const Path slower = simulate_mean_field_ou(MeanFieldParams{3e-4, 1.0}, 200'000, 5);
  CHECK(oracle::autocorrelation(faster.values, 1) < oracle::autocorrelation(slower.values, 1));

  CHECK(kind_of([] { simulate_mean_field_ou(MeanFieldParams{0.5, 1.0}, 100, 1); }) == ErrorKind::stability);
  CHECK(kind_of([] { simulate_mean_field_ou(MeanFieldParams{0.0, 1.0}, 100, 1); }) == ErrorKind::parameter_domain);
}

TEST_CASE("simulate_portfolio bookkeeping") {
  const PortfolioSpec p = homogeneous(10, 9, 0.5);
  const double q = base_threshold(kPaper, 1.0);
  const auto pol = plain_bands(p, q);
  const SimulationReport a = simulate_portfolio(p, pol, 40'000);
  CHECK(a.burn_in == 10'000);
  CHECK(a.r_path.values.size() == 30'000);
  // Positions sit at +-M, so the idiosyncratic term is exactly sigma^2 M^2.
  CHECK(a.risk_idiosyncratic == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a.risk_factor == doctest::Approx(oracle::mean([&] {
          std::vector<double> sq;
          for (double r : a.r_path.values) sq.push_back(r * r);
          return sq;
        }())).epsilon(1e-10));
  CHECK(a.realized_risk == doctest::Approx(a.risk_idiosyncratic + a.risk_factor).epsilon(1e-14));
  // R takes values on the lattice (2k - N) / sqrt(N).
  for (double r : a.r_path.values) {
    const double k = (r * std::sqrt(10.0) + 10.0) / 2.0;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
  const double pnl_sum = std::accumulate(a.pnl_per_asset.begin(), a.pnl_per_asset.end(), 0.0);
  CHECK(a.pnl == doctest::Approx(pnl_sum).epsilon(1e-12));

  const SimulationReport b = simulate_portfolio(p, pol, 40'000);
  CHECK(a.r_path.values == b.r_path.values);
  CHECK(a.flips == b.flips);
  CHECK(a.pnl == b.pnl);

  CHECK(kind_of([&] { simulate_portfolio(p, pol, 10'500); }) == ErrorKind::parameter_domain);
  CHECK(kind_of([&] { simulate_portfolio(p, std::span(pol).subspan(1), 40'000); }) == ErrorKind::input);
}

TEST_CASE("single uncoupled asset") {
  PortfolioSpec p;
  p.assets = {AssetSpec{kPaper, 1.0, 1.0, 0.0, 0.0}};
  p.master_seed = 3;
  const auto pol = plain_bands(p, base_threshold(kPaper, 1.0));
  const SimulationReport rep = simulate_portfolio(p, pol, 30'000);
  for (double r : rep.r_path.values) CHECK(r == 0.0);
  CHECK_FALSE(rep.mle.has_value());
  CHECK_FALSE(rep.mle_error.empty());
  CHECK(rep.flips[0] > 0);
}

TEST_CASE("mean-field law on a 100-asset book") {
  const PortfolioSpec p = homogeneous(100, 21);
  const double q = base_threshold(kPaper, 1.0);
  const std::size_t horizon = 1'000'000;
  const SimulationReport rep = simulate_portfolio(p, plain_bands(p, q), horizon);
  const double steps = static_cast<double>(rep.r_path.values.size());

  // Unconditional long probability is one half.
  const double j = rate_exact(kPaper, q).j;
  const double sd_frac = 0.5 / std::sqrt(steps * j);
  int inside = 0;
  for (double f : rep.fraction_long) inside += std::abs(f - 0.5) < 3.0 * sd_frac;
  CHECK(inside >= 97);

  // Trade counts against the rate with the band moved out by the expected
  // overshoot of a discretely monitored barrier.
  const double total = std::accumulate(rep.flips.begin(), rep.flips.end(), 0.0);
  const double rate = total / (steps * 100.0);
  const double shifted = rate_exact(kPaper, q + oracle::kDiscreteBarrierShift * kPaper.psi()).j;
  const double se = shifted * std::sqrt(1.0 / total);
  CHECK(std::abs(rate - shifted) < 3.0 * std::max(se, 0.02 * shifted));
  CHECK(rate == doctest::Approx(j).epsilon(0.10));

  // Increments of R over long disjoint windows are close to Gaussian.
  std::vector<double> inc;
  const std::size_t w = 1000;
  for (std::size_t t = 0; t + w < rep.r_path.values.size(); t += w) {
    inc.push_back(rep.r_path.values[t + w] - rep.r_path.values[t]);
  }
  CHECK(std::abs(oracle::excess_kurtosis(inc)) < 0.5);

  // Binned conditioning identity.
  std::vector<std::size_t> all(100);
  std::iota(all.begin(), all.end(), 0);
  const ConditionalSlope cs = conditional_slope(rep, p, all);
  CHECK(cs.theory == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(cs.slope_mean_position == doctest::Approx(0.1).epsilon(0.2));
  CHECK(cs.slope_probability == doctest::Approx(0.5 * cs.slope_mean_position).epsilon(1e-12));

  REQUIRE(rep.mle.has_value());
  CHECK(rep.mle->kappa_hat == doctest::Approx(2.0 * j).epsilon(0.15));
}
