#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mftrade/errors.hpp"
#include "mftrade/slope_optimizer.hpp"
#include "mftrade/trading_rate.hpp"

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

}  // namespace

TEST_CASE("frictionless sign strategy") {
  const Path p = simulate_ar1(kPaper, 20'000, 4);
  Path r;
  r.values.assign(p.values.size(), 0.0);
  double expected = 0.0;
  for (double v : p.values) expected += std::abs(v) * 2.0;
  CHECK(backtest_pnl(p, r, ThresholdPolicy{0.0, 0.0, 0.0, 2.0}, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("slope is irrelevant when theta = 0") {
  const Path p = simulate_ar1(kPaper, 200'000, 4);
  const Path r = simulate_mean_field_ou(MeanFieldParams{7.5e-4, 1.0}, 200'000, 5);
  const double q1 = corrected_threshold(kPaper, 1.0);
  const double base = backtest_pnl(p, r, ThresholdPolicy{q1, 0.0, 0.0, 1.0}, 1.0);
  for (double s : {0.3, 1.0, 7.0}) CHECK(backtest_pnl(p, r, ThresholdPolicy{q1, s, 0.0, 1.0}, 1.0) == base);
}

TEST_CASE("backtest charges costs on every flip") {
  Path p, r;
  p.values = {1.0, -1.0, 1.0, 0.0};
  r.values.assign(4, 0.0);
  // Positions +1, -1, +1, +1: gains 1 + 1 + 1 + 0, two flips of size 2.
  CHECK(backtest_pnl(p, r, ThresholdPolicy{0.5, 0.0, 0.0, 1.0}, 0.25) == doctest::Approx(3.0 - 0.25 * 4.0));
  Path shorter;
  shorter.values = {0.0};
  CHECK(kind_of([&] { backtest_pnl(p, shorter, ThresholdPolicy{0.5, 0.0, 0.0, 1.0}, 0.25); }) == ErrorKind::input);
}

TEST_CASE("SlopeSearchConfig validation") {
  SlopeSearchConfig c;
  CHECK_NOTHROW(c.validate());
  c.grid_points = 2;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter_domain);
  c = {};
  c.rounds = 0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter_domain);
  c = {};
  c.initial_range = std::pair{1.0, 1.0};
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter_domain);
  c = {};
  c.horizon = 50'000;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::parameter_domain);
}

TEST_CASE("search at the paper operating point") {
  SlopeSearchConfig cfg;
  cfg.seed_p = 11;
  cfg.seed_r = 12;
  cfg.throw_on_boundary = false;
  const MeanFieldParams mf{1e-3, 1.0};
  const SlopeSearchResult a = search_optimal_slope(kPaper, 1.0, 5e-3, mf, cfg);
  CHECK(a.s_theory == doctest::Approx(slope(kPaper, 1.0, 1e-3)).epsilon(1e-14));
  CHECK(a.pnl_curve.size() == 33);
  REQUIRE(a.ranges.size() == 3);
  CHECK(a.ranges[0].first == 0.0);
  CHECK(a.ranges[0].second == doctest::Approx(2.0 * a.s_theory));
  for (std::size_t k = 1; k < a.ranges.size(); ++k) {
    CHECK(a.ranges[k].first >= a.ranges[k - 1].first - 1e-15);
    CHECK(a.ranges[k].second <= a.ranges[k - 1].second + 1e-15);
    CHECK(a.ranges[k].second - a.ranges[k].first ==
          doctest::Approx((a.ranges[k - 1].second - a.ranges[k - 1].first) / 5.0));
  }
  // s_hat attains the maximum of the final round.
  double best = -INFINITY;
  for (const auto& pt : a.pnl_curve) {
    if (pt.round == 2) best = std::max(best, pt.pnl);
  }
  bool found = false;
  for (const auto& pt : a.pnl_curve) found = found || (pt.round == 2 && pt.slope == a.s_hat && pt.pnl == best);
  CHECK(found);
  if (!a.boundary_hit) {
    const auto first = std::find_if(a.pnl_curve.begin(), a.pnl_curve.end(), [](auto& p) { return p.round == 2; });
    CHECK(best > first->pnl);
    CHECK(best > a.pnl_curve.back().pnl);
  }
  CHECK(a.warnings.empty());

  const SlopeSearchResult b = search_optimal_slope(kPaper, 1.0, 5e-3, mf, cfg);
  CHECK(b.s_hat == a.s_hat);
  REQUIRE(b.pnl_curve.size() == a.pnl_curve.size());
  for (std::size_t i = 0; i < a.pnl_curve.size(); ++i) CHECK(b.pnl_curve[i].pnl == a.pnl_curve[i].pnl);
}

TEST_CASE("search flags an unidentifiable slope") {
  SlopeSearchConfig cfg;
  cfg.horizon = 200'000;
  cfg.throw_on_boundary = false;
  const SlopeSearchResult res = search_optimal_slope(kPaper, 1.0, 0.0, MeanFieldParams{1e-3, 1.0}, cfg);
  CHECK(res.flat_curve);
  CHECK(res.boundary_hit);
  cfg.throw_on_boundary = true;
  CHECK(kind_of([&] { search_optimal_slope(kPaper, 1.0, 0.0, MeanFieldParams{1e-3, 1.0}, cfg); }) ==
        ErrorKind::boundary_hit);
}

TEST_CASE("search warns outside the small-theta regime") {
  SlopeSearchConfig cfg;
  cfg.horizon = 100'000;
  cfg.rounds = 1;
  cfg.throw_on_boundary = false;
  const SlopeSearchResult res = search_optimal_slope(kPaper, 1.0, 0.02, MeanFieldParams{1e-3, 1.0}, cfg);
  CHECK(res.warnings.size() == 1);
}

TEST_CASE("sweep reuses seeds per repetition") {
  SlopeSearchConfig cfg;
  cfg.horizon = 200'000;
  cfg.throw_on_boundary = false;
  const std::vector<double> ratios{1.0, 10.0};
  const auto rows = sweep_optimal_slope(kPaper, 1.0, 5e-3, 1.0, ratios, cfg, 3);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.s_hat_runs.size() == 3);
    CHECK(row.s_hat == median(row.s_hat_runs));
    CHECK(row.s_theory == doctest::Approx(slope(kPaper, 1.0, row.jbar_over_eps * 1e-3)).epsilon(1e-14));
  }
  CHECK(kind_of([&] { sweep_optimal_slope(kPaper, 1.0, 5e-3, 1.0, ratios, cfg, 0); }) == ErrorKind::parameter_domain);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(kind_of([] { median({}); }) == ErrorKind::input);
}
