#include "mftrade/trading_rate.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "mftrade/errors.hpp"
#include "mftrade/parallel.hpp"

namespace mftrade {

namespace {

using boost::math::constants::root_pi;
using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr double kTarget = 1e-8;
constexpr double kMaxQHat = 20.0;

// Integral with its absolute error estimate.
struct Piece {
  double value = 0.0;
  double error = 0.0;
};

template <typename F>
Piece integrate(F f, double lo, double hi, double tol) {
  Piece out;
  if (hi <= lo) return out;
  out.value = Kronrod::integrate(f, lo, hi, 12, tol, &out.error);
  return out;
}

// int_{lo}^{hi} exp(v^2 - shift^2) dv
Piece scaled_erfi_integral(double lo, double hi, double shift) {
  return integrate([shift](double v) { return std::exp(v * v - shift * shift); }, lo, hi, 1e-11);
}

void check_band(const OuParams& ou, double q) {
  detail::require(q > 0.0 && std::isfinite(q), ErrorKind::parameter_domain, "q",
                  "band half-width q must be > 0");
  detail::require(ou.psi() > 0.0, ErrorKind::parameter_domain, "psi",
                  "trading rate needs a noisy predictor");
}

// Sums exp(-u^2) int_{-q_hat}^{u} exp(v^2) dv with the inner integral split at 0.
struct InnerIntegral {
  double q_hat;
  double half;  // int_0^{q_hat} exp(v^2 - q_hat^2) dv

  double operator()(double u) const {
    if (u <= 0.0) return scaled_erfi_integral(-q_hat, u, u).value;
    return std::exp(q_hat * q_hat - u * u) * half + scaled_erfi_integral(0.0, u, u).value;
  }
};

}  // namespace

std::string_view to_string(RateMethod method) {
  switch (method) {
    case RateMethod::exact_quadrature: return "exact_quadrature";
    case RateMethod::small_band: return "small_band";
    case RateMethod::large_band: return "large_band";
    case RateMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

double band_to_q_hat(const OuParams& ou, double q) { return q / ou.p_star(); }

RateResult rate_exact(const OuParams& ou, double q) {
  check_band(ou, q);
  const double qh = band_to_q_hat(ou, q);
  if (qh > kMaxQHat) {
    std::ostringstream os;
    os << "q_hat = " << qh << " exceeds " << kMaxQHat << " (exp(q_hat^2) overflows)";
    detail::fail(ErrorKind::parameter_domain, "q", os.str());
  }

  const Piece half = scaled_erfi_integral(0.0, qh, qh);
  const InnerIntegral inner{qh, half.value};
  // Outer range split at 0 like the inner one.
  const Piece i1_neg = integrate(inner, -qh, 0.0, 1e-11);
  const Piece i1_pos = integrate(inner, 0.0, qh, 1e-11);

  const double cap = std::max(qh, 1.0) + 8.0;
  const Piece tail_body = integrate([qh](double u) { return std::exp(qh * qh - u * u); }, qh, cap, 1e-13);
  const double tail_rest = std::exp(qh * qh) * 0.5 * root_pi<double>() * std::erfc(cap);
  // int_{-q_hat}^{q_hat} exp(v^2) dv = 2 exp(q_hat^2) half
  const double i2 = 2.0 * half.value * (tail_body.value + tail_rest);
  const double i1 = i1_neg.value + i1_pos.value;
  const double total = i1 + i2;

  const double i2_err = 2.0 * (half.error * (tail_body.value + tail_rest) + half.value * tail_body.error);
  const double rel_err = (i1_neg.error + i1_pos.error + i2_err) / total;
  if (!(rel_err < kTarget) || !std::isfinite(total)) throw NumericalFailureError("rate_exact", rel_err);

  RateResult r;
  r.q_hat = qh;
  r.j = ou.epsilon() / (2.0 * total);
  r.method = RateMethod::exact_quadrature;
  return r;
}

RateResult rate_small_band(const OuParams& ou, double q) {
  check_band(ou, q);
  RateResult r;
  r.q_hat = band_to_q_hat(ou, q);
  r.method = RateMethod::small_band;
  r.j = ou.epsilon() / (2.0 * root_pi<double>() * r.q_hat);
  if (r.q_hat >= 1.0) {
    r.warnings.push_back("small-band formula used outside its range (q_hat >= 1)");
  } else if (r.q_hat > 0.5) {
    r.warnings.push_back("small-band formula near its regime edge (q_hat > 0.5)");
  }
  return r;
}

RateResult rate_large_band(const OuParams& ou, double q) {
  check_band(ou, q);
  RateResult r;
  r.q_hat = band_to_q_hat(ou, q);
  r.method = RateMethod::large_band;
  r.j = ou.epsilon() * r.q_hat * std::exp(-r.q_hat * r.q_hat) / root_pi<double>();
  if (r.q_hat <= 1.0) {
    r.warnings.push_back("large-band formula used outside its range (q_hat <= 1)");
  } else if (r.q_hat < 2.0) {
    r.warnings.push_back("large-band formula near its regime edge (q_hat < 2)");
  }
  return r;
}

ConditionalDensity::ConditionalDensity(const OuParams& ou, double q)
    : ou_(ou), q_(q), j_(rate_exact(ou, q).j) {}

double ConditionalDensity::operator()(double p) const {
  if (p <= -q_) return 0.0;
  const double ps = ou_.p_star();
  const double u = p / ps;
  const double qh = q_ / ps;
  const double upper = std::min(u, qh);
  // exp(-u^2) int_{-q_hat}^{min(u, q_hat)} exp(v^2) dv, split at 0.
  double inner = 0.0;
  if (upper <= 0.0) {
    inner = scaled_erfi_integral(-qh, upper, u).value;
  } else {
    inner = scaled_erfi_integral(0.0, qh, u).value + scaled_erfi_integral(0.0, upper, u).value;
  }
  return 2.0 * j_ / (ou_.psi() * ou_.psi()) * ps * inner;
}

double stationary_density(const OuParams& ou, double q, double p) {
  return ConditionalDensity(ou, q)(p);
}

FlipCount count_flips(const OuParams& ou, double q, std::size_t horizon, std::uint64_t seed,
                      const MonteCarloOptions& options) {
  check_band(ou, q);
  detail::require(horizon >= 2, ErrorKind::parameter_domain, "horizon", "horizon must be >= 2");

  Ar1Stepper stepper(ou, make_engine(seed, 0));
  Engine bridge_engine = make_engine(seed, 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double inv_var = 1.0 / (ou.psi() * ou.psi());

  FlipCount out;
  out.horizon = horizon;
  double p = stepper.stationary_draw();
  int side = p >= 0.0 ? 1 : -1;
  std::size_t last_flip = 0;
  bool seen_flip = false;

  auto record = [&](std::size_t t) {
    ++out.flips;
    if (seen_flip) {
      const double gap = static_cast<double>(t - last_flip);
      out.sum_intervals += gap;
      out.sum_sq_intervals += gap * gap;
      ++out.n_intervals;
    }
    seen_flip = true;
    last_flip = t;
  };

  for (std::size_t t = 1; t < horizon; ++t) {
    const double next = stepper.step(p);
    // Distance of both samples to the barrier that would flip the position.
    const double d0 = side > 0 ? p + q : q - p;
    const double d1 = side > 0 ? next + q : q - next;
    bool flipped = d1 <= 0.0;
    if (!flipped && options.bridge_correction) {
      const double exponent = 2.0 * d0 * d1 * inv_var;
      if (exponent < 40.0 && uniform(bridge_engine) < std::exp(-exponent)) flipped = true;
    }
    if (flipped) {
      side = -side;
      record(t);
      // The far threshold can also be beyond the endpoint.
      if ((side > 0 && next <= -q) || (side < 0 && next >= q)) {
        side = -side;
        record(t);
      }
    }
    p = next;
  }
  return out;
}

RateResult rate_from_flips(const OuParams& ou, double q, std::span<const FlipCount> runs) {
  std::size_t flips = 0;
  std::size_t horizon = 0;
  std::size_t n_int = 0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& run : runs) {
    flips += run.flips;
    horizon += run.horizon;
    n_int += run.n_intervals;
    s1 += run.sum_intervals;
    s2 += run.sum_sq_intervals;
  }
  if (flips == 0) {
    std::ostringstream os;
    os << "no flips observed in " << horizon << " steps; increase the horizon";
    detail::fail(ErrorKind::insufficient_horizon, "horizon", os.str());
  }
  RateResult r;
  r.method = RateMethod::monte_carlo;
  r.q_hat = band_to_q_hat(ou, q);
  r.n_events = flips;
  r.j = static_cast<double>(flips) / static_cast<double>(horizon);
  // Few intervals means most runs were censored by the horizon: use Poisson.
  double cv2 = 1.0;
  if (n_int >= 30) {
    const double mean = s1 / static_cast<double>(n_int);
    const double var = (s2 - s1 * mean) / static_cast<double>(n_int - 1);
    cv2 = std::max(var, 0.0) / (mean * mean);
  }
  r.std_error = r.j * std::sqrt(cv2 / static_cast<double>(flips));
  if (flips < 100) r.warnings.push_back("fewer than 100 flips: standard error is unreliable");
  return r;
}

RateResult rate_monte_carlo(const OuParams& ou, double q, std::size_t horizon, std::uint64_t seed,
                            const MonteCarloOptions& options) {
  const FlipCount run = count_flips(ou, q, horizon, seed, options);
  return rate_from_flips(ou, q, std::span(&run, 1));
}

RateResult rate_monte_carlo_pooled(const OuParams& ou, double q, std::size_t horizon,
                                   std::span<const std::uint64_t> seeds,
                                   const MonteCarloOptions& options) {
  detail::require(!seeds.empty(), ErrorKind::input, "seeds", "at least one seed is required");
  const auto runs = parallel_map(seeds.size(), [&](std::size_t i) {
    return count_flips(ou, q, horizon, seeds[i], options);
  });
  return rate_from_flips(ou, q, runs);
}

double portfolio_rate(std::span<const AssetSpec> assets, std::span<const double> bands) {
  detail::require(!assets.empty(), ErrorKind::input, "assets", "portfolio is empty");
  detail::require(assets.size() == bands.size(), ErrorKind::input, "bands",
                  "one band per asset is required");
  // Homogeneous books repeat the same (eps, psi, q) triple many times.
  std::map<std::tuple<double, double, double>, double> cache;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const auto& a = assets[i];
    a.validate();
    const double w = a.beta * a.beta * a.m_cap * a.m_cap;
    if (w == 0.0) continue;
    const auto key = std::make_tuple(a.ou.epsilon(), a.ou.psi(), bands[i]);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, rate_exact(a.ou, bands[i]).j).first;
    num += w * it->second;
    den += w;
  }
  detail::require(den > 0.0, ErrorKind::degenerate, "beta",
                  "all beta^2 M^2 weights are zero; jbar is undefined");
  return num / den;
}

}  // namespace mftrade
