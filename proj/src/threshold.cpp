#include "mftrade/threshold.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <sstream>

#include "mftrade/errors.hpp"

namespace mftrade {

void AssetSpec::validate() const {
  detail::require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::parameter_domain, "gamma",
                  "gamma must be >= 0");
  detail::require(m_cap > 0.0 && std::isfinite(m_cap), ErrorKind::parameter_domain, "m_cap",
                  "m_cap must be > 0");
  detail::require(sigma_idio >= 0.0 && std::isfinite(sigma_idio), ErrorKind::parameter_domain,
                  "sigma_idio", "sigma_idio must be >= 0");
  detail::require(std::isfinite(beta), ErrorKind::parameter_domain, "beta", "beta must be finite");
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::weak: return "weak";
    case Regime::intermediate: return "intermediate";
    case Regime::strong: return "strong";
  }
  return "unknown";
}

RegimeReport classify_regime(const OuParams& ou, double gamma, double separation) {
  detail::require(gamma > 0.0, ErrorKind::degenerate, "gamma",
                  "gamma = 0: the threshold vanishes and no regime applies");
  detail::require(separation > 1.0, ErrorKind::parameter_domain, "separation",
                  "regime separation factor must exceed 1");
  const double psi = ou.psi();
  const double weak_scale = gamma * std::pow(ou.epsilon(), 1.5);

  RegimeReport report;
  report.separation = separation;
  report.weak_ratio = psi / weak_scale;
  report.strong_ratio = psi / gamma;
  if (psi < separation * weak_scale && psi < gamma / separation) {
    report.regime = Regime::weak;
  } else if (psi >= gamma / separation) {
    report.regime = Regime::strong;
  } else {
    report.regime = Regime::intermediate;
  }
  return report;
}

double informational_threshold(const OuParams& ou, double gamma, Regime regime) {
  switch (regime) {
    case Regime::weak: return gamma * ou.epsilon();
    case Regime::strong: return gamma;
    case Regime::intermediate: return base_threshold(ou, gamma, RegimeCheck::bypass);
  }
  return 0.0;
}

namespace {

void enforce_intermediate(const OuParams& ou, double gamma) {
  const auto report = classify_regime(ou, gamma);
  if (report.regime != Regime::intermediate) {
    std::ostringstream os;
    os << "threshold formula requires the intermediate regime, got " << to_string(report.regime)
       << " (psi/(Gamma eps^1.5) = " << report.weak_ratio << ", psi/Gamma = " << report.strong_ratio
       << ")";
    detail::fail(ErrorKind::out_of_regime, "psi", os.str());
  }
}

// a q*^2, failing when the first-order expansion has no meaning.
double checked_ratio(const OuParams& ou, double gamma, RegimeCheck check) {
  const double x = band_ratio_squared(ou, gamma, check);
  if (!(x < 1.0)) {
    std::ostringstream os;
    os << "a q*^2 = " << x << " >= 1: band is wider than the predictor scale";
    detail::fail(ErrorKind::out_of_regime, "gamma", os.str());
  }
  return x;
}

}  // namespace

double base_threshold(const OuParams& ou, double gamma, RegimeCheck check) {
  detail::require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::parameter_domain, "gamma",
                  "gamma must be >= 0");
  if (gamma == 0.0) return 0.0;
  if (check == RegimeCheck::enforce) enforce_intermediate(ou, gamma);
  return std::cbrt(1.5 * gamma * ou.psi() * ou.psi());
}

double band_ratio_squared(const OuParams& ou, double gamma, RegimeCheck check) {
  const double q = base_threshold(ou, gamma, check);
  return ou.a() * q * q;
}

double corrected_threshold(const OuParams& ou, double gamma, RegimeCheck check) {
  const double x = checked_ratio(ou, gamma, check);
  return base_threshold(ou, gamma, RegimeCheck::bypass) * (1.0 - x / 3.0);
}

double slope(const OuParams& ou, double gamma, double jbar, RegimeCheck check) {
  detail::require(jbar > 0.0 && std::isfinite(jbar), ErrorKind::parameter_domain, "jbar",
                  "jbar must be > 0");
  const double x = checked_ratio(ou, gamma, check);
  return 1.0 / ((1.0 - x) * (1.0 + 2.0 * jbar / ou.epsilon() * x));
}

void ThresholdPolicy::validate() const {
  detail::require(q1 >= 0.0 && std::isfinite(q1), ErrorKind::parameter_domain, "q1",
                  "q1 must be >= 0");
  detail::require(slope >= 0.0 && std::isfinite(slope), ErrorKind::parameter_domain, "slope",
                  "slope must be >= 0");
  detail::require(std::isfinite(theta), ErrorKind::parameter_domain, "theta",
                  "theta must be finite");
  detail::require(m_cap > 0.0, ErrorKind::parameter_domain, "m_cap", "m_cap must be > 0");
}

ThresholdPolicy symmetric_policy(const OuParams& ou, double gamma, double theta, double sigma_mf,
                                 double m_cap) {
  detail::require(gamma >= 0.0, ErrorKind::parameter_domain, "gamma", "gamma must be >= 0");
  const double psi_tilde2 =
      ou.psi() * ou.psi() + 2.0 * ou.epsilon() * sigma_mf * sigma_mf * theta * theta;
  ThresholdPolicy policy;
  policy.q1 = std::cbrt(1.5 * gamma * psi_tilde2);
  policy.slope = 1.0;
  policy.theta = theta;
  policy.m_cap = m_cap;
  policy.validate();
  return policy;
}

AppendixCoeffs appendix_coefficients(const OuParams& ou, double gamma, double jbar) {
  detail::require(jbar > 0.0, ErrorKind::degenerate, "jbar",
                  "jbar = 0 makes the r-linear constraint system singular");
  AppendixCoeffs c;
  c.epsilon = ou.epsilon();
  c.psi = ou.psi();
  c.gamma = gamma;
  c.jbar = jbar;
  c.slope = slope(ou, gamma, jbar);
  c.q_star = base_threshold(ou, gamma);

  const double eps = c.epsilon;
  const double psi2 = c.psi * c.psi;
  const double a = ou.a();
  const double q = c.q_star;
  const double q2 = q * q;
  const double S = c.slope;

  // B + D q^2 = 0 and eps B - 3 D psi^2 = 1.
  c.D = -1.0 / (eps * q2 + 3.0 * psi2);
  c.B = -c.D * q2;
  // P-(q-) = 1, P-(q+) = 0 with q+- = +-q, and eps B' - 3 D' psi^2 = 0.
  c.D1 = -a / (2.0 * q * (3.0 + a * q2));
  c.B1 = 3.0 * c.D1 / a;
  c.A2 = -(c.B1 * q + c.D1 * q * q2);

  // r-linear boundary conditions with A, A' eliminated through
  // C psi^2 - 2 jbar A = 1 and C' psi^2 - 2 jbar A' = 0.
  const double den = psi2 / (2.0 * jbar) + q2;
  c.C = (1.0 / (2.0 * jbar) - S * (c.B + 3.0 * c.D * q2)) / den;
  c.A = (c.C * psi2 - 1.0) / (2.0 * jbar);
  c.C1 = -S * (c.B1 + 3.0 * c.D1 * q2) / den;
  c.A1 = c.C1 * psi2 / (2.0 * jbar);
  return c;
}

std::array<double, 4> constraint_residuals(const AppendixCoeffs& c) {
  const double psi2 = c.psi * c.psi;
  const auto rel = [](double lhs, double rhs, double scale) {
    return std::abs(lhs - rhs) / std::max(std::abs(rhs), scale);
  };
  const double s0 = std::max(std::abs(c.epsilon * c.B), std::abs(3.0 * c.D * psi2));
  const double s1 = std::max(std::abs(c.C * psi2), std::abs(2.0 * c.jbar * c.A));
  const double s2 = std::max(std::abs(c.epsilon * c.B1), std::abs(3.0 * c.D1 * psi2));
  const double s3 = std::max(std::abs(c.C1 * psi2), std::abs(2.0 * c.jbar * c.A1));
  return {rel(c.epsilon * c.B - 3.0 * c.D * psi2, 1.0, s0),
          rel(c.C * psi2 - 2.0 * c.jbar * c.A, 1.0, s1),
          rel(c.epsilon * c.B1 - 3.0 * c.D1 * psi2, 0.0, s2),
          rel(c.C1 * psi2 - 2.0 * c.jbar * c.A1, 0.0, s3)};
}

double reconstruct_slope(const AppendixCoeffs& c) {
  detail::require(c.D != 0.0 && c.A != 0.0, ErrorKind::degenerate, "coefficients",
                  "coefficients do not determine q* and jbar");
  const double psi2 = c.psi * c.psi;
  const double q2 = -c.B / c.D;
  const double jbar = (c.C * psi2 - 1.0) / (2.0 * c.A);
  const double x = c.epsilon / psi2 * q2;  // a q*^2
  const double y = jbar / psi2 * q2;      // b q*^2
  // Bracket 1 - x + 2y(1 - x/3). The threshold correction turns 2y into
  // 2y(1 - 2x/3); dropping the x^2 y remainder leaves 1 - x + 2y(1 - x).
  const double bracket = 1.0 - x + 2.0 * y * (1.0 - x);
  return 1.0 / bracket;
}

double closure_slope(const AppendixCoeffs& c) {
  const double psi2 = c.psi * c.psi;
  const double q2 = c.q_star * c.q_star;
  const double den = psi2 / (2.0 * c.jbar) + q2;
  const double u = c.B + 3.0 * c.D * q2;
  const double u1 = c.B1 + 3.0 * c.D1 * q2;
  const double g2 = 2.0 * c.gamma;
  return (1.0 / (2.0 * c.jbar * den)) / (u / den - 3.0 * c.D - g2 * u1 / den + 3.0 * g2 * c.D1);
}

double balance_threshold(const OuParams& ou, double gamma, int order) {
  detail::require(order == 0 || order == 1, ErrorKind::parameter_domain, "order",
                  "balance order must be 0 or 1");
  detail::require(gamma > 0.0, ErrorKind::degenerate, "gamma", "gamma must be > 0");
  const double psi2 = ou.psi() * ou.psi();
  const double a = ou.a();
  // Residual of the derivative balance, scaled by q so it is monotone.
  auto f = [&](double q) {
    const double x = order == 0 ? 0.0 : a * q * q;
    const double lhs = q * q / (3.0 * psi2) * (1.0 - x / 3.0 - 3.0 + x);
    const double drift = order == 0 ? 0.0 : 0.5 * a * q * (1.0 - x / 3.0);
    const double rhs = 2.0 * gamma * (-(1.0 / (2.0 * q)) * (1.0 - x / 3.0) + drift);
    return q * (lhs - rhs);
  };
  const double guess = std::cbrt(1.5 * gamma * psi2);
  double lo = guess * 1e-3;
  double hi = guess * 2.0;
  if (order == 1) hi = std::min(hi, std::sqrt(1.0 / a));
  detail::require(f(lo) * f(hi) < 0.0, ErrorKind::out_of_regime, "gamma",
                  "derivative balance has no root below p*");
  boost::uintmax_t iters = 200;
  const auto [left, right] =
      boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (left + right);
}

}  // namespace mftrade
