#include "mftrade/risk_calibration.hpp"

#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "mftrade/errors.hpp"
#include "mftrade/trading_rate.hpp"

namespace mftrade {

namespace {

void check_lists(const PortfolioSpec& portfolio, std::span<const double> slopes,
                 std::span<const double> rhos) {
  portfolio.validate();
  detail::require(slopes.size() == portfolio.size(), ErrorKind::input, "slopes",
                  "one slope per asset is required");
  detail::require(rhos.size() == portfolio.size(), ErrorKind::input, "rhos",
                  "one density per asset is required");
}

}  // namespace

double predictor_density_at_threshold(const OuParams& ou, double q, RhoModel model) {
  detail::require(q >= 0.0 && std::isfinite(q), ErrorKind::parameter_domain, "q",
                  "threshold must be >= 0");
  if (model == RhoModel::conditional) return stationary_density(ou, q, q);
  const double sd = stationary_std(ou);
  const double z = q / sd;
  return std::exp(-0.5 * z * z) / (sd * boost::math::constants::root_two_pi<double>());
}

double xi_squared(const PortfolioSpec& portfolio, std::span<const double> slopes,
                  std::span<const double> rhos) {
  check_lists(portfolio, slopes, rhos);
  double s = 0.0;
  for (std::size_t i = 0; i < portfolio.size(); ++i) {
    const auto& a = portfolio.assets[i];
    s += a.m_cap * a.beta * a.beta * slopes[i] * rhos[i];
  }
  return 2.0 * s / static_cast<double>(portfolio.size());
}

double stationary_r_variance(double sigma2, double lambda_risk, double xi2) {
  const double denom = 1.0 + lambda_risk * xi2;
  if (!(denom > 0.0)) {
    std::ostringstream os;
    os << "1 + lambda Xi^2 = " << denom << " <= 0: lambda lies beyond the pole at -1/Xi^2";
    detail::fail(ErrorKind::unphysical_calibration, "lambda", os.str());
  }
  return sigma2 / denom;
}

RiskReport realized_risk(const PortfolioSpec& portfolio, std::span<const double> slopes,
                         std::span<const double> rhos) {
  check_lists(portfolio, slopes, rhos);
  const double n = static_cast<double>(portfolio.size());
  const double lambda = portfolio.lambda_risk;

  RiskReport rep;
  rep.lambda_risk = lambda;
  for (const auto& a : portfolio.assets) {
    const double m2 = a.m_cap * a.m_cap;
    rep.r0 += a.c_ii() * m2;
    rep.r_min += a.sigma_idio * a.sigma_idio * m2;
  }
  rep.r0 /= n;
  rep.r_min /= n;
  rep.sigma2 = portfolio.sigma2();
  rep.xi2 = xi_squared(portfolio, slopes, rhos);
  rep.er2 = stationary_r_variance(rep.sigma2, lambda, rep.xi2);
  rep.realized = rep.r0 - lambda * rep.sigma2 * rep.xi2 / (1.0 + lambda * rep.xi2);

  const double alt = rep.r_min + rep.er2;
  const double scale = std::max(std::abs(rep.realized), std::numeric_limits<double>::min());
  if (std::abs(alt - rep.realized) > 1e-12 * scale + 1e-15) {
    rep.warnings.push_back("risk decompositions disagree beyond rounding");
  }

  const double sigma = std::sqrt(rep.sigma2);
  if (lambda != 0.0 && sigma > 0.0) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& a : portfolio.assets) {
      if (a.beta == 0.0) continue;
      margin = std::min(margin, a.ou.p_star() / (std::abs(a.beta) * sigma) * std::sqrt(n) /
                                    std::abs(lambda));
    }
    if (std::isfinite(margin)) rep.validity_margin = margin;
  }
  if (rep.validity_margin && *rep.validity_margin < kValidityMarginWarning) {
    std::ostringstream os;
    os << "validity margin " << *rep.validity_margin << " < " << kValidityMarginWarning
       << ": lambda is not small against p* sqrt(N) / (beta Sigma)";
    rep.warnings.push_back(os.str());
  }
  if (lambda < 0.0) {
    rep.warnings.push_back("negative risk aversion: realized risk exceeds the decoupled level");
  }
  return rep;
}

double lambda_for_target_risk(const PortfolioSpec& portfolio, std::span<const double> slopes,
                              std::span<const double> rhos, double target) {
  PortfolioSpec zero = portfolio;
  zero.lambda_risk = 0.0;
  const RiskReport base = realized_risk(zero, slopes, rhos);
  if (!(target > base.r_min)) {
    std::ostringstream os;
    os << "target risk " << target << " is not above the minimum achievable " << base.r_min;
    detail::fail(ErrorKind::unreachable_target, "target", os.str());
  }
  detail::require(base.xi2 != 0.0, ErrorKind::degenerate, "xi2",
                  "Xi^2 = 0: realized risk does not depend on lambda");
  return (base.sigma2 / (target - base.r_min) - 1.0) / base.xi2;
}

double position_mf_covariance(const AssetSpec& asset, double theta, double rho, double slope,
                              double er2) {
  return -2.0 * asset.m_cap * slope * theta * rho * er2;
}

PortfolioCalibration calibrate_portfolio(const PortfolioSpec& portfolio, RhoModel model) {
  portfolio.validate();
  PortfolioCalibration cal;
  const std::size_t n = portfolio.size();
  cal.bands.resize(n);
  cal.rhos.resize(n);
  cal.slopes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = portfolio.assets[i];
    cal.bands[i] = corrected_threshold(a.ou, a.gamma);
    cal.rhos[i] = predictor_density_at_threshold(a.ou, base_threshold(a.ou, a.gamma), model);
  }
  cal.mf = mean_field_params(portfolio, cal.bands);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = portfolio.assets[i];
    cal.slopes[i] = slope(a.ou, a.gamma, cal.mf.jbar);
  }
  return cal;
}

}  // namespace mftrade
