#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mftrade/mean_field.hpp"
#include "mftrade/ou_processes.hpp"
#include "mftrade/threshold.hpp"

namespace mftrade {

enum class RhoModel {
  gaussian,     // uncontrolled stationary predictor density, variance psi^2 / (2 eps)
  conditional,  // density conditional on holding +M, evaluated at the upper threshold
};

struct RiskReport {
  double r0 = 0.0;        // decoupled risk per asset, sum C_ii M_i^2 / N
  double r_min = 0.0;     // sum sigma_i^2 M_i^2 / N
  double sigma2 = 0.0;    // Sigma^2
  double xi2 = 0.0;       // Xi^2
  double er2 = 0.0;       // E[R^2]
  double realized = 0.0;  // risk per asset at lambda
  double lambda_risk = 0.0;
  // min_i (p_i* / (|beta_i| Sigma)) sqrt(N) / |lambda|; empty when unbounded.
  std::optional<double> validity_margin;
  std::vector<std::string> warnings;
};

inline constexpr double kValidityMarginWarning = 10.0;

double predictor_density_at_threshold(const OuParams& ou, double q,
                                      RhoModel model = RhoModel::gaussian);

// Xi^2 = 2 sum M_i beta_i^2 S_i rho_i / N
double xi_squared(const PortfolioSpec& portfolio, std::span<const double> slopes,
                  std::span<const double> rhos);

// E[R^2] = Sigma^2 / (1 + lambda Xi^2)
double stationary_r_variance(double sigma2, double lambda_risk, double xi2);

RiskReport realized_risk(const PortfolioSpec& portfolio, std::span<const double> slopes,
                         std::span<const double> rhos);

// Closed-form inverse of realized_risk in lambda.
double lambda_for_target_risk(const PortfolioSpec& portfolio, std::span<const double> slopes,
                              std::span<const double> rhos, double target);

// E[pi R] ~ -2 M S theta rho E[R^2]
double position_mf_covariance(const AssetSpec& asset, double theta, double rho, double slope,
                              double er2);

// Per-asset slopes and densities for a portfolio whose assets trade the
// corrected band: jbar from the exact rate at q1, S from the slope formula,
// rho at q*.
struct PortfolioCalibration {
  std::vector<double> bands;   // q1 per asset
  std::vector<double> slopes;  // S per asset
  std::vector<double> rhos;    // rho per asset
  MeanFieldParams mf;
};

PortfolioCalibration calibrate_portfolio(const PortfolioSpec& portfolio,
                                         RhoModel model = RhoModel::gaussian);

}  // namespace mftrade
