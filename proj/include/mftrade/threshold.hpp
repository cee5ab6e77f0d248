#pragma once

#include <array>
#include <string_view>

#include "mftrade/ou_processes.hpp"

namespace mftrade {

// One tradeable asset under the one-factor risk model.
struct AssetSpec {
  OuParams ou;
  double gamma = 0.0;       // linear cost per unit traded
  double m_cap = 1.0;       // maximum absolute position M
  double beta = 0.0;        // factor loading
  double sigma_idio = 0.0;  // idiosyncratic volatility

  // Diagonal of the one-factor covariance, sigma^2 + beta^2.
  double c_ii() const noexcept { return sigma_idio * sigma_idio + beta * beta; }
  void validate() const;
};

enum class Regime { weak, intermediate, strong };

std::string_view to_string(Regime regime);

struct RegimeReport {
  Regime regime = Regime::intermediate;
  double weak_ratio = 0.0;    // psi / (Gamma eps^{3/2})
  double strong_ratio = 0.0;  // psi / Gamma
  double separation = 10.0;
};

inline constexpr double kDefaultRegimeSeparation = 10.0;

// Weak when psi sits below both c Gamma eps^{3/2} and Gamma / c, strong when
// psi >= Gamma / c, intermediate otherwise. Gamma must be > 0.
RegimeReport classify_regime(const OuParams& ou, double gamma,
                             double separation = kDefaultRegimeSeparation);

// Order-of-magnitude thresholds outside the intermediate regime (Gamma eps and
// Gamma). Informational only.
double informational_threshold(const OuParams& ou, double gamma, Regime regime);

enum class RegimeCheck { enforce, bypass };

// q* = (3/2 Gamma psi^2)^{1/3}. Gamma = 0 gives 0.
double base_threshold(const OuParams& ou, double gamma, RegimeCheck check = RegimeCheck::enforce);

// (q*/p*)^2 = a q*^2, the small parameter of the first-order theory.
double band_ratio_squared(const OuParams& ou, double gamma,
                          RegimeCheck check = RegimeCheck::enforce);

// q1 = q* (1 - a q*^2 / 3). Requires a q*^2 < 1.
double corrected_threshold(const OuParams& ou, double gamma,
                           RegimeCheck check = RegimeCheck::enforce);

// S = [(1 - a q*^2)(1 + (2 jbar / eps) a q*^2)]^{-1}.
double slope(const OuParams& ou, double gamma, double jbar,
             RegimeCheck check = RegimeCheck::enforce);

// Affine no-trade band q_{+/-}(r) = +/- q1 + slope theta r.
struct ThresholdPolicy {
  double q1 = 0.0;
  double slope = 0.0;
  double theta = 0.0;
  double m_cap = 1.0;

  double upper(double r) const noexcept { return q1 + slope * theta * r; }
  double lower(double r) const noexcept { return -q1 + slope * theta * r; }
  // q1 = 0 is allowed and gives the frictionless sign strategy.
  void validate() const;
};

// Threshold for the combined predictor p - theta R when 2 jbar = eps:
// q1 = (3/2 Gamma psi_tilde^2)^{1/3}, slope exactly 1, with
// psi_tilde^2 = psi^2 + 2 eps sigma_mf^2 theta^2.
ThresholdPolicy symmetric_policy(const OuParams& ou, double gamma, double theta, double sigma_mf,
                                 double m_cap = 1.0);

// Coefficients of the cubic expansions
//   L(p, r)  = A theta r + B p + C theta r p^2 + D p^3
//   P-(p, r) = A'' + A' theta r + B' p + C' theta r p^2 + D' p^3
// solved at the order-0 threshold q* and the first-order slope.
struct AppendixCoeffs {
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
  double A2 = 0.0, A1 = 0.0, B1 = 0.0, C1 = 0.0, D1 = 0.0;  // A'', A', B', C', D'

  // Inputs the coefficients were solved with.
  double epsilon = 0.0;
  double psi = 0.0;
  double gamma = 0.0;
  double jbar = 0.0;
  double q_star = 0.0;
  double slope = 0.0;
};

AppendixCoeffs appendix_coefficients(const OuParams& ou, double gamma, double jbar);

// Relative residuals of
//   eps B - 3 D psi^2 = 1,   C psi^2 - 2 jbar A = 1,
//   eps B' - 3 D' psi^2 = 0, C' psi^2 - 2 jbar A' = 0.
std::array<double, 4> constraint_residuals(const AppendixCoeffs& c);

// Slope recovered from the coefficients alone: q*^2 from the first boundary
// condition, jbar from the r-linear constraint, then the first-order slope
// bracket with the q1 correction applied to the 2 b q*^2 term.
double reconstruct_slope(const AppendixCoeffs& c);

// Slope solving the closure condition C + 3 D S = 2 Gamma (C' + 3 D' S) of the
// coefficient system with every term kept (differs from slope() at O(a^2 q*^4)).
double closure_slope(const AppendixCoeffs& c);

// Threshold solving the boundary derivative balance
//   B + 3 D q^2 = 2 Gamma (B' + 3 D' q^2)
// with the coefficients expanded to the given order (0 or 1) in a q^2.
double balance_threshold(const OuParams& ou, double gamma, int order);

}  // namespace mftrade
