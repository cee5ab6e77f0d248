#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "mftrade/rng.hpp"

namespace mftrade {

// Parameters of one AR(1) / Ornstein-Uhlenbeck predictor
//   p_{t+1} - p_t = -epsilon p_t + psi xi_t.
// epsilon in (0, 1]; psi > 0 unless built through noiseless().
class OuParams {
 public:
  static OuParams make(double epsilon, double psi);
  // psi = 0: deterministic decay, only reachable through this explicit override.
  static OuParams noiseless(double epsilon);

  double epsilon() const noexcept { return epsilon_; }
  double psi() const noexcept { return psi_; }
  // Predictor scale psi / sqrt(epsilon). Also the unit used for q_hat.
  double p_star() const noexcept;
  // a = epsilon / psi^2 = 1 / p_star^2.
  double a() const noexcept;

  // Parameters of the same continuous process observed with step dt.
  OuParams scaled(double dt) const;

 private:
  OuParams(double epsilon, double psi) : epsilon_(epsilon), psi_(psi) {}
  double epsilon_;
  double psi_;
};

struct Path {
  std::vector<double> values;
  double dt = 1.0;
  std::uint64_t seed = 0;
};

struct MleFit {
  double kappa_hat = 0.0;
  double diffusion_hat = 0.0;
  double stderr_kappa = 0.0;
  double stderr_diffusion = 0.0;
  double phi_hat = 0.0;
  std::size_t n_obs = 0;
};

struct Ar1Options {
  std::optional<double> start;  // default: draw from the stationary law
  std::size_t burn_in = 0;      // steps simulated and discarded before values[0]
  double dt = 1.0;
};

// Stationary variance of the exact recursion, psi^2 / (2 eps - eps^2).
double ar1_stationary_variance(const OuParams& ou);

// Continuous-time stationary standard deviation psi / sqrt(2 eps).
double stationary_std(const OuParams& ou);

// Default transient to discard, ceil(10 / eps) steps.
std::size_t default_burn_in(const OuParams& ou);

// Incremental AR(1) generator shared by every simulator that needs the
// predictor path without storing it.
class Ar1Stepper {
 public:
  Ar1Stepper(const OuParams& ou, Engine engine)
      : phi_(1.0 - ou.epsilon()), psi_(ou.psi()), sd0_(std::sqrt(ar1_stationary_variance(ou))),
        engine_(std::move(engine)) {}

  double stationary_draw() { return sd0_ * normal_(engine_); }
  double step(double p) { return phi_ * p + psi_ * normal_(engine_); }
  Engine& engine() noexcept { return engine_; }

 private:
  double phi_;
  double psi_;
  double sd0_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Path simulate_ar1(const OuParams& ou, std::size_t n_steps, std::uint64_t seed,
                  const Ar1Options& options = {});

// Exact Gaussian-transition MLE of x_{t+1} = phi x_t + eta_t (zero mean).
MleFit fit_ou_mle(const Path& path);

// Two-column CSV: step,value
void write_path_csv(const Path& path, std::ostream& out);

}  // namespace mftrade
