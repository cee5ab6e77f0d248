#include "mftrade/ou_processes.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "mftrade/errors.hpp"

namespace mftrade {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    std::ostringstream os;
    os << "epsilon must lie in (0, 1], got " << epsilon;
    detail::fail(ErrorKind::parameter_domain, "epsilon", os.str());
  }
}

}  // namespace

OuParams OuParams::make(double epsilon, double psi) {
  check_epsilon(epsilon);
  if (!(psi > 0.0) || !std::isfinite(psi)) {
    std::ostringstream os;
    os << "psi must be positive and finite, got " << psi;
    detail::fail(ErrorKind::parameter_domain, "psi", os.str());
  }
  return OuParams(epsilon, psi);
}

OuParams OuParams::noiseless(double epsilon) {
  check_epsilon(epsilon);
  return OuParams(epsilon, 0.0);
}

double OuParams::p_star() const noexcept { return psi_ / std::sqrt(epsilon_); }

double OuParams::a() const noexcept { return epsilon_ / (psi_ * psi_); }

OuParams OuParams::scaled(double dt) const {
  detail::require(dt > 0.0, ErrorKind::parameter_domain, "dt", "dt must be positive");
  if (psi_ == 0.0) return noiseless(epsilon_ * dt);
  return make(epsilon_ * dt, psi_ * std::sqrt(dt));
}

double ar1_stationary_variance(const OuParams& ou) {
  const double e = ou.epsilon();
  return ou.psi() * ou.psi() / (2.0 * e - e * e);
}

double stationary_std(const OuParams& ou) { return ou.psi() / std::sqrt(2.0 * ou.epsilon()); }

std::size_t default_burn_in(const OuParams& ou) {
  return static_cast<std::size_t>(std::ceil(10.0 / ou.epsilon()));
}

Path simulate_ar1(const OuParams& ou, std::size_t n_steps, std::uint64_t seed,
                  const Ar1Options& options) {
  detail::require(n_steps >= 2, ErrorKind::parameter_domain, "n_steps", "n_steps must be >= 2");
  const OuParams step_params = options.dt == 1.0 ? ou : ou.scaled(options.dt);
  Ar1Stepper stepper(step_params, make_engine(seed));

  double p = options.start ? *options.start : stepper.stationary_draw();
  for (std::size_t i = 0; i < options.burn_in; ++i) p = stepper.step(p);

  Path path;
  path.dt = options.dt;
  path.seed = seed;
  path.values.resize(n_steps);
  path.values[0] = p;
  for (std::size_t t = 1; t < n_steps; ++t) {
    p = stepper.step(p);
    path.values[t] = p;
  }
  return path;
}

MleFit fit_ou_mle(const Path& path) {
  const auto& x = path.values;
  const std::size_t n = x.size();
  detail::require(n >= 100, ErrorKind::input, "path", "MLE needs at least 100 samples");
  detail::require(path.dt > 0.0, ErrorKind::input, "dt", "path dt must be positive");

  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    sxx += x[t] * x[t];
    sxy += x[t] * x[t + 1];
  }
  const double phi = sxx > 0.0 ? sxy / sxx : std::nan("");
  if (!(phi > 0.0 && phi < 1.0)) throw NonStationaryFitError(phi);

  const std::size_t m = n - 1;
  double rss = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const double r = x[t + 1] - phi * x[t];
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(m);
  const double dt = path.dt;

  MleFit fit;
  fit.n_obs = m;
  fit.phi_hat = phi;
  fit.kappa_hat = -std::log(phi) / dt;
  // Exact OU transition: Var[eta] = sigma^2 (1 - phi^2) / (2 kappa).
  fit.diffusion_hat = std::sqrt(2.0 * fit.kappa_hat * s2 / (1.0 - phi * phi));
  const double se_phi = std::sqrt(s2 / sxx);
  fit.stderr_kappa = se_phi / (phi * dt);
  fit.stderr_diffusion = fit.diffusion_hat / std::sqrt(2.0 * static_cast<double>(m));
  return fit;
}

void write_path_csv(const Path& path, std::ostream& out) {
  out << "step,value\n";
  out.precision(17);
  for (std::size_t t = 0; t < path.values.size(); ++t) out << t << ',' << path.values[t] << '\n';
}

}  // namespace mftrade
