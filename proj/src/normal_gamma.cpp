#include "gcp/normal_gamma.hpp"

#include <cmath>
#include <stdexcept>

#include "gcp/specfun.hpp"

namespace gcp {

bool NormalGammaParams::valid() const {
  return std::isfinite(m) && std::isfinite(nu) && std::isfinite(alpha) &&
         std::isfinite(beta) && nu > 0.0 && alpha > 0.0 && beta > 0.0;
}

void NormalGammaParams::check() const {
  if (!valid())
    throw std::domain_error("NormalGammaParams: requires finite m and nu, alpha, beta > 0");
}

NormalGammaParams cp_update(const NormalGammaParams& prior, double y) {
  prior.check();
  if (!std::isfinite(y)) throw std::domain_error("cp_update: non-finite observation");
  const double r = y - prior.m;
  return NormalGammaParams{
      (prior.nu * prior.m + y) / (prior.nu + 1.0),
      prior.nu + 1.0,
      prior.alpha + 0.5,
      prior.beta + prior.nu / (prior.nu + 1.0) * r * r / 2.0,
  };
}

double kl_divergence(const NormalGammaParams& p, const NormalGammaParams& p_post) {
  p.check();
  p_post.check();
  const double dm = p.m - p_post.m;
  const double ratio = p_post.alpha / p_post.beta;
  return 0.5 * ratio * dm * dm * p.nu + 0.5 * p.nu / p_post.nu -
         0.5 * std::log(p.nu / p_post.nu) - 0.5 -
         p.alpha * std::log(p.beta / p_post.beta) + ln_gamma(p.alpha) -
         ln_gamma(p_post.alpha) - (p.alpha - p_post.alpha) * digamma(p_post.alpha) +
         (p.beta - p_post.beta) * ratio;
}

GcpGradient gcp_gradients(const NormalGammaParams& params, double y) {
  params.check();
  if (!std::isfinite(y)) throw std::domain_error("gcp_gradients: non-finite observation");
  const double r = params.m - y;
  const double sigma = params.sigma();
  const double denom = sigma + 0.5 * r * r;
  const double a_half = params.alpha + 0.5;
  GcpGradient g;
  g.d_m = a_half * r / denom;
  // log1p keeps precision near y = m, where finite differences probe.
  g.d_alpha = std::log1p(0.5 * r * r / sigma) + digamma(params.alpha) -
              digamma(params.alpha + 0.5);
  g.d_beta = (a_half * sigma / denom - params.alpha) / params.beta;
  g.d_nu = (a_half * r * r / denom - 1.0) / (2.0 * params.nu * (params.nu + 1.0));
  return g;
}

double student_t_logpdf(const NormalGammaParams& params, double y) {
  params.check();
  if (!std::isfinite(y)) throw std::domain_error("student_t_logpdf: non-finite observation");
  const double sigma = params.sigma();
  const double r = y - params.m;
  return ln_gamma(params.alpha + 0.5) - ln_gamma(params.alpha) -
         0.5 * std::log(2.0 * M_PI * sigma) -
         (params.alpha + 0.5) * std::log1p(0.5 * r * r / sigma);
}

PredictiveEstimates predictive_estimates(const NormalGammaParams& params) {
  params.check();
  const double scale = params.beta * (params.nu + 1.0) / params.nu;
  PredictiveEstimates est;
  est.mean_est = params.m;
  est.alpha = params.alpha;
  if (params.alpha > 1.0)
    est.v_est = scale / (params.alpha - 1.0);
  est.v_corrected = scale / (params.alpha - solve_A(params.alpha));
  return est;
}

}  // namespace gcp
