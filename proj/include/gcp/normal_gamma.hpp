#pragma once

#include <optional>

// The normal-gamma prior: Bayesian conjugate update, the closed-form KL
// divergence between prior and posterior, the four per-sample gradients used
// by the GCP update, the Student-t predictive density, and the mean/variance
// estimators including the corrected variance.

namespace gcp {

struct NormalGammaParams {
  double m;      // location
  double nu;     // pseudo-count, > 0
  double alpha;  // shape, > 0
  double beta;   // rate, > 0

  /// sigma = beta (nu + 1) / nu, the scale of the predictive t.
  double sigma() const { return beta * (nu + 1.0) / nu; }

  bool valid() const;
  /// Throws std::domain_error if invalid.
  void check() const;
};

struct GcpGradient {
  double d_m;
  double d_alpha;
  double d_beta;
  double d_nu;
};

struct PredictiveEstimates {
  double mean_est;
  std::optional<double> v_est;  // beta(nu+1)/((alpha-1)nu), only for alpha > 1
  double v_corrected;           // beta(nu+1)/((alpha-A(alpha))nu)
  double alpha;                 // exposed as a trust indicator
};

/// One Bayesian conjugate-prior update with observation y.
NormalGammaParams cp_update(const NormalGammaParams& prior, double y);

/// KL divergence D(p_post || p) for two normal-gamma parameter sets,
/// in closed form. The "prime" parameters of the formula are p_post's.
double kl_divergence(const NormalGammaParams& p, const NormalGammaParams& p_post);

/// The four derivatives of kl_divergence(params, cp_update(params, y)) with
/// the posterior frozen: the posterior is materialized once from (params, y)
/// and treated as constants while differentiating in (m, alpha, beta, nu).
GcpGradient gcp_gradients(const NormalGammaParams& params, double y);

/// Log density of the predictive non-standardized Student-t with 2 alpha
/// degrees of freedom, location m, and squared scale sigma/alpha, written
/// directly in terms of sigma = beta(nu+1)/nu:
///   ln G(a+1/2) - ln G(a) - (1/2) ln(2 pi sigma) - (a+1/2) ln(1 + (y-m)^2/(2 sigma)).
double student_t_logpdf(const NormalGammaParams& params, double y);

/// Mean and variance estimates, with the corrected variance using A(alpha).
PredictiveEstimates predictive_estimates(const NormalGammaParams& params);

}  // namespace gcp
