#pragma once

#include <optional>
#include <vector>

#include "gcp/normal_gamma.hpp"

// Expectation-level dynamics of the prior parameters under a Gaussian ground
// truth: expected gradients, RK4 integration of the full and fixed-alpha
// systems, equilibrium and integral curves, and the diagnostics used to
// check the theorem-level behavior numerically.

namespace gcp {

struct GroundTruth {
  double mean;
  double variance;  // V > 0
};

enum class OdeMode { kFullSystem, kFixedAlpha, kMeanOnly };

struct OdeConfig {
  double step = 1e-3;
  double max_time = 10.0;
  int quadrature_nodes = 96;
  double stop_tolerance = 0.0;  // on the state-change rate; 0 disables
  OdeMode mode = OdeMode::kFullSystem;
  // The nu equation stiffens like alpha^2 once the trajectory is pinned to
  // the equilibrium curve, which caps the stable RK4 step far below what the
  // slowly growing alpha needs on long horizons. With stiff set (and m
  // starting at the true mean, where it stays), integrate() instead evolves
  // (alpha, nu) with an implicit step for nu and recovers beta from the
  // conserved integral-curve constant, which is exact on this invariant set.
  bool stiff = false;
};

struct StepDiagnostics {
  double sigma;
  std::optional<double> v_est;
  double v_corrected;
  bool in_strip;
  double integral_curve_constant;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<NormalGammaParams> states;
  std::vector<StepDiagnostics> diagnostics;
};

/// E[dK/d(m, alpha, beta, nu)] for y ~ N(gt.mean, gt.variance). The m and
/// alpha components use a feature-centered sinh-substitution quadrature that
/// stays accurate even when sigma/V is tiny; the beta and nu components use
/// the closed forms through F(sigma/V) when m equals the true mean.
/// With verify set, each quadrature component is recomputed at twice the
/// nodes and a discrepancy above 1e-8 raises a numerical error.
GcpGradient expected_gradients(const NormalGammaParams& params,
                               const GroundTruth& gt, int quadrature_nodes = 96,
                               bool verify = true);

/// Fixed-step RK4 integration of the gradient flow. A step that would leave
/// the positive quadrant is retried with a locally halved step, up to 10
/// halvings, before raising an error suggesting a smaller dt.
Trajectory integrate(const NormalGammaParams& params0, const GroundTruth& gt,
                     const OdeConfig& cfg);

/// The sigma at which the expected alpha-gradient vanishes (m at the true
/// mean), bracketed inside (0, sigma_0(alpha)).
double sigma_star(double alpha, const GroundTruth& gt, const OdeConfig& cfg);

/// C = beta^2 + nu^2 + 2 nu^3 / 3, conserved along (nu, beta) trajectories.
double integral_curve_constant(double nu, double beta);

struct FixedAlphaEquilibrium {
  double nu_star;
  double beta_star;
};

/// Intersection of the integral curve through (nu0, beta0) with the
/// equilibrium curve beta (nu+1) / nu = (alpha - A(alpha)) V.
FixedAlphaEquilibrium fixed_alpha_equilibrium(double alpha, double V,
                                              double nu0, double beta0);

/// Product of the slopes of the equilibrium curve and the integral curve at
/// their intersection point for the given nu; identically -1.
double orthogonality_check(double alpha, double V, double nu);

/// k(alpha): the large-V limit of V * E[dK/dm] at sigma = c (alpha - A) V
/// and unit m, by quadrature of its defining integral.
double mean_gradient_asymptote(double alpha, double c);

}  // namespace gcp
