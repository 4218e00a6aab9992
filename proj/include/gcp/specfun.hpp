#pragma once

#include <vector>

// Special functions used throughout the library: log-gamma, digamma, the
// complementary error function, the Gaussian integral F(x), and the root
// function A(alpha) together with its tabulated/interpolated form.

namespace gcp {

/// Natural log of the gamma function, x > 0.
double ln_gamma(double x);

/// Digamma function Psi(x) = Gamma'(x)/Gamma(x), x > 0.
double digamma(double x);

/// Complementary error function.
double erfc_func(double x);

/// Scaled complementary error function, exp(x^2) * erfc(x), x >= 0.
double erfcx_func(double x);

/// F(x) = (1/sqrt(2 pi)) \int 1/(2x + z^2) exp(-z^2/2) dz
///      = (sqrt(pi)/2) exp(x) erfc(sqrt(x)) / sqrt(x),  x > 0.
/// Evaluated via the scaled erfc so that large x does not overflow.
double f_integral(double x);

/// The unique root A of F(alpha - A) = alpha / ((2 alpha + 1)(alpha - A)),
/// bracketed by 2 alpha / (2 alpha + 3) < A < min(alpha, 1).
double solve_A(double alpha);

/// Residual of the root equation at the returned root, in the normalized
/// form x F(x) - alpha/(2 alpha + 1) with x = alpha - A. Bounded by 1/2 in
/// magnitude regardless of alpha, which keeps an absolute tolerance
/// meaningful across the whole range.
double solve_A_residual(double alpha, double A);

/// sigma_kappa(alpha) = (1 - kappa/alpha) (alpha - A(alpha)) V.
/// kappa = 0 gives the equilibrium curve sigma_0.
double sigma_kappa(double alpha, double kappa, double V);

/// Tabulated A(alpha) with monotone-cubic interpolation. An optional cache:
/// solve_A is the source of truth, the table only trades accuracy for speed
/// when A is evaluated per training sample.
class AlphaFunctionTable {
 public:
  enum class Method { kDirectRootSolve, kOdePropagated };

  // Nodes log-spaced on [alpha_min, alpha_max].
  AlphaFunctionTable(double alpha_min, double alpha_max, int n_nodes,
                     Method method = Method::kDirectRootSolve);

  double eval(double alpha) const;

  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& values() const { return values_; }
  Method method() const { return method_; }

 private:
  std::vector<double> alphas_;
  std::vector<double> values_;
  std::vector<double> slopes_;  // Fritsch-Carlson tangents
  Method method_;
};

}  // namespace gcp
