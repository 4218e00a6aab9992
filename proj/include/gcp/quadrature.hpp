#pragma once

#include <functional>
#include <vector>

namespace gcp {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for weight exp(-t^2) on (-inf, inf). Cached per n.
const QuadRule& gauss_hermite(int n);

/// Gauss-Legendre rule on [-1, 1]. Cached per n.
const QuadRule& gauss_legendre(int n);

/// E[f(Z)] for Z ~ N(mean, var), via n-node Gauss-Hermite.
double gauss_expectation(const std::function<double(double)>& f, double mean,
                         double var, int n);

/// \int_a^b f, composite Gauss-Legendre with the given panels and nodes.
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int panels, int nodes_per_panel);

}  // namespace gcp
