#include "gcp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace gcp {

namespace {

// Number of eigenvalues of the n x n Hermite Jacobi matrix (zero diagonal,
// off-diagonal b_k = sqrt(k/2)) strictly below x, by the Sturm/LDL^T count.
int hermite_sturm_count(int n, double x) {
  int count = 0;
  double q = 1.0;
  for (int k = 0; k < n; ++k) {
    q = (k == 0) ? -x : -x - (0.5 * k) / q;
    if (q < 0.0) ++count;
    if (q == 0.0) q = 1e-300;
  }
  return count;
}

// Physicists' Hermite rule. The nodes are the Jacobi-matrix eigenvalues,
// bracketed by Sturm bisection (stable for any n) and polished by Newton on
// the scaled three-term recurrence; weights come from the same recurrence.
QuadRule compute_hermite(int n) {
  if (n < 1) throw std::domain_error("gauss_hermite: n >= 1 required");
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = 3.14159265358979323846;
  const double bound = std::sqrt(2.0 * n) + 1.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // i-th largest node = eigenvalue with ascending index n - 1 - i > 0.
    const int target = n - 1 - i;
    double lo = 0.0, hi = bound;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (hermite_sturm_count(n, mid) > target)
        hi = mid;
      else
        lo = mid;
    }
    double x = 0.5 * (lo + hi);

    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Scaled recurrence: Ht_k = H_k / sqrt(2^k k! sqrt(pi)) stays bounded.
      double p1 = 1.0 / std::pow(pi, 0.25);
      double p2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / (k + 1.0)) * p2 -
             std::sqrt(static_cast<double>(k) / (k + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    rule.nodes[i] = x;
    rule.nodes[n - 1 - i] = -x;
    const double w = 2.0 / (pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadRule compute_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre: n >= 1 required");
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k + 1.0) * x * p2 - k * p3) / (k + 1.0);
      }
      pp = n * (x * p1 - p2) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

template <QuadRule (*Compute)(int)>
const QuadRule& cached(int n) {
  static std::map<int, QuadRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Compute(n)).first;
  return it->second;
}

}  // namespace

const QuadRule& gauss_hermite(int n) { return cached<compute_hermite>(n); }
const QuadRule& gauss_legendre(int n) { return cached<compute_legendre>(n); }

double gauss_expectation(const std::function<double(double)>& f, double mean,
                         double var, int n) {
  const QuadRule& rule = gauss_hermite(n);
  const double scale = std::sqrt(2.0 * var);
  const double inv_sqrt_pi = 0.56418958354775628695;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += rule.weights[i] * f(mean + scale * rule.nodes[i]);
  return sum * inv_sqrt_pi;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int panels, int nodes_per_panel) {
  const QuadRule& rule = gauss_legendre(nodes_per_panel);
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    double sum = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      sum += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    total += 0.5 * h * sum;
  }
  return total;
}

}  // namespace gcp
