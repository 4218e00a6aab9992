#pragma once

#include <string>
#include <vector>

// Evaluation measures: RMSE, the variance-ordered RMSE(n) curve, its
// normalized area, and the paired significance test used to compare methods
// across folds.

namespace gcp {

struct EvalReport {
  std::string method;
  int fold_id = 0;
  double rmse = 0.0;
  double auc = 0.0;
  std::vector<double> rmse_curve;  // RMSE(n), n = 0..N-1

  std::string to_json() const;
  /// Two columns: n, rmse.
  void write_curve_csv(const std::string& path) const;
};

double rmse(const std::vector<double>& predictions,
            const std::vector<double>& targets);

/// RMSE(n) over the N-n samples remaining after dropping the n highest
/// predicted variances. Ties in variance are broken by original index, so
/// equal-variance samples are dropped in input order.
std::vector<double> rmse_curve(const std::vector<double>& predictions,
                               const std::vector<double>& predicted_variances,
                               const std::vector<double>& targets);

/// Trapezoid area of the curve, normalized: (1/(N-1)) sum (c[n]+c[n+1])/2.
double auc(const std::vector<double>& curve);

enum class PairedOutcome {
  kSignificantABetter,
  kSignificantBBetter,
  kIndistinguishable,
};

/// Two-tailed paired t-test on a-b. Lower scores are better, so a
/// significantly negative mean difference reports a as better.
PairedOutcome paired_diff_test(const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b,
                               double p_threshold);

EvalReport evaluate(const std::string& method, int fold_id,
                    const std::vector<double>& predictions,
                    const std::vector<double>& predicted_variances,
                    const std::vector<double>& targets);

}  // namespace gcp
