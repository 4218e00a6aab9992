#include "gcp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "gcp/data.hpp"

namespace gcp {

double rmse(const std::vector<double>& predictions,
            const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.empty())
    throw std::domain_error("rmse: equal nonzero lengths required");
  double ss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    ss += e * e;
  }
  return std::sqrt(ss / predictions.size());
}

std::vector<double> rmse_curve(const std::vector<double>& predictions,
                               const std::vector<double>& predicted_variances,
                               const std::vector<double>& targets) {
  const std::size_t n = predictions.size();
  if (predicted_variances.size() != n || targets.size() != n)
    throw std::domain_error("rmse_curve: length mismatch");
  if (n < 2) throw std::domain_error("rmse_curve: need at least 2 samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predicted_variances[a] > predicted_variances[b];
  });

  // Removal follows the sorted order, so RMSE(k) is over the suffix from k.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double e = predictions[order[i]] - targets[order[i]];
    suffix[i] = suffix[i + 1] + e * e;
  }
  std::vector<double> curve(n);
  for (std::size_t k = 0; k < n; ++k)
    curve[k] = std::sqrt(suffix[k] / (n - k));
  return curve;
}

double auc(const std::vector<double>& curve) {
  const std::size_t n = curve.size();
  if (n < 2) throw std::domain_error("auc: need at least 2 curve points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    area += 0.5 * (curve[i] + curve[i + 1]);
  return area / (n - 1);
}

PairedOutcome paired_diff_test(const std::vector<double>& scores_a,
                               const std::vector<double>& scores_b,
                               double p_threshold) {
  const std::size_t n = scores_a.size();
  if (scores_b.size() != n || n < 2)
    throw std::domain_error("paired_diff_test: equal lengths >= 2 required");
  if (!(p_threshold > 0.0 && p_threshold < 1.0))
    throw std::domain_error("paired_diff_test: p_threshold in (0,1)");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = scores_a[i] - scores_b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double var = ss / (n - 1);

  if (var == 0.0) {
    if (mean == 0.0) return PairedOutcome::kIndistinguishable;
    // Degenerate but unambiguous: identical nonzero differences everywhere.
    return mean < 0.0 ? PairedOutcome::kSignificantABetter
                      : PairedOutcome::kSignificantBBetter;
  }

  const double t = mean / std::sqrt(var / n);
  boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
  const double p = 2.0 * boost::math::cdf(dist, -std::abs(t));
  if (p >= p_threshold) return PairedOutcome::kIndistinguishable;
  return mean < 0.0 ? PairedOutcome::kSignificantABetter
                    : PairedOutcome::kSignificantBBetter;
}

EvalReport evaluate(const std::string& method, int fold_id,
                    const std::vector<double>& predictions,
                    const std::vector<double>& predicted_variances,
                    const std::vector<double>& targets) {
  EvalReport report;
  report.method = method;
  report.fold_id = fold_id;
  report.rmse = rmse(predictions, targets);
  report.rmse_curve = rmse_curve(predictions, predicted_variances, targets);
  report.auc = auc(report.rmse_curve);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["fold_id"] = fold_id;
  j["rmse"] = rmse;
  j["auc"] = auc;
  j["rmse_curve"] = rmse_curve;
  return j.dump(2);
}

void EvalReport::write_curve_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.precision(17);
  out << "n,rmse\n";
  for (std::size_t i = 0; i < rmse_curve.size(); ++i)
    out << i << "," << rmse_curve[i] << "\n";
}

}  // namespace gcp
