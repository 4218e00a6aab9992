#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcp/data.hpp"
#include "gcp/dynamics.hpp"
#include "gcp/eval.hpp"
#include "gcp/mlp.hpp"

// Ties the modules together: fold-wise train/evaluate runs with aggregation
// and significance tests, and ODE simulation runs with CSV/JSON artifacts.

namespace gcp {

struct DatasetSpec {
  // Either a generator ("cubic" or "sine_outliers") or a CSV path.
  std::string generator;
  int n = 0;
  double outlier_prob = 0.0;
  std::string csv_path;
  std::string target_column = "y";
};

struct MethodSpec {
  std::string name;  // gcp, gcp_corr, gaussian_ml, squared_error, dpd
  TrainConfig train;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  DatasetSpec dataset;
  int n_folds = 5;
  double train_fraction = 0.9;
  double contamination = 0.0;
  int hidden_units = 50;
  double dropout_rate = 0.0;
  int jobs = 1;
  std::vector<MethodSpec> methods;
  bool write_checkpoints = true;
  bool write_curves = true;

  void check() const;
};

/// Parse the JSON config format; "train_defaults" supplies TrainConfig keys
/// that individual "methods" entries may override.
ExperimentConfig experiment_config_from_json(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct FoldFailure {
  std::string method;
  int fold_id;
  std::string message;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<EvalReport> fold_reports;
  std::vector<FoldFailure> failures;

  struct Aggregate {
    std::string method;
    double mean_rmse;
    double mean_auc;
    int n_folds;
  };
  std::vector<Aggregate> aggregates;

  struct Comparison {
    std::string method_a;
    std::string method_b;
    std::string rmse_outcome;  // a_better, b_better, indistinguishable
    std::string auc_outcome;
  };
  std::vector<Comparison> comparisons;

  /// Canonical form: sorted keys, no timestamps; stable across reruns.
  std::string to_json() const;
};

/// Fold-wise protocol: normalize on the train split, optionally contaminate
/// the train targets, train every method, predict on the denormalized test
/// split, evaluate. A failing (method, fold) pair is recorded and skipped.
/// Artifacts (report.json, curves/, checkpoints/) go under cfg.output_dir
/// when it is nonempty.
RunReport run_experiment(const ExperimentConfig& cfg);

struct SimulationSummary {
  NormalGammaParams final_state;
  double final_sigma;
  std::optional<double> final_v_est;
  double final_v_corrected;
  std::optional<double> strip_entry_time;
  double integral_curve_drift;  // max relative drift of beta^2+nu^2+2nu^3/3

  std::string to_json() const;
};

/// Integrates the gradient flow and writes the trajectory CSV
/// (t,m,nu,alpha,beta,sigma,v_est,v_corrected,in_strip,C) plus a summary
/// JSON; empty paths skip the corresponding artifact.
SimulationSummary run_simulation(const NormalGammaParams& params0,
                                 const GroundTruth& gt, const OdeConfig& ode,
                                 const std::string& csv_path,
                                 const std::string& summary_path);

}  // namespace gcp
