#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcp/data.hpp"
#include "gcp/dynamics.hpp"
#include "gcp/eval.hpp"
#include "gcp/experiment.hpp"
#include "gcp/mlp.hpp"
#include "gcp/specfun.hpp"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gcp::DataError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void cmd_solve_a(const std::vector<double>& alphas, bool csv) {
  if (csv) std::cout << "alpha,A,residual\n";
  for (double a : alphas) {
    const double A = gcp::solve_A(a);
    const double res = gcp::solve_A_residual(a, A);
    if (csv)
      std::printf("%.17g,%.17g,%.3g\n", a, A, res);
    else
      std::printf("A(%g) = %.12f  (residual %.3g)\n", a, A, res);
  }
}

struct SimulateArgs {
  double m = 0.0, nu = 1.0, alpha = 1.0, beta = 1.0;
  double mean = 0.0, variance = 1.0;
  std::string mode = "full";
  gcp::OdeConfig ode;
  std::string out_csv, out_summary;
};

void cmd_simulate(const SimulateArgs& a) {
  gcp::OdeConfig ode = a.ode;
  if (a.mode == "full") ode.mode = gcp::OdeMode::kFullSystem;
  else if (a.mode == "fixed-alpha") ode.mode = gcp::OdeMode::kFixedAlpha;
  else if (a.mode == "mean-only") ode.mode = gcp::OdeMode::kMeanOnly;
  else throw CLI::ValidationError("--mode must be full, fixed-alpha, or mean-only");
  const gcp::NormalGammaParams p0{a.m, a.nu, a.alpha, a.beta};
  const gcp::GroundTruth gt{a.mean, a.variance};
  const gcp::SimulationSummary summary =
      gcp::run_simulation(p0, gt, ode, a.out_csv, a.out_summary);
  std::cout << summary.to_json() << "\n";
}

struct GenDataArgs {
  std::string generator = "cubic";
  int n = 100;
  double outlier_prob = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_gen_data(const GenDataArgs& a) {
  gcp::Dataset ds;
  if (a.generator == "cubic") ds = gcp::gen_cubic(a.n, a.seed);
  else if (a.generator == "sine_outliers")
    ds = gcp::gen_sine_outliers(a.n, a.outlier_prob, a.seed);
  else throw CLI::ValidationError("--generator must be cubic or sine_outliers");
  gcp::write_csv(ds, a.out);
  std::cout << "wrote " << ds.size() << " rows to " << a.out << "\n";
}

struct TrainArgs {
  std::string data, target = "y";
  gcp::TrainConfig cfg;
  std::string loss = "gcp", optimizer = "adam";
  int hidden = 50;
  double dropout = 0.0;
  std::string out;
};

// The model bundle pairs the checkpoint with the training-set normalization
// so `evaluate` can reproduce the exact input/output scaling.
void cmd_train(const TrainArgs& a) {
  gcp::TrainConfig cfg = a.cfg;
  cfg.loss = gcp::loss_from_string(a.loss);
  cfg.optimizer = gcp::optimizer_from_string(a.optimizer);
  gcp::Dataset train = gcp::load_csv_and_normalize(a.data, a.target);
  gcp::MlpModel model =
      gcp::init_model(static_cast<int>(train.dim()), a.hidden, a.dropout,
                      gcp::family_for(cfg.loss), cfg.seed);
  const gcp::TrainResult result = gcp::train(model, train.inputs, train.targets, cfg);

  json bundle;
  bundle["checkpoint"] = json::parse(gcp::checkpoint_to_json(model, cfg));
  const gcp::Normalization& norm = *train.normalization;
  bundle["normalization"] = {{"input_mean", norm.input_mean},
                             {"input_std", norm.input_std},
                             {"target_mean", norm.target_mean},
                             {"target_std", norm.target_std}};
  std::ofstream out(a.out);
  if (!out) throw gcp::DataError("cannot open for writing: " + a.out);
  out << bundle.dump(2) << "\n";
  std::printf("trained %d epochs, final loss %.6g, bundle written to %s\n",
              cfg.epochs, result.epoch_losses.back(), a.out.c_str());
}

struct EvaluateArgs {
  std::string model, data, target = "y", method = "gcp", out_curve;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const json bundle = json::parse(slurp(a.model));
  gcp::TrainConfig cfg;
  gcp::MlpModel model = gcp::checkpoint_from_json(bundle.at("checkpoint").dump(), &cfg);
  gcp::Normalization norm;
  const auto& nj = bundle.at("normalization");
  norm.input_mean = nj.at("input_mean").get<std::vector<double>>();
  norm.input_std = nj.at("input_std").get<std::vector<double>>();
  norm.target_mean = nj.at("target_mean").get<double>();
  norm.target_std = nj.at("target_std").get<double>();

  gcp::Dataset raw = gcp::denormalize(gcp::load_csv_and_normalize(a.data, a.target));
  gcp::Dataset test = gcp::apply_normalization(raw, norm);

  std::vector<double> preds, variances;
  for (const auto& x : test.inputs) {
    const gcp::PredictiveEstimates est = gcp::predict(model, x);
    preds.push_back(est.mean_est * norm.target_std + norm.target_mean);
    const double v = a.method == "gcp_corr" ? est.v_corrected
                                            : (est.v_est ? *est.v_est : est.v_corrected);
    variances.push_back(v * norm.target_std * norm.target_std);
  }
  const gcp::EvalReport report =
      gcp::evaluate(a.method, 0, preds, variances, raw.targets);
  if (!a.out_curve.empty()) report.write_curve_csv(a.out_curve);
  std::cout << report.to_json() << "\n";
}

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
  std::int64_t seed = -1;
  int jobs = 0, folds = 0;
  double contamination = -1.0;
};

void cmd_experiment(const ExperimentArgs& a) {
  gcp::ExperimentConfig cfg = gcp::experiment_config_from_json(slurp(a.config));
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.jobs > 0) cfg.jobs = a.jobs;
  if (a.folds > 0) cfg.n_folds = a.folds;
  if (a.contamination >= 0.0) cfg.contamination = a.contamination;
  const gcp::RunReport report = gcp::run_experiment(cfg);
  json out;
  out["aggregates"] = json::array();
  for (const auto& agg : report.aggregates)
    out["aggregates"].push_back(json{{"method", agg.method},
                                     {"mean_rmse", agg.mean_rmse},
                                     {"mean_auc", agg.mean_auc},
                                     {"n_folds", agg.n_folds}});
  out["failures"] = report.failures.size();
  std::cout << out.dump(2) << "\n";
  if (!report.failures.empty()) {
    for (const auto& f : report.failures)
      std::cerr << "failed: " << f.method << " fold " << f.fold_id << ": "
                << f.message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Input-dependent normal distributions via conjugate-prior gradient training"};
  app.require_subcommand(1);

  std::vector<double> alphas;
  bool solve_csv = false;
  auto* solve = app.add_subcommand("solve-a", "Evaluate the variance-correction root A(alpha)");
  solve->add_option("--alpha", alphas, "alpha values (repeatable)")->required();
  solve->add_flag("--csv", solve_csv, "CSV output");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Integrate the expected-gradient flow");
  simulate->add_option("--m", sim.m, "initial m");
  simulate->add_option("--nu", sim.nu, "initial nu");
  simulate->add_option("--alpha", sim.alpha, "initial alpha");
  simulate->add_option("--beta", sim.beta, "initial beta");
  simulate->add_option("--mean", sim.mean, "ground-truth mean");
  simulate->add_option("--variance", sim.variance, "ground-truth variance");
  simulate->add_option("--mode", sim.mode, "full | fixed-alpha | mean-only");
  simulate->add_option("--step", sim.ode.step, "RK4 step");
  simulate->add_option("--max-time", sim.ode.max_time, "integration horizon");
  simulate->add_option("--nodes", sim.ode.quadrature_nodes, "quadrature nodes");
  simulate->add_option("--stop-tolerance", sim.ode.stop_tolerance,
                       "stop when the state-change rate drops below this");
  simulate->add_flag("--stiff", sim.ode.stiff,
                     "implicit nu step with beta from the conserved constant");
  simulate->add_option("--out-csv", sim.out_csv, "trajectory CSV path");
  simulate->add_option("--out-summary", sim.out_summary, "summary JSON path");

  GenDataArgs gen;
  auto* gen_data = app.add_subcommand("gen-data", "Write a synthetic dataset CSV");
  gen_data->add_option("--generator", gen.generator, "cubic | sine_outliers");
  gen_data->add_option("--n", gen.n, "sample count");
  gen_data->add_option("--outlier-prob", gen.outlier_prob, "outlier probability");
  gen_data->add_option("--seed", gen.seed, "RNG seed");
  gen_data->add_option("--out", gen.out, "output CSV path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a CSV dataset");
  train_cmd->add_option("--data", tr.data, "training CSV")->required();
  train_cmd->add_option("--target", tr.target, "target column name");
  train_cmd->add_option("--loss", tr.loss, "gcp | gaussian_ml | squared_error | dpd");
  train_cmd->add_option("--optimizer", tr.optimizer, "adam | rmsprop | nesterov");
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "learning rate");
  train_cmd->add_option("--epochs", tr.cfg.epochs, "epochs");
  train_cmd->add_option("--minibatch", tr.cfg.minibatch, "minibatch size");
  train_cmd->add_option("--dpd-exponent", tr.cfg.dpd_exponent, "density-power exponent");
  train_cmd->add_option("--seed", tr.cfg.seed, "RNG seed");
  train_cmd->add_option("--hidden", tr.hidden, "hidden units");
  train_cmd->add_option("--dropout", tr.dropout, "dropout rate");
  train_cmd->add_option("--out", tr.out, "model bundle output path")->required();

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained model bundle on a CSV");
  eval_cmd->add_option("--model", ev.model, "model bundle path")->required();
  eval_cmd->add_option("--data", ev.data, "test CSV")->required();
  eval_cmd->add_option("--target", ev.target, "target column name");
  eval_cmd->add_option("--method", ev.method, "variance choice: gcp | gcp_corr | other");
  eval_cmd->add_option("--out-curve", ev.out_curve, "RMSE curve CSV path");

  ExperimentArgs ex;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a fold-wise experiment from a JSON config");
  exp_cmd->add_option("--config", ex.config, "JSON config path")->required();
  exp_cmd->add_option("--output-dir", ex.output_dir, "override output directory");
  exp_cmd->add_option("--seed", ex.seed, "override seed");
  exp_cmd->add_option("--jobs", ex.jobs, "concurrent (fold, method) tasks");
  exp_cmd->add_option("--folds", ex.folds, "override fold count");
  exp_cmd->add_option("--contamination", ex.contamination, "override contamination fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) cmd_solve_a(alphas, solve_csv);
    else if (simulate->parsed()) cmd_simulate(sim);
    else if (gen_data->parsed()) cmd_gen_data(gen);
    else if (train_cmd->parsed()) cmd_train(tr);
    else if (eval_cmd->parsed()) cmd_evaluate(ev);
    else if (exp_cmd->parsed()) cmd_experiment(ex);
  } catch (const gcp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
