#include "gcp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gcp/rng.hpp"

namespace gcp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamFoldSeeds = 100;

void train_config_from_json(const json& j, TrainConfig& cfg) {
  if (j.contains("loss")) cfg.loss = loss_from_string(j.at("loss").get<std::string>());
  if (j.contains("optimizer"))
    cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("minibatch")) cfg.minibatch = j.at("minibatch").get<int>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("dpd_exponent")) cfg.dpd_exponent = j.at("dpd_exponent").get<double>();
  if (j.contains("rate_multipliers"))
    cfg.rate_multipliers = j.at("rate_multipliers").get<std::array<double, 4>>();
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{
      {"loss", to_string(cfg.loss)},
      {"optimizer", to_string(cfg.optimizer)},
      {"learning_rate", cfg.learning_rate},
      {"minibatch", cfg.minibatch},
      {"epochs", cfg.epochs},
      {"dpd_exponent", cfg.dpd_exponent},
      {"rate_multipliers", cfg.rate_multipliers},
  };
}

double curve_variance(const std::string& method, const PredictiveEstimates& est) {
  if (method == "gcp_corr") return est.v_corrected;
  if (method == "gcp") return est.v_est ? *est.v_est : est.v_corrected;
  return est.v_est ? *est.v_est : est.v_corrected;
}

std::string outcome_name(PairedOutcome o) {
  switch (o) {
    case PairedOutcome::kSignificantABetter: return "a_better";
    case PairedOutcome::kSignificantBBetter: return "b_better";
    case PairedOutcome::kIndistinguishable: return "indistinguishable";
  }
  return "?";
}

}  // namespace

void ExperimentConfig::check() const {
  if (methods.empty()) throw std::domain_error("ExperimentConfig: at least one method");
  if (n_folds < 1) throw std::domain_error("ExperimentConfig: n_folds >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::domain_error("ExperimentConfig: train_fraction in (0,1)");
  if (!(contamination >= 0.0 && contamination < 1.0))
    throw std::domain_error("ExperimentConfig: contamination in [0,1)");
  if (hidden_units < 1) throw std::domain_error("ExperimentConfig: hidden_units >= 1");
  if (jobs < 1) throw std::domain_error("ExperimentConfig: jobs >= 1");
  if (dataset.generator.empty() && dataset.csv_path.empty())
    throw std::domain_error("ExperimentConfig: dataset needs a generator or a csv path");
  if (!dataset.csv_path.empty() && !fs::exists(dataset.csv_path))
    throw DataError("ExperimentConfig: csv file not found: " + dataset.csv_path);
  for (const auto& m : methods) m.train.check();
}

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("generator")) cfg.dataset.generator = d.at("generator").get<std::string>();
    if (d.contains("n")) cfg.dataset.n = d.at("n").get<int>();
    if (d.contains("outlier_prob")) cfg.dataset.outlier_prob = d.at("outlier_prob").get<double>();
    if (d.contains("csv")) cfg.dataset.csv_path = d.at("csv").get<std::string>();
    if (d.contains("target_column"))
      cfg.dataset.target_column = d.at("target_column").get<std::string>();
  }
  if (j.contains("folds")) {
    const auto& f = j.at("folds");
    if (f.contains("count")) cfg.n_folds = f.at("count").get<int>();
    if (f.contains("train_fraction")) cfg.train_fraction = f.at("train_fraction").get<double>();
  }
  if (j.contains("contamination")) cfg.contamination = j.at("contamination").get<double>();
  if (j.contains("hidden_units")) cfg.hidden_units = j.at("hidden_units").get<int>();
  if (j.contains("dropout_rate")) cfg.dropout_rate = j.at("dropout_rate").get<double>();
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  if (j.contains("write_checkpoints")) cfg.write_checkpoints = j.at("write_checkpoints").get<bool>();
  if (j.contains("write_curves")) cfg.write_curves = j.at("write_curves").get<bool>();

  TrainConfig defaults;
  if (j.contains("train_defaults")) train_config_from_json(j.at("train_defaults"), defaults);
  if (j.contains("methods")) {
    for (const auto& m : j.at("methods")) {
      MethodSpec spec;
      spec.train = defaults;
      if (m.is_string()) {
        spec.name = m.get<std::string>();
      } else {
        spec.name = m.at("name").get<std::string>();
        train_config_from_json(m, spec.train);
      }
      spec.train.loss = loss_from_string(spec.name);
      cfg.methods.push_back(std::move(spec));
    }
  }
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  json d;
  if (!cfg.dataset.generator.empty()) {
    d["generator"] = cfg.dataset.generator;
    d["n"] = cfg.dataset.n;
    d["outlier_prob"] = cfg.dataset.outlier_prob;
  } else {
    d["csv"] = cfg.dataset.csv_path;
    d["target_column"] = cfg.dataset.target_column;
  }
  j["dataset"] = d;
  j["folds"] = {{"count", cfg.n_folds}, {"train_fraction", cfg.train_fraction}};
  j["contamination"] = cfg.contamination;
  j["hidden_units"] = cfg.hidden_units;
  j["dropout_rate"] = cfg.dropout_rate;
  j["jobs"] = cfg.jobs;
  j["write_checkpoints"] = cfg.write_checkpoints;
  j["write_curves"] = cfg.write_curves;
  json methods = json::array();
  for (const auto& m : cfg.methods) {
    json e = train_config_to_json(m.train);
    e["name"] = m.name;
    methods.push_back(e);
  }
  j["methods"] = methods;
  return j.dump(2);
}

std::string RunReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["config"] = json::parse(experiment_config_to_json(config));
  json folds = json::array();
  for (const auto& r : fold_reports)
    folds.push_back(json{{"method", r.method},
                         {"fold_id", r.fold_id},
                         {"rmse", r.rmse},
                         {"auc", r.auc}});
  j["fold_reports"] = folds;
  json fails = json::array();
  for (const auto& f : failures)
    fails.push_back(json{{"method", f.method}, {"fold_id", f.fold_id}, {"message", f.message}});
  j["failures"] = fails;
  json aggs = json::array();
  for (const auto& a : aggregates)
    aggs.push_back(json{{"method", a.method},
                        {"mean_rmse", a.mean_rmse},
                        {"mean_auc", a.mean_auc},
                        {"n_folds", a.n_folds}});
  j["aggregates"] = aggs;
  json comps = json::array();
  for (const auto& c : comparisons)
    comps.push_back(json{{"method_a", c.method_a},
                         {"method_b", c.method_b},
                         {"rmse_outcome", c.rmse_outcome},
                         {"auc_outcome", c.auc_outcome}});
  j["comparisons"] = comps;
  return j.dump(2);
}

namespace {

Dataset build_dataset(const ExperimentConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  if (!d.csv_path.empty()) {
    // Raw parse; the fold loop normalizes on each train split.
    Dataset ds = denormalize(load_csv_and_normalize(d.csv_path, d.target_column));
    return ds;
  }
  if (d.generator == "cubic") return gen_cubic(d.n, cfg.seed);
  if (d.generator == "sine_outliers")
    return gen_sine_outliers(d.n, d.outlier_prob, cfg.seed);
  throw std::domain_error("unknown dataset generator: " + d.generator);
}

struct TaskResult {
  bool ok = false;
  EvalReport report;
  std::string error;
  MlpModel model;
  TrainConfig train_cfg;
};

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  RunReport run;
  run.config = cfg;

  const Dataset full = build_dataset(cfg);
  const auto folds = split_folds(full.size(), cfg.n_folds, cfg.train_fraction, cfg.seed);
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_tasks = cfg.n_folds * n_methods;
  std::vector<TaskResult> results(n_tasks);

  auto run_task = [&](int task) {
    const int fold = task / n_methods;
    const int mi = task % n_methods;
    const MethodSpec& method = cfg.methods[mi];
    TaskResult& out = results[task];
    try {
      Dataset train_raw = subset(full, folds[fold].train_indices);
      Dataset test_raw = subset(full, folds[fold].test_indices);
      Dataset train_norm = normalize(train_raw);
      const Normalization norm = *train_norm.normalization;
      if (cfg.contamination > 0.0)
        train_norm = contaminate(train_norm, cfg.contamination,
                                 CounterRng(cfg.seed, kStreamFoldSeeds).split(fold).next_u64());
      Dataset test_norm = apply_normalization(test_raw, norm);

      TrainConfig tc = method.train;
      tc.seed = CounterRng(cfg.seed, kStreamFoldSeeds + 1 + fold).split(mi).next_u64();
      MlpModel model = init_model(static_cast<int>(full.dim()), cfg.hidden_units,
                                  cfg.dropout_rate, family_for(tc.loss), tc.seed);
      train(model, train_norm.inputs, train_norm.targets, tc);

      std::vector<double> preds, variances;
      preds.reserve(test_norm.size());
      variances.reserve(test_norm.size());
      for (const auto& x : test_norm.inputs) {
        const PredictiveEstimates est = predict(model, x);
        preds.push_back(est.mean_est * norm.target_std + norm.target_mean);
        variances.push_back(curve_variance(method.name, est) * norm.target_std * norm.target_std);
      }
      out.report = evaluate(method.name, fold, preds, variances, test_raw.targets);
      out.model = std::move(model);
      out.train_cfg = tc;
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  if (cfg.jobs <= 1) {
    for (int t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) run_task(t);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(cfg.jobs, n_tasks);
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const bool write = !cfg.output_dir.empty();
  if (write) {
    fs::create_directories(cfg.output_dir);
    if (cfg.write_curves) fs::create_directories(fs::path(cfg.output_dir) / "curves");
    if (cfg.write_checkpoints) fs::create_directories(fs::path(cfg.output_dir) / "checkpoints");
  }

  for (int t = 0; t < n_tasks; ++t) {
    const int fold = t / n_methods;
    const int mi = t % n_methods;
    const std::string& name = cfg.methods[mi].name;
    TaskResult& r = results[t];
    if (!r.ok) {
      run.failures.push_back({name, fold, r.error});
      continue;
    }
    run.fold_reports.push_back(r.report);
    if (write) {
      const std::string tag = name + "_fold" + std::to_string(fold);
      if (cfg.write_curves)
        r.report.write_curve_csv((fs::path(cfg.output_dir) / "curves" / (tag + ".csv")).string());
      if (cfg.write_checkpoints)
        save_checkpoint(r.model, r.train_cfg,
                        (fs::path(cfg.output_dir) / "checkpoints" / (tag + ".json")).string());
    }
  }

  for (int mi = 0; mi < n_methods; ++mi) {
    const std::string& name = cfg.methods[mi].name;
    double sum_rmse = 0.0, sum_auc = 0.0;
    int count = 0;
    for (const auto& r : run.fold_reports) {
      if (r.method != name) continue;
      sum_rmse += r.rmse;
      sum_auc += r.auc;
      ++count;
    }
    if (count > 0)
      run.aggregates.push_back({name, sum_rmse / count, sum_auc / count, count});
  }

  auto scores = [&](const std::string& name, bool use_auc) {
    std::vector<double> s;
    for (const auto& r : run.fold_reports)
      if (r.method == name) s.push_back(use_auc ? r.auc : r.rmse);
    return s;
  };
  for (int a = 0; a < n_methods; ++a) {
    for (int b = a + 1; b < n_methods; ++b) {
      const auto ra = scores(cfg.methods[a].name, false);
      const auto rb = scores(cfg.methods[b].name, false);
      const auto aa = scores(cfg.methods[a].name, true);
      const auto ab = scores(cfg.methods[b].name, true);
      if (ra.size() != rb.size() || ra.size() < 2) continue;
      run.comparisons.push_back(
          {cfg.methods[a].name, cfg.methods[b].name,
           outcome_name(paired_diff_test(ra, rb, 0.05)),
           outcome_name(paired_diff_test(aa, ab, 0.05))});
    }
  }

  if (write) {
    std::ofstream out((fs::path(cfg.output_dir) / "report.json").string());
    if (!out) throw DataError("cannot write report.json under " + cfg.output_dir);
    out << run.to_json() << "\n";
  }
  return run;
}

std::string SimulationSummary::to_json() const {
  json j;
  j["final_state"] = {{"m", final_state.m},
                      {"nu", final_state.nu},
                      {"alpha", final_state.alpha},
                      {"beta", final_state.beta}};
  j["final_sigma"] = final_sigma;
  if (final_v_est) j["final_v_est"] = *final_v_est;
  j["final_v_corrected"] = final_v_corrected;
  if (strip_entry_time) j["strip_entry_time"] = *strip_entry_time;
  j["integral_curve_drift"] = integral_curve_drift;
  return j.dump(2);
}

SimulationSummary run_simulation(const NormalGammaParams& params0,
                                 const GroundTruth& gt, const OdeConfig& ode,
                                 const std::string& csv_path,
                                 const std::string& summary_path) {
  const Trajectory traj = integrate(params0, gt, ode);
  if (traj.states.empty()) throw std::runtime_error("run_simulation: empty trajectory");

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot open for writing: " + csv_path);
    out.precision(17);
    out << "t,m,nu,alpha,beta,sigma,v_est,v_corrected,in_strip,C\n";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const auto& s = traj.states[i];
      const auto& d = traj.diagnostics[i];
      out << traj.times[i] << "," << s.m << "," << s.nu << "," << s.alpha << ","
          << s.beta << "," << d.sigma << ",";
      if (d.v_est) out << *d.v_est;
      out << "," << d.v_corrected << "," << (d.in_strip ? 1 : 0) << ","
          << d.integral_curve_constant << "\n";
    }
  }

  SimulationSummary summary;
  summary.final_state = traj.states.back();
  const StepDiagnostics& last = traj.diagnostics.back();
  summary.final_sigma = last.sigma;
  summary.final_v_est = last.v_est;
  summary.final_v_corrected = last.v_corrected;
  for (std::size_t i = 0; i < traj.diagnostics.size(); ++i) {
    if (traj.diagnostics[i].in_strip) {
      summary.strip_entry_time = traj.times[i];
      break;
    }
  }
  const double c0 = traj.diagnostics.front().integral_curve_constant;
  double drift = 0.0;
  for (const auto& d : traj.diagnostics)
    drift = std::max(drift, std::abs(d.integral_curve_constant - c0));
  summary.integral_curve_drift = c0 != 0.0 ? drift / std::abs(c0) : drift;

  if (!summary_path.empty()) {
    std::ofstream out(summary_path);
    if (!out) throw DataError("cannot open for writing: " + summary_path);
    out << summary.to_json() << "\n";
  }
  return summary;
}

}  // namespace gcp
