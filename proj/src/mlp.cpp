#include "gcp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gcp/rng.hpp"

namespace gcp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kOutputFloor = 1e-8;

enum StreamId : std::uint64_t {
  kStreamInit = 6,
  kStreamTrain = 7,
};

double softplus(double u) {
  const double sp = u > 30.0 ? u : std::log1p(std::exp(u));
  return std::max(sp, kOutputFloor);
}

double logistic(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

struct ForwardScratch {
  std::vector<double> hidden;   // after ReLU and dropout scaling
  std::array<double, 4> pre;    // head pre-activations
  std::array<double, 4> out;    // head outputs
};

void forward_into(const MlpModel& model, const std::vector<double>& x,
                  const std::vector<double>& mask, ForwardScratch& s) {
  const int h_units = model.hidden_units;
  const int d = model.input_dim;
  if (static_cast<int>(x.size()) != d)
    throw std::domain_error("forward: input dimension mismatch");
  if (!mask.empty() && static_cast<int>(mask.size()) != h_units)
    throw std::domain_error("forward: mask length mismatch");

  s.hidden.assign(h_units, 0.0);
  const double keep = 1.0 - model.dropout_rate;
  for (int i = 0; i < h_units; ++i) {
    double z = model.weights[model.b1_at(i)];
    for (int j = 0; j < d; ++j) z += model.weights[model.w1_at(i, j)] * x[j];
    double h = z > 0.0 ? z : 0.0;
    if (!mask.empty()) h *= mask[i] / keep;
    s.hidden[i] = h;
  }
  for (int k = 0; k < 4; ++k) {
    double u = model.weights[model.head_bias_at(k)];
    for (int i = 0; i < h_units; ++i)
      u += model.weights[model.head_at(k, i)] * s.hidden[i];
    s.pre[k] = u;
    s.out[k] = k == 0 ? u : softplus(u);
  }
}

}  // namespace

HeadFamily family_for(LossKind loss) {
  switch (loss) {
    case LossKind::kGcp: return HeadFamily::kPrior;
    case LossKind::kSquaredError: return HeadFamily::kMeanOnly;
    default: return HeadFamily::kGaussian;
  }
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kGcp: return "gcp";
    case LossKind::kGaussianMl: return "gaussian_ml";
    case LossKind::kSquaredError: return "squared_error";
    case LossKind::kDpd: return "dpd";
  }
  return "?";
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kRmsprop: return "rmsprop";
    case OptimizerKind::kNesterov: return "nesterov";
  }
  return "?";
}

std::string to_string(HeadFamily f) {
  switch (f) {
    case HeadFamily::kPrior: return "prior";
    case HeadFamily::kGaussian: return "gaussian";
    case HeadFamily::kMeanOnly: return "mean_only";
  }
  return "?";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "gcp" || s == "gcp_corr") return LossKind::kGcp;
  if (s == "gaussian_ml") return LossKind::kGaussianMl;
  if (s == "squared_error") return LossKind::kSquaredError;
  if (s == "dpd") return LossKind::kDpd;
  throw std::domain_error("unknown loss: " + s);
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "rmsprop") return OptimizerKind::kRmsprop;
  if (s == "nesterov") return OptimizerKind::kNesterov;
  throw std::domain_error("unknown optimizer: " + s);
}

void TrainConfig::check() const {
  if (minibatch < 1) throw std::domain_error("TrainConfig: minibatch >= 1");
  if (epochs < 1) throw std::domain_error("TrainConfig: epochs >= 1");
  if (!(learning_rate > 0.0)) throw std::domain_error("TrainConfig: learning_rate > 0");
  if (!(dpd_exponent > 0.0)) throw std::domain_error("TrainConfig: dpd_exponent > 0");
}

MlpModel init_model(int input_dim, int hidden_units, double dropout_rate,
                    HeadFamily family, std::uint64_t seed) {
  if (input_dim < 1 || hidden_units < 1)
    throw std::domain_error("init_model: positive dimensions required");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::domain_error("init_model: dropout_rate in [0,1)");
  MlpModel model;
  model.input_dim = input_dim;
  model.hidden_units = hidden_units;
  model.dropout_rate = dropout_rate;
  model.family = family;
  model.weights.assign(model.n_weights(), 0.0);

  CounterRng rng(seed, kStreamInit);
  const double w1_limit = std::sqrt(6.0 / input_dim);
  for (int i = 0; i < hidden_units; ++i)
    for (int j = 0; j < input_dim; ++j)
      model.weights[model.w1_at(i, j)] = rng.uniform(-w1_limit, w1_limit);
  const double head_limit = std::sqrt(6.0 / hidden_units);
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < hidden_units; ++i)
      model.weights[model.head_at(k, i)] = rng.uniform(-head_limit, head_limit);
  // softplus(ln(e-1)) = 1, so alpha, beta, nu start at 1.
  const double b0 = std::log(std::exp(1.0) - 1.0);
  for (int k = 1; k < 4; ++k) model.weights[model.head_bias_at(k)] = b0;
  return model;
}

NormalGammaParams forward(const MlpModel& model, const std::vector<double>& x,
                          const std::vector<double>& mask) {
  ForwardScratch s;
  forward_into(model, x, mask, s);
  return {s.out[0], s.out[3], s.out[1], s.out[2]};
}

double loss_and_head_grads(LossKind kind, const NormalGammaParams& heads,
                           double y, double dpd_exponent, HeadGradient* grad) {
  const double r = heads.m - y;
  switch (kind) {
    case LossKind::kGcp: {
      if (grad) {
        const GcpGradient g = gcp_gradients(heads, y);
        *grad = {g.d_m, g.d_alpha, g.d_beta, g.d_nu};
      }
      return -student_t_logpdf(heads, y);
    }
    case LossKind::kGaussianMl: {
      const double p = heads.alpha;
      if (!(p > 0.0)) throw std::domain_error("gaussian_ml: precision p must be positive");
      if (grad) *grad = {2.0 * p * r, r * r - 1.0 / p, 0.0, 0.0};
      return p * r * r - std::log(p);
    }
    case LossKind::kSquaredError: {
      if (grad) *grad = {2.0 * r, 0.0, 0.0, 0.0};
      return r * r;
    }
    case LossKind::kDpd: {
      const double g = dpd_exponent;
      const double p = heads.alpha;
      if (!(p > 0.0)) throw std::domain_error("dpd: precision p must be positive");
      const double c = std::pow(p / kTwoPi, 0.5 * g);
      const double e = std::exp(-0.5 * g * p * r * r);
      const double loss = c / std::sqrt(1.0 + g) - (1.0 + 1.0 / g) * c * e;
      if (grad) {
        const double d_m = (1.0 + g) * c * e * p * r;
        const double d_p = (0.5 * g / p) * c / std::sqrt(1.0 + g) -
                           (1.0 + 1.0 / g) * c * e * g * (0.5 / p - 0.5 * r * r);
        *grad = {d_m, d_p, 0.0, 0.0};
      }
      return loss;
    }
  }
  throw std::domain_error("loss_and_head_grads: unknown loss kind");
}

double backprop_step(MlpModel& model, const std::vector<std::vector<double>>& xs,
                     const std::vector<double>& ys, const TrainConfig& cfg,
                     OptState& opt, CounterRng* rng) {
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n)
    throw std::domain_error("backprop_step: non-empty batch with matching targets");
  const std::size_t n_w = model.n_weights();
  if (model.weights.size() != n_w)
    throw std::domain_error("backprop_step: weight vector size mismatch");

  const bool use_dropout = rng != nullptr && model.dropout_rate > 0.0;
  const int h_units = model.hidden_units;
  const int d = model.input_dim;

  std::vector<double> grad(n_w, 0.0);
  std::vector<double> mask;
  std::vector<double> dh(h_units);
  ForwardScratch s;
  double loss_sum = 0.0;

  for (std::size_t b = 0; b < n; ++b) {
    if (use_dropout) {
      mask.resize(h_units);
      for (int i = 0; i < h_units; ++i)
        mask[i] = rng->uniform() < model.dropout_rate ? 0.0 : 1.0;
    }
    forward_into(model, xs[b], mask, s);
    const NormalGammaParams heads{s.out[0], s.out[3], s.out[1], s.out[2]};
    HeadGradient hg;
    loss_sum += loss_and_head_grads(cfg.loss, heads, ys[b], cfg.dpd_exponent, &hg);

    // Head order in the weight layout is (m, alpha, beta, nu).
    std::array<double, 4> du = {hg.d_m, hg.d_alpha, hg.d_beta, hg.d_nu};
    for (int k = 1; k < 4; ++k) du[k] *= logistic(s.pre[k]);
    for (int k = 0; k < 4; ++k) du[k] *= cfg.rate_multipliers[k];

    std::fill(dh.begin(), dh.end(), 0.0);
    for (int k = 0; k < 4; ++k) {
      if (du[k] == 0.0) continue;
      if (!std::isfinite(du[k]))
        throw std::runtime_error("backprop_step: non-finite head gradient at batch index " +
                                 std::to_string(b));
      for (int i = 0; i < h_units; ++i) {
        grad[model.head_at(k, i)] += du[k] * s.hidden[i];
        dh[i] += du[k] * model.weights[model.head_at(k, i)];
      }
      grad[model.head_bias_at(k)] += du[k];
    }
    const double keep = 1.0 - model.dropout_rate;
    for (int i = 0; i < h_units; ++i) {
      if (s.hidden[i] <= 0.0 || dh[i] == 0.0) continue;
      // A surviving unit (hidden > 0 implies mask = 1) carries the inverted
      // dropout scale through to the pre-activation gradient.
      const double dz = mask.empty() ? dh[i] : dh[i] / keep;
      for (int j = 0; j < d; ++j) grad[model.w1_at(i, j)] += dz * xs[b][j];
      grad[model.b1_at(i)] += dz;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& g : grad) {
    g *= inv_n;
    if (!std::isfinite(g))
      throw std::runtime_error("backprop_step: non-finite weight gradient");
  }

  if (opt.m.size() != n_w) opt.m.assign(n_w, 0.0);
  if (opt.v.size() != n_w) opt.v.assign(n_w, 0.0);
  ++opt.step;
  const double lr = cfg.learning_rate;
  constexpr double kEps = 1e-8;
  switch (cfg.optimizer) {
    case OptimizerKind::kAdam: {
      constexpr double b1 = 0.9, b2 = 0.999;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
      for (std::size_t i = 0; i < n_w; ++i) {
        opt.m[i] = b1 * opt.m[i] + (1.0 - b1) * grad[i];
        opt.v[i] = b2 * opt.v[i] + (1.0 - b2) * grad[i] * grad[i];
        model.weights[i] -= lr * (opt.m[i] / c1) / (std::sqrt(opt.v[i] / c2) + kEps);
      }
      break;
    }
    case OptimizerKind::kRmsprop: {
      constexpr double rho = 0.5;
      for (std::size_t i = 0; i < n_w; ++i) {
        opt.v[i] = rho * opt.v[i] + (1.0 - rho) * grad[i] * grad[i];
        model.weights[i] -= lr * grad[i] / (std::sqrt(opt.v[i]) + kEps);
      }
      break;
    }
    case OptimizerKind::kNesterov: {
      constexpr double mu = 0.9;
      for (std::size_t i = 0; i < n_w; ++i) {
        opt.m[i] = mu * opt.m[i] + grad[i];
        model.weights[i] -= lr * (grad[i] + mu * opt.m[i]);
      }
      break;
    }
  }
  return loss_sum * inv_n;
}

TrainResult train(MlpModel& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& ys, const TrainConfig& cfg) {
  cfg.check();
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n)
    throw std::domain_error("train: non-empty dataset with matching targets");

  CounterRng rng(cfg.seed, kStreamTrain);
  OptState opt;
  TrainResult result;
  result.epoch_losses.reserve(cfg.epochs);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> bx;
  std::vector<double> by;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
      const std::size_t len = std::min<std::size_t>(cfg.minibatch, n - pos);
      bx.assign(len, {});
      by.assign(len, 0.0);
      for (std::size_t i = 0; i < len; ++i) {
        bx[i] = xs[order[pos + i]];
        by[i] = ys[order[pos + i]];
      }
      double batch_loss;
      try {
        batch_loss = backprop_step(model, bx, by, cfg, opt, &rng);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("train: epoch " + std::to_string(epoch) + ": " + e.what());
      }
      epoch_loss += batch_loss * len;
      pos += len;
    }
    result.epoch_losses.push_back(epoch_loss / n);
  }
  return result;
}

PredictiveEstimates predict(const MlpModel& model, const std::vector<double>& x) {
  const NormalGammaParams params = forward(model, x);
  switch (model.family) {
    case HeadFamily::kPrior:
      return predictive_estimates(params);
    case HeadFamily::kGaussian: {
      const double v = 1.0 / params.alpha;  // alpha slot holds the precision
      return {params.m, v, v, std::numeric_limits<double>::infinity()};
    }
    case HeadFamily::kMeanOnly:
      return {params.m, 1.0, 1.0, std::numeric_limits<double>::infinity()};
  }
  throw std::domain_error("predict: unknown head family");
}

std::string checkpoint_to_json(const MlpModel& model, const TrainConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["input_dim"] = model.input_dim;
  j["hidden_units"] = model.hidden_units;
  j["dropout_rate"] = model.dropout_rate;
  j["family"] = to_string(model.family);
  j["weights"] = model.weights;
  j["config"] = {
      {"loss", to_string(cfg.loss)},
      {"optimizer", to_string(cfg.optimizer)},
      {"learning_rate", cfg.learning_rate},
      {"minibatch", cfg.minibatch},
      {"epochs", cfg.epochs},
      {"dpd_exponent", cfg.dpd_exponent},
      {"seed", cfg.seed},
      {"rate_multipliers", cfg.rate_multipliers},
  };
  return j.dump(2);
}

MlpModel checkpoint_from_json(const std::string& json_text, TrainConfig* cfg_out) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported schema version");
  MlpModel model;
  model.input_dim = j.at("input_dim").get<int>();
  model.hidden_units = j.at("hidden_units").get<int>();
  model.dropout_rate = j.at("dropout_rate").get<double>();
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "prior") model.family = HeadFamily::kPrior;
  else if (fam == "gaussian") model.family = HeadFamily::kGaussian;
  else if (fam == "mean_only") model.family = HeadFamily::kMeanOnly;
  else throw std::runtime_error("checkpoint: unknown family " + fam);
  model.weights = j.at("weights").get<std::vector<double>>();
  if (model.weights.size() != model.n_weights())
    throw std::runtime_error("checkpoint: weight count mismatch");
  if (cfg_out) {
    const auto& c = j.at("config");
    cfg_out->loss = loss_from_string(c.at("loss").get<std::string>());
    cfg_out->optimizer = optimizer_from_string(c.at("optimizer").get<std::string>());
    cfg_out->learning_rate = c.at("learning_rate").get<double>();
    cfg_out->minibatch = c.at("minibatch").get<int>();
    cfg_out->epochs = c.at("epochs").get<int>();
    cfg_out->dpd_exponent = c.at("dpd_exponent").get<double>();
    cfg_out->seed = c.at("seed").get<std::uint64_t>();
    cfg_out->rate_multipliers = c.at("rate_multipliers").get<std::array<double, 4>>();
  }
  return model;
}

void save_checkpoint(const MlpModel& model, const TrainConfig& cfg,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << checkpoint_to_json(model, cfg) << "\n";
}

MlpModel load_checkpoint(const std::string& path, TrainConfig* cfg_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str(), cfg_out);
}

}  // namespace gcp
