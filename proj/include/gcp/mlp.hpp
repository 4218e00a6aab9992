#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gcp/normal_gamma.hpp"

// One-hidden-layer ReLU network with four output heads (m linear; the other
// three through softplus), trained with the prior-parameter loss or the
// Gaussian / squared-error / density-power baselines.

namespace gcp {

enum class LossKind { kGcp, kGaussianMl, kSquaredError, kDpd };
enum class OptimizerKind { kAdam, kRmsprop, kNesterov };

/// Which of the head outputs carry meaning at prediction time.
enum class HeadFamily { kPrior, kGaussian, kMeanOnly };

HeadFamily family_for(LossKind loss);

std::string to_string(LossKind k);
std::string to_string(OptimizerKind k);
std::string to_string(HeadFamily f);
LossKind loss_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  LossKind loss = LossKind::kGcp;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.005;
  int minibatch = 32;
  int epochs = 400;
  double dpd_exponent = 0.5;
  std::uint64_t seed = 0;
  // Per-head learning-rate scales for (m, alpha, beta, nu); a scale applies
  // to the whole gradient contribution of that head.
  std::array<double, 4> rate_multipliers = {1.0, 1.0, 1.0, 1.0};

  void check() const;
};

/// Weights live in one flat vector:
///   [W1 (H x D, row-major) | b1 (H) | head rows (H + 1 each, m a b n)].
struct MlpModel {
  int input_dim = 1;
  int hidden_units = 50;
  double dropout_rate = 0.0;
  HeadFamily family = HeadFamily::kPrior;
  std::vector<double> weights;

  std::size_t n_weights() const {
    return static_cast<std::size_t>(hidden_units) * input_dim + hidden_units +
           4 * (hidden_units + 1);
  }
  std::size_t w1_at(int i, int j) const { return static_cast<std::size_t>(i) * input_dim + j; }
  std::size_t b1_at(int i) const { return static_cast<std::size_t>(hidden_units) * input_dim + i; }
  std::size_t head_at(int k, int i) const {
    return static_cast<std::size_t>(hidden_units) * (input_dim + 1) +
           static_cast<std::size_t>(k) * (hidden_units + 1) + i;
  }
  std::size_t head_bias_at(int k) const { return head_at(k, hidden_units); }
};

/// He-uniform hidden layer; alpha/beta/nu head biases start the softplus
/// outputs at 1.
MlpModel init_model(int input_dim, int hidden_units, double dropout_rate,
                    HeadFamily family, std::uint64_t seed);

/// Forward pass. The mask (0/1 per hidden unit) is inverted dropout applied
/// at training time; pass empty for the deterministic pass. All four heads
/// are always evaluated: m linear, the rest softplus clamped at 1e-8.
NormalGammaParams forward(const MlpModel& model, const std::vector<double>& x,
                          const std::vector<double>& mask = {});

struct HeadGradient {
  double d_m = 0.0;
  double d_alpha = 0.0;  // doubles as d_p for the Gaussian family
  double d_beta = 0.0;
  double d_nu = 0.0;
};

/// Per-sample loss and its gradient w.r.t. the post-activation head outputs.
/// For the Gaussian family the alpha slot holds the precision p.
double loss_and_head_grads(LossKind kind, const NormalGammaParams& heads,
                           double y, double dpd_exponent, HeadGradient* grad);

struct OptState {
  long step = 0;
  std::vector<double> m;  // Adam first moment / Nesterov velocity
  std::vector<double> v;  // Adam / RMSProp second moment
};

class CounterRng;

/// One optimizer step on a minibatch; returns the mean batch loss. Dropout
/// masks, when enabled, are drawn from rng (pass null to disable dropout).
double backprop_step(MlpModel& model, const std::vector<std::vector<double>>& xs,
                     const std::vector<double>& ys, const TrainConfig& cfg,
                     OptState& opt, CounterRng* rng);

struct TrainResult {
  std::vector<double> epoch_losses;
};

/// Seeded shuffled-minibatch training; deterministic given cfg.seed.
TrainResult train(MlpModel& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& ys, const TrainConfig& cfg);

/// Deterministic forward then the family's mean/variance estimators.
PredictiveEstimates predict(const MlpModel& model, const std::vector<double>& x);

/// Versioned JSON checkpoint; doubles round-trip bit-exactly.
std::string checkpoint_to_json(const MlpModel& model, const TrainConfig& cfg);
MlpModel checkpoint_from_json(const std::string& json_text, TrainConfig* cfg_out);
void save_checkpoint(const MlpModel& model, const TrainConfig& cfg,
                     const std::string& path);
MlpModel load_checkpoint(const std::string& path, TrainConfig* cfg_out);

}  // namespace gcp
