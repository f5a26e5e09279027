#pragma once

// End-to-end optimization of L = R + lambda * D (both in bits) with Concrete
// relaxed relay indices.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "models.hpp"

namespace ncf {

struct TemperatureSchedule {
  enum class Shape { kExponential, kLinear, kConstant };
  double start = 1.0;
  double end = 0.1;
  Shape shape = Shape::kExponential;

  // Temperature for step `step` of `total` (step 0 -> start, last step -> end).
  double at(long step, long total) const;
};

struct SnrPolicy {
  enum class Kind { kFixed, kUniform, kIndependent };
  Kind kind = Kind::kFixed;
  double dest_db = 3.0;  // fixed
  double relay_db = 3.0;
  std::vector<double> levels_db;        // uniform: gamma_D = gamma_R drawn from this set
  std::vector<double> dest_levels_db;   // independent: each terminal drawn from its own set
  std::vector<double> relay_levels_db;

  std::string describe() const;
};

SnrPair sample_training_snr(const SnrPolicy& policy, Rng& rng);

struct TrainConfig {
  double lambda = 0.0;
  // Optional continuation: lambda moves geometrically from lambda_start to
  // lambda over the first lambda_warmup_fraction of the steps. 0 disables.
  double lambda_start = 0.0;
  double lambda_warmup_fraction = 0.5;
  Scheme scheme = Scheme::kBpsk;
  double power = 1.0;
  Architecture arch;
  int batch_size = 1024;
  int epochs = 500;
  int steps_per_epoch = 100;
  int finetune_epochs = -1;  // p2p stage 2; negative means "same as epochs"
  double learning_rate = 1e-4;
  // Multiplier on the learning rate of the free entropy-model logits.
  double entropy_lr_scale = 1.0;
  // "zero" or "uniform" (biases drawn like the weights, +-1/sqrt(fan_in)).
  std::string bias_init = "zero";
  bool plateau_decay = false;
  int plateau_patience = 10;
  TemperatureSchedule temperature;
  SnrPolicy snr;
  std::uint64_t seed = 0;
};

// Throws InvalidArgument naming the offending field.
void validate(const TrainConfig& cfg);

// Effective lambda at a given step.
double lambda_at(const TrainConfig& cfg, long step, long total);

struct EpochRecord {
  int epoch = 0;
  int stage = 1;
  double loss = 0.0;
  double rate_bits = 0.0;
  double distortion_bits = 0.0;
  double temperature = 0.0;
  double learning_rate = 0.0;
  double wall_seconds = 0.0;  // not part of the reproducible history
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

// Gumbel noise per branch (K x n), drawn before the loss is evaluated so the
// same draws can be replayed.
struct GumbelDraws {
  std::vector<nn::Matrix> per_branch;
};
GumbelDraws draw_gumbel(const Model& m, int n, Rng& rng);

struct LossValue {
  double loss = 0.0;
  double rate_bits = 0.0;
  double distortion_bits = 0.0;
};

// Batch estimate of R + lambda D using Concrete samples at temperature t.
// For p2p models this is the stage-1 objective (demodulator without y_D).
// When `grad` is non-null it must be shaped like `m` and receives dL/dparams
// (accumulated).
LossValue loss_batch(const Model& m, const ChannelBatch& batch, double lambda, double temperature,
                     const GumbelDraws& gumbel, Model* grad);
LossValue loss_batch(const Model& m, const ChannelBatch& batch, double lambda, double temperature, Rng& rng,
                     Model* grad);

// p2p stage 2: hard relay indices from the frozen encoder, y_D-aware
// demodulator, gradient only for demodulator parameters.
LossValue finetune_loss_batch(const Model& m, const ChannelBatch& batch, double lambda, Model* grad);

void set_zero(Model& m);

struct TrainResult {
  Model model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Dispatches to train_p2p_two_stage for p2p configs. Fully determined by cfg.
TrainResult train(const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train_p2p_two_stage(const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ncf
