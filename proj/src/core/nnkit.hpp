#pragma once

// Dense networks with hand-written reverse mode, Adam, and the Gumbel/Concrete
// sampling primitives used to train categorical encoders.
//
// Batched tensors are column-major Eigen matrices with one sample per column.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace ncf::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kGumbelClamp = 1e-12;

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Leaky-ReLU on every layer except the last, which emits raw logits.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
};

// dims = {in, hidden..., out}. Weights uniform in +-1/sqrt(fan_in), biases zero.
Mlp make_mlp(const std::vector<int>& dims, Rng& rng);
// Same shapes with every parameter zero.
Mlp zeros_like(const Mlp& mlp);
// Throws InvalidArgument unless dimensions chain and all values are finite.
void validate(const Mlp& mlp);

// Intermediate values kept for the backward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;               // logits
};

Vector forward(const Mlp& mlp, std::span<const double> input);
Matrix forward_batch(const Mlp& mlp, const Matrix& inputs);
ForwardCache forward_cached(const Mlp& mlp, const Matrix& inputs);

// Accumulates d(loss)/d(params) into `grad` (which must be shaped like the
// network) given d(loss)/d(logits). Returns d(loss)/d(inputs) when asked.
void backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& d_logits, Mlp& grad,
              Matrix* d_inputs = nullptr);

// Value and gradient of a scalar function of the logits.
struct TailResult {
  double value;
  Vector d_logits;
};
using LossTail = std::function<TailResult(const Vector& logits)>;

// Gradient of loss_tail(forward(mlp, input)) with respect to every weight and bias.
Mlp gradient(const Mlp& mlp, std::span<const double> input, const LossTail& loss_tail);

// Parameters as flat mutable views, in a fixed order (layer-major, weight then bias).
std::vector<std::span<double>> parameter_views(Mlp& mlp);
std::vector<std::span<const double>> parameter_views(const Mlp& mlp);

struct AdamState {
  long step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Moments shaped after `params`, all zero.
AdamState make_adam(std::span<const std::span<double>> params, double learning_rate);
// One bias-corrected Adam update of every block. Throws on shape mismatch.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);
// Column-wise versions.
Matrix softmax_cols(const Matrix& logits);
Matrix log_softmax_cols(const Matrix& logits);

// Smallest index among the maxima.
int argmax(std::span<const double> values);
inline int argmax(const Vector& v) { return argmax(std::span<const double>(v.data(), v.size())); }

Vector sample_gumbel(Rng& rng, int n);
void fill_gumbel(Rng& rng, Matrix& out);

// softmax((logits + gumbel) / temperature)
Vector concrete_sample(const Vector& logits, const Vector& gumbel, double temperature);
Vector concrete_sample(const Vector& logits, double temperature, Rng& rng);
Matrix concrete_sample_cols(const Matrix& logits, const Matrix& gumbel, double temperature);
// Maps d(loss)/d(samples) to d(loss)/d(logits) for fixed Gumbel draws.
Matrix concrete_backward(const Matrix& samples, const Matrix& d_samples, double temperature);

bool is_simplex(const Vector& p, double tol = 1e-9);

}  // namespace ncf::nn
