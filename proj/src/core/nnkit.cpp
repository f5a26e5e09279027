#include "nnkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace ncf::nn {

namespace {

void leaky_relu_inplace(Matrix& m) {
  m = m.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

void check_finite(const Matrix& m, int layer, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite ") + what, layer);
}

}  // namespace

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Mlp make_mlp(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw InvalidArgument("mlp needs at least input and output dims");
  for (int d : dims)
    if (d <= 0) throw InvalidArgument("mlp layer dims must be positive");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer l;
    l.weight.resize(dims[i + 1], dims[i]);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = dist(rng);
    l.bias = Vector::Zero(dims[i + 1]);
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

Mlp zeros_like(const Mlp& mlp) {
  Mlp z;
  z.layers.reserve(mlp.layers.size());
  for (const auto& l : mlp.layers)
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  return z;
}

void validate(const Mlp& mlp) {
  if (mlp.layers.empty()) throw InvalidArgument("mlp has no layers");
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& l = mlp.layers[i];
    if (l.bias.size() != l.weight.rows())
      throw InvalidArgument("bias/weight mismatch in layer " + std::to_string(i));
    if (i > 0 && mlp.layers[i - 1].weight.rows() != l.weight.cols())
      throw InvalidArgument("layer dims do not chain at layer " + std::to_string(i));
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw InvalidArgument("non-finite parameter in layer " + std::to_string(i));
  }
}

Matrix forward_batch(const Mlp& mlp, const Matrix& inputs) {
  if (inputs.rows() != mlp.input_dim())
    throw InvalidArgument("input has " + std::to_string(inputs.rows()) + " features, network expects " +
                          std::to_string(mlp.input_dim()));
  Matrix a = inputs;
  const int n = static_cast<int>(mlp.layers.size());
  for (int i = 0; i < n; ++i) {
    const auto& l = mlp.layers[i];
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    if (i + 1 < n) leaky_relu_inplace(z);
    a = std::move(z);
  }
  return a;
}

Vector forward(const Mlp& mlp, std::span<const double> input) {
  Eigen::Map<const Vector> in(input.data(), static_cast<Eigen::Index>(input.size()));
  return forward_batch(mlp, Matrix(in));
}

ForwardCache forward_cached(const Mlp& mlp, const Matrix& inputs) {
  if (inputs.rows() != mlp.input_dim())
    throw InvalidArgument("input has " + std::to_string(inputs.rows()) + " features, network expects " +
                          std::to_string(mlp.input_dim()));
  ForwardCache cache;
  const int n = static_cast<int>(mlp.layers.size());
  cache.inputs.reserve(n);
  cache.pre.reserve(n);
  Matrix a = inputs;
  for (int i = 0; i < n; ++i) {
    const auto& l = mlp.layers[i];
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    check_finite(z, i, "pre-activation");
    cache.inputs.push_back(std::move(a));
    cache.pre.push_back(z);
    if (i + 1 < n) leaky_relu_inplace(z);
    a = std::move(z);
  }
  cache.output = std::move(a);
  return cache;
}

void backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& d_logits, Mlp& grad,
              Matrix* d_inputs) {
  const int n = static_cast<int>(mlp.layers.size());
  if (d_logits.rows() != mlp.output_dim() || d_logits.cols() != cache.output.cols())
    throw InvalidArgument("d_logits shape does not match forward output");
  Matrix delta = d_logits;
  for (int i = n - 1; i >= 0; --i) {
    if (i + 1 < n) {
      const Matrix& z = cache.pre[i];
      delta = delta.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }));
    }
    check_finite(delta, i, "gradient");
    grad.layers[i].weight.noalias() += delta * cache.inputs[i].transpose();
    grad.layers[i].bias += delta.rowwise().sum();
    if (i > 0 || d_inputs != nullptr) {
      Matrix next = mlp.layers[i].weight.transpose() * delta;
      if (i == 0) {
        *d_inputs = std::move(next);
      } else {
        delta = std::move(next);
      }
    }
  }
}

Mlp gradient(const Mlp& mlp, std::span<const double> input, const LossTail& loss_tail) {
  Eigen::Map<const Vector> in(input.data(), static_cast<Eigen::Index>(input.size()));
  ForwardCache cache = forward_cached(mlp, Matrix(in));
  TailResult tail = loss_tail(cache.output.col(0));
  if (!std::isfinite(tail.value) || !tail.d_logits.allFinite())
    throw NumericalError("non-finite loss tail", static_cast<int>(mlp.layers.size()));
  Mlp grad = zeros_like(mlp);
  backward(mlp, cache, Matrix(tail.d_logits), grad);
  return grad;
}

std::vector<std::span<double>> parameter_views(Mlp& mlp) {
  std::vector<std::span<double>> out;
  for (auto& l : mlp.layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

std::vector<std::span<const double>> parameter_views(const Mlp& mlp) {
  std::vector<std::span<const double>> out;
  for (const auto& l : mlp.layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

AdamState make_adam(std::span<const std::span<double>> params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw InvalidArgument("adam: parameter/gradient/moment block counts differ");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.first_moment[b].size() ||
        params[b].size() != state.second_moment[b].size())
      throw InvalidArgument("adam: shape mismatch in block " + std::to_string(b));
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    auto p = params[b];
    auto g = grads[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Matrix log_softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const double lse = mx + std::log((logits.col(c).array() - mx).exp().sum());
    out.col(c) = (logits.col(c).array() - lse).matrix();
  }
  return out;
}

Matrix softmax_cols(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - mx).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

namespace {

double draw_gumbel(Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = std::clamp(uni(rng), kGumbelClamp, 1.0 - kGumbelClamp);
  return -std::log(-std::log(u));
}

}  // namespace

Vector sample_gumbel(Rng& rng, int n) {
  if (n < 1) throw InvalidArgument("sample_gumbel: n must be >= 1");
  Vector g(n);
  for (int i = 0; i < n; ++i) g[i] = draw_gumbel(rng);
  return g;
}

void fill_gumbel(Rng& rng, Matrix& out) {
  double* p = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) p[i] = draw_gumbel(rng);
}

Vector concrete_sample(const Vector& logits, const Vector& gumbel, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("concrete temperature must be > 0");
  if (!logits.allFinite()) throw InvalidArgument("concrete logits must be finite");
  if (gumbel.size() != logits.size()) throw InvalidArgument("gumbel/logit size mismatch");
  return softmax((logits + gumbel) / temperature);
}

Vector concrete_sample(const Vector& logits, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw InvalidArgument("concrete temperature must be > 0");
  return concrete_sample(logits, sample_gumbel(rng, static_cast<int>(logits.size())), temperature);
}

Matrix concrete_sample_cols(const Matrix& logits, const Matrix& gumbel, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("concrete temperature must be > 0");
  if (gumbel.rows() != logits.rows() || gumbel.cols() != logits.cols())
    throw InvalidArgument("gumbel/logit shape mismatch");
  return softmax_cols((logits + gumbel) / temperature);
}

Matrix concrete_backward(const Matrix& samples, const Matrix& d_samples, double temperature) {
  // d alpha_k = U_k (dU_k - <U, dU>) / t
  Eigen::RowVectorXd inner = samples.cwiseProduct(d_samples).colwise().sum();
  Matrix d = d_samples;
  d.rowwise() -= inner;
  return samples.cwiseProduct(d) / temperature;
}

bool is_simplex(const Vector& p, double tol) {
  if (!p.allFinite() || (p.array() < 0.0).any()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

}  // namespace ncf::nn
