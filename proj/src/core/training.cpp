#include "training.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "error.hpp"

namespace ncf {

double TemperatureSchedule::at(long step, long total) const {
  if (shape == Shape::kConstant || total <= 1) return shape == Shape::kConstant ? start : end;
  const double frac = static_cast<double>(step) / static_cast<double>(total - 1);
  if (shape == Shape::kLinear) return start + (end - start) * frac;
  return start * std::pow(end / start, frac);
}

std::string SnrPolicy::describe() const {
  std::ostringstream os;
  auto list = [&](const std::vector<double>& v) {
    os << '{';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '}';
  };
  switch (kind) {
    case Kind::kFixed: os << "fixed dest=" << dest_db << "dB relay=" << relay_db << "dB"; break;
    case Kind::kUniform: os << "uniform equal "; list(levels_db); os << "dB"; break;
    case Kind::kIndependent:
      os << "independent dest=";
      list(dest_levels_db);
      os << "dB relay=";
      list(relay_levels_db);
      os << "dB";
      break;
  }
  return os.str();
}

SnrPair sample_training_snr(const SnrPolicy& p, Rng& rng) {
  auto pick = [&rng](const std::vector<double>& v) {
    if (v.empty()) throw InvalidArgument("SNR policy level set is empty");
    if (v.size() == 1) return v[0];
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  switch (p.kind) {
    case SnrPolicy::Kind::kFixed: return SnrPair::from_db(p.dest_db, p.relay_db);
    case SnrPolicy::Kind::kUniform: {
      const double g = pick(p.levels_db);
      return SnrPair::from_db(g, g);
    }
    case SnrPolicy::Kind::kIndependent: {
      const double d = pick(p.dest_levels_db);
      const double r = pick(p.relay_levels_db);
      return SnrPair::from_db(d, r);
    }
  }
  throw InvalidArgument("unknown SNR policy");
}

void validate(const TrainConfig& c) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw InvalidArgument("config field '" + field + "': " + why);
  };
  if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) bad("lambda", "must be a finite value > 0");
  if (c.lambda_start < 0.0 || !std::isfinite(c.lambda_start)) bad("lambda_start", "must be >= 0 (0 disables)");
  if (!(c.lambda_warmup_fraction > 0.0 && c.lambda_warmup_fraction <= 1.0))
    bad("lambda_warmup_fraction", "must be in (0, 1]");
  if (!(c.power > 0.0)) bad("power", "must be > 0");
  if (c.arch.codebook_size < 2) bad("K", "must be >= 2");
  for (int h : c.arch.hidden)
    if (h <= 0) bad("hidden", "layer sizes must be positive");
  if (c.batch_size < 1) bad("batch_size", "must be >= 1");
  if (c.epochs < 1) bad("epochs", "must be >= 1");
  if (c.steps_per_epoch < 1) bad("steps_per_epoch", "must be >= 1");
  if (!(c.learning_rate > 0.0)) bad("learning_rate", "must be > 0");
  if (!(c.entropy_lr_scale > 0.0)) bad("entropy_lr_scale", "must be > 0");
  if (c.bias_init != "zero" && c.bias_init != "uniform") bad("bias_init", "must be \"zero\" or \"uniform\"");
  if (c.plateau_patience < 1) bad("plateau_patience", "must be >= 1");
  if (!(c.temperature.end > 0.0)) bad("temperature.end", "must be > 0");
  if (c.temperature.start < c.temperature.end) bad("temperature.start", "must be >= temperature.end");
  const bool complex = c.scheme == Scheme::kQam4 || c.scheme == Scheme::kQam16;
  if (c.arch.iq_mode == IqMode::kSplit && !complex) bad("iq_mode", "split requires a complex scheme");
  switch (c.snr.kind) {
    case SnrPolicy::Kind::kFixed: break;
    case SnrPolicy::Kind::kUniform:
      if (c.snr.levels_db.empty()) bad("snr.levels_db", "must be nonempty");
      break;
    case SnrPolicy::Kind::kIndependent:
      if (c.snr.dest_levels_db.empty()) bad("snr.dest_db", "must be nonempty");
      if (c.snr.relay_levels_db.empty()) bad("snr.relay_db", "must be nonempty");
      break;
  }
}

double lambda_at(const TrainConfig& cfg, long step, long total) {
  if (cfg.lambda_start <= 0.0 || total <= 1) return cfg.lambda;
  const double span = cfg.lambda_warmup_fraction * static_cast<double>(total - 1);
  if (step >= span) return cfg.lambda;
  return cfg.lambda_start * std::pow(cfg.lambda / cfg.lambda_start, step / span);
}

GumbelDraws draw_gumbel(const Model& m, int n, Rng& rng) {
  GumbelDraws g;
  for (int b = 0; b < m.branches(); ++b) {
    nn::Matrix mat(m.codebook_size(), n);
    nn::fill_gumbel(rng, mat);
    g.per_branch.push_back(std::move(mat));
  }
  return g;
}

void set_zero(Model& m) {
  for (auto& p : named_parameters(m)) std::fill(p.data.begin(), p.data.end(), 0.0);
}

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

// dL/dz for LS = log_softmax(z) given g = dL/dLS (columns independent).
nn::Matrix log_softmax_backward(const nn::Matrix& log_probs, const nn::Matrix& g) {
  nn::Matrix probs = log_probs.array().exp().matrix();
  Eigen::RowVectorXd gsum = g.colwise().sum();
  return g - probs * gsum.asDiagonal();
}

void check_loss(const LossValue& v, const char* where) {
  if (!std::isfinite(v.rate_bits)) throw DivergenceError(std::string(where) + ": non-finite rate term");
  if (!std::isfinite(v.distortion_bits)) throw DivergenceError(std::string(where) + ": non-finite distortion term");
}

}  // namespace

LossValue loss_batch(const Model& m, const ChannelBatch& batch, double lambda, double temperature,
                     const GumbelDraws& gumbel, Model* grad) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  const int n = batch.size();
  if (n < 1) throw InvalidArgument("empty batch");
  if (static_cast<int>(gumbel.per_branch.size()) != m.branches()) throw InvalidArgument("gumbel branch count");
  const int k = m.codebook_size();
  const int branches = m.branches();
  const bool conditional = m.arch.variant == Variant::kConditional;
  const bool p2p = m.arch.variant == Variant::kP2p;

  // encoders -> Concrete samples
  const auto enc_in = encoder_inputs(m, batch.y_relay);
  std::vector<nn::ForwardCache> enc_cache;
  std::vector<nn::Matrix> soft;
  for (int b = 0; b < branches; ++b) {
    enc_cache.push_back(nn::forward_cached(m.encoders[b], enc_in[b]));
    soft.push_back(nn::concrete_sample_cols(enc_cache[b].output, gumbel.per_branch[b], temperature));
  }

  // rate: sum_k U_k * (-log2 q_k)
  std::vector<nn::ForwardCache> ent_cache;
  std::vector<nn::Matrix> log_q;  // natural log, K x n (conditional) or K x 1
  double rate_sum = 0.0;
  for (int b = 0; b < branches; ++b) {
    if (conditional) {
      ent_cache.push_back(nn::forward_cached(m.entropy_nets[b], batch.y_dest));
      log_q.push_back(nn::log_softmax_cols(ent_cache[b].output));
      rate_sum += -(soft[b].cwiseProduct(log_q[b])).sum() * kInvLn2;
    } else {
      log_q.push_back(nn::log_softmax(m.entropy_logits[b]));
      rate_sum += -(log_q[b].transpose() * soft[b]).sum() * kInvLn2;
    }
  }

  // distortion: -log2 p(w | u [, y_D])
  const nn::Mlp& demod = p2p ? *m.pretrain_demodulator : m.demodulator;
  const nn::Matrix in = demod_input(soft, p2p ? nullptr : &batch.y_dest);
  const nn::ForwardCache dcache = nn::forward_cached(demod, in);
  const nn::Matrix log_p = nn::log_softmax_cols(dcache.output);
  double dist_sum = 0.0;
  for (int i = 0; i < n; ++i) dist_sum -= log_p(batch.w[i], i);
  dist_sum *= kInvLn2;

  LossValue v;
  v.rate_bits = rate_sum / n;
  v.distortion_bits = dist_sum / n;
  v.loss = v.rate_bits + lambda * v.distortion_bits;
  check_loss(v, "loss_batch");
  if (grad == nullptr) return v;

  // d/d demod logits: lambda/(n ln2) * (softmax - onehot)
  nn::Matrix d_logits = log_p.array().exp().matrix();
  for (int i = 0; i < n; ++i) d_logits(batch.w[i], i) -= 1.0;
  d_logits *= lambda * kInvLn2 / n;
  nn::Matrix d_in;
  nn::Mlp& demod_grad = p2p ? *grad->pretrain_demodulator : grad->demodulator;
  nn::backward(demod, dcache, d_logits, demod_grad, &d_in);

  for (int b = 0; b < branches; ++b) {
    // cost of each soft coordinate, -log2 q_k / n
    nn::Matrix d_soft = d_in.middleRows(static_cast<Eigen::Index>(b) * k, k);
    // g = dL/d(log q) = -U / (n ln2)
    const nn::Matrix g = -soft[b] * (kInvLn2 / n);
    if (conditional) {
      d_soft -= log_q[b] * (kInvLn2 / n);
      nn::backward(m.entropy_nets[b], ent_cache[b], log_softmax_backward(log_q[b], g), grad->entropy_nets[b]);
    } else {
      d_soft.colwise() -= log_q[b].col(0) * (kInvLn2 / n);
      const nn::Vector gsum = g.rowwise().sum();
      const nn::Vector q = log_q[b].col(0).array().exp().matrix();
      grad->entropy_logits[b] += gsum - q * gsum.sum();
    }
    const nn::Matrix d_alpha = nn::concrete_backward(soft[b], d_soft, temperature);
    nn::backward(m.encoders[b], enc_cache[b], d_alpha, grad->encoders[b]);
  }
  return v;
}

LossValue loss_batch(const Model& m, const ChannelBatch& batch, double lambda, double temperature, Rng& rng,
                     Model* grad) {
  return loss_batch(m, batch, lambda, temperature, draw_gumbel(m, batch.size(), rng), grad);
}

LossValue finetune_loss_batch(const Model& m, const ChannelBatch& batch, double lambda, Model* grad) {
  const int n = batch.size();
  if (n < 1) throw InvalidArgument("empty batch");
  const auto u = encode_hard(m, batch.y_relay);
  const nn::Vector lq = entropy_model_logprob(m, u, &batch.y_dest);
  const nn::Matrix in = demod_input(one_hot(m, u), &batch.y_dest);
  const nn::ForwardCache dcache = nn::forward_cached(m.demodulator, in);
  const nn::Matrix log_p = nn::log_softmax_cols(dcache.output);
  double dist_sum = 0.0;
  for (int i = 0; i < n; ++i) dist_sum -= log_p(batch.w[i], i);
  LossValue v;
  v.rate_bits = -lq.mean();
  v.distortion_bits = dist_sum * kInvLn2 / n;
  v.loss = v.rate_bits + lambda * v.distortion_bits;
  check_loss(v, "finetune_loss_batch");
  if (grad == nullptr) return v;
  nn::Matrix d_logits = log_p.array().exp().matrix();
  for (int i = 0; i < n; ++i) d_logits(batch.w[i], i) -= 1.0;
  d_logits *= lambda * kInvLn2 / n;
  nn::backward(m.demodulator, dcache, d_logits, grad->demodulator);
  return v;
}

namespace {

enum class Stage { kJoint, kP2pPretrain, kP2pFinetune };

bool trainable(Stage stage, const std::string& name) {
  const bool demod = name.rfind("demod.", 0) == 0;
  switch (stage) {
    case Stage::kJoint: return true;
    case Stage::kP2pPretrain: return !demod;
    case Stage::kP2pFinetune: return demod;
  }
  return false;
}

void run_stage(Stage stage, const TrainConfig& cfg, int epochs, Model& model, TrainHistory& history,
               const EpochCallback& on_epoch) {
  const int stage_no = stage == Stage::kP2pFinetune ? 2 : 1;
  Rng snr_rng = make_stream(cfg.seed, 10 * stage_no + 1);
  Rng data_rng = make_stream(cfg.seed, 10 * stage_no + 2);
  Rng gumbel_rng = make_stream(cfg.seed, 10 * stage_no + 3);

  Model grad = zeros_like(model);
  // Group 0: everything trainable except the free entropy logits (group 1).
  std::vector<std::span<double>> params[2];
  std::vector<std::span<const double>> grads[2];
  {
    auto mp = named_parameters(model);
    auto gp = named_parameters(grad);
    for (std::size_t i = 0; i < mp.size(); ++i) {
      if (!trainable(stage, mp[i].name)) continue;
      const int g = mp[i].name.rfind("entropy.", 0) == 0 ? 1 : 0;
      params[g].push_back(mp[i].data);
      grads[g].push_back(gp[i].data);
    }
  }
  nn::AdamState adam[2] = {nn::make_adam(params[0], cfg.learning_rate),
                           nn::make_adam(params[1], cfg.learning_rate * cfg.entropy_lr_scale)};

  const long total = static_cast<long>(epochs) * cfg.steps_per_epoch;
  long step = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int e = 0; e < epochs; ++e) {
    double loss = 0.0, rate = 0.0, dist = 0.0, temp = 0.0;
    for (int s = 0; s < cfg.steps_per_epoch; ++s, ++step) {
      temp = cfg.temperature.at(step, total);
      const SnrPair snr = sample_training_snr(cfg.snr, snr_rng);
      const ChannelBatch batch = sample_batch(model.constellation, snr, cfg.batch_size, data_rng);
      set_zero(grad);
      LossValue v;
      try {
        v = stage == Stage::kP2pFinetune ? finetune_loss_batch(model, batch, cfg.lambda, &grad)
                                         : loss_batch(model, batch, lambda_at(cfg, step, total), temp, gumbel_rng, &grad);
      } catch (const Error& err) {
        throw DivergenceError("training diverged at stage " + std::to_string(stage_no) + " epoch " +
                              std::to_string(e) + " step " + std::to_string(s) + ": " + err.what());
      }
      for (int g = 0; g < 2; ++g)
        if (!params[g].empty()) nn::adam_step(adam[g], params[g], grads[g]);
      loss += v.loss;
      rate += v.rate_bits;
      dist += v.distortion_bits;
    }
    EpochRecord rec;
    rec.epoch = static_cast<int>(history.epochs.size());
    rec.stage = stage_no;
    rec.loss = loss / cfg.steps_per_epoch;
    rec.rate_bits = rate / cfg.steps_per_epoch;
    rec.distortion_bits = dist / cfg.steps_per_epoch;
    rec.temperature = stage == Stage::kP2pFinetune ? 0.0 : temp;
    rec.learning_rate = adam[0].learning_rate;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.plateau_decay) {
      if (rec.loss < best_loss * (1.0 - 1e-3)) {
        best_loss = rec.loss;
        since_best = 0;
      } else if (++since_best >= cfg.plateau_patience) {
        adam[0].learning_rate = std::max(adam[0].learning_rate / 10.0, 1e-7);
        adam[1].learning_rate = adam[0].learning_rate * cfg.entropy_lr_scale;
        since_best = 0;
        best_loss = rec.loss;
      }
    }
  }
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void stamp_metadata(Model& m, const TrainConfig& cfg, const TrainHistory& h) {
  m.metadata["lambda"] = fmt_double(cfg.lambda);
  m.metadata["seed"] = std::to_string(cfg.seed);
  m.metadata["train_snr"] = cfg.snr.describe();
  if (cfg.snr.kind == SnrPolicy::Kind::kFixed) {
    m.metadata["train_dest_db"] = fmt_double(cfg.snr.dest_db);
    m.metadata["train_relay_db"] = fmt_double(cfg.snr.relay_db);
  }
  m.metadata["batch_size"] = std::to_string(cfg.batch_size);
  m.metadata["epochs"] = std::to_string(cfg.epochs);
  m.metadata["steps_per_epoch"] = std::to_string(cfg.steps_per_epoch);
  m.metadata["learning_rate"] = fmt_double(cfg.learning_rate);
  m.metadata["noise"] = m.constellation.is_complex ? "CN(0,1), 0.5 per component" : "N(0,1)";
  if (!h.epochs.empty()) {
    m.metadata["final_train_rate_bits"] = fmt_double(h.epochs.back().rate_bits);
    m.metadata["final_train_distortion_bits"] = fmt_double(h.epochs.back().distortion_bits);
  }
}

void redraw_biases(nn::Mlp& net, Rng& rng) {
  for (auto& layer : net.layers) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const double a = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (long o = 0; o < layer.bias.size(); ++o) layer.bias[o] = a * d(rng);
  }
}

Model initial_model(const TrainConfig& cfg) {
  Rng init = make_stream(cfg.seed, 0);
  Model m = build_model(cfg.arch, make_constellation(cfg.scheme, cfg.power), init);
  if (cfg.bias_init == "uniform") {
    for (auto& e : m.encoders) redraw_biases(e, init);
    for (auto& e : m.entropy_nets) redraw_biases(e, init);
    redraw_biases(m.demodulator, init);
    if (m.pretrain_demodulator) redraw_biases(*m.pretrain_demodulator, init);
  }
  return m;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (cfg.arch.variant == Variant::kP2p) return train_p2p_two_stage(cfg, on_epoch);
  TrainResult r{initial_model(cfg), {}};
  run_stage(Stage::kJoint, cfg, cfg.epochs, r.model, r.history, on_epoch);
  stamp_metadata(r.model, cfg, r.history);
  return r;
}

TrainResult train_p2p_two_stage(const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (cfg.arch.variant != Variant::kP2p) throw InvalidArgument("config field 'variant': two-stage training needs p2p");
  TrainResult r{initial_model(cfg), {}};
  run_stage(Stage::kP2pPretrain, cfg, cfg.epochs, r.model, r.history, on_epoch);
  const int ft = cfg.finetune_epochs < 0 ? cfg.epochs : cfg.finetune_epochs;
  if (ft > 0) run_stage(Stage::kP2pFinetune, cfg, ft, r.model, r.history, on_epoch);
  stamp_metadata(r.model, cfg, r.history);
  return r;
}

}  // namespace ncf
