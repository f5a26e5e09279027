#pragma once

// Independent long-double re-implementations used as test oracles. Written
// as straight loops over plain arrays; nothing here calls the library's
// numerical routines.

#include <cmath>
#include <vector>

#include "models.hpp"

namespace oracle {

using Real = long double;

struct Net {
  // w[l][o][i], b[l][o]
  std::vector<std::vector<std::vector<Real>>> w;
  std::vector<std::vector<Real>> b;
};

inline Net copy_net(const ncf::nn::Mlp& m) {
  Net n;
  for (const auto& layer : m.layers) {
    std::vector<std::vector<Real>> w(layer.weight.rows(), std::vector<Real>(layer.weight.cols()));
    std::vector<Real> b(layer.bias.size());
    for (long o = 0; o < layer.weight.rows(); ++o) {
      for (long i = 0; i < layer.weight.cols(); ++i) w[o][i] = layer.weight(o, i);
      b[o] = layer.bias[o];
    }
    n.w.push_back(w);
    n.b.push_back(b);
  }
  return n;
}

inline std::vector<Real> forward(const Net& n, std::vector<Real> x) {
  for (std::size_t l = 0; l < n.w.size(); ++l) {
    std::vector<Real> y(n.w[l].size());
    for (std::size_t o = 0; o < y.size(); ++o) {
      Real acc = n.b[l][o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += n.w[l][o][i] * x[i];
      const bool last = l + 1 == n.w.size();
      y[o] = (last || acc > 0) ? acc : Real(0.01) * acc;
    }
    x = std::move(y);
  }
  return x;
}

inline std::vector<Real> log_softmax(const std::vector<Real>& a) {
  Real mx = a[0];
  for (Real v : a) mx = std::max(mx, v);
  Real s = 0;
  for (Real v : a) s += std::exp(v - mx);
  std::vector<Real> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - mx - std::log(s);
  return out;
}

inline std::vector<Real> softmax(const std::vector<Real>& a) {
  auto l = log_softmax(a);
  for (auto& v : l) v = std::exp(v);
  return l;
}

// Long-double copy of every network in a model.
struct ModelMirror {
  std::vector<Net> encoders;
  std::vector<std::vector<Real>> entropy_logits;
  std::vector<Net> entropy_nets;
  Net demod;
  bool has_pretrain = false;
  Net pretrain;
};

inline ModelMirror mirror(const ncf::Model& m) {
  ModelMirror r;
  for (const auto& e : m.encoders) r.encoders.push_back(copy_net(e));
  for (const auto& l : m.entropy_logits) r.entropy_logits.emplace_back(l.data(), l.data() + l.size());
  for (const auto& e : m.entropy_nets) r.entropy_nets.push_back(copy_net(e));
  r.demod = copy_net(m.demodulator);
  if (m.pretrain_demodulator) {
    r.has_pretrain = true;
    r.pretrain = copy_net(*m.pretrain_demodulator);
  }
  return r;
}

// Training objective R + lambda D for fixed Gumbel draws, recomputed sample
// by sample. gumbel[b] is K x n (column per sample).
inline Real loss(const ncf::Model& m, const ModelMirror& p, const ncf::ChannelBatch& batch, Real lambda, Real t,
                 const std::vector<ncf::nn::Matrix>& gumbel, bool pretrain_stage) {
  const int n = batch.size();
  const int K = m.codebook_size();
  const bool split = m.arch.iq_mode == ncf::IqMode::kSplit;
  const int branches = static_cast<int>(p.encoders.size());
  const int fd = m.dest_dim();
  Real rate = 0, dist = 0;
  for (int s = 0; s < n; ++s) {
    std::vector<Real> yd(fd);
    for (int f = 0; f < fd; ++f) yd[f] = batch.y_dest(f, s);
    std::vector<Real> demod_in;
    for (int b = 0; b < branches; ++b) {
      std::vector<Real> enc_in;
      if (split) enc_in = {static_cast<Real>(batch.y_relay(b, s))};
      else
        for (long f = 0; f < batch.y_relay.rows(); ++f) enc_in.push_back(batch.y_relay(f, s));
      auto alpha = forward(p.encoders[b], enc_in);
      std::vector<Real> z(K);
      for (int k = 0; k < K; ++k) z[k] = (alpha[k] + gumbel[b](k, s)) / t;
      auto u = softmax(z);
      std::vector<Real> lq;
      if (m.arch.variant == ncf::Variant::kConditional) lq = log_softmax(forward(p.entropy_nets[b], yd));
      else lq = log_softmax(p.entropy_logits[b]);
      for (int k = 0; k < K; ++k) rate -= u[k] * lq[k] / std::log(Real(2));
      demod_in.insert(demod_in.end(), u.begin(), u.end());
    }
    std::vector<Real> logits;
    if (pretrain_stage) {
      logits = forward(p.pretrain, demod_in);
    } else {
      demod_in.insert(demod_in.end(), yd.begin(), yd.end());
      logits = forward(p.demod, demod_in);
    }
    dist -= log_softmax(logits)[batch.w[s]] / std::log(Real(2));
  }
  return (rate + lambda * dist) / n;
}

// Extended-precision reference for the Gaussian CF rate.
inline Real cf_rate(Real gd, Real gr, Real R, bool complex) {
  const Real scale = complex ? 1 : Real(0.5);
  if (R == 0) return scale * std::log2(1 + gd);
  const Real s = std::pow(Real(2), 2 * R) - 1;
  const Real eff = gr / (1 + (1 + gd + gr) / (s * (gd + 1)));
  return scale * std::log2(1 + gd + eff);
}

// Standard normal upper tail via erfc.
inline Real q(Real x) { return Real(0.5) * std::erfc(x / std::sqrt(Real(2))); }

}  // namespace oracle
