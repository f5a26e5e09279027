#pragma once

// Finite-difference check of the training-loss gradients against the
// long-double oracle objective, for one randomly drawn configuration.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "oracle.hpp"
#include "training.hpp"

namespace gradcheck {

struct CaseResult {
  std::string description;
  long checked = 0;
  long failed = 0;
  double worst_rel = 0.0;
};

inline oracle::Real finetune_oracle(const ncf::Model& m, const oracle::ModelMirror& p, const ncf::ChannelBatch& batch,
                                    oracle::Real lambda) {
  using oracle::Real;
  const int n = batch.size(), K = m.codebook_size(), fd = m.dest_dim();
  const bool split = m.arch.iq_mode == ncf::IqMode::kSplit;
  Real rate = 0, dist = 0;
  for (int s = 0; s < n; ++s) {
    std::vector<Real> yd(fd), in;
    for (int f = 0; f < fd; ++f) yd[f] = batch.y_dest(f, s);
    for (std::size_t b = 0; b < p.encoders.size(); ++b) {
      std::vector<Real> enc_in;
      if (split) enc_in = {static_cast<Real>(batch.y_relay(b, s))};
      else
        for (long f = 0; f < batch.y_relay.rows(); ++f) enc_in.push_back(batch.y_relay(f, s));
      const auto a = oracle::forward(p.encoders[b], enc_in);
      const int k = static_cast<int>(std::max_element(a.begin(), a.end()) - a.begin());
      rate -= oracle::log_softmax(p.entropy_logits[b])[k] / std::log(Real(2));
      for (int j = 0; j < K; ++j) in.push_back(j == k ? 1 : 0);
    }
    in.insert(in.end(), yd.begin(), yd.end());
    dist -= oracle::log_softmax(oracle::forward(p.demod, in))[batch.w[s]] / std::log(Real(2));
  }
  return (rate + lambda * dist) / n;
}

// Case `id` draws scheme, variant, I/Q mode, K, widths, lambda, t and a batch
// from its own stream, then compares every parameter's analytic gradient
// with central differences (eps 1e-5) of the oracle objective.
inline CaseResult run_case(std::uint64_t id, double eps = 1e-5, double tol = 1e-4) {
  using namespace ncf;
  Rng rng = make_stream(0xfdc0ffee, id);
  std::uniform_int_distribution<int> pick_scheme(0, 4), pick_variant(0, 2), pick_k(2, 8), pick_w(3, 9), pick_n(1, 4);
  std::uniform_real_distribution<double> pick_lambda(0.05, 30.0), pick_t(0.2, 2.0), pick_db(-3, 15);
  const Scheme scheme = static_cast<Scheme>(pick_scheme(rng));
  Architecture arch;
  arch.variant = static_cast<Variant>(pick_variant(rng));
  const auto c = make_constellation(scheme);
  arch.iq_mode = (c.is_complex && (id % 2 == 1)) ? IqMode::kSplit : IqMode::kJoint;
  arch.codebook_size = pick_k(rng);
  arch.hidden = {pick_w(rng), pick_w(rng)};
  Model m = build_model(arch, c, rng);
  // Break the all-kinks-at-zero symmetry of the fresh initialization.
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (auto& blk : named_parameters(m))
    for (double& v : blk.data) v += jitter(rng);
  const double lambda = pick_lambda(rng), t = pick_t(rng);
  const bool finetune = arch.variant == Variant::kP2p && id % 3 == 2;
  const auto batch = sample_batch(c, SnrPair::from_db(pick_db(rng), pick_db(rng)), pick_n(rng), rng);
  const GumbelDraws g = draw_gumbel(m, batch.size(), rng);

  Model grad = zeros_like(m);
  if (finetune) finetune_loss_batch(m, batch, lambda, &grad);
  else loss_batch(m, batch, lambda, t, g, &grad);

  const bool pretrain = arch.variant == Variant::kP2p;
  auto objective = [&]() -> oracle::Real {
    const auto mir = oracle::mirror(m);
    if (finetune) return finetune_oracle(m, mir, batch, lambda);
    return oracle::loss(m, mir, batch, lambda, t, g.per_branch, pretrain);
  };

  CaseResult r;
  r.description = std::string(scheme_name(scheme)) + "/" + std::string(variant_name(arch.variant)) + "/" +
                  std::string(iq_mode_name(arch.iq_mode)) + (finetune ? "/finetune" : "") +
                  " K=" + std::to_string(arch.codebook_size) + " n=" + std::to_string(batch.size());
  auto params = named_parameters(m);
  auto grads = named_parameters(grad);
  for (std::size_t b = 0; b < params.size(); ++b) {
    // Stage 2 differentiates only the demodulator; everything else is frozen.
    if (finetune && params[b].name.rfind("demod.", 0) != 0) continue;
    for (std::size_t i = 0; i < params[b].data.size(); ++i) {
      const double an = grads[b].data[i];
      double& p = params[b].data[i];
      const double saved = p;
      p = saved + eps;
      const auto fp = objective();
      p = saved - eps;
      const auto fm = objective();
      p = saved;
      const double fdv = static_cast<double>((fp - fm) / (2 * eps));
      if (std::abs(an) < 1e-8 && std::abs(fdv) < 1e-8) continue;
      ++r.checked;
      const double rel = std::abs(an - fdv) / std::max(std::abs(an), std::abs(fdv));
      r.worst_rel = std::max(r.worst_rel, rel);
      if (rel >= tol) ++r.failed;
    }
  }
  return r;
}

}  // namespace gradcheck
