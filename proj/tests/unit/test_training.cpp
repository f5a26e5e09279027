#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <set>

#include "baselines.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "training.hpp"

using namespace ncf;

namespace {

TrainConfig tiny(Variant v, Scheme s, double lambda) {
  TrainConfig c;
  c.lambda = lambda;
  c.scheme = s;
  c.arch.variant = v;
  c.arch.codebook_size = 8;
  c.arch.hidden = {16, 16};
  c.batch_size = 64;
  c.epochs = 3;
  c.steps_per_epoch = 5;
  c.learning_rate = 1e-3;
  c.snr.dest_db = c.snr.relay_db = 5;
  c.seed = 17;
  return c;
}

bool same_params(const Model& a, const Model& b, const std::string& prefix) {
  const auto pa = named_parameters(a), pb = named_parameters(b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name.rfind(prefix, 0) != 0) continue;
    if (std::memcmp(pa[i].data.data(), pb[i].data.data(), pa[i].data.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("loss: untrained BPSK model has R about 5 bits and D about 1 bit") {
  Architecture a;
  Rng init = make_stream(0, 0);
  const Model m = build_model(a, make_constellation(Scheme::kBpsk), init);
  Rng rng = make_stream(1, 0);
  const auto batch = sample_batch(m.constellation, SnrPair::from_db(3, 3), 4096, rng);
  const auto v = loss_batch(m, batch, 1.0, 1.0, rng, nullptr);
  CHECK(std::abs(v.rate_bits - 5.0) < 0.1);
  CHECK(std::abs(v.distortion_bits - 1.0) < 0.1);
  CHECK(std::abs(v.loss - (v.rate_bits + v.distortion_bits)) < 1e-12);
}

TEST_CASE("loss: bad temperature and empty batch are rejected") {
  Architecture a;
  Rng init = make_stream(0, 0);
  const Model m = build_model(a, make_constellation(Scheme::kBpsk), init);
  Rng rng = make_stream(1, 0);
  const auto batch = sample_batch(m.constellation, SnrPair::from_db(3, 3), 4, rng);
  CHECK_THROWS_AS(loss_batch(m, batch, 1.0, 0.0, rng, nullptr), InvalidArgument);
  ChannelBatch empty;
  CHECK_THROWS_AS(loss_batch(m, empty, 1.0, 1.0, rng, nullptr), InvalidArgument);
}

TEST_CASE("temperature schedule endpoints and shapes") {
  TemperatureSchedule t;
  CHECK(t.at(0, 100) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.at(99, 100) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t.at(49, 99) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
  t.shape = TemperatureSchedule::Shape::kLinear;
  CHECK(t.at(49, 99) == doctest::Approx(0.55).epsilon(1e-12));
  t.shape = TemperatureSchedule::Shape::kConstant;
  CHECK(t.at(70, 99) == 1.0);
}

TEST_CASE("lambda continuation") {
  TrainConfig c = tiny(Variant::kMarginal, Scheme::kBpsk, 20);
  CHECK(lambda_at(c, 0, 100) == 20);
  c.lambda_start = 2;
  c.lambda_warmup_fraction = 0.5;
  CHECK(lambda_at(c, 0, 101) == doctest::Approx(2));
  CHECK(lambda_at(c, 25, 101) == doctest::Approx(std::sqrt(40.0)));
  CHECK(lambda_at(c, 50, 101) == 20);
  CHECK(lambda_at(c, 100, 101) == 20);
}

TEST_CASE("snr policy: fixed, uniform frequencies, independent") {
  SnrPolicy p;
  p.dest_db = p.relay_db = 3;
  Rng rng = make_stream(2, 0);
  for (int i = 0; i < 10; ++i) {
    const auto s = sample_training_snr(p, rng);
    CHECK(std::abs(s.gamma_dest - 1.99526) < 1e-5);
    CHECK(s.gamma_relay == s.gamma_dest);
  }
  p.kind = SnrPolicy::Kind::kUniform;
  p.levels_db = {0, 1, 2, 3, 4, 5, 6};
  std::vector<long> counts(7, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_training_snr(p, rng);
    CHECK_FALSE(s.gamma_dest != s.gamma_relay);
    ++counts[static_cast<int>(std::lround(linear_to_db(s.gamma_dest)))];
  }
  for (long k : counts) CHECK(std::abs(k / double(n) - 1.0 / 7) < 0.01);
  p.kind = SnrPolicy::Kind::kIndependent;
  p.relay_levels_db = {3};
  p.dest_levels_db = {0, 2, 4, 6};
  std::set<double> dests;
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_training_snr(p, rng);
    CHECK(std::abs(s.gamma_relay - db_to_linear(3)) < 1e-12);
    dests.insert(s.gamma_dest);
  }
  CHECK(dests.size() == 4);
}

TEST_CASE("config validation names the offending field") {
  auto msg = [](TrainConfig c) {
    try {
      validate(c);
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  TrainConfig c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  CHECK(msg(c).empty());
  c.lambda = 0;
  CHECK(msg(c).find("lambda") != std::string::npos);
  c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  c.temperature.start = 0.05;
  CHECK(msg(c).find("temperature") != std::string::npos);
  c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  c.arch.iq_mode = IqMode::kSplit;
  CHECK(msg(c).find("iq_mode") != std::string::npos);
  c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  c.batch_size = 0;
  CHECK(msg(c).find("batch_size") != std::string::npos);
  c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  c.snr.kind = SnrPolicy::Kind::kUniform;
  CHECK(msg(c).find("snr") != std::string::npos);
  c = tiny(Variant::kMarginal, Scheme::kBpsk, 1);
  c.bias_init = "random";
  CHECK(msg(c).find("bias_init") != std::string::npos);
}

TEST_CASE("bias_init: zero by default, uniform within +-1/sqrt(fan_in)") {
  // A negligible learning rate leaves the parameters at their initial values
  // up to steps * lr.
  auto biases = [](const std::string& init) {
    TrainConfig c = tiny(Variant::kP2p, Scheme::kPam4, 2);
    c.learning_rate = 1e-15;
    c.bias_init = init;
    return train(c).model;
  };
  for (const std::string init : {"zero", "uniform"}) {
    const Model m = biases(init);
    double largest = 0.0;
    bool within = true;
    for (const auto& p : named_parameters(m)) {
      if (p.name.find(".bias") == std::string::npos) continue;
      const std::string w = p.name.substr(0, p.name.size() - 4) + "weight";
      long fan_in = 0;
      for (const auto& q : named_parameters(m))
        if (q.name == w) fan_in = q.cols;
      REQUIRE(fan_in > 0);
      for (double b : p.data) {
        largest = std::max(largest, std::abs(b));
        within &= std::abs(b) <= 1.0 / std::sqrt(double(fan_in)) + 1e-9;
      }
    }
    CHECK(within);
    if (init == "zero") CHECK(largest < 1e-9);
    else CHECK(largest > 0.05);
  }
  CHECK(serialize_model(biases("uniform")) == serialize_model(biases("uniform")));
}

TEST_CASE("train: same seed gives identical history and model; other seed differs") {
  const TrainConfig c = tiny(Variant::kConditional, Scheme::kPam4, 3);
  const auto a = train(c), b = train(c);
  REQUIRE(a.history.epochs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.history.epochs[i].loss == b.history.epochs[i].loss);
    CHECK(a.history.epochs[i].rate_bits == b.history.epochs[i].rate_bits);
  }
  CHECK(serialize_model(a.model) == serialize_model(b.model));
  TrainConfig d = c;
  d.seed = 18;
  CHECK(serialize_model(train(d).model) != serialize_model(a.model));
}

TEST_CASE("train: metadata records the configuration") {
  const auto r = train(tiny(Variant::kMarginal, Scheme::kBpsk, 4));
  CHECK(r.model.metadata.at("lambda") == "4");
  CHECK(r.model.metadata.at("seed") == "17");
  CHECK(r.model.metadata.count("train_dest_db") == 1);
  CHECK(r.model.metadata.count("final_train_rate_bits") == 1);
}

TEST_CASE("p2p: stage 2 leaves encoder and entropy parameters byte-identical") {
  TrainConfig c = tiny(Variant::kP2p, Scheme::kPam4, 5);
  c.finetune_epochs = 0;
  const auto stage1 = train(c);
  c.finetune_epochs = 3;
  const auto both = train(c);
  CHECK(both.history.epochs.size() == 6);
  CHECK(both.history.epochs[3].stage == 2);
  CHECK(same_params(stage1.model, both.model, "encoder."));
  CHECK(same_params(stage1.model, both.model, "entropy."));
  CHECK(same_params(stage1.model, both.model, "pretrain_demod."));
  CHECK_FALSE(same_params(stage1.model, both.model, "demod."));

  Model grad = zeros_like(both.model);
  Rng rng = make_stream(3, 0);
  const auto batch = sample_batch(both.model.constellation, SnrPair::from_db(5, 5), 32, rng);
  finetune_loss_batch(both.model, batch, 5, &grad);
  for (const auto& p : named_parameters(grad))
    if (p.name.rfind("demod.", 0) != 0)
      for (double v : p.data) CHECK(v == 0.0);
}

TEST_CASE("p2p: two-stage entry point rejects other variants") {
  CHECK_THROWS_AS(train_p2p_two_stage(tiny(Variant::kMarginal, Scheme::kBpsk, 1)), InvalidArgument);
}

TEST_CASE("train: loss decreases and small lambda collapses the relay") {
  TrainConfig c = tiny(Variant::kMarginal, Scheme::kBpsk, 0.05);
  c.arch.codebook_size = 32;
  c.epochs = 20;
  c.steps_per_epoch = 20;
  c.batch_size = 256;
  c.learning_rate = 3e-3;
  c.entropy_lr_scale = 10;
  c.snr.dest_db = c.snr.relay_db = 3;
  const auto r = train(c);
  const auto& h = r.history.epochs;
  double lead = 0, trail = 0;
  for (int i = 0; i < 5; ++i) {
    lead += h[i].loss;
    trail += h[h.size() - 1 - i].loss;
  }
  CHECK(trail <= lead);
  Rng rng = make_stream(4, 0);
  const auto rep = evaluate(r.model, SnrPair::from_db(3, 3), 100000, rng);
  const double floor = modulation_mi(r.model.constellation, db_to_linear(3));
  CHECK(rep.rate_bits < 0.2);
  CHECK(std::abs(rep.mi_bits - floor) < 0.05);
}
