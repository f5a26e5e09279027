#include <doctest.h>

#include <atomic>
#include <cmath>

#include "baselines.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "oracle.hpp"
#include "training.hpp"

using namespace ncf;

namespace {

Model fresh(Variant v, Scheme s, int K = 32, std::vector<int> hidden = {100, 100}, std::uint64_t seed = 1) {
  Architecture a;
  a.variant = v;
  a.codebook_size = K;
  a.hidden = std::move(hidden);
  Rng rng = make_stream(seed, 0);
  return build_model(a, make_constellation(s), rng);
}

void zero_all(Model& m) {
  for (auto& b : named_parameters(m)) std::fill(b.data.begin(), b.data.end(), 0.0);
}

// Encoder with one hidden pair computing leaky(y) and leaky(-y); logit 0 is
// their sum (about |y|), logit 1 a constant 1, logit 2 unreachable. Index 0
// therefore owns both tails: a binned index.
Model folding_encoder() {
  Model m = fresh(Variant::kMarginal, Scheme::kPam4, 3, {2});
  zero_all(m);
  auto& l0 = m.encoders[0].layers[0];
  l0.weight << 1, -1;
  auto& l1 = m.encoders[0].layers[1];
  l1.weight << 1, 1, 0, 0, 0, 0;
  l1.bias << 0, 1, -100;
  return m;
}

// BPSK demodulator whose logits are (-y_D, y_D) regardless of u.
Model sign_demodulator(int K = 4) {
  Model m = fresh(Variant::kMarginal, Scheme::kBpsk, K, {2});
  zero_all(m);
  auto& l0 = m.demodulator.layers[0];
  l0.weight(0, K) = 1;
  l0.weight(1, K) = -1;
  auto& l1 = m.demodulator.layers[1];
  // Output 1 = relu(y) - relu(-y) ~ y; output 0 = -y.
  l1.weight << -1, 1, 1, -1;
  return m;
}

}  // namespace

TEST_CASE("evaluate: zero-parameter model gives MI 0, rate log2 K and SER (M-1)/M") {
  Model m = fresh(Variant::kMarginal, Scheme::kPam4, 32);
  zero_all(m);
  Rng rng = make_stream(1, 0);
  const auto r = evaluate(m, SnrPair::from_db(13, 13), 100000, rng);
  CHECK(std::abs(r.mi_bits) < 1e-12);
  CHECK(std::abs(r.rate_bits - 5.0) < 1e-12);
  CHECK(std::abs(r.ser - 0.75) < 3 * std::sqrt(0.75 * 0.25 / 100000));
  CHECK(r.index_entropy_bits == 0.0);
  CHECK(r.n_samples == 100000);
}

TEST_CASE("evaluate: freshly initialized model is near chance") {
  const Model m = fresh(Variant::kMarginal, Scheme::kPam4);
  Rng rng = make_stream(2, 0);
  const auto r = evaluate(m, SnrPair::from_db(13, 13), 100000, rng);
  CHECK(std::abs(r.mi_bits) < 0.05);
  CHECK(std::abs(r.ser - 0.75) < 0.1);
  CHECK(r.rate_bits >= r.index_entropy_bits - 1e-9);
}

TEST_CASE("evaluate: doubling n shrinks standard errors by about sqrt 2") {
  TrainConfig c;
  c.lambda = 5;
  c.scheme = Scheme::kPam4;
  c.arch.codebook_size = 8;
  c.arch.hidden = {16, 16};
  c.batch_size = 128;
  c.epochs = 4;
  c.steps_per_epoch = 25;
  c.learning_rate = 3e-3;
  c.snr.dest_db = c.snr.relay_db = 7;
  const Model m = train(c).model;
  Rng a = make_stream(3, 0), b = make_stream(3, 1);
  const auto r1 = evaluate(m, SnrPair::from_db(7, 7), 200000, a);
  const auto r2 = evaluate(m, SnrPair::from_db(7, 7), 400000, b);
  REQUIRE(r2.mi_stderr > 0);
  CHECK(std::abs(r1.mi_stderr / r2.mi_stderr / std::sqrt(2.0) - 1) < 0.2);
  CHECK(std::abs(r1.ser_stderr / r2.ser_stderr / std::sqrt(2.0) - 1) < 0.2);
  // Hard-index rate is a cross-entropy: never below the plug-in entropy.
  CHECK(r2.rate_bits >= r2.index_entropy_bits - 1e-9);
}

TEST_CASE("evaluate: same stream reproduces the report exactly") {
  const Model m = fresh(Variant::kConditional, Scheme::kQam4, 8, {8, 8});
  Rng a = make_stream(4, 0), b = make_stream(4, 0);
  const auto r1 = evaluate(m, SnrPair::from_db(3, 3), 20000, a);
  const auto r2 = evaluate(m, SnrPair::from_db(3, 3), 20000, b);
  CHECK(r1.mi_bits == r2.mi_bits);
  CHECK(r1.rate_bits == r2.rate_bits);
  CHECK(r1.index_counts == r2.index_counts);
}

TEST_CASE("run_parallel covers every index and rethrows") {
  std::vector<int> hits(57, 0);
  run_parallel(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(run_parallel(10, 3, [](std::size_t i) {
                    if (i == 7) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
}

TEST_CASE("grid axis: centers and clamping") {
  const GridAxis a{-2, 2, 8};
  CHECK(a.cell_width() == 0.5);
  CHECK(a.center(0) == -1.75);
  CHECK(a.cell_of(-100) == 0);
  CHECK(a.cell_of(100) == 7);
  CHECK(a.cell_of(0.1) == 4);
  CHECK(a.cell_of(-0.1) == 3);
}

TEST_CASE("default axis covers all but 1e-4 of the observation mass") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kQam16}) {
    const auto c = make_constellation(s);
    const double g = db_to_linear(13);
    const auto ax = default_axis(c, g, 1000);
    Rng rng = make_stream(5, 0);
    const auto b = sample_batch(c, SnrPair{g, g}, 200000, rng);
    long outside = 0;
    for (int i = 0; i < b.size(); ++i)
      for (int f = 0; f < c.feature_dim(); ++f) outside += b.y_relay(f, i) < ax.lo || b.y_relay(f, i) > ax.hi;
    CHECK(outside / double(b.size()) <= 1e-4);
  }
}

TEST_CASE("summarize_labels: runs, intervals and noise-run filtering") {
  const GridAxis a{0, 20, 20};
  std::vector<int> lab = {0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 0, 0, 0, 1, 0, 0, 0, 2, 2};
  const auto s = summarize_labels(a, lab, 4);
  REQUIRE(s.intervals[0].size() == 3);
  CHECK(s.intervals[0][0].lo == 0);
  CHECK(s.intervals[0][0].hi == 4);
  CHECK(s.intervals[0][1].lo == 10);
  CHECK(s.intervals[1].size() == 2);
  CHECK(s.intervals[3].empty());
  // The 1-cell run of label 1 is ignored, so the two 0-runs around it merge.
  CHECK(s.region_counts[0] == 2);
  CHECK(s.region_counts[1] == 1);
  CHECK(s.region_counts[2] == 1);  // second 2-run has only 2 cells
  CHECK(s.region_counts[3] == 0);
  CHECK(s.indices_with_multiple_regions() == 1);
}

TEST_CASE("summarize_labels_2d: connected components") {
  const GridAxis a{0, 1, 10};
  std::vector<int> lab(100, 0);
  // Two separate 3x3 blocks of label 1 and one 2x2 block of label 2.
  for (int q = 0; q < 3; ++q)
    for (int i = 0; i < 3; ++i) {
      lab[q * 10 + i] = 1;
      lab[(q + 6) * 10 + i + 6] = 1;
    }
  for (int q = 0; q < 2; ++q)
    for (int i = 0; i < 2; ++i) lab[(q + 7) * 10 + i] = 2;
  const auto s = summarize_labels_2d(a, lab, 3);
  CHECK(s.region_counts[0] == 1);
  CHECK(s.region_counts[1] == 2);
  CHECK(s.region_counts[2] == 0);
  CHECK(s.label_at(7, 7) == 1);
  CHECK(s.indices_with_multiple_regions() == 1);
}

TEST_CASE("boundaries: a folding encoder is reported as binning") {
  const Model m = folding_encoder();
  const auto map = extract_quantization_boundaries(m, GridAxis{-4, 4, 4000});
  REQUIRE(map.axes.size() == 1);
  const auto& ax = map.axes[0];
  CHECK(map.binned_indices() == 1);
  REQUIRE(ax.intervals[0].size() == 2);
  REQUIRE(ax.intervals[1].size() == 1);
  // |y|(1 - 0.01) crosses 1 at y = +-1/0.99.
  CHECK(std::abs(ax.intervals[1][0].lo + 1 / 0.99) < 2 * 8.0 / 4000);
  CHECK(std::abs(ax.intervals[1][0].hi - 1 / 0.99) < 2 * 8.0 / 4000);
}

TEST_CASE("decision regions: sign demodulator has one threshold at 0") {
  const Model m = sign_demodulator();
  const auto d = extract_decision_regions(m, {2}, GridAxis{-3, 3, 600});
  REQUIRE(d.thresholds.size() == 1);
  CHECK(std::abs(d.thresholds[0].position) < 0.011);
  CHECK(d.thresholds[0].left == 0);
  CHECK(d.thresholds[0].right == 1);
  CHECK_THROWS_AS(extract_decision_regions(m, {9}, GridAxis{-3, 3, 600}), InvalidArgument);
  CHECK_THROWS_AS(extract_decision_regions(m, {0}, GridAxis{3, -3, 600}), InvalidArgument);
}

TEST_CASE("lookup table reproduces network decisions up to grid disagreement") {
  const Model m = sign_demodulator();
  const auto t = export_lookup_table(m, default_axis(m.constellation, 2, 4096), default_axis(m.constellation, 2, 4096));
  CHECK(t.decide(t.relay_code(0.3), -0.5) == 0);
  CHECK(t.decide(t.relay_code(0.3), 0.5) == 1);
  CHECK(t.decide(999, 0.5) == -1);
  Rng rng = make_stream(6, 0);
  const auto f = compare_table_to_network(m, t, SnrPair{2, 2}, 100000, rng);
  CHECK(std::abs(f.table_ser - f.network_ser) <= f.disagreement + 1e-15);
  CHECK(f.disagreement < 1e-3);
  CHECK(std::abs(f.network_ser - double(oracle::q(std::sqrt(2.0L)))) < 4 * std::sqrt(0.08 / 100000));
}

TEST_CASE("sweep: rows sorted by rate, seeds kept or reduced") {
  TrainConfig c;
  c.lambda = 1;
  c.scheme = Scheme::kBpsk;
  c.arch.codebook_size = 4;
  c.arch.hidden = {8, 8};
  c.batch_size = 32;
  c.epochs = 2;
  c.steps_per_epoch = 5;
  c.learning_rate = 1e-3;
  SweepOptions o;
  o.eval_samples = 2000;
  o.workers = 2;
  const auto rows = sweep_lambda(c, {0.1, 1, 10}, {0, 1}, o);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].report.rate_bits <= rows[i].report.rate_bits);
  o.best_of_seeds = true;
  const auto best = sweep_lambda(c, {0.1, 1, 10}, {0, 1}, o);
  REQUIRE(best.size() == 3);
  for (const auto& b : best)
    for (const auto& r : rows)
      if (r.lambda == b.lambda) CHECK(b.report.mi_bits >= r.report.mi_bits);
}
