#include <doctest.h>

#include <cmath>

#include "baselines.hpp"
#include "error.hpp"
#include "oracle.hpp"

using namespace ncf;

namespace {

// I(X;Y) for real PAM by direct trapezoidal integration in long double.
long double mi_trapezoid(const Constellation& c, double gamma) {
  using R = long double;
  const R h = std::sqrt(R(gamma) / c.power);
  const int m = c.order();
  const R span = h * c.max_magnitude() + 12;
  const int steps = 200000;
  const R dy = 2 * span / steps;
  const R pi = std::acos(R(-1));
  R acc = 0;
  for (int s = 0; s <= steps; ++s) {
    const R y = -span + s * dy;
    R py = 0;
    std::vector<R> pk(m);
    for (int k = 0; k < m; ++k) {
      const R d = y - h * R(c.symbols[k].real());
      pk[k] = std::exp(-d * d / 2) / std::sqrt(2 * pi);
      py += pk[k] / m;
    }
    R term = 0;
    for (int k = 0; k < m; ++k)
      if (pk[k] > 0) term += pk[k] / m * std::log2(pk[k] / py);
    acc += (s == 0 || s == steps ? R(0.5) : R(1)) * term;
  }
  return acc * dy;
}

}  // namespace

TEST_CASE("cf rate: stated values and limits") {
  const auto snr = SnrPair::from_db(3, 3);
  CHECK(std::abs(cf_gaussian_rate(snr, 0, false) - 0.5 * std::log2(1 + snr.gamma_dest)) < 1e-12);
  CHECK(std::abs(cf_gaussian_rate(snr, 0, false) - 0.79134) < 1e-5);
  CHECK(std::abs(cf_gaussian_rate(snr, 60, false) - 0.5 * std::log2(1 + snr.gamma_dest + snr.gamma_relay)) < 1e-12);
  // The quoted 1.15958 is truncated, not rounded, at the fifth decimal.
  CHECK(std::abs(cf_gaussian_rate(snr, 60, false) - 1.15958) < 2e-5);
  const double r1 = cf_gaussian_rate(snr, 1, false);
  CHECK(std::abs(r1 - double(oracle::cf_rate(snr.gamma_dest, snr.gamma_relay, 1, false))) < 1e-12);
  CHECK(std::abs(r1 - 1.0485) < 1e-4);
}

TEST_CASE("cf rate: complex variant doubles the real value") {
  for (double r : {0.0, 0.5, 1.0, 2.5})
    for (double db : {0.0, 6.0, 13.0}) {
      const auto snr = SnrPair::from_db(db, db + 1);
      CHECK(std::abs(cf_gaussian_rate(snr, r, true) -
                     double(oracle::cf_rate(snr.gamma_dest, snr.gamma_relay, r, true))) < 1e-12);
    }
}

TEST_CASE("cf rate: monotone in R and both SNRs") {
  double prev = -1;
  for (double r = 0; r <= 8; r += 0.05) {
    const double v = cf_gaussian_rate(SnrPair::from_db(3, 3), r, false);
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1;
  for (double db = -10; db <= 20; db += 0.5) {
    const double v = cf_gaussian_rate(SnrPair::from_db(db, 3), 1, false);
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1;
  for (double db = -10; db <= 20; db += 0.5) {
    const double v = cf_gaussian_rate(SnrPair::from_db(3, db), 1, false);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("cf rate: negative inputs are rejected") {
  CHECK_THROWS_AS(cf_gaussian_rate(SnrPair::from_db(3, 3), -0.1, false), InvalidArgument);
  CHECK_THROWS_AS(cf_gaussian_rate(SnrPair{-1.0, 1.0}, 1, false), InvalidArgument);
}

TEST_CASE("gauss-hermite: integrates polynomials exactly") {
  const auto q = gauss_hermite(64);
  const double sqrt_pi = std::sqrt(std::acos(-1.0));
  double s0 = 0, s2 = 0, s4 = 0, s1 = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const double t = q.nodes[i], w = q.weights[i];
    s0 += w;
    s1 += w * t;
    s2 += w * t * t;
    s4 += w * t * t * t * t;
  }
  CHECK(std::abs(s0 - sqrt_pi) < 1e-12);
  CHECK(std::abs(s1) < 1e-12);
  CHECK(std::abs(s2 - sqrt_pi / 2) < 1e-12);
  CHECK(std::abs(s4 - 3 * sqrt_pi / 4) < 1e-11);
}

TEST_CASE("modulation MI: limits") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kQam16}) {
    const auto c = make_constellation(s);
    CHECK(std::abs(modulation_mi(c, 0.0)) < 1e-12);
  }
  CHECK(std::abs(modulation_mi(make_constellation(Scheme::kBpsk), db_to_linear(40)) - 1.0) < 1e-6);
}

TEST_CASE("modulation MI: quadrature matches fine trapezoidal integration") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kPam8})
    for (double db : {0.0, 3.0, 7.0, 13.0}) {
      const auto c = make_constellation(s);
      const double g = db_to_linear(db);
      CHECK(std::abs(modulation_mi(c, g) - double(mi_trapezoid(c, g))) < 1e-6);
    }
}

TEST_CASE("modulation MI: QAM equals twice the per-axis PAM value") {
  // Per axis: power P/2 against noise variance 1/2, so each axis sees gamma.
  const auto qam4 = make_constellation(Scheme::kQam4), bpsk = make_constellation(Scheme::kBpsk);
  const auto qam16 = make_constellation(Scheme::kQam16), pam4 = make_constellation(Scheme::kPam4);
  for (double db : {0.0, 3.0, 7.0, 13.0}) {
    const double g = db_to_linear(db);
    CHECK(std::abs(modulation_mi(qam4, g) - 2 * modulation_mi(bpsk, g)) < 1e-9);
    CHECK(std::abs(modulation_mi(qam16, g) - 2 * modulation_mi(pam4, g)) < 1e-9);
  }
}

TEST_CASE("modulation MI: monotone and bounded") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kPam8, Scheme::kQam4, Scheme::kQam16}) {
    const auto c = make_constellation(s);
    double prev = -1;
    for (double db = -10; db <= 30; db += 1) {
      const double v = modulation_mi(c, db_to_linear(db));
      CHECK(v >= prev - 1e-12);
      CHECK(v <= std::log2(c.order()) + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("modulation MI: BPSK at 3 dB agrees with 1e6-sample Monte Carlo within 3 sigma") {
  const auto c = make_constellation(Scheme::kBpsk);
  Rng rng = make_stream(21, 0);
  const auto mc = modulation_mi_monte_carlo(c, db_to_linear(3), 1000000, rng);
  CHECK(std::abs(mc.value - modulation_mi(c, db_to_linear(3))) < 3 * mc.std_error + 1e-9);
}

TEST_CASE("map SER: closed forms") {
  const auto bpsk = make_constellation(Scheme::kBpsk), pam4 = make_constellation(Scheme::kPam4);
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kPam8, Scheme::kQam4, Scheme::kQam16}) {
    const auto c = make_constellation(s);
    CHECK(std::abs(map_ser(c, 0.0) - (c.order() - 1.0) / c.order()) < 1e-12);
  }
  CHECK(std::abs(map_ser(bpsk, 4.0) - double(oracle::q(2))) < 1e-15);
  CHECK(std::abs(map_ser(bpsk, 4.0) - 0.02275) < 1e-5);
  for (double g : {0.5, 2.0, 20.0})
    CHECK(std::abs(map_ser(pam4, g) - 1.5 * double(oracle::q(std::sqrt(g / 5)))) < 1e-15);
}

TEST_CASE("map SER: PAM4 matches Monte Carlo within 3 sigma; monotone for all schemes") {
  const auto pam4 = make_constellation(Scheme::kPam4);
  Rng rng = make_stream(22, 0);
  const auto mc = map_ser_monte_carlo(pam4, db_to_linear(10), 2000000, rng);
  CHECK(std::abs(mc.value - map_ser(pam4, db_to_linear(10))) < 3 * mc.std_error);
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kPam8, Scheme::kQam4, Scheme::kQam16}) {
    const auto c = make_constellation(s);
    double prev = 2;
    for (double db = -10; db <= 25; db += 1) {
      const double v = map_ser(c, db_to_linear(db));
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("baseline report: perfect relay dominates no relay") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kQam16}) {
    const auto r = baseline_report(make_constellation(s), SnrPair::from_db(3, 5), 1.0);
    CHECK(r.mi_perfect_relay_bits >= r.mi_no_relay_bits);
    CHECK(r.ser_perfect_relay <= r.ser_no_relay);
    CHECK(r.mi_no_relay_bits >= 0);
    CHECK(r.quadrature_order == kDefaultHermiteOrder);
  }
  const auto r = baseline_report(make_constellation(Scheme::kPam4), SnrPair::from_db(13, 13), 1.0);
  CHECK(std::abs(r.mi_no_relay_bits - 1.8685) < 1e-4);
}
