#include <doctest.h>

#include <cmath>

#include "channel.hpp"
#include "error.hpp"

using namespace ncf;

TEST_CASE("constellation: PAM4 at unit power") {
  const auto c = make_constellation(Scheme::kPam4, 1.0);
  const double a = 1 / std::sqrt(5.0);
  REQUIRE(c.order() == 4);
  CHECK(std::abs(c.symbols[0].real() + 3 * a) < 1e-15);
  CHECK(std::abs(c.symbols[1].real() + a) < 1e-15);
  CHECK(std::abs(c.symbols[2].real() - a) < 1e-15);
  CHECK(std::abs(c.symbols[3].real() - 3 * a) < 1e-15);
  CHECK(!c.is_complex);
}

TEST_CASE("constellation: BPSK is {-1, +1}") {
  const auto c = make_constellation(Scheme::kBpsk);
  REQUIRE(c.order() == 2);
  CHECK(c.symbols[0] == std::complex<double>(-1, 0));
  CHECK(c.symbols[1] == std::complex<double>(1, 0));
}

TEST_CASE("constellation: QAM16 levels and row-major order") {
  const auto c = make_constellation(Scheme::kQam16, 1.0);
  const double a = 1 / std::sqrt(10.0);
  REQUIRE(c.order() == 16);
  CHECK(c.is_complex);
  CHECK(std::abs(c.symbols[0].real() + 3 * a) < 1e-15);
  CHECK(std::abs(c.symbols[0].imag() + 3 * a) < 1e-15);
  CHECK(std::abs(c.symbols[1].real() + 3 * a) < 1e-15);
  CHECK(std::abs(c.symbols[1].imag() + a) < 1e-15);
  CHECK(std::abs(c.symbols[4].real() + a) < 1e-15);
}

TEST_CASE("constellation: every scheme meets power, order and distinctness") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kPam4, Scheme::kPam8, Scheme::kQam4, Scheme::kQam16})
    for (double p : {0.5, 1.0, 3.0}) {
      const auto c = make_constellation(s, p);
      double e = 0;
      for (auto x : c.symbols) e += std::norm(x);
      CHECK(std::abs(e / c.order() - p) < 1e-12);
      for (int i = 0; i < c.order(); ++i) {
        if (!c.is_complex) CHECK(c.symbols[i].imag() == 0.0);
        for (int j = i + 1; j < c.order(); ++j) CHECK(c.symbols[i] != c.symbols[j]);
      }
    }
}

TEST_CASE("constellation: bad inputs are rejected") {
  CHECK_THROWS_AS(make_constellation(Scheme::kBpsk, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_constellation(Scheme::kBpsk, -1.0), InvalidArgument);
  CHECK_THROWS_AS(parse_scheme("pam5"), InvalidArgument);
  CHECK(parse_scheme(scheme_name(Scheme::kQam16)) == Scheme::kQam16);
}

TEST_CASE("snr: gains and dB round trip") {
  CHECK(snr_to_gain(0.0, 1.0) == 0.0);
  CHECK(snr_to_gain(1.0, 1.0) == 1.0);
  CHECK(std::abs(snr_to_gain(db_to_linear(13), 1.0) - std::sqrt(std::pow(10.0, 1.3))) < 1e-12);
  CHECK(std::abs(snr_to_gain(db_to_linear(13), 1.0) - 4.4668) < 1e-4);
  for (double db = -20; db <= 40; db += 0.37) CHECK(std::abs(linear_to_db(db_to_linear(db)) - db) < 1e-12);
}

TEST_CASE("sample: zero SNR gives unit-variance noise") {
  for (Scheme s : {Scheme::kBpsk, Scheme::kQam4}) {
    const auto c = make_constellation(s);
    Rng rng = make_stream(1, 0);
    const auto b = sample_batch(c, SnrPair::from_db(-1000, -1000), 1000000, rng);
    for (const auto* y : {&b.y_relay, &b.y_dest}) {
      const double var = y->array().square().sum() / b.size();
      CHECK(std::abs(var - 1.0) < 0.01);
      if (c.is_complex) CHECK(std::abs(y->row(0).array().square().mean() - 0.5) < 0.01);
    }
  }
}

TEST_CASE("sample: BPSK at 60 dB recovers every sign") {
  const auto c = make_constellation(Scheme::kBpsk);
  Rng rng = make_stream(2, 0);
  const auto b = sample_batch(c, SnrPair::from_db(60, 60), 1000000, rng);
  long errors = 0;
  for (int i = 0; i < b.size(); ++i) errors += (b.y_dest(0, i) > 0) != (b.w[i] == 1);
  CHECK(errors == 0);
}

TEST_CASE("sample: PAM4 at 13 dB has E[y_D^2] = gamma + 1 within 1%") {
  const auto c = make_constellation(Scheme::kPam4);
  Rng rng = make_stream(3, 0);
  const auto snr = SnrPair::from_db(13, 13);
  const auto b = sample_batch(c, snr, 1000000, rng);
  const double m2 = b.y_dest.array().square().mean();
  CHECK(std::abs(m2 / (snr.gamma_dest + 1) - 1) < 0.01);
}

TEST_CASE("sample: uniform symbols, independent noises, draws consistent") {
  const auto c = make_constellation(Scheme::kQam16);
  Rng rng = make_stream(4, 0);
  const auto snr = SnrPair::from_db(5, 9);
  const int n = 1000000;
  const auto b = sample_batch(c, snr, n, rng);
  std::vector<long> counts(16, 0);
  for (int w : b.w) ++counts[w];
  const double p = 1.0 / 16, sd = std::sqrt(n * p * (1 - p));
  for (long k : counts) CHECK(std::abs(k - n * p) < 3 * sd);

  const auto draws = b.draws(c);
  const double hr = snr_to_gain(snr.gamma_relay, c.power), hd = snr_to_gain(snr.gamma_dest, c.power);
  double sxy = 0, sxx = 0, syy = 0, power = 0;
  long mismatched = 0;
  for (const auto& d : draws) {
    mismatched += d.x != c.symbols[d.w];
    const auto nr = d.y_relay - hr * d.x, nd = d.y_dest - hd * d.x;
    sxy += nr.real() * nd.real();
    sxx += nr.real() * nr.real();
    syy += nd.real() * nd.real();
    power += std::norm(d.x);
  }
  CHECK(mismatched == 0);
  const double corr = sxy / std::sqrt(sxx * syy);
  CHECK(std::abs(corr) < 3 / std::sqrt(double(n)));
  CHECK(std::abs(power / n - 1.0) < 0.01);
}

TEST_CASE("sample: fixed stream reproduces the batch") {
  const auto c = make_constellation(Scheme::kPam8);
  Rng a = make_stream(5, 2), b = make_stream(5, 2);
  const auto x = sample_batch(c, SnrPair::from_db(3, 3), 1000, a);
  const auto y = sample_batch(c, SnrPair::from_db(3, 3), 1000, b);
  CHECK(x.w == y.w);
  CHECK(x.y_relay == y.y_relay);
  CHECK(x.y_dest == y.y_dest);
}
