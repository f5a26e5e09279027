#pragma once

// Constellations and Monte Carlo draws from the Gaussian primitive relay channel
//   y_R = h_R x + n_R,   y_D = h_D x + n_D
// with real gains h >= 0 and unit-variance noise (CN(0,1) for complex schemes,
// i.e. 0.5 per component).

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "nnkit.hpp"
#include "rng.hpp"

namespace ncf {

enum class Scheme { kBpsk, kPam4, kPam8, kQam4, kQam16 };

std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);

// Index order: ascending amplitude for PAM; row-major over (I level, Q level)
// for QAM, levels ascending, so index = i_I * L + i_Q.
struct Constellation {
  Scheme scheme = Scheme::kBpsk;
  std::vector<std::complex<double>> symbols;
  double power = 1.0;
  bool is_complex = false;

  int order() const { return static_cast<int>(symbols.size()); }
  // Features per observation fed to networks: 1 (real) or 2 (I, Q).
  int feature_dim() const { return is_complex ? 2 : 1; }
  double max_magnitude() const;
};

Constellation make_constellation(Scheme scheme, double power = 1.0);

double db_to_linear(double db);
double linear_to_db(double linear);
double snr_to_gain(double gamma, double power);

struct SnrPair {
  double gamma_dest = 0.0;   // linear
  double gamma_relay = 0.0;  // linear

  static SnrPair from_db(double dest_db, double relay_db);
};

struct ChannelDraw {
  int w = 0;
  std::complex<double> x;
  std::complex<double> y_relay;
  std::complex<double> y_dest;
};

// Struct-of-arrays batch; observations laid out as network features
// (feature_dim x n), one column per draw.
struct ChannelBatch {
  std::vector<int> w;
  nn::Matrix y_relay;
  nn::Matrix y_dest;
  SnrPair snr;

  int size() const { return static_cast<int>(w.size()); }
  std::vector<ChannelDraw> draws(const Constellation& c) const;
};

ChannelBatch sample_batch(const Constellation& c, const SnrPair& snr, int n, Rng& rng);

}  // namespace ncf
