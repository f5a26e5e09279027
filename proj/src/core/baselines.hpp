#pragma once

// Reference curves: Gaussian-input compress-and-forward rate, constellation
// mutual information over AWGN, and minimum-distance symbol error rates.
// All rates in bits.

#include <vector>

#include "channel.hpp"
#include "rng.hpp"

namespace ncf {

inline constexpr int kDefaultHermiteOrder = 64;

// CF rate with Gaussian input for relay link rate R bits/use. The complex
// channel variant drops the leading 1/2. R = 0 returns the no-relay limit.
double cf_gaussian_rate(const SnrPair& snr, double relay_rate, bool is_complex);

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight function exp(-t^2)
};
// Gauss-Hermite rule via the Golub-Welsch eigenproblem.
Quadrature gauss_hermite(int order);

// I(X;Y) for Y = h X + N, equiprobable X, with gamma_eff = h^2 P.
double modulation_mi(const Constellation& c, double gamma_eff, int order = kDefaultHermiteOrder);
// Sample-average estimate of the same quantity.
struct McEstimate {
  double value;
  double std_error;
};
McEstimate modulation_mi_monte_carlo(const Constellation& c, double gamma_eff, long n, Rng& rng);

// SER of minimum-distance detection, closed form (Q-function).
double map_ser(const Constellation& c, double gamma_eff);
McEstimate map_ser_monte_carlo(const Constellation& c, double gamma_eff, long n, Rng& rng);

double q_function(double x);

struct BaselineReport {
  double cf_gaussian_bits = 0.0;
  double mi_no_relay_bits = 0.0;
  double mi_perfect_relay_bits = 0.0;
  double ser_no_relay = 0.0;
  double ser_perfect_relay = 0.0;
  int quadrature_order = kDefaultHermiteOrder;
};

BaselineReport baseline_report(const Constellation& c, const SnrPair& snr, double relay_rate,
                               int order = kDefaultHermiteOrder);

}  // namespace ncf
