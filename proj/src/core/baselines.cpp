#include "baselines.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace ncf {

double cf_gaussian_rate(const SnrPair& snr, double relay_rate, bool is_complex) {
  const double gd = snr.gamma_dest;
  const double gr = snr.gamma_relay;
  if (gd < 0.0 || gr < 0.0 || relay_rate < 0.0 || std::isnan(relay_rate))
    throw InvalidArgument("cf_gaussian_rate: negative SNR or rate");
  const double scale = is_complex ? 1.0 : 0.5;
  if (relay_rate == 0.0) return scale * std::log2(1.0 + gd);
  const double link = std::expm1(2.0 * relay_rate * std::numbers::ln2);  // 2^{2R} - 1
  const double relay_term = gr / (1.0 + (1.0 + gd + gr) / (link * (gd + 1.0)));
  return scale * std::log2(1.0 + gd + relay_term);
}

Quadrature gauss_hermite(int order) {
  if (order < 1) throw InvalidArgument("quadrature order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(k / 2.0);
    jacobi(k - 1, k) = off;
    jacobi(k, k - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Quadrature q;
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    q.nodes.push_back(eig.eigenvalues()[i]);
    const double v = eig.eigenvectors()(0, i);
    q.weights.push_back(mu0 * v * v);
  }
  return q;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

double modulation_mi(const Constellation& c, double gamma_eff, int order) {
  if (gamma_eff < 0.0) throw InvalidArgument("modulation_mi: gamma must be >= 0");
  const double h = snr_to_gain(gamma_eff, c.power);
  const auto q = gauss_hermite(order);
  const int m = c.order();
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  std::vector<double> expo(m);
  double acc = 0.0;  // E[ ln sum_j exp(...) ] averaged over symbols
  if (!c.is_complex) {
    // n = sqrt(2) t for N(0,1); exponent -( (d+n)^2 - n^2 ) / 2
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < order; ++k) {
        const double n = std::numbers::sqrt2 * q.nodes[k];
        for (int j = 0; j < m; ++j) {
          const double d = h * (c.symbols[i].real() - c.symbols[j].real());
          expo[j] = -(d * d + 2.0 * d * n) / 2.0;
        }
        acc += q.weights[k] * inv_sqrt_pi * log_sum_exp(expo);
      }
    }
  } else {
    // per-component variance 1/2: n = t per axis; exponent -( |d+n|^2 - |n|^2 )
    for (int i = 0; i < m; ++i) {
      for (int a = 0; a < order; ++a) {
        for (int b = 0; b < order; ++b) {
          const std::complex<double> n(q.nodes[a], q.nodes[b]);
          for (int j = 0; j < m; ++j) {
            const std::complex<double> d = h * (c.symbols[i] - c.symbols[j]);
            expo[j] = -(std::norm(d) + 2.0 * (d.real() * n.real() + d.imag() * n.imag()));
          }
          acc += q.weights[a] * q.weights[b] / std::numbers::pi * log_sum_exp(expo);
        }
      }
    }
  }
  acc /= m;
  const double mi = std::log2(static_cast<double>(m)) - acc / std::numbers::ln2;
  return std::clamp(mi, 0.0, std::log2(static_cast<double>(m)));
}

McEstimate modulation_mi_monte_carlo(const Constellation& c, double gamma_eff, long n, Rng& rng) {
  if (n < 2) throw InvalidArgument("monte carlo needs n >= 2");
  const double h = snr_to_gain(gamma_eff, c.power);
  const int m = c.order();
  const double sigma = c.is_complex ? std::sqrt(0.5) : 1.0;
  const double noise_scale = c.is_complex ? 1.0 : 0.5;  // 1 / (2 sigma^2) per real axis
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> expo(m);
  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < n; ++s) {
    const int i = pick(rng);
    std::complex<double> nz(noise(rng), c.is_complex ? noise(rng) : 0.0);
    const std::complex<double> y = h * c.symbols[i] + nz;
    for (int j = 0; j < m; ++j) expo[j] = -noise_scale * std::norm(y - h * c.symbols[j]);
    // log2 p(y|x_i) - log2 mean_j p(y|x_j)
    const double v = (expo[i] - log_sum_exp(expo)) / std::numbers::ln2 + std::log2(static_cast<double>(m));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - mean * mean)) * n / (n - 1);
  return {mean, std::sqrt(var / n)};
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double map_ser(const Constellation& c, double gamma_eff) {
  if (gamma_eff < 0.0) throw InvalidArgument("map_ser: gamma must be >= 0");
  if (!c.is_complex) {
    const double m = c.order();
    return 2.0 * (1.0 - 1.0 / m) * q_function(std::sqrt(3.0 * gamma_eff / (m * m - 1.0)));
  }
  // square QAM: two independent sqrt(M)-PAM axes, each at SNR gamma_eff
  const double m = c.order();
  const double side = std::sqrt(m);
  const double axis = 2.0 * (1.0 - 1.0 / side) * q_function(std::sqrt(3.0 * gamma_eff / (m - 1.0)));
  return 1.0 - (1.0 - axis) * (1.0 - axis);
}

McEstimate map_ser_monte_carlo(const Constellation& c, double gamma_eff, long n, Rng& rng) {
  if (n < 2) throw InvalidArgument("monte carlo needs n >= 2");
  const double h = snr_to_gain(gamma_eff, c.power);
  const int m = c.order();
  const double sigma = c.is_complex ? std::sqrt(0.5) : 1.0;
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::normal_distribution<double> noise(0.0, sigma);
  long errors = 0;
  for (long s = 0; s < n; ++s) {
    const int i = pick(rng);
    std::complex<double> nz(noise(rng), c.is_complex ? noise(rng) : 0.0);
    const std::complex<double> y = h * c.symbols[i] + nz;
    int best = 0;
    double best_d = std::norm(y - h * c.symbols[0]);
    for (int j = 1; j < m; ++j) {
      const double d = std::norm(y - h * c.symbols[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    errors += best != i;
  }
  const double p = static_cast<double>(errors) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

BaselineReport baseline_report(const Constellation& c, const SnrPair& snr, double relay_rate, int order) {
  BaselineReport r;
  r.quadrature_order = order;
  r.cf_gaussian_bits = cf_gaussian_rate(snr, relay_rate, c.is_complex);
  r.mi_no_relay_bits = modulation_mi(c, snr.gamma_dest, order);
  r.mi_perfect_relay_bits = modulation_mi(c, snr.gamma_dest + snr.gamma_relay, order);
  r.ser_no_relay = map_ser(c, snr.gamma_dest);
  r.ser_perfect_relay = map_ser(c, snr.gamma_dest + snr.gamma_relay);
  return r;
}

}  // namespace ncf
