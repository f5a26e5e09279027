#include "channel.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace ncf {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kBpsk: return "BPSK";
    case Scheme::kPam4: return "PAM4";
    case Scheme::kPam8: return "PAM8";
    case Scheme::kQam4: return "QAM4";
    case Scheme::kQam16: return "QAM16";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char ch) { return std::toupper(ch); });
  std::erase(up, '-');
  if (up == "BPSK" || up == "PAM2") return Scheme::kBpsk;
  if (up == "PAM4" || up == "4PAM") return Scheme::kPam4;
  if (up == "PAM8" || up == "8PAM") return Scheme::kPam8;
  if (up == "QAM4" || up == "4QAM" || up == "QPSK") return Scheme::kQam4;
  if (up == "QAM16" || up == "16QAM") return Scheme::kQam16;
  throw InvalidArgument("unknown modulation scheme '" + std::string(name) + "'");
}

double Constellation::max_magnitude() const {
  double m = 0.0;
  for (const auto& s : symbols) m = std::max(m, std::abs(s));
  return m;
}

namespace {

// Odd integer levels -(L-1), ..., -1, 1, ..., L-1.
std::vector<double> odd_levels(int count) {
  std::vector<double> v;
  for (int i = 0; i < count; ++i) v.push_back(2.0 * i - (count - 1));
  return v;
}

}  // namespace

Constellation make_constellation(Scheme scheme, double power) {
  if (!(power > 0.0) || !std::isfinite(power)) throw InvalidArgument("constellation power must be > 0");
  Constellation c;
  c.scheme = scheme;
  c.power = power;
  switch (scheme) {
    case Scheme::kBpsk:
    case Scheme::kPam4:
    case Scheme::kPam8: {
      const int m = scheme == Scheme::kBpsk ? 2 : scheme == Scheme::kPam4 ? 4 : 8;
      for (double l : odd_levels(m)) c.symbols.emplace_back(l, 0.0);
      break;
    }
    case Scheme::kQam4:
    case Scheme::kQam16: {
      const int side = scheme == Scheme::kQam4 ? 2 : 4;
      const auto lv = odd_levels(side);
      for (double i : lv)
        for (double q : lv) c.symbols.emplace_back(i, q);
      c.is_complex = true;
      break;
    }
  }
  double mean_sq = 0.0;
  for (const auto& s : c.symbols) mean_sq += std::norm(s);
  mean_sq /= static_cast<double>(c.symbols.size());
  const double a = std::sqrt(power / mean_sq);
  for (auto& s : c.symbols) s *= a;
  return c;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double snr_to_gain(double gamma, double power) {
  if (gamma < 0.0 || !(power > 0.0)) throw InvalidArgument("snr_to_gain: need gamma >= 0 and P > 0");
  return std::sqrt(gamma / power);
}

SnrPair SnrPair::from_db(double dest_db, double relay_db) {
  return {db_to_linear(dest_db), db_to_linear(relay_db)};
}

std::vector<ChannelDraw> ChannelBatch::draws(const Constellation& c) const {
  std::vector<ChannelDraw> out;
  out.reserve(w.size());
  for (int i = 0; i < size(); ++i) {
    ChannelDraw d;
    d.w = w[i];
    d.x = c.symbols[w[i]];
    if (c.is_complex) {
      d.y_relay = {y_relay(0, i), y_relay(1, i)};
      d.y_dest = {y_dest(0, i), y_dest(1, i)};
    } else {
      d.y_relay = {y_relay(0, i), 0.0};
      d.y_dest = {y_dest(0, i), 0.0};
    }
    out.push_back(d);
  }
  return out;
}

ChannelBatch sample_batch(const Constellation& c, const SnrPair& snr, int n, Rng& rng) {
  if (n < 1) throw InvalidArgument("sample_batch: n must be >= 1");
  if (snr.gamma_dest < 0.0 || snr.gamma_relay < 0.0) throw InvalidArgument("SNR must be >= 0");
  const double h_r = snr_to_gain(snr.gamma_relay, c.power);
  const double h_d = snr_to_gain(snr.gamma_dest, c.power);
  const int dim = c.feature_dim();
  const double sigma = c.is_complex ? std::sqrt(0.5) : 1.0;
  std::uniform_int_distribution<int> pick(0, c.order() - 1);
  std::normal_distribution<double> noise(0.0, sigma);

  ChannelBatch b;
  b.snr = snr;
  b.w.resize(n);
  b.y_relay.resize(dim, n);
  b.y_dest.resize(dim, n);
  for (int i = 0; i < n; ++i) {
    const int w = pick(rng);
    const auto x = c.symbols[w];
    b.w[i] = w;
    b.y_relay(0, i) = h_r * x.real() + noise(rng);
    if (dim == 2) b.y_relay(1, i) = h_r * x.imag() + noise(rng);
    b.y_dest(0, i) = h_d * x.real() + noise(rng);
    if (dim == 2) b.y_dest(1, i) = h_d * x.imag() + noise(rng);
  }
  return b;
}

}  // namespace ncf
