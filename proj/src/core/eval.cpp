#include "eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace ncf {

namespace {

constexpr long kChunk = 16384;

double sample_stderr(double sum, double sum_sq, long n) {
  if (n < 2) return 0.0;
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1);
  return std::sqrt(var / n);
}

}  // namespace

EvalReport evaluate(const Model& m, const SnrPair& snr, long n, Rng& rng) {
  if (n < 1) throw InvalidArgument("evaluate: n must be >= 1");
  EvalReport r;
  r.snr = snr;
  r.n_samples = n;
  r.index_counts.assign(m.branches(), std::vector<long>(m.codebook_size(), 0));
  double rate_sum = 0.0, rate_sq = 0.0, d_sum = 0.0, d_sq = 0.0;
  long errors = 0;
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  for (long done = 0; done < n;) {
    const int chunk = static_cast<int>(std::min(kChunk, n - done));
    const ChannelBatch b = sample_batch(m.constellation, snr, chunk, rng);
    const auto u = encode_hard(m, b.y_relay);
    const nn::Vector lq = entropy_model_logprob(m, u, &b.y_dest);
    const nn::Matrix log_p = nn::log_softmax_cols(demod_logits(m, b.y_dest, one_hot(m, u)));
    for (int i = 0; i < chunk; ++i) {
      const double rate = -lq[i];
      const double d = -log_p(b.w[i], i) * inv_ln2;
      rate_sum += rate;
      rate_sq += rate * rate;
      d_sum += d;
      d_sq += d * d;
      const int decided = nn::argmax(std::span<const double>(log_p.col(i).data(), log_p.rows()));
      errors += decided != b.w[i];
      for (int br = 0; br < m.branches(); ++br) ++r.index_counts[br][u[br][i]];
    }
    done += chunk;
  }
  r.rate_bits = rate_sum / n;
  r.rate_stderr = sample_stderr(rate_sum, rate_sq, n);
  r.mi_bits = std::log2(static_cast<double>(m.order())) - d_sum / n;
  r.mi_stderr = sample_stderr(d_sum, d_sq, n);
  r.ser = static_cast<double>(errors) / n;
  r.ser_stderr = std::sqrt(r.ser * (1.0 - r.ser) / n);
  for (const auto& counts : r.index_counts)
    for (long c : counts)
      if (c > 0) {
        const double p = static_cast<double>(c) / n;
        r.index_entropy_bits -= p * std::log2(p);
      }
  return r;
}

// ---------------------------------------------------------------------------

void run_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  if (count == 0) return;
  const std::size_t threads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<SweepRow> sweep_lambda(const TrainConfig& base, const std::vector<double>& lambdas,
                                   const std::vector<std::uint64_t>& seeds, const SweepOptions& opts,
                                   const SweepProgress& progress) {
  if (lambdas.empty()) throw InvalidArgument("sweep: lambda list is empty");
  if (seeds.empty()) throw InvalidArgument("sweep: seed list is empty");
  SnrPair eval_snr;
  if (opts.eval_snr) {
    eval_snr = *opts.eval_snr;
  } else if (base.snr.kind == SnrPolicy::Kind::kFixed) {
    eval_snr = SnrPair::from_db(base.snr.dest_db, base.snr.relay_db);
  } else {
    throw InvalidArgument("sweep: evaluation SNR required for a non-fixed training SNR policy");
  }

  std::vector<SweepRow> rows(lambdas.size() * seeds.size());
  std::mutex progress_mutex;
  run_parallel(rows.size(), opts.workers, [&](std::size_t job) {
    const double lambda = lambdas[job / seeds.size()];
    const std::uint64_t seed = seeds[job % seeds.size()];
    TrainConfig cfg = base;
    cfg.lambda = lambda;
    cfg.seed = seed;
    try {
      TrainResult tr = train(cfg);
      Rng eval_rng = make_stream(opts.eval_seed, 0);
      SweepRow row;
      row.lambda = lambda;
      row.seed = seed;
      row.report = evaluate(tr.model, eval_snr, opts.eval_samples, eval_rng);
      row.model = std::move(tr.model);
      row.history = std::move(tr.history);
      rows[job] = std::move(row);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "sweep job lambda=" << lambda << " seed=" << seed << " failed: " << e.what();
      throw Error(e.code(), os.str());
    }
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(rows[job]);
    }
  });

  if (opts.best_of_seeds && seeds.size() > 1) {
    std::vector<SweepRow> best;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      std::size_t pick = l * seeds.size();
      for (std::size_t s = 1; s < seeds.size(); ++s) {
        const auto& cand = rows[l * seeds.size() + s];
        if (cand.report.mi_bits > rows[pick].report.mi_bits) pick = l * seeds.size() + s;
      }
      best.push_back(std::move(rows[pick]));
    }
    rows = std::move(best);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.report.rate_bits != b.report.rate_bits) return a.report.rate_bits < b.report.rate_bits;
    return a.lambda < b.lambda;
  });
  return rows;
}

// ---------------------------------------------------------------------------

int GridAxis::cell_of(double y) const {
  const double pos = (y - lo) / cell_width();
  if (!(pos > 0.0)) return 0;
  return std::min(resolution - 1, static_cast<int>(pos));
}

int Labels1D::indices_with_multiple_regions() const {
  return static_cast<int>(std::count_if(region_counts.begin(), region_counts.end(), [](int c) { return c >= 2; }));
}

int Labels2D::indices_with_multiple_regions() const {
  return static_cast<int>(std::count_if(region_counts.begin(), region_counts.end(), [](int c) { return c >= 2; }));
}

Labels1D summarize_labels(const GridAxis& axis, std::vector<int> labels, int label_count) {
  Labels1D out;
  out.axis = axis;
  out.intervals.assign(label_count, {});
  out.region_counts.assign(label_count, 0);
  struct Run {
    int label, start, end;  // [start, end)
  };
  std::vector<Run> runs;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (runs.empty() || runs.back().label != labels[i]) runs.push_back({labels[i], i, i + 1});
    else runs.back().end = i + 1;
  }
  const double w = axis.cell_width();
  for (const auto& r : runs) out.intervals[r.label].push_back({axis.lo + r.start * w, axis.lo + r.end * w});

  int prev = -1;
  for (const auto& r : runs) {
    if (r.end - r.start < kMinRegionCells) continue;
    if (r.label != prev) ++out.region_counts[r.label];
    prev = r.label;
  }
  out.labels = std::move(labels);
  return out;
}

Labels2D summarize_labels_2d(const GridAxis& axis, std::vector<int> labels, int label_count) {
  Labels2D out;
  out.axis = axis;
  out.region_counts.assign(label_count, 0);
  const int res = axis.resolution;
  std::vector<char> seen(labels.size(), 0);
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
    if (seen[start]) continue;
    const int label = labels[start];
    int size = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      ++size;
      const int i = cell % res, q = cell / res;
      const int nbr[4][2] = {{i - 1, q}, {i + 1, q}, {i, q - 1}, {i, q + 1}};
      for (const auto& nb : nbr) {
        if (nb[0] < 0 || nb[0] >= res || nb[1] < 0 || nb[1] >= res) continue;
        const int idx = nb[1] * res + nb[0];
        if (!seen[idx] && labels[idx] == label) {
          seen[idx] = 1;
          stack.push_back(idx);
        }
      }
    }
    if (size >= kMinRegionCells * kMinRegionCells) ++out.region_counts[label];
  }
  out.labels = std::move(labels);
  return out;
}

int BoundaryMap::binned_indices() const {
  int n = 0;
  for (const auto& a : axes) n += a.indices_with_multiple_regions();
  if (plane) n += plane->indices_with_multiple_regions();
  return n;
}

GridAxis default_axis(const Constellation& c, double gamma, int resolution) {
  const double sigma = c.is_complex ? std::sqrt(0.5) : 1.0;
  const double half = snr_to_gain(gamma, c.power) * c.max_magnitude() + 4.0 * sigma;
  return {-half, half, resolution};
}

namespace {

nn::Matrix grid_points_1d(const GridAxis& a) {
  nn::Matrix pts(1, a.resolution);
  for (int i = 0; i < a.resolution; ++i) pts(0, i) = a.center(i);
  return pts;
}

// Points of the square grid, column index = q * res + i.
nn::Matrix grid_points_2d(const GridAxis& a) {
  const int res = a.resolution;
  nn::Matrix pts(2, static_cast<Eigen::Index>(res) * res);
  for (int q = 0; q < res; ++q)
    for (int i = 0; i < res; ++i) {
      pts(0, static_cast<Eigen::Index>(q) * res + i) = a.center(i);
      pts(1, static_cast<Eigen::Index>(q) * res + i) = a.center(q);
    }
  return pts;
}

std::vector<int> argmax_cols(const nn::Matrix& logits) {
  std::vector<int> out(logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c)
    out[c] = nn::argmax(std::span<const double>(logits.col(c).data(), logits.rows()));
  return out;
}

void check_axis(const GridAxis& a) {
  if (!(a.hi > a.lo) || a.resolution < 1) throw InvalidArgument("grid range must be nonempty");
}

std::vector<int> decisions_for(const Model& m, const std::vector<int>& u, const nn::Matrix& y_dest) {
  if (static_cast<int>(u.size()) != m.branches()) throw InvalidArgument("need one relay index per branch");
  std::vector<std::vector<int>> uu;
  for (int b : u) {
    if (b < 0 || b >= m.codebook_size()) throw InvalidArgument("relay index out of range");
    uu.emplace_back(y_dest.cols(), b);
  }
  return argmax_cols(demod_logits(m, y_dest, one_hot(m, uu)));
}

}  // namespace

BoundaryMap extract_quantization_boundaries(const Model& m, const GridAxis& axis) {
  check_axis(axis);
  BoundaryMap map;
  const int k = m.codebook_size();
  if (!m.constellation.is_complex) {
    map.axes.push_back(summarize_labels(axis, argmax_cols(nn::forward_batch(m.encoders[0], grid_points_1d(axis))), k));
  } else if (m.arch.iq_mode == IqMode::kSplit) {
    for (int b = 0; b < 2; ++b)
      map.axes.push_back(
          summarize_labels(axis, argmax_cols(nn::forward_batch(m.encoders[b], grid_points_1d(axis))), k));
  } else {
    map.plane = summarize_labels_2d(axis, argmax_cols(nn::forward_batch(m.encoders[0], grid_points_2d(axis))), k);
  }
  return map;
}

DecisionRegions extract_decision_regions(const Model& m, const std::vector<int>& u, const GridAxis& axis) {
  check_axis(axis);
  DecisionRegions d;
  d.u = u;
  if (!m.constellation.is_complex) {
    d.line = summarize_labels(axis, decisions_for(m, u, grid_points_1d(axis)), m.order());
    const auto& lab = d.line->labels;
    for (int i = 1; i < axis.resolution; ++i)
      if (lab[i] != lab[i - 1]) d.thresholds.push_back({axis.lo + i * axis.cell_width(), lab[i - 1], lab[i]});
  } else {
    d.plane = summarize_labels_2d(axis, decisions_for(m, u, grid_points_2d(axis)), m.order());
  }
  return d;
}

// ---------------------------------------------------------------------------

int LookupTable::relay_code(const std::complex<double>& y) const {
  const int res = relay_axis.resolution;
  if (!complex) return relay_index[relay_axis.cell_of(y.real())];
  if (iq_mode == IqMode::kSplit)
    return relay_index[relay_axis.cell_of(y.real())] * codebook_size + relay_index[res + relay_axis.cell_of(y.imag())];
  return relay_index[static_cast<std::size_t>(relay_axis.cell_of(y.imag())) * res + relay_axis.cell_of(y.real())];
}

int LookupTable::decide(int code, const std::complex<double>& y) const {
  const auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code) return -1;
  const auto& dec = decisions[it - codes.begin()];
  if (!complex) return dec[dest_axis.cell_of(y.real())];
  return dec[static_cast<std::size_t>(dest_axis.cell_of(y.imag())) * dest_axis.resolution +
             dest_axis.cell_of(y.real())];
}

LookupTable export_lookup_table(const Model& m, const GridAxis& relay_axis, const GridAxis& dest_axis) {
  check_axis(relay_axis);
  check_axis(dest_axis);
  LookupTable t;
  t.scheme = m.constellation.scheme;
  t.iq_mode = m.arch.iq_mode;
  t.codebook_size = m.codebook_size();
  t.order = m.order();
  t.relay_axis = relay_axis;
  t.dest_axis = dest_axis;
  t.complex = m.constellation.is_complex;
  const int k = m.codebook_size();

  std::set<int> codes;
  if (!t.complex) {
    t.relay_index = argmax_cols(nn::forward_batch(m.encoders[0], grid_points_1d(relay_axis)));
    codes.insert(t.relay_index.begin(), t.relay_index.end());
  } else if (t.iq_mode == IqMode::kSplit) {
    const auto a = argmax_cols(nn::forward_batch(m.encoders[0], grid_points_1d(relay_axis)));
    const auto b = argmax_cols(nn::forward_batch(m.encoders[1], grid_points_1d(relay_axis)));
    t.relay_index = a;
    t.relay_index.insert(t.relay_index.end(), b.begin(), b.end());
    const std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    for (int x : sa)
      for (int y : sb) codes.insert(x * k + y);
  } else {
    t.relay_index = argmax_cols(nn::forward_batch(m.encoders[0], grid_points_2d(relay_axis)));
    codes.insert(t.relay_index.begin(), t.relay_index.end());
  }
  t.codes.assign(codes.begin(), codes.end());

  const nn::Matrix pts = t.complex ? grid_points_2d(dest_axis) : grid_points_1d(dest_axis);
  for (int code : t.codes) {
    const std::vector<int> u = m.branches() == 2 ? std::vector<int>{code / k, code % k} : std::vector<int>{code};
    std::vector<std::vector<int>> uu;
    for (int b : u) uu.emplace_back(pts.cols(), b);
    const nn::Matrix post = nn::softmax_cols(demod_logits(m, pts, one_hot(m, uu)));
    std::vector<int> dec(pts.cols());
    std::vector<std::vector<double>> p(pts.cols());
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      dec[c] = nn::argmax(std::span<const double>(post.col(c).data(), post.rows()));
      p[c].assign(post.col(c).data(), post.col(c).data() + post.rows());
    }
    t.decisions.push_back(std::move(dec));
    t.posteriors.push_back(std::move(p));
  }
  return t;
}

TableFidelity compare_table_to_network(const Model& m, const LookupTable& t, const SnrPair& snr, long n, Rng& rng) {
  if (n < 1) throw InvalidArgument("table comparison needs n >= 1");
  TableFidelity f;
  f.n_samples = n;
  long table_err = 0, net_err = 0, differ = 0;
  const auto to_complex = [&](const nn::Matrix& y, int i) {
    return m.constellation.is_complex ? std::complex<double>(y(0, i), y(1, i)) : std::complex<double>(y(0, i), 0.0);
  };
  for (long done = 0; done < n;) {
    const int chunk = static_cast<int>(std::min(kChunk, n - done));
    const ChannelBatch b = sample_batch(m.constellation, snr, chunk, rng);
    const auto u = encode_hard(m, b.y_relay);
    const nn::Matrix logits = demod_logits(m, b.y_dest, one_hot(m, u));
    for (int i = 0; i < chunk; ++i) {
      const int net = nn::argmax(std::span<const double>(logits.col(i).data(), logits.rows()));
      const int tab = t.decide(t.relay_code(to_complex(b.y_relay, i)), to_complex(b.y_dest, i));
      net_err += net != b.w[i];
      table_err += tab != b.w[i];
      differ += tab != net;
    }
    done += chunk;
  }
  f.table_ser = static_cast<double>(table_err) / n;
  f.network_ser = static_cast<double>(net_err) / n;
  f.disagreement = static_cast<double>(differ) / n;
  return f;
}

}  // namespace ncf
