#pragma once

// Test-time estimators, lambda sweeps and interpretability extraction
// (quantization boundaries, decision regions, deployable lookup tables).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "models.hpp"
#include "training.hpp"

namespace ncf {

inline constexpr long kDefaultEvalSamples = 1000000;

// The MI figure is the pessimistic bound log2|X| - D.
struct EvalReport {
  double rate_bits = 0.0;
  double rate_stderr = 0.0;
  double mi_bits = 0.0;
  double mi_stderr = 0.0;
  double ser = 0.0;
  double ser_stderr = 0.0;
  long n_samples = 0;
  SnrPair snr;
  // Plug-in entropy of the hard relay indices, summed over branches.
  double index_entropy_bits = 0.0;
  std::vector<std::vector<long>> index_counts;  // [branch][k]
};

// Hard encoding, Monte Carlo over n fresh channel draws.
EvalReport evaluate(const Model& m, const SnrPair& snr, long n, Rng& rng);

// -- lambda sweeps -----------------------------------------------------------

struct SweepOptions {
  long eval_samples = kDefaultEvalSamples;
  std::uint64_t eval_seed = 1;
  std::optional<SnrPair> eval_snr;  // default: the fixed training SNR
  int workers = 1;
  bool best_of_seeds = false;       // keep only the highest-MI seed per lambda
};

struct SweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  EvalReport report;
  Model model;
  TrainHistory history;
};

using SweepProgress = std::function<void(const SweepRow&)>;

// One model per (lambda, seed); rows sorted by evaluated rate. A failed job
// rethrows with its (lambda, seed) identity.
std::vector<SweepRow> sweep_lambda(const TrainConfig& base, const std::vector<double>& lambdas,
                                   const std::vector<std::uint64_t>& seeds, const SweepOptions& opts,
                                   const SweepProgress& progress = {});

// Runs jobs[i]() for every i on `workers` threads; results land at index i.
void run_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& job);

// -- boundaries and decision regions -----------------------------------------

struct GridAxis {
  double lo = -1.0;
  double hi = 1.0;
  int resolution = 1000;

  double cell_width() const { return (hi - lo) / resolution; }
  double center(int i) const { return lo + (i + 0.5) * cell_width(); }
  // Nearest cell; values outside the range map to the edge cell.
  int cell_of(double y) const;
};

inline constexpr int kMinRegionCells = 3;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Labels over a 1-D grid, merged into runs.
struct Labels1D {
  GridAxis axis;
  std::vector<int> labels;                      // one per cell
  std::vector<std::vector<Interval>> intervals;  // per label value, sorted, disjoint
  std::vector<int> region_counts;                // per label, runs shorter than kMinRegionCells ignored
  int indices_with_multiple_regions() const;
};

// Labels over a square 2-D grid (I along columns, Q along rows), row-major.
struct Labels2D {
  GridAxis axis;
  std::vector<int> labels;  // labels[q * res + i]
  std::vector<int> region_counts;  // 4-connected components of >= kMinRegionCells^2 cells
  int label_at(int i, int q) const { return labels[static_cast<std::size_t>(q) * axis.resolution + i]; }
  int indices_with_multiple_regions() const;
};

Labels1D summarize_labels(const GridAxis& axis, std::vector<int> labels, int label_count);
Labels2D summarize_labels_2d(const GridAxis& axis, std::vector<int> labels, int label_count);

// Real schemes: axes = {y_R}. Split I/Q: axes = {Re y_R, Im y_R}, one per
// branch. Joint complex: plane over y_R.
struct BoundaryMap {
  std::vector<Labels1D> axes;
  std::optional<Labels2D> plane;
  int binned_indices() const;
};

// Symmetric range +-(h * max|x| + 4 sigma) with sigma the per-component noise std.
GridAxis default_axis(const Constellation& c, double gamma, int resolution);

BoundaryMap extract_quantization_boundaries(const Model& m, const GridAxis& axis);

struct Threshold {
  double position = 0.0;
  int left = 0;
  int right = 0;
};

struct DecisionRegions {
  std::vector<int> u;                   // relay index per branch
  std::optional<Labels1D> line;         // real schemes
  std::vector<Threshold> thresholds;    // real schemes
  std::optional<Labels2D> plane;        // complex schemes
};

DecisionRegions extract_decision_regions(const Model& m, const std::vector<int>& u, const GridAxis& axis);

// -- lookup tables -----------------------------------------------------------

// Relay and destination behaviour sampled on grids. The destination part is
// stored for every relay code that appears in the relay table; the code of a
// split model is u0 * K + u1.
struct LookupTable {
  Scheme scheme = Scheme::kBpsk;
  IqMode iq_mode = IqMode::kJoint;
  int codebook_size = 0;
  int order = 0;
  GridAxis relay_axis;
  GridAxis dest_axis;
  bool complex = false;
  // Real: relay_index[cell]. Split: relay_index[branch * res + cell].
  // Joint complex: relay_index[q * res + i].
  std::vector<int> relay_index;
  std::vector<int> codes;  // sorted relay codes with a destination table
  // decisions[code slot][cell] (real) or [code slot][q * res + i] (complex)
  std::vector<std::vector<int>> decisions;
  std::vector<std::vector<std::vector<double>>> posteriors;  // [slot][cell][|X|]

  int relay_code(const std::complex<double>& y_relay) const;
  // -1 when the code has no destination table.
  int decide(int code, const std::complex<double>& y_dest) const;
};

LookupTable export_lookup_table(const Model& m, const GridAxis& relay_axis, const GridAxis& dest_axis);

struct TableFidelity {
  double table_ser = 0.0;
  double network_ser = 0.0;
  // Fraction of draws where table and network decisions differ; bounds |table_ser - network_ser|.
  double disagreement = 0.0;
  long n_samples = 0;
};

TableFidelity compare_table_to_network(const Model& m, const LookupTable& t, const SnrPair& snr, long n, Rng& rng);

}  // namespace ncf
