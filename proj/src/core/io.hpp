#pragma once

// Text formats: JSON training configs, CSV tables and SVG plots.
//
// Every CSV starts with one "# schema: <name> v<version>" comment line, may
// carry further "# key: value" comment lines, then a header row.

#include <string>
#include <vector>

#include "baselines.hpp"
#include "eval.hpp"
#include "training.hpp"

namespace ncf {

inline constexpr int kCsvSchemaVersion = 1;

// Strict schema: unknown keys and wrong types are rejected with the field
// name in the message. Missing optional fields take the TrainConfig defaults.
TrainConfig parse_train_config(const std::string& json_text);
// Fully resolved config (all fields present); parse(to_json(c)) == c.
std::string train_config_to_json(const TrainConfig& cfg);

std::string format_double(double v);

std::string history_csv(const TrainHistory& h);

// One row per report. `model_label` fills the first column.
struct EvalRow {
  std::string label;
  const Model* model = nullptr;
  EvalReport report;
};
std::string eval_csv(const std::vector<EvalRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct BaselineRow {
  Scheme scheme = Scheme::kBpsk;
  double dest_db = 0.0;
  double relay_db = 0.0;
  double relay_rate = 0.0;
  BaselineReport report;
};
std::string baseline_csv(const std::vector<BaselineRow>& rows);

// Per index: region count and the intervals (1-D) or the labeled plane (2-D).
std::string boundaries_csv(const BoundaryMap& b);
std::string decisions_csv(const std::vector<DecisionRegions>& regions);

// Lookup tables are two CSVs; the axes travel in comment lines so the pair
// can be read back exactly.
std::string relay_table_csv(const LookupTable& t);
std::string dest_table_csv(const LookupTable& t);
LookupTable parse_lookup_table(const std::string& relay_csv, const std::string& dest_csv);

std::string fidelity_csv(const TableFidelity& f, const SnrPair& snr, int resolution);

// Fig-6 style plot for real schemes: y_R bands per relay index with the
// destination decision thresholds for that index drawn across y_D.
std::string boundary_svg(const Model& m, const GridAxis& relay_axis, const GridAxis& dest_axis);
// Labeled heatmap for a 2-D label grid.
std::string heatmap_svg(const Labels2D& labels, const std::string& title);

}  // namespace ncf
