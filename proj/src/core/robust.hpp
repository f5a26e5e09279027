#pragma once

// Canned robustness protocols: evaluate a model set across SNR scenarios.
//   1: gamma_D = gamma_R = gamma
//   2: gamma_R fixed, gamma_D varies
//   3: gamma_D fixed, gamma_R varies

#include <string>
#include <vector>

#include "eval.hpp"

namespace ncf {

struct RobustOptions {
  std::vector<int> scenarios = {1, 2, 3};
  std::vector<double> levels_db = {0, 1, 2, 3, 4, 5, 6};
  double fixed_db = 3.0;
  long eval_samples = kDefaultEvalSamples;
  std::uint64_t eval_seed = 1;
  int workers = 1;
};

struct LabeledModel {
  std::string label;
  const Model* model = nullptr;
};

struct RobustRow {
  int scenario = 1;
  std::string label;
  double dest_db = 0.0;
  double relay_db = 0.0;
  EvalReport report;
  double mi_no_relay_bits = 0.0;
  double mi_perfect_relay_bits = 0.0;
};

SnrPair scenario_snr(int scenario, double level_db, double fixed_db);

// Rows ordered by (scenario, level, model). Every model sees the same channel
// draws at a given (scenario, level).
std::vector<RobustRow> run_robust(const std::vector<LabeledModel>& models, const RobustOptions& opts);

std::string robust_csv(const std::vector<RobustRow>& rows);

}  // namespace ncf
