#include "robust.hpp"

#include "baselines.hpp"
#include "error.hpp"
#include "io.hpp"

namespace ncf {

SnrPair scenario_snr(int scenario, double level_db, double fixed_db) {
  switch (scenario) {
    case 1: return SnrPair::from_db(level_db, level_db);
    case 2: return SnrPair::from_db(level_db, fixed_db);
    case 3: return SnrPair::from_db(fixed_db, level_db);
    default: throw InvalidArgument("robust scenario must be 1, 2 or 3, got " + std::to_string(scenario));
  }
}

std::vector<RobustRow> run_robust(const std::vector<LabeledModel>& models, const RobustOptions& opts) {
  if (models.empty()) throw InvalidArgument("robust: no models given");
  if (opts.levels_db.empty()) throw InvalidArgument("robust: no SNR levels given");
  for (const auto& m : models)
    if (!m.model) throw InvalidArgument("robust: null model '" + m.label + "'");
  for (int s : opts.scenarios) scenario_snr(s, 0.0, opts.fixed_db);

  const std::size_t per_scenario = opts.levels_db.size() * models.size();
  std::vector<RobustRow> rows(opts.scenarios.size() * per_scenario);
  run_parallel(rows.size(), opts.workers, [&](std::size_t job) {
    const std::size_t s = job / per_scenario;
    const std::size_t level = (job % per_scenario) / models.size();
    const LabeledModel& lm = models[job % models.size()];
    const int scenario = opts.scenarios[s];
    const SnrPair snr = scenario_snr(scenario, opts.levels_db[level], opts.fixed_db);
    Rng rng = make_stream(opts.eval_seed, 1000 * static_cast<std::uint64_t>(scenario) + level);
    RobustRow r;
    r.scenario = scenario;
    r.label = lm.label;
    // Requested levels, not a dB round trip, so rows can be matched exactly.
    const double level_db = opts.levels_db[level];
    r.dest_db = scenario == 3 ? opts.fixed_db : level_db;
    r.relay_db = scenario == 2 ? opts.fixed_db : level_db;
    r.report = evaluate(*lm.model, snr, opts.eval_samples, rng);
    const Constellation& c = lm.model->constellation;
    r.mi_no_relay_bits = modulation_mi(c, snr.gamma_dest);
    r.mi_perfect_relay_bits = modulation_mi(c, snr.gamma_dest + snr.gamma_relay);
    rows[job] = std::move(r);
  });
  return rows;
}

std::string robust_csv(const std::vector<RobustRow>& rows) {
  std::string out = "# schema: ncf-robust v" + std::to_string(kCsvSchemaVersion) + "\n";
  out += "# scenario 1: gamma_D = gamma_R; 2: gamma_R fixed; 3: gamma_D fixed\n";
  out += "scenario,label,gamma_d_db,gamma_r_db,n_samples,rate_bits,rate_stderr,mi_lower_bound_bits,mi_stderr,ser,"
         "ser_stderr,mi_no_relay,mi_perfect_relay\n";
  for (const auto& r : rows) {
    const auto& e = r.report;
    out += std::to_string(r.scenario) + "," + r.label + "," + format_double(r.dest_db) + "," +
           format_double(r.relay_db) + "," + std::to_string(e.n_samples) + "," + format_double(e.rate_bits) + "," +
           format_double(e.rate_stderr) + "," + format_double(e.mi_bits) + "," + format_double(e.mi_stderr) + "," +
           format_double(e.ser) + "," + format_double(e.ser_stderr) + "," + format_double(r.mi_no_relay_bits) + "," +
           format_double(r.mi_perfect_relay_bits) + "\n";
  }
  return out;
}

}  // namespace ncf
