#include "ncf/ncf.h"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <algorithm>
#include <map>
#include <memory>
#include <new>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "baselines.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "io.hpp"
#include "robust.hpp"
#include "training.hpp"

struct ncf_model {
  ncf::Model model;
};

struct ncf_artifacts {
  std::vector<std::pair<std::string, std::string>> items;
};

namespace {

thread_local std::string g_last_error;

#ifndef NCF_VERSION_STRING
#define NCF_VERSION_STRING "0.0.0"
#endif

ncf_status to_status(ncf::ErrorCode c) {
  switch (c) {
    case ncf::ErrorCode::kInvalidArgument: return NCF_ERR_INVALID_ARGUMENT;
    case ncf::ErrorCode::kNumerical: return NCF_ERR_NUMERICAL;
    case ncf::ErrorCode::kIo: return NCF_ERR_IO;
    case ncf::ErrorCode::kFormat: return NCF_ERR_FORMAT;
    case ncf::ErrorCode::kDiverged: return NCF_ERR_DIVERGED;
  }
  return NCF_ERR_INTERNAL;
}

template <typename F>
ncf_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return NCF_OK;
  } catch (const ncf::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return NCF_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw ncf::InvalidArgument(what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ncf::Constellation constellation(const char* scheme, double power) {
  require(scheme != nullptr, "scheme must not be null");
  return ncf::make_constellation(ncf::parse_scheme(scheme), power);
}

double metadata_db(const ncf::Model& m, const char* key) {
  const auto it = m.metadata.find(key);
  if (it == m.metadata.end())
    throw ncf::InvalidArgument(std::string("model has no fixed training SNR (metadata '") + key +
                               "'); pass the SNR explicitly");
  return std::stod(it->second);
}

}  // namespace

extern "C" {

const char* ncf_version(void) { return NCF_VERSION_STRING; }

const char* ncf_last_error(void) { return g_last_error.c_str(); }

void ncf_string_free(char* s) { std::free(s); }

ncf_status ncf_model_load(const char* path, ncf_model** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new ncf_model{ncf::load_model(path)};
  });
}

ncf_status ncf_model_save(const ncf_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path must not be null");
    ncf::save_model(model->model, path);
  });
}

void ncf_model_free(ncf_model* model) { delete model; }

ncf_status ncf_model_info(const ncf_model* model, char** out_json) {
  return guarded([&] {
    require(model && out_json, "model and out must not be null");
    const ncf::Model& m = model->model;
    std::size_t params = 0;
    for (const auto& p : ncf::named_parameters(m)) params += p.data.size();
    nlohmann::json j;
    j["scheme"] = std::string(ncf::scheme_name(m.constellation.scheme));
    j["power"] = m.constellation.power;
    j["variant"] = std::string(ncf::variant_name(m.arch.variant));
    j["iq_mode"] = std::string(ncf::iq_mode_name(m.arch.iq_mode));
    j["K"] = m.arch.codebook_size;
    j["hidden"] = m.arch.hidden;
    j["parameters"] = params;
    j["metadata"] = m.metadata;
    *out_json = dup_string(j.dump(2));
  });
}

ncf_status ncf_model_metadata(const ncf_model* model, const char* key, char** out_value) {
  return guarded([&] {
    require(model && key && out_value, "arguments must not be null");
    const auto it = model->model.metadata.find(key);
    if (it == model->model.metadata.end()) throw ncf::InvalidArgument(std::string("no metadata key '") + key + "'");
    *out_value = dup_string(it->second);
  });
}

ncf_status ncf_config_resolve(const char* config_json, char** out_json) {
  return guarded([&] {
    require(config_json && out_json, "arguments must not be null");
    *out_json = dup_string(ncf::train_config_to_json(ncf::parse_train_config(config_json)));
  });
}

ncf_status ncf_train(const char* config_json, ncf_epoch_callback on_epoch, void* user, ncf_model** out_model,
                     char** out_history_csv) {
  return guarded([&] {
    require(config_json && out_model, "config and out_model must not be null");
    const ncf::TrainConfig cfg = ncf::parse_train_config(config_json);
    ncf::EpochCallback cb;
    if (on_epoch) {
      cb = [&](const ncf::EpochRecord& r) {
        const ncf_epoch e{r.epoch,       r.stage,           r.loss,          r.rate_bits, r.distortion_bits,
                          r.temperature, r.learning_rate, r.wall_seconds};
        on_epoch(&e, user);
      };
    }
    ncf::TrainResult r = ncf::train(cfg, cb);
    r.model.metadata["config"] = nlohmann::json::parse(ncf::train_config_to_json(cfg)).dump();
    std::string history = ncf::history_csv(r.history);
    auto* m = new ncf_model{std::move(r.model)};
    if (out_history_csv) {
      try {
        *out_history_csv = dup_string(history);
      } catch (...) {
        delete m;
        throw;
      }
    }
    *out_model = m;
  });
}

ncf_status ncf_evaluate(const ncf_model* model, double dest_db, double relay_db, long n_samples, uint64_t seed,
                        ncf_eval_report* out) {
  return guarded([&] {
    require(model && out, "model and out must not be null");
    ncf::Rng rng = ncf::make_stream(seed, 0);
    const ncf::EvalReport r = ncf::evaluate(model->model, ncf::SnrPair::from_db(dest_db, relay_db), n_samples, rng);
    *out = {r.rate_bits, r.rate_stderr, r.mi_bits, r.mi_stderr, r.ser, r.ser_stderr, r.index_entropy_bits,
            r.n_samples, dest_db,      relay_db};
  });
}

ncf_status ncf_evaluate_csv(const ncf_model* model, const char* label, const double* dest_db, const double* relay_db,
                            size_t count, long n_samples, uint64_t seed, int workers, char** out_csv) {
  return guarded([&] {
    require(model && dest_db && relay_db && out_csv, "arguments must not be null");
    require(count > 0, "at least one SNR point is required");
    std::vector<ncf::EvalRow> rows(count);
    ncf::run_parallel(count, workers, [&](std::size_t i) {
      ncf::Rng rng = ncf::make_stream(seed, i);
      rows[i].label = label ? label : "";
      rows[i].model = &model->model;
      rows[i].report = ncf::evaluate(model->model, ncf::SnrPair::from_db(dest_db[i], relay_db[i]), n_samples, rng);
    });
    *out_csv = dup_string(ncf::eval_csv(rows));
  });
}

ncf_status ncf_cf_gaussian_rate(double dest_db, double relay_db, double relay_rate, int is_complex, double* out_bits) {
  return guarded([&] {
    require(out_bits, "out must not be null");
    *out_bits = ncf::cf_gaussian_rate(ncf::SnrPair::from_db(dest_db, relay_db), relay_rate, is_complex != 0);
  });
}

ncf_status ncf_modulation_mi(const char* scheme, double power, double gamma_db, int quadrature_order,
                             double* out_bits) {
  return guarded([&] {
    require(out_bits, "out must not be null");
    *out_bits = ncf::modulation_mi(constellation(scheme, power), ncf::db_to_linear(gamma_db),
                                   quadrature_order > 0 ? quadrature_order : ncf::kDefaultHermiteOrder);
  });
}

ncf_status ncf_map_ser(const char* scheme, double power, double gamma_db, double* out) {
  return guarded([&] {
    require(out, "out must not be null");
    *out = ncf::map_ser(constellation(scheme, power), ncf::db_to_linear(gamma_db));
  });
}

ncf_status ncf_baseline_csv(const char* scheme, double power, const double* dest_db, const double* relay_db,
                            size_t points, const double* relay_rates, size_t rates, int quadrature_order,
                            char** out_csv) {
  return guarded([&] {
    require(dest_db && relay_db && relay_rates && out_csv, "arguments must not be null");
    require(points > 0 && rates > 0, "need at least one SNR point and one relay rate");
    const ncf::Constellation c = constellation(scheme, power);
    const int order = quadrature_order > 0 ? quadrature_order : ncf::kDefaultHermiteOrder;
    std::vector<ncf::BaselineRow> rows;
    for (size_t i = 0; i < points; ++i)
      for (size_t r = 0; r < rates; ++r) {
        ncf::BaselineRow row;
        row.scheme = c.scheme;
        row.dest_db = dest_db[i];
        row.relay_db = relay_db[i];
        row.relay_rate = relay_rates[r];
        row.report = ncf::baseline_report(c, ncf::SnrPair::from_db(dest_db[i], relay_db[i]), relay_rates[r], order);
        rows.push_back(row);
      }
    *out_csv = dup_string(ncf::baseline_csv(rows));
  });
}

void ncf_sweep_options_default(ncf_sweep_options* opts) {
  if (!opts) return;
  *opts = {ncf::kDefaultEvalSamples, 1, 0, 0.0, 0.0, 1, 0};
}

ncf_status ncf_sweep(const char* config_json, const double* lambdas, size_t n_lambdas, const uint64_t* seeds,
                     size_t n_seeds, const ncf_sweep_options* opts, ncf_artifacts** out) {
  return guarded([&] {
    require(config_json && lambdas && seeds && out, "arguments must not be null");
    ncf_sweep_options o;
    ncf_sweep_options_default(&o);
    if (opts) o = *opts;
    const ncf::TrainConfig base = ncf::parse_train_config(config_json);
    ncf::SweepOptions so;
    so.eval_samples = o.eval_samples;
    so.eval_seed = o.eval_seed;
    if (o.has_eval_snr) so.eval_snr = ncf::SnrPair::from_db(o.eval_dest_db, o.eval_relay_db);
    so.workers = o.workers;
    so.best_of_seeds = o.best_of_seeds != 0;
    std::vector<ncf::SweepRow> rows = ncf::sweep_lambda(base, std::vector<double>(lambdas, lambdas + n_lambdas),
                                                        std::vector<std::uint64_t>(seeds, seeds + n_seeds), so);
    auto a = std::make_unique<ncf_artifacts>();
    a->items.emplace_back("sweep.csv", ncf::sweep_csv(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ncf::TrainConfig cfg = base;
      cfg.lambda = rows[i].lambda;
      cfg.seed = rows[i].seed;
      rows[i].model.metadata["config"] = nlohmann::json::parse(ncf::train_config_to_json(cfg)).dump();
      a->items.emplace_back("model_" + std::to_string(i) + ".json", ncf::serialize_model(rows[i].model));
      a->items.emplace_back("history_" + std::to_string(i) + ".csv", ncf::history_csv(rows[i].history));
    }
    *out = a.release();
  });
}

void ncf_robust_options_default(ncf_robust_options* opts) {
  if (!opts) return;
  *opts = {nullptr, 0, nullptr, 0, 3.0, ncf::kDefaultEvalSamples, 1, 1};
}

ncf_status ncf_robust(const ncf_model* const* models, const char* const* labels, size_t n_models,
                      const ncf_robust_options* opts, ncf_artifacts** out) {
  return guarded([&] {
    require(models && labels && out, "arguments must not be null");
    ncf_robust_options o;
    ncf_robust_options_default(&o);
    if (opts) o = *opts;
    ncf::RobustOptions ro;
    if (o.scenarios) ro.scenarios.assign(o.scenarios, o.scenarios + o.n_scenarios);
    if (o.levels_db) ro.levels_db.assign(o.levels_db, o.levels_db + o.n_levels);
    ro.fixed_db = o.fixed_db;
    ro.eval_samples = o.eval_samples;
    ro.eval_seed = o.eval_seed;
    ro.workers = o.workers;
    std::vector<ncf::LabeledModel> set;
    for (size_t i = 0; i < n_models; ++i) {
      require(models[i] && labels[i], "model and label entries must not be null");
      set.push_back({labels[i], &models[i]->model});
    }
    auto a = std::make_unique<ncf_artifacts>();
    a->items.emplace_back("robust.csv", ncf::robust_csv(ncf::run_robust(set, ro)));
    *out = a.release();
  });
}

void ncf_export_options_default(ncf_export_options* opts) {
  if (!opts) return;
  *opts = {4096, 128, 0, 0.0, NAN, NAN, 100000, 1, 1};
}

ncf_status ncf_export(const ncf_model* model, const ncf_export_options* opts, ncf_artifacts** out) {
  return guarded([&] {
    require(model && out, "model and out must not be null");
    ncf_export_options o;
    ncf_export_options_default(&o);
    if (opts) o = *opts;
    const ncf::Model& m = model->model;
    const bool complex = m.constellation.is_complex;
    const int res = complex ? o.resolution_2d : o.resolution;
    require(res >= 2, "resolution must be >= 2");
    const double dest_db = std::isnan(o.dest_db) ? metadata_db(m, "train_dest_db") : o.dest_db;
    const double relay_db = std::isnan(o.relay_db) ? metadata_db(m, "train_relay_db") : o.relay_db;
    const ncf::SnrPair snr = ncf::SnrPair::from_db(dest_db, relay_db);
    ncf::GridAxis relay_axis = ncf::default_axis(m.constellation, snr.gamma_relay, res);
    ncf::GridAxis dest_axis = ncf::default_axis(m.constellation, snr.gamma_dest, res);
    if (o.has_range) {
      require(o.range > 0.0, "range must be > 0");
      relay_axis = dest_axis = ncf::GridAxis{-o.range, o.range, res};
    }

    auto a = std::make_unique<ncf_artifacts>();
    const ncf::BoundaryMap bounds = ncf::extract_quantization_boundaries(m, relay_axis);
    a->items.emplace_back("boundaries.csv", ncf::boundaries_csv(bounds));

    const ncf::LookupTable table = ncf::export_lookup_table(m, relay_axis, dest_axis);
    std::vector<ncf::DecisionRegions> regions;
    const int k = m.codebook_size();
    for (int code : table.codes) {
      const std::vector<int> u = m.branches() == 2 ? std::vector<int>{code / k, code % k} : std::vector<int>{code};
      regions.push_back(ncf::extract_decision_regions(m, u, dest_axis));
    }
    a->items.emplace_back("decisions.csv", ncf::decisions_csv(regions));
    a->items.emplace_back("relay_table.csv", ncf::relay_table_csv(table));
    a->items.emplace_back("dest_table.csv", ncf::dest_table_csv(table));

    if (o.fidelity_samples > 0) {
      ncf::Rng rng = ncf::make_stream(o.seed, 0);
      const ncf::TableFidelity f = ncf::compare_table_to_network(m, table, snr, o.fidelity_samples, rng);
      a->items.emplace_back("fidelity.csv", ncf::fidelity_csv(f, snr, res));
    }
    if (o.svg) {
      if (!complex) {
        a->items.emplace_back("boundaries.svg", ncf::boundary_svg(m, relay_axis, dest_axis));
      } else {
        if (bounds.plane) a->items.emplace_back("relay_heatmap.svg", ncf::heatmap_svg(*bounds.plane, "relay index"));
        // Decision heatmap for the code covering the most relay cells.
        std::map<int, long> cells;
        const int rres = relay_axis.resolution;
        for (int q = 0; q < rres; ++q)
          for (int i = 0; i < rres; ++i)
            ++cells[table.relay_code({relay_axis.center(i), relay_axis.center(q)})];
        int best = table.codes.front();
        for (const auto& [code, n] : cells)
          if (n > cells[best]) best = code;
        const auto it = std::lower_bound(table.codes.begin(), table.codes.end(), best);
        const auto& plane = regions[it - table.codes.begin()].plane;
        if (plane)
          a->items.emplace_back("decision_heatmap.svg",
                                ncf::heatmap_svg(*plane, "decisions for relay code " + std::to_string(best)));
      }
    }
    *out = a.release();
  });
}

size_t ncf_artifacts_count(const ncf_artifacts* a) { return a ? a->items.size() : 0; }

const char* ncf_artifacts_name(const ncf_artifacts* a, size_t i) {
  return a && i < a->items.size() ? a->items[i].first.c_str() : nullptr;
}

const char* ncf_artifacts_data(const ncf_artifacts* a, size_t i, size_t* out_len) {
  if (!a || i >= a->items.size()) {
    if (out_len) *out_len = 0;
    return nullptr;
  }
  if (out_len) *out_len = a->items[i].second.size();
  return a->items[i].second.c_str();
}

void ncf_artifacts_free(ncf_artifacts* a) { delete a; }

}  // extern "C"
