// ncf command-line tool: thin driver over the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <sys/utsname.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ncf/ncf.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kDiverged = 3, kIo = 4 };

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

void check(ncf_status s) {
  if (s == NCF_OK) return;
  const std::string msg = ncf_last_error();
  switch (s) {
    case NCF_ERR_INVALID_ARGUMENT:
    case NCF_ERR_FORMAT: throw CliError(kUsage, msg);
    case NCF_ERR_DIVERGED:
    case NCF_ERR_NUMERICAL: throw CliError(kDiverged, msg);
    case NCF_ERR_IO: throw CliError(kIo, msg);
    default: throw CliError(kFailure, msg);
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { ncf_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ModelPtr {
  ncf_model* p = nullptr;
  ModelPtr() = default;
  ModelPtr(ModelPtr&& o) noexcept : p(o.p) { o.p = nullptr; }
  ModelPtr(const ModelPtr&) = delete;
  ~ModelPtr() { ncf_model_free(p); }
};

struct ArtifactsPtr {
  ncf_artifacts* p = nullptr;
  ~ArtifactsPtr() { ncf_artifacts_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kIo, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes via a temporary file in the same directory and renames into place.
void write_atomic(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kIo, "cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw CliError(kIo, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw CliError(kIo, "cannot move output into '" + path.string() + "': " + ec.message());
  }
}

// "0:6" (step 1), "0:6:2" or "1,2.5,4".
std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  auto num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (...) {
      pos = std::string::npos;
    }
    if (pos != s.size()) throw CliError(kUsage, what + ": cannot parse '" + s + "' as a number");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) throw CliError(kUsage, what + ": range must be lo:hi or lo:hi:step");
    const double lo = num(parts[0]), hi = num(parts[1]), step = parts.size() == 3 ? num(parts[2]) : 1.0;
    if (!(step > 0) || hi < lo) throw CliError(kUsage, what + ": empty or invalid range");
    for (long i = 0;; ++i) {
      const double v = lo + i * step;
      if (v > hi + 1e-9 * step) break;
      out.push_back(v);
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');)
    if (!p.empty()) out.push_back(num(p));
  if (out.empty()) throw CliError(kUsage, what + ": empty list");
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return v;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json host_fingerprint() {
  json h;
  char name[256] = {0};
  if (::gethostname(name, sizeof name - 1) == 0) h["hostname"] = name;
  struct utsname u;
  if (::uname(&u) == 0) {
    h["system"] = u.sysname;
    h["release"] = u.release;
    h["machine"] = u.machine;
  }
  h["hardware_threads"] = std::thread::hardware_concurrency();
  return h;
}

struct Context {
  std::vector<std::string> argv;
  std::string out_dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string started_at = utc_now();
  bool quiet = false;

  fs::path path(const std::string& name) const { return fs::path(out_dir) / name; }

  void log(const std::string& line) const {
    if (!quiet) std::cerr << line << "\n";
  }

  // Every artifact set is paired with the manifest that produced it.
  void write_manifest(const std::string& name, const std::string& command, json body,
                      const std::vector<std::string>& outputs) const {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["tool_version"] = ncf_version();
    for (auto it = body.begin(); it != body.end(); ++it) m[it.key()] = it.value();
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back(o);
    m["outputs"] = outs;
    m["started_at"] = started_at;
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m["host"] = host_fingerprint();
    write_atomic(path(name), m.dump(2) + "\n");
    log("wrote " + path(name).string());
  }
};

std::string default_out_dir() {
  const char* env = std::getenv("NCF_OUTPUT_DIR");
  return env && *env ? env : ".";
}

ModelPtr load_model(const std::string& path) {
  if (!fs::exists(path)) throw CliError(kIo, "model file not found: '" + path + "'");
  ModelPtr m;
  check(ncf_model_load(path.c_str(), &m.p));
  return m;
}

std::string metadata(const ModelPtr& m, const char* key) {
  CString v;
  if (ncf_model_metadata(m.p, key, &v.p) != NCF_OK) return "";
  return v.str();
}

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? static_cast<int>(n) : 1;
}

// -- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string name = "model";
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<int> epochs;
  long eval_samples = 1000000;
  std::uint64_t eval_seed = 1000003;
};

json apply_overrides(const std::string& config_text, const TrainArgs& a) {
  json cfg;
  try {
    cfg = json::parse(config_text);
  } catch (const json::exception& e) {
    throw CliError(kUsage, std::string("config is not valid JSON: ") + e.what());
  }
  if (a.seed) cfg["seed"] = *a.seed;
  if (a.lambda) cfg["lambda"] = *a.lambda;
  if (a.epochs) cfg["epochs"] = *a.epochs;
  return cfg;
}

int cmd_train(Context& ctx, const TrainArgs& a) {
  const json raw = apply_overrides(read_file(a.config), a);
  CString resolved;
  check(ncf_config_resolve(raw.dump().c_str(), &resolved.p));
  const json cfg = json::parse(resolved.str());

  ModelPtr model;
  CString history;
  auto progress = [](const ncf_epoch* e, void* user) {
    if (*static_cast<bool*>(user)) return;
    std::fprintf(stderr, "stage %d epoch %4d  loss %.4f  R %.4f  D %.4f  t %.3f  lr %.1e  %.1fs\n", e->stage, e->epoch,
                 e->loss, e->rate_bits, e->distortion_bits, e->temperature, e->learning_rate, e->wall_seconds);
  };
  bool quiet = ctx.quiet;
  check(ncf_train(resolved.p, progress, &quiet, &model.p, &history.p));

  const std::string model_file = a.name + ".model.json";
  const std::string history_file = a.name + ".history.csv";
  fs::create_directories(ctx.out_dir);
  check(ncf_model_save(model.p, ctx.path(model_file).c_str()));
  write_atomic(ctx.path(history_file), history.str());

  json body;
  body["config"] = cfg;
  body["config_path"] = a.config;
  body["seeds"] = {{"train", cfg["seed"]}, {"eval", a.eval_seed}};
  body["inputs"] = json::array({a.config});
  if (a.eval_samples > 0 && cfg["snr"]["policy"] == "fixed") {
    ncf_eval_report r;
    const double d = cfg["snr"]["dest_db"], rl = cfg["snr"]["relay_db"];
    check(ncf_evaluate(model.p, d, rl, a.eval_samples, a.eval_seed, &r));
    body["final_eval"] = {{"dest_db", d},           {"relay_db", rl},       {"n_samples", r.n_samples},
                          {"rate_bits", r.rate_bits}, {"rate_stderr", r.rate_stderr}, {"mi_bits", r.mi_bits},
                          {"mi_stderr", r.mi_stderr}, {"ser", r.ser},             {"ser_stderr", r.ser_stderr}};
    ctx.log("eval: R " + std::to_string(r.rate_bits) + "  MI " + std::to_string(r.mi_bits) + "  SER " +
            std::to_string(r.ser));
  }
  ctx.write_manifest(a.name + ".manifest.json", "train", body, {model_file, history_file});
  return kOk;
}

// -- eval ------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string dest_db, relay_db, snr_db;
  long samples = 1000000;
  std::uint64_t seed = 1;
  int workers = default_workers();
  std::string name = "eval";
  std::string label;
};

// Pairs destination and relay SNR lists; a single value broadcasts.
void snr_points(const std::string& dest, const std::string& relay, const std::string& both, const ModelPtr* model,
                std::vector<double>& d, std::vector<double>& r) {
  if (!both.empty()) {
    if (!dest.empty() || !relay.empty()) throw CliError(kUsage, "--snr-db excludes --dest-db/--relay-db");
    d = r = parse_list(both, "--snr-db");
    return;
  }
  auto from_meta = [&](const char* key, const char* flag) {
    const std::string v = model ? metadata(*model, key) : "";
    if (v.empty()) throw CliError(kUsage, std::string(flag) + " is required (model has no fixed training SNR)");
    return std::vector<double>{std::stod(v)};
  };
  d = dest.empty() ? from_meta("train_dest_db", "--dest-db") : parse_list(dest, "--dest-db");
  r = relay.empty() ? from_meta("train_relay_db", "--relay-db") : parse_list(relay, "--relay-db");
  if (d.size() == 1 && r.size() > 1) d.assign(r.size(), d[0]);
  if (r.size() == 1 && d.size() > 1) r.assign(d.size(), r[0]);
  if (d.size() != r.size()) throw CliError(kUsage, "--dest-db and --relay-db lists differ in length");
}

int cmd_eval(Context& ctx, const EvalArgs& a) {
  const ModelPtr model = load_model(a.model);
  std::vector<double> d, r;
  snr_points(a.dest_db, a.relay_db, a.snr_db, &model, d, r);
  const std::string label = a.label.empty() ? fs::path(a.model).stem().string() : a.label;
  CString csv;
  check(ncf_evaluate_csv(model.p, label.c_str(), d.data(), r.data(), d.size(), a.samples, a.seed, a.workers, &csv.p));
  const std::string file = a.name + ".csv";
  write_atomic(ctx.path(file), csv.str());
  ctx.log("wrote " + ctx.path(file).string());
  if (!ctx.quiet) std::cout << csv.str();
  json body;
  body["config"] = {{"model", a.model}, {"dest_db", d}, {"relay_db", r}, {"samples", a.samples}, {"workers", a.workers}};
  body["seeds"] = {{"eval", a.seed}};
  body["inputs"] = json::array({a.model});
  ctx.write_manifest(a.name + ".manifest.json", "eval", body, {file});
  return kOk;
}

// -- sweep ----------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string lambdas;
  std::string seeds = "0";
  bool best_of_seeds = false;
  long eval_samples = 1000000;
  std::uint64_t eval_seed = 1;
  std::optional<double> eval_dest_db, eval_relay_db;
  int workers = default_workers();
  std::string name = "sweep";
};

int cmd_sweep(Context& ctx, const SweepArgs& a) {
  const std::string config = read_file(a.config);
  CString resolved;
  check(ncf_config_resolve(config.c_str(), &resolved.p));
  const std::vector<double> lambdas = a.lambdas.empty() ? log_grid(0.03, 30.0, 10) : parse_list(a.lambdas, "--lambdas");
  std::vector<std::uint64_t> seeds;
  for (double s : parse_list(a.seeds, "--seeds")) {
    if (s < 0 || s != std::floor(s)) throw CliError(kUsage, "--seeds must be nonnegative integers");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  ncf_sweep_options o;
  ncf_sweep_options_default(&o);
  o.eval_samples = a.eval_samples;
  o.eval_seed = a.eval_seed;
  o.workers = a.workers;
  o.best_of_seeds = a.best_of_seeds;
  if (a.eval_dest_db || a.eval_relay_db) {
    if (!a.eval_dest_db || !a.eval_relay_db) throw CliError(kUsage, "--eval-dest-db and --eval-relay-db go together");
    o.has_eval_snr = 1;
    o.eval_dest_db = *a.eval_dest_db;
    o.eval_relay_db = *a.eval_relay_db;
  }
  ctx.log("sweep: " + std::to_string(lambdas.size() * seeds.size()) + " training runs on " +
          std::to_string(a.workers) + " worker(s)");
  ArtifactsPtr art;
  check(ncf_sweep(resolved.p, lambdas.data(), lambdas.size(), seeds.data(), seeds.size(), &o, &art.p));
  std::vector<std::string> outputs;
  for (size_t i = 0; i < ncf_artifacts_count(art.p); ++i) {
    size_t len = 0;
    const char* data = ncf_artifacts_data(art.p, i, &len);
    const std::string name = a.name + "/" + ncf_artifacts_name(art.p, i);
    write_atomic(ctx.path(name), std::string(data, len));
    outputs.push_back(name);
  }
  ctx.log("wrote " + ctx.path(a.name).string());
  json body;
  body["config"] = json::parse(resolved.str());
  body["config_path"] = a.config;
  body["lambdas"] = lambdas;
  body["seeds"] = {{"train", seeds}, {"eval", a.eval_seed}};
  body["eval_samples"] = a.eval_samples;
  body["best_of_seeds"] = a.best_of_seeds;
  body["workers"] = a.workers;
  body["inputs"] = json::array({a.config});
  ctx.write_manifest(a.name + "/manifest.json", "sweep", body, outputs);
  return kOk;
}

// -- baseline -------------------------------------------------------------------

struct BaselineArgs {
  std::string scheme = "bpsk";
  double power = 1.0;
  std::string dest_db, relay_db, snr_db = "0:6";
  std::string rates = "1";
  int order = 64;
  std::string name = "baseline";
};

int cmd_baseline(Context& ctx, BaselineArgs a) {
  std::vector<double> d, r;
  if (!a.dest_db.empty() || !a.relay_db.empty()) a.snr_db.clear();
  snr_points(a.dest_db, a.relay_db, a.snr_db, nullptr, d, r);
  const std::vector<double> rates = parse_list(a.rates, "--rates");
  CString csv;
  check(ncf_baseline_csv(a.scheme.c_str(), a.power, d.data(), r.data(), d.size(), rates.data(), rates.size(), a.order,
                         &csv.p));
  const std::string file = a.name + ".csv";
  write_atomic(ctx.path(file), csv.str());
  if (!ctx.quiet) std::cout << csv.str();
  json body;
  body["config"] = {{"scheme", a.scheme}, {"power", a.power}, {"dest_db", d},
                    {"relay_db", r},      {"rates", rates},     {"quadrature_order", a.order}};
  body["seeds"] = json::object();
  body["inputs"] = json::array();
  ctx.write_manifest(a.name + ".manifest.json", "baseline", body, {file});
  return kOk;
}

// -- export ---------------------------------------------------------------------

struct ExportArgs {
  std::string model;
  int resolution = 4096;
  int resolution_2d = 128;
  std::optional<double> range, dest_db, relay_db;
  long fidelity_samples = 100000;
  std::uint64_t seed = 1;
  bool no_svg = false;
  std::string name = "export";
};

int cmd_export(Context& ctx, const ExportArgs& a) {
  const ModelPtr model = load_model(a.model);
  ncf_export_options o;
  ncf_export_options_default(&o);
  o.resolution = a.resolution;
  o.resolution_2d = a.resolution_2d;
  if (a.range) {
    o.has_range = 1;
    o.range = *a.range;
  }
  if (a.dest_db) o.dest_db = *a.dest_db;
  if (a.relay_db) o.relay_db = *a.relay_db;
  o.fidelity_samples = a.fidelity_samples;
  o.seed = a.seed;
  o.svg = !a.no_svg;
  ArtifactsPtr art;
  check(ncf_export(model.p, &o, &art.p));
  std::vector<std::string> outputs;
  for (size_t i = 0; i < ncf_artifacts_count(art.p); ++i) {
    size_t len = 0;
    const char* data = ncf_artifacts_data(art.p, i, &len);
    const std::string name = a.name + "/" + ncf_artifacts_name(art.p, i);
    write_atomic(ctx.path(name), std::string(data, len));
    outputs.push_back(name);
    ctx.log("wrote " + ctx.path(name).string());
  }
  json body;
  body["config"] = {{"model", a.model},
                    {"resolution", a.resolution},
                    {"resolution_2d", a.resolution_2d},
                    {"fidelity_samples", a.fidelity_samples}};
  if (a.range) body["config"]["range"] = *a.range;
  if (a.dest_db) body["config"]["dest_db"] = *a.dest_db;
  if (a.relay_db) body["config"]["relay_db"] = *a.relay_db;
  body["seeds"] = {{"fidelity", a.seed}};
  body["inputs"] = json::array({a.model});
  ctx.write_manifest(a.name + "/manifest.json", "export", body, outputs);
  return kOk;
}

// -- robust ---------------------------------------------------------------------

struct RobustArgs {
  std::vector<std::string> models;
  std::string scenarios = "1,2,3";
  std::string levels = "0:6";
  double fixed_db = 3.0;
  long samples = 1000000;
  std::uint64_t seed = 1;
  int workers = default_workers();
  std::string name = "robust";
};

int cmd_robust(Context& ctx, const RobustArgs& a) {
  std::vector<ModelPtr> models;
  std::vector<std::string> labels;
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    labels.push_back(eq == std::string::npos ? fs::path(path).stem().string() : spec.substr(0, eq));
    models.push_back(load_model(path));
  }
  std::vector<int> scenarios;
  for (double s : parse_list(a.scenarios, "--scenarios")) scenarios.push_back(static_cast<int>(s));
  const std::vector<double> levels = parse_list(a.levels, "--levels-db");
  std::vector<const ncf_model*> ptrs;
  std::vector<const char*> names;
  for (size_t i = 0; i < models.size(); ++i) {
    ptrs.push_back(models[i].p);
    names.push_back(labels[i].c_str());
  }
  ncf_robust_options o;
  ncf_robust_options_default(&o);
  o.scenarios = scenarios.data();
  o.n_scenarios = scenarios.size();
  o.levels_db = levels.data();
  o.n_levels = levels.size();
  o.fixed_db = a.fixed_db;
  o.eval_samples = a.samples;
  o.eval_seed = a.seed;
  o.workers = a.workers;
  ArtifactsPtr art;
  check(ncf_robust(ptrs.data(), names.data(), ptrs.size(), &o, &art.p));
  size_t len = 0;
  const char* data = ncf_artifacts_data(art.p, 0, &len);
  const std::string file = a.name + ".csv";
  write_atomic(ctx.path(file), std::string(data, len));
  ctx.log("wrote " + ctx.path(file).string());
  json body;
  body["config"] = {{"models", a.models},   {"scenarios", scenarios}, {"levels_db", levels},
                    {"fixed_db", a.fixed_db}, {"samples", a.samples},   {"workers", a.workers}};
  body["seeds"] = {{"eval", a.seed}};
  json inputs = json::array();
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    inputs.push_back(eq == std::string::npos ? spec : spec.substr(eq + 1));
  }
  body["inputs"] = inputs;
  ctx.write_manifest(a.name + ".manifest.json", "robust", body, {file});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.argv.assign(argv, argv + argc);
  ctx.out_dir = default_out_dir();

  CLI::App app{"Learned compress-and-forward relaying for the Gaussian primitive relay channel"};
  app.set_version_flag("--version", std::string(ncf_version()));
  app.require_subcommand(1);
  app.add_option("-o,--out", ctx.out_dir, "Output directory (default: $NCF_OUTPUT_DIR or .)");
  app.add_flag("-q,--quiet", ctx.quiet, "Suppress progress output");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train one model from a JSON config");
  train->add_option("-c,--config", ta.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--name", ta.name, "Artifact base name")->capture_default_str();
  train->add_option("--seed", ta.seed, "Override the config seed");
  train->add_option("--lambda", ta.lambda, "Override lambda");
  train->add_option("--epochs", ta.epochs, "Override the epoch count");
  train->add_option("--eval-samples", ta.eval_samples, "Samples for the post-training evaluation (0 skips)")
      ->capture_default_str();
  train->add_option("--eval-seed", ta.eval_seed, "Seed for the post-training evaluation")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model (rate, MI lower bound, SER)");
  eval->add_option("-m,--model", ea.model, "Model file")->required();
  eval->add_option("--dest-db", ea.dest_db, "Destination SNR(s) in dB: value, list a,b or range lo:hi[:step]");
  eval->add_option("--relay-db", ea.relay_db, "Relay SNR(s) in dB");
  eval->add_option("--snr-db", ea.snr_db, "Equal SNR(s) at both terminals in dB");
  eval->add_option("-n,--samples", ea.samples, "Monte Carlo samples per point")->capture_default_str();
  eval->add_option("--seed", ea.seed, "Evaluation seed")->capture_default_str();
  eval->add_option("--workers", ea.workers, "Worker threads")->capture_default_str();
  eval->add_option("--label", ea.label, "Label column (default: model file stem)");
  eval->add_option("--name", ea.name, "Artifact base name")->capture_default_str();

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate one model per (lambda, seed)");
  sweep->add_option("-c,--config", sa.config, "Base config file (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--lambdas", sa.lambdas, "Lambda list or range (default: 10-point log grid over [0.03, 30])");
  sweep->add_option("--seeds", sa.seeds, "Seed list")->capture_default_str();
  sweep->add_flag("--best-of-seeds", sa.best_of_seeds, "Keep the highest-MI seed per lambda");
  sweep->add_option("--eval-samples", sa.eval_samples, "Evaluation samples per model")->capture_default_str();
  sweep->add_option("--eval-seed", sa.eval_seed, "Evaluation seed")->capture_default_str();
  sweep->add_option("--eval-dest-db", sa.eval_dest_db, "Evaluation destination SNR (default: training SNR)");
  sweep->add_option("--eval-relay-db", sa.eval_relay_db, "Evaluation relay SNR (default: training SNR)");
  sweep->add_option("--workers", sa.workers, "Parallel training jobs")->capture_default_str();
  sweep->add_option("--name", sa.name, "Output subdirectory")->capture_default_str();

  BaselineArgs ba;
  auto* baseline = app.add_subcommand("baseline", "Reference curves: Gaussian CF rate, no-relay and perfect-relay MI/SER");
  baseline->add_option("-s,--scheme", ba.scheme, "bpsk, pam4, pam8, qam4 or qam16")->capture_default_str();
  baseline->add_option("--power", ba.power, "Average symbol power P")->capture_default_str();
  baseline->add_option("--snr-db", ba.snr_db, "Equal SNR(s) at both terminals in dB")->capture_default_str();
  baseline->add_option("--dest-db", ba.dest_db, "Destination SNR(s) in dB (with --relay-db)");
  baseline->add_option("--relay-db", ba.relay_db, "Relay SNR(s) in dB (with --dest-db)");
  baseline->add_option("--rates", ba.rates, "Relay rate(s) R in bits for the Gaussian CF rate")->capture_default_str();
  baseline->add_option("--order", ba.order, "Gauss-Hermite order per dimension")->capture_default_str();
  baseline->add_option("--name", ba.name, "Artifact base name")->capture_default_str();

  ExportArgs xa;
  auto* exp = app.add_subcommand("export", "Quantization boundaries, decision regions and lookup tables");
  exp->add_option("-m,--model", xa.model, "Model file")->required();
  exp->add_option("--resolution", xa.resolution, "Grid cells for real schemes")->capture_default_str();
  exp->add_option("--resolution-2d", xa.resolution_2d, "Grid cells per axis for complex schemes")
      ->capture_default_str();
  exp->add_option("--range", xa.range, "Symmetric grid half-width (default: +-(h max|x| + 4 sigma))");
  exp->add_option("--dest-db", xa.dest_db, "Destination SNR (default: training SNR)");
  exp->add_option("--relay-db", xa.relay_db, "Relay SNR (default: training SNR)");
  exp->add_option("--fidelity-samples", xa.fidelity_samples, "Samples for the table-vs-network SER check (0 skips)")
      ->capture_default_str();
  exp->add_option("--seed", xa.seed, "Seed for the fidelity check")->capture_default_str();
  exp->add_flag("--no-svg", xa.no_svg, "Skip SVG plots");
  exp->add_option("--name", xa.name, "Output subdirectory")->capture_default_str();

  RobustArgs ra;
  auto* robust = app.add_subcommand("robust", "Evaluate a model set over the three SNR mismatch scenarios");
  robust->add_option("-m,--model", ra.models, "Model as label=path or path (repeatable)")->required();
  robust->add_option("--scenarios", ra.scenarios,
                     "1: equal SNR, 2: relay SNR fixed, 3: destination SNR fixed")
      ->capture_default_str();
  robust->add_option("--levels-db", ra.levels, "Swept SNR levels in dB")->capture_default_str();
  robust->add_option("--fixed-db", ra.fixed_db, "SNR of the fixed terminal in scenarios 2 and 3")
      ->capture_default_str();
  robust->add_option("-n,--samples", ra.samples, "Monte Carlo samples per point")->capture_default_str();
  robust->add_option("--seed", ra.seed, "Evaluation seed")->capture_default_str();
  robust->add_option("--workers", ra.workers, "Worker threads")->capture_default_str();
  robust->add_option("--name", ra.name, "Artifact base name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    if (*train) return cmd_train(ctx, ta);
    if (*eval) return cmd_eval(ctx, ea);
    if (*sweep) return cmd_sweep(ctx, sa);
    if (*baseline) return cmd_baseline(ctx, ba);
    if (*exp) return cmd_export(ctx, xa);
    if (*robust) return cmd_robust(ctx, ra);
  } catch (const CliError& e) {
    std::cerr << "ncf: error: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "ncf: error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
