#include "io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "error.hpp"

namespace ncf {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw InvalidArgument("config field '" + field + "': " + why);
}

void check_keys(const json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad_field(prefix.empty() ? "<root>" : prefix, "must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) bad_field(prefix + k, "unknown key");
}

double get_number(const json& obj, const std::string& key, const std::string& field, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad_field(field, "must be a number");
  return v.get<double>();
}

long get_int(const json& obj, const std::string& key, const std::string& field, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad_field(field, "must be an integer");
  return v.get<long>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& field,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad_field(field, "must be a string");
  return v.get<std::string>();
}

std::vector<double> get_number_list(const json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) bad_field(field, "must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad_field(field, "must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

template <typename F>
auto named(const std::string& field, F&& parse) {
  try {
    return parse();
  } catch (const InvalidArgument& e) {
    bad_field(field, e.what());
  }
}

std::string_view shape_name(TemperatureSchedule::Shape s) {
  switch (s) {
    case TemperatureSchedule::Shape::kExponential: return "exponential";
    case TemperatureSchedule::Shape::kLinear: return "linear";
    case TemperatureSchedule::Shape::kConstant: return "constant";
  }
  return "exponential";
}

json number_list(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "",
             {"lambda", "lambda_start", "lambda_warmup_fraction", "scheme", "power", "variant", "iq_mode", "K",
              "hidden", "batch_size", "epochs", "steps_per_epoch", "finetune_epochs", "learning_rate", "entropy_lr_scale",
              "bias_init",
              "plateau_decay", "plateau_patience", "temperature", "snr", "seed"});
  TrainConfig c;
  if (!doc.contains("lambda")) bad_field("lambda", "required");
  c.lambda = get_number(doc, "lambda", "lambda", 0.0);
  c.lambda_start = get_number(doc, "lambda_start", "lambda_start", c.lambda_start);
  c.lambda_warmup_fraction =
      get_number(doc, "lambda_warmup_fraction", "lambda_warmup_fraction", c.lambda_warmup_fraction);
  c.scheme = named("scheme", [&] { return parse_scheme(get_string(doc, "scheme", "scheme", "bpsk")); });
  c.power = get_number(doc, "power", "power", c.power);
  c.arch.variant =
      named("variant", [&] { return parse_variant(get_string(doc, "variant", "variant", "marginal")); });
  c.arch.iq_mode = named("iq_mode", [&] { return parse_iq_mode(get_string(doc, "iq_mode", "iq_mode", "joint")); });
  c.arch.codebook_size = static_cast<int>(get_int(doc, "K", "K", c.arch.codebook_size));
  if (doc.contains("hidden")) {
    const json& h = doc.at("hidden");
    if (!h.is_array()) bad_field("hidden", "must be a list of layer widths");
    c.arch.hidden.clear();
    for (const auto& x : h) {
      if (!x.is_number_integer()) bad_field("hidden", "layer widths must be integers");
      c.arch.hidden.push_back(x.get<int>());
    }
  }
  c.batch_size = static_cast<int>(get_int(doc, "batch_size", "batch_size", c.batch_size));
  c.epochs = static_cast<int>(get_int(doc, "epochs", "epochs", c.epochs));
  c.steps_per_epoch = static_cast<int>(get_int(doc, "steps_per_epoch", "steps_per_epoch", c.steps_per_epoch));
  c.finetune_epochs = static_cast<int>(get_int(doc, "finetune_epochs", "finetune_epochs", c.finetune_epochs));
  c.learning_rate = get_number(doc, "learning_rate", "learning_rate", c.learning_rate);
  c.entropy_lr_scale = get_number(doc, "entropy_lr_scale", "entropy_lr_scale", c.entropy_lr_scale);
  c.bias_init = get_string(doc, "bias_init", "bias_init", c.bias_init);
  if (doc.contains("plateau_decay")) {
    if (!doc.at("plateau_decay").is_boolean()) bad_field("plateau_decay", "must be true or false");
    c.plateau_decay = doc.at("plateau_decay").get<bool>();
  }
  c.plateau_patience = static_cast<int>(get_int(doc, "plateau_patience", "plateau_patience", c.plateau_patience));
  if (doc.contains("temperature")) {
    const json& t = doc.at("temperature");
    check_keys(t, "temperature.", {"start", "end", "shape"});
    c.temperature.start = get_number(t, "start", "temperature.start", c.temperature.start);
    c.temperature.end = get_number(t, "end", "temperature.end", c.temperature.end);
    const std::string shape = get_string(t, "shape", "temperature.shape", "exponential");
    if (shape == "exponential") c.temperature.shape = TemperatureSchedule::Shape::kExponential;
    else if (shape == "linear") c.temperature.shape = TemperatureSchedule::Shape::kLinear;
    else if (shape == "constant") c.temperature.shape = TemperatureSchedule::Shape::kConstant;
    else bad_field("temperature.shape", "expected exponential, linear or constant, got '" + shape + "'");
  }
  if (doc.contains("snr")) {
    const json& s = doc.at("snr");
    check_keys(s, "snr.", {"policy", "dest_db", "relay_db", "levels_db"});
    const std::string policy = get_string(s, "policy", "snr.policy", "fixed");
    if (policy == "fixed") {
      c.snr.kind = SnrPolicy::Kind::kFixed;
      if (s.contains("levels_db")) bad_field("snr.levels_db", "not used by the fixed policy");
      c.snr.dest_db = get_number(s, "dest_db", "snr.dest_db", c.snr.dest_db);
      c.snr.relay_db = get_number(s, "relay_db", "snr.relay_db", c.snr.relay_db);
    } else if (policy == "uniform") {
      c.snr.kind = SnrPolicy::Kind::kUniform;
      if (s.contains("dest_db") || s.contains("relay_db"))
        bad_field("snr.levels_db", "the uniform policy takes only levels_db");
      if (!s.contains("levels_db")) bad_field("snr.levels_db", "required by the uniform policy");
      c.snr.levels_db = get_number_list(s.at("levels_db"), "snr.levels_db");
    } else if (policy == "independent") {
      c.snr.kind = SnrPolicy::Kind::kIndependent;
      if (s.contains("levels_db")) bad_field("snr.levels_db", "not used by the independent policy");
      if (!s.contains("dest_db")) bad_field("snr.dest_db", "required by the independent policy");
      if (!s.contains("relay_db")) bad_field("snr.relay_db", "required by the independent policy");
      c.snr.dest_levels_db = get_number_list(s.at("dest_db"), "snr.dest_db");
      c.snr.relay_levels_db = get_number_list(s.at("relay_db"), "snr.relay_db");
    } else {
      bad_field("snr.policy", "expected fixed, uniform or independent, got '" + policy + "'");
    }
  }
  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_unsigned()) bad_field("seed", "must be a nonnegative integer");
    c.seed = v.get<std::uint64_t>();
  }
  validate(c);
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json doc;
  doc["lambda"] = c.lambda;
  doc["lambda_start"] = c.lambda_start;
  doc["lambda_warmup_fraction"] = c.lambda_warmup_fraction;
  doc["scheme"] = std::string(scheme_name(c.scheme));
  doc["power"] = c.power;
  doc["variant"] = std::string(variant_name(c.arch.variant));
  doc["iq_mode"] = std::string(iq_mode_name(c.arch.iq_mode));
  doc["K"] = c.arch.codebook_size;
  doc["hidden"] = c.arch.hidden;
  doc["batch_size"] = c.batch_size;
  doc["epochs"] = c.epochs;
  doc["steps_per_epoch"] = c.steps_per_epoch;
  doc["finetune_epochs"] = c.finetune_epochs;
  doc["learning_rate"] = c.learning_rate;
  doc["entropy_lr_scale"] = c.entropy_lr_scale;
  doc["bias_init"] = c.bias_init;
  doc["plateau_decay"] = c.plateau_decay;
  doc["plateau_patience"] = c.plateau_patience;
  doc["temperature"] = {{"start", c.temperature.start},
                        {"end", c.temperature.end},
                        {"shape", std::string(shape_name(c.temperature.shape))}};
  json s;
  switch (c.snr.kind) {
    case SnrPolicy::Kind::kFixed:
      s = {{"policy", "fixed"}, {"dest_db", c.snr.dest_db}, {"relay_db", c.snr.relay_db}};
      break;
    case SnrPolicy::Kind::kUniform:
      s = {{"policy", "uniform"}, {"levels_db", number_list(c.snr.levels_db)}};
      break;
    case SnrPolicy::Kind::kIndependent:
      s = {{"policy", "independent"},
           {"dest_db", number_list(c.snr.dest_levels_db)},
           {"relay_db", number_list(c.snr.relay_levels_db)}};
      break;
  }
  doc["snr"] = s;
  doc["seed"] = c.seed;
  return doc.dump(2);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string schema_line(const std::string& name) {
  return "# schema: " + name + " v" + std::to_string(kCsvSchemaVersion) + "\n";
}

std::string join(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out + "\n";
}

std::string fd(double v) { return format_double(v); }

const char* kEvalHeader =
    "n_samples,rate_bits,rate_stderr,mi_lower_bound_bits,mi_stderr,ser,ser_stderr,index_entropy_bits";

std::vector<std::string> eval_cols(const EvalReport& r) {
  return {std::to_string(r.n_samples), fd(r.rate_bits), fd(r.rate_stderr), fd(r.mi_bits), fd(r.mi_stderr),
          fd(r.ser),                   fd(r.ser_stderr), fd(r.index_entropy_bits)};
}

}  // namespace

std::string history_csv(const TrainHistory& h) {
  std::string out = schema_line("ncf-history");
  out += "epoch,stage,loss,rate_bits,distortion_bits,temperature,learning_rate\n";
  for (const auto& e : h.epochs)
    out += join({std::to_string(e.epoch), std::to_string(e.stage), fd(e.loss), fd(e.rate_bits),
                 fd(e.distortion_bits), fd(e.temperature), fd(e.learning_rate)});
  return out;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = schema_line("ncf-eval");
  out += "# mi_lower_bound_bits = log2|X| - D (pessimistic estimate)\n";
  out += std::string("label,scheme,variant,iq_mode,gamma_d_db,gamma_r_db,") + kEvalHeader + "\n";
  for (const auto& r : rows) {
    std::vector<std::string> cols = {r.label};
    if (r.model) {
      cols.emplace_back(scheme_name(r.model->constellation.scheme));
      cols.emplace_back(variant_name(r.model->arch.variant));
      cols.emplace_back(iq_mode_name(r.model->arch.iq_mode));
    } else {
      cols.insert(cols.end(), {"", "", ""});
    }
    cols.push_back(fd(linear_to_db(r.report.snr.gamma_dest)));
    cols.push_back(fd(linear_to_db(r.report.snr.gamma_relay)));
    for (auto& c : eval_cols(r.report)) cols.push_back(std::move(c));
    out += join(cols);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = schema_line("ncf-sweep");
  out += "# rows sorted by rate_bits; mi_lower_bound_bits = log2|X| - D\n";
  out += std::string("lambda,seed,scheme,variant,iq_mode,gamma_d_db,gamma_r_db,") + kEvalHeader + "\n";
  for (const auto& r : rows) {
    std::vector<std::string> cols = {fd(r.lambda),
                                     std::to_string(r.seed),
                                     std::string(scheme_name(r.model.constellation.scheme)),
                                     std::string(variant_name(r.model.arch.variant)),
                                     std::string(iq_mode_name(r.model.arch.iq_mode)),
                                     fd(linear_to_db(r.report.snr.gamma_dest)),
                                     fd(linear_to_db(r.report.snr.gamma_relay))};
    for (auto& c : eval_cols(r.report)) cols.push_back(std::move(c));
    out += join(cols);
  }
  return out;
}

std::string baseline_csv(const std::vector<BaselineRow>& rows) {
  std::string out = schema_line("ncf-baseline");
  out += "scheme,gamma_d_db,gamma_r_db,R,cf_gaussian,mi_no_relay,mi_perfect,ser_no_relay,ser_perfect,"
         "quadrature_order\n";
  for (const auto& r : rows)
    out += join({std::string(scheme_name(r.scheme)), fd(r.dest_db), fd(r.relay_db), fd(r.relay_rate),
                 fd(r.report.cf_gaussian_bits), fd(r.report.mi_no_relay_bits), fd(r.report.mi_perfect_relay_bits),
                 fd(r.report.ser_no_relay), fd(r.report.ser_perfect_relay),
                 std::to_string(r.report.quadrature_order)});
  return out;
}

std::string boundaries_csv(const BoundaryMap& b) {
  std::string out = schema_line("ncf-boundaries");
  out += "# binned_indices: " + std::to_string(b.binned_indices()) + "\n";
  if (b.plane) {
    const auto& p = *b.plane;
    out += "# grid: lo " + fd(p.axis.lo) + " hi " + fd(p.axis.hi) + " resolution " +
           std::to_string(p.axis.resolution) + "\n";
    out += "# region_counts:";
    for (std::size_t k = 0; k < p.region_counts.size(); ++k)
      if (p.region_counts[k]) out += " " + std::to_string(k) + "=" + std::to_string(p.region_counts[k]);
    out += "\ncell_i,cell_q,y_i,y_q,index\n";
    const int res = p.axis.resolution;
    for (int q = 0; q < res; ++q)
      for (int i = 0; i < res; ++i)
        out += join({std::to_string(i), std::to_string(q), fd(p.axis.center(i)), fd(p.axis.center(q)),
                     std::to_string(p.label_at(i, q))});
    return out;
  }
  out += "branch,index,regions,interval,lo,hi\n";
  for (std::size_t br = 0; br < b.axes.size(); ++br) {
    const auto& a = b.axes[br];
    for (std::size_t k = 0; k < a.intervals.size(); ++k)
      for (std::size_t j = 0; j < a.intervals[k].size(); ++j)
        out += join({std::to_string(br), std::to_string(k), std::to_string(a.region_counts[k]), std::to_string(j),
                     fd(a.intervals[k][j].lo), fd(a.intervals[k][j].hi)});
  }
  return out;
}

namespace {

std::string u_string(const std::vector<int>& u) {
  std::string s;
  for (std::size_t i = 0; i < u.size(); ++i) s += (i ? ":" : "") + std::to_string(u[i]);
  return s;
}

}  // namespace

std::string decisions_csv(const std::vector<DecisionRegions>& regions) {
  std::string out = schema_line("ncf-decisions");
  const bool plane = !regions.empty() && regions.front().plane.has_value();
  if (!plane) {
    out += "# thresholds over y_D; left/right are the decided symbol indices on either side\n";
    out += "u,threshold,position,left,right\n";
    for (const auto& r : regions)
      for (std::size_t j = 0; j < r.thresholds.size(); ++j)
        out += join({u_string(r.u), std::to_string(j), fd(r.thresholds[j].position),
                     std::to_string(r.thresholds[j].left), std::to_string(r.thresholds[j].right)});
    return out;
  }
  out += "u,cell_i,cell_q,y_i,y_q,decision\n";
  for (const auto& r : regions) {
    const auto& p = *r.plane;
    const int res = p.axis.resolution;
    for (int q = 0; q < res; ++q)
      for (int i = 0; i < res; ++i)
        out += join({u_string(r.u), std::to_string(i), std::to_string(q), fd(p.axis.center(i)),
                     fd(p.axis.center(q)), std::to_string(p.label_at(i, q))});
  }
  return out;
}

namespace {

std::string axis_line(const char* name, const GridAxis& a) {
  return std::string("# ") + name + ": " + fd(a.lo) + " " + fd(a.hi) + " " + std::to_string(a.resolution) + "\n";
}

std::string table_meta(const LookupTable& t) {
  return "# scheme: " + std::string(scheme_name(t.scheme)) + "\n# iq_mode: " + std::string(iq_mode_name(t.iq_mode)) +
         "\n# K: " + std::to_string(t.codebook_size) + "\n" + axis_line("relay_axis", t.relay_axis) +
         axis_line("dest_axis", t.dest_axis);
}

struct CsvDoc {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

CsvDoc read_csv(const std::string& text, const std::string& schema) {
  CsvDoc d;
  std::istringstream is(text);
  std::string line;
  bool saw_schema = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = line.substr(1, colon - 1);
      std::string val = line.substr(colon + 1);
      key.erase(0, key.find_first_not_of(' '));
      val.erase(0, val.find_first_not_of(' '));
      if (key == "schema") {
        if (val != schema + " v" + std::to_string(kCsvSchemaVersion))
          throw FormatError("expected schema '" + schema + "', got '" + val + "'");
        saw_schema = true;
      }
      d.meta[key] = val;
      continue;
    }
    if (d.header.empty()) d.header = split(line, ',');
    else d.rows.push_back(split(line, ','));
  }
  if (!saw_schema) throw FormatError("missing schema line for " + schema);
  return d;
}

GridAxis parse_axis(const CsvDoc& d, const std::string& key) {
  const auto it = d.meta.find(key);
  if (it == d.meta.end()) throw FormatError("lookup table lacks '" + key + "'");
  std::istringstream is(it->second);
  GridAxis a;
  if (!(is >> a.lo >> a.hi >> a.resolution) || !(a.hi > a.lo) || a.resolution < 1)
    throw FormatError("bad axis line '" + key + "'");
  return a;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string relay_table_csv(const LookupTable& t) {
  std::string out = schema_line("ncf-relay-table") + table_meta(t);
  const GridAxis& a = t.relay_axis;
  if (t.complex && t.iq_mode == IqMode::kJoint) {
    out += "cell_i,cell_q,y_i,y_q,index\n";
    for (int q = 0; q < a.resolution; ++q)
      for (int i = 0; i < a.resolution; ++i)
        out += join({std::to_string(i), std::to_string(q), fd(a.center(i)), fd(a.center(q)),
                     std::to_string(t.relay_index[static_cast<std::size_t>(q) * a.resolution + i])});
    return out;
  }
  out += "branch,cell,y_lo,y_hi,index\n";
  const int branches = static_cast<int>(t.relay_index.size() / a.resolution);
  for (int b = 0; b < branches; ++b)
    for (int i = 0; i < a.resolution; ++i)
      out += join({std::to_string(b), std::to_string(i), fd(a.lo + i * a.cell_width()),
                   fd(a.lo + (i + 1) * a.cell_width()), std::to_string(t.relay_index[b * a.resolution + i])});
  return out;
}

std::string dest_table_csv(const LookupTable& t) {
  std::string out = schema_line("ncf-dest-table") + table_meta(t);
  out += "# code: relay index (split: u0 * K + u1)\n";
  const GridAxis& a = t.dest_axis;
  std::string header = t.complex ? "code,cell_i,cell_q,y_i,y_q,decision" : "code,cell,y_lo,y_hi,decision";
  for (int w = 0; w < t.order; ++w) header += ",p" + std::to_string(w);
  out += header + "\n";
  for (std::size_t s = 0; s < t.codes.size(); ++s) {
    for (std::size_t cell = 0; cell < t.decisions[s].size(); ++cell) {
      std::vector<std::string> cols = {std::to_string(t.codes[s])};
      if (t.complex) {
        const int i = static_cast<int>(cell % a.resolution), q = static_cast<int>(cell / a.resolution);
        cols.insert(cols.end(), {std::to_string(i), std::to_string(q), fd(a.center(i)), fd(a.center(q))});
      } else {
        const int i = static_cast<int>(cell);
        cols.insert(cols.end(), {std::to_string(i), fd(a.lo + i * a.cell_width()), fd(a.lo + (i + 1) * a.cell_width())});
      }
      cols.push_back(std::to_string(t.decisions[s][cell]));
      for (double p : t.posteriors[s][cell]) cols.push_back(fd(p));
      out += join(cols);
    }
  }
  return out;
}

LookupTable parse_lookup_table(const std::string& relay_csv, const std::string& dest_csv) {
  const CsvDoc r = read_csv(relay_csv, "ncf-relay-table");
  const CsvDoc d = read_csv(dest_csv, "ncf-dest-table");
  LookupTable t;
  try {
    t.scheme = parse_scheme(r.meta.at("scheme"));
    t.iq_mode = parse_iq_mode(r.meta.at("iq_mode"));
    t.codebook_size = to_int(r.meta.at("K"));
  } catch (const std::out_of_range&) {
    throw FormatError("relay table lacks scheme/iq_mode/K metadata");
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  const Constellation c = make_constellation(t.scheme);
  t.order = c.order();
  t.complex = c.is_complex;
  t.relay_axis = parse_axis(r, "relay_axis");
  t.dest_axis = parse_axis(r, "dest_axis");
  const bool plane = t.complex && t.iq_mode == IqMode::kJoint;
  const std::size_t relay_cells = plane ? static_cast<std::size_t>(t.relay_axis.resolution) * t.relay_axis.resolution
                                        : static_cast<std::size_t>(t.relay_axis.resolution) *
                                              (t.iq_mode == IqMode::kSplit ? 2 : 1);
  if (r.rows.size() != relay_cells) throw FormatError("relay table has the wrong number of rows");
  t.relay_index.assign(relay_cells, 0);
  for (const auto& row : r.rows) {
    if (row.size() != 5) throw FormatError("relay table row has the wrong number of columns");
    const std::size_t slot = plane ? static_cast<std::size_t>(to_int(row[1])) * t.relay_axis.resolution + to_int(row[0])
                                   : static_cast<std::size_t>(to_int(row[0])) * t.relay_axis.resolution + to_int(row[1]);
    if (slot >= relay_cells) throw FormatError("relay table cell out of range");
    t.relay_index[slot] = to_int(row[4]);
  }

  const std::size_t dest_cells = t.complex ? static_cast<std::size_t>(t.dest_axis.resolution) * t.dest_axis.resolution
                                           : static_cast<std::size_t>(t.dest_axis.resolution);
  const std::size_t first_p = t.complex ? 6 : 5;
  std::map<int, std::size_t> slot_of;
  for (const auto& row : d.rows) {
    if (row.size() != first_p + t.order) throw FormatError("destination table row has the wrong number of columns");
    const int code = to_int(row[0]);
    auto [it, inserted] = slot_of.emplace(code, t.codes.size());
    if (inserted) {
      t.codes.push_back(code);
      t.decisions.emplace_back(dest_cells, 0);
      t.posteriors.emplace_back(dest_cells);
    }
    const std::size_t cell = t.complex ? static_cast<std::size_t>(to_int(row[2])) * t.dest_axis.resolution + to_int(row[1])
                                       : static_cast<std::size_t>(to_int(row[1]));
    if (cell >= dest_cells) throw FormatError("destination table cell out of range");
    t.decisions[it->second][cell] = to_int(row[first_p - 1]);
    auto& p = t.posteriors[it->second][cell];
    p.resize(t.order);
    for (int w = 0; w < t.order; ++w) p[w] = to_double(row[first_p + w]);
  }
  if (!std::is_sorted(t.codes.begin(), t.codes.end())) throw FormatError("destination table codes must be sorted");
  return t;
}

std::string fidelity_csv(const TableFidelity& f, const SnrPair& snr, int resolution) {
  std::string out = schema_line("ncf-table-fidelity");
  out += "# disagreement bounds |table_ser - network_ser|\n";
  out += "gamma_d_db,gamma_r_db,resolution,n_samples,table_ser,network_ser,abs_difference,disagreement\n";
  out += join({fd(linear_to_db(snr.gamma_dest)), fd(linear_to_db(snr.gamma_relay)), std::to_string(resolution),
               std::to_string(f.n_samples), fd(f.table_ser), fd(f.network_ser),
               fd(std::abs(f.table_ser - f.network_ser)), fd(f.disagreement)});
  return out;
}

// -- SVG ---------------------------------------------------------------------

namespace {

std::string color(int k) {
  // Golden-angle hue walk; stable per index.
  const double hue = std::fmod(k * 137.508, 360.0);
  std::ostringstream os;
  os << "hsl(" << static_cast<int>(hue) << ",60%," << (k % 2 ? 72 : 58) << "%)";
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

std::string boundary_svg(const Model& m, const GridAxis& relay_axis, const GridAxis& dest_axis) {
  if (m.constellation.is_complex) throw InvalidArgument("boundary plot needs a real scheme; use the heatmap");
  const double W = 640, H = 480, pad = 50;
  const double pw = W - 2 * pad, ph = H - 2 * pad;
  auto sx = [&](double y) { return pad + (y - dest_axis.lo) / (dest_axis.hi - dest_axis.lo) * pw; };
  auto sy = [&](double y) { return pad + (relay_axis.hi - y) / (relay_axis.hi - relay_axis.lo) * ph; };

  const BoundaryMap b = extract_quantization_boundaries(m, relay_axis);
  const Labels1D& q = b.axes.at(0);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < q.intervals.size(); ++k) {
    if (q.intervals[k].empty()) continue;
    const DecisionRegions d = extract_decision_regions(m, {static_cast<int>(k)}, dest_axis);
    for (const auto& iv : q.intervals[k]) {
      const double top = sy(iv.hi), bottom = sy(iv.lo);
      os << "<rect x=\"" << num(pad) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
         << num(bottom - top) << "\" fill=\"" << color(static_cast<int>(k)) << "\" fill-opacity=\"0.35\"/>\n";
      os << "<line x1=\"" << num(pad) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(pad + pw) << "\" y2=\""
         << num(bottom) << "\" stroke=\"black\" stroke-width=\"0.8\"/>\n";
      for (const auto& th : d.thresholds)
        os << "<line x1=\"" << num(sx(th.position)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(th.position))
           << "\" y2=\"" << num(bottom) << "\" stroke=\"crimson\" stroke-width=\"1.2\"/>\n";
      os << "<text x=\"" << num(pad + 4) << "\" y=\"" << num((top + bottom) / 2 + 4)
         << "\" font-size=\"10\" font-family=\"sans-serif\">u=" << k << "</text>\n";
    }
  }
  os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">y_D (decision thresholds)</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">y_R (quantization cells)</text>\n";
  os << "<text x=\"" << pad << "\" y=\"" << pad + ph + 16 << "\" font-size=\"10\" font-family=\"sans-serif\">"
     << num(dest_axis.lo) << "</text>\n";
  os << "<text x=\"" << pad + pw << "\" y=\"" << pad + ph + 16
     << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << num(dest_axis.hi) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string heatmap_svg(const Labels2D& labels, const std::string& title) {
  const int res = labels.axis.resolution;
  const double size = 512, pad = 40;
  const double cell = size / res;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\"" << size + 2 * pad
     << "\" shape-rendering=\"crispEdges\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  // Merge horizontal runs to keep the file small.
  for (int q = 0; q < res; ++q) {
    const double y = pad + (res - 1 - q) * cell;
    for (int i = 0; i < res;) {
      const int label = labels.label_at(i, q);
      int j = i + 1;
      while (j < res && labels.label_at(j, q) == label) ++j;
      os << "<rect x=\"" << num(pad + i * cell) << "\" y=\"" << num(y) << "\" width=\"" << num((j - i) * cell + 0.01)
         << "\" height=\"" << num(cell + 0.01) << "\" fill=\"" << color(label) << "\"/>\n";
      i = j;
    }
  }
  os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\"" << size
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"" << size + pad + 16 << "\" font-size=\"10\" font-family=\"sans-serif\">I: "
     << num(labels.axis.lo) << " .. " << num(labels.axis.hi) << ", Q upward</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace ncf
