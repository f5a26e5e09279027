#include "models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace ncf {

using nlohmann::json;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kMarginal: return "marginal";
    case Variant::kConditional: return "conditional";
    case Variant::kP2p: return "p2p";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "marginal" || name == "marg") return Variant::kMarginal;
  if (name == "conditional" || name == "cond") return Variant::kConditional;
  if (name == "p2p" || name == "point-to-point") return Variant::kP2p;
  throw InvalidArgument("unknown variant '" + std::string(name) + "'");
}

std::string_view iq_mode_name(IqMode m) { return m == IqMode::kJoint ? "joint" : "split"; }

IqMode parse_iq_mode(std::string_view name) {
  if (name == "joint") return IqMode::kJoint;
  if (name == "split") return IqMode::kSplit;
  throw InvalidArgument("unknown iq_mode '" + std::string(name) + "'");
}

namespace {

std::vector<int> dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

}  // namespace

Model build_model(const Architecture& arch, const Constellation& c, Rng& rng) {
  if (arch.codebook_size < 2) throw InvalidArgument("codebook size K must be >= 2");
  for (int h : arch.hidden)
    if (h <= 0) throw InvalidArgument("hidden layer sizes must be positive");
  if (arch.iq_mode == IqMode::kSplit && !c.is_complex)
    throw InvalidArgument("split I/Q mode requires a complex constellation");

  Model m;
  m.arch = arch;
  m.constellation = c;
  const int branches = arch.iq_mode == IqMode::kSplit ? 2 : 1;
  const int enc_in = arch.iq_mode == IqMode::kSplit ? 1 : c.feature_dim();
  const int k = arch.codebook_size;
  for (int b = 0; b < branches; ++b) m.encoders.push_back(nn::make_mlp(dims(enc_in, arch.hidden, k), rng));
  if (arch.variant == Variant::kConditional) {
    for (int b = 0; b < branches; ++b)
      m.entropy_nets.push_back(nn::make_mlp(dims(c.feature_dim(), arch.hidden, k), rng));
  } else {
    for (int b = 0; b < branches; ++b) m.entropy_logits.push_back(nn::Vector::Zero(k));
  }
  m.demodulator = nn::make_mlp(dims(branches * k + c.feature_dim(), arch.hidden, c.order()), rng);
  if (arch.variant == Variant::kP2p)
    m.pretrain_demodulator = nn::make_mlp(dims(branches * k, arch.hidden, c.order()), rng);
  return m;
}

void validate(const Model& m) {
  const int branches = m.arch.iq_mode == IqMode::kSplit ? 2 : 1;
  const int k = m.arch.codebook_size;
  if (m.branches() != branches) throw FormatError("encoder count does not match iq_mode");
  if (m.arch.iq_mode == IqMode::kSplit && !m.constellation.is_complex)
    throw FormatError("split I/Q model with a real constellation");
  const int enc_in = m.arch.iq_mode == IqMode::kSplit ? 1 : m.dest_dim();
  for (const auto& e : m.encoders) {
    nn::validate(e);
    if (e.input_dim() != enc_in || e.output_dim() != k) throw FormatError("encoder shape mismatch");
  }
  if (m.arch.variant == Variant::kConditional) {
    if (static_cast<int>(m.entropy_nets.size()) != branches || !m.entropy_logits.empty())
      throw FormatError("conditional model needs one entropy network per branch");
    for (const auto& e : m.entropy_nets) {
      nn::validate(e);
      if (e.input_dim() != m.dest_dim() || e.output_dim() != k) throw FormatError("entropy net shape mismatch");
    }
  } else {
    if (static_cast<int>(m.entropy_logits.size()) != branches || !m.entropy_nets.empty())
      throw FormatError("marginal/p2p model needs free entropy logits per branch");
    for (const auto& l : m.entropy_logits)
      if (l.size() != k || !l.allFinite()) throw FormatError("entropy logits shape mismatch");
  }
  nn::validate(m.demodulator);
  if (m.demodulator.input_dim() != branches * k + m.dest_dim() || m.demodulator.output_dim() != m.order())
    throw FormatError("demodulator shape mismatch");
  if (m.arch.variant == Variant::kP2p) {
    if (!m.pretrain_demodulator) throw FormatError("p2p model without pretrain demodulator");
    nn::validate(*m.pretrain_demodulator);
    if (m.pretrain_demodulator->input_dim() != branches * k || m.pretrain_demodulator->output_dim() != m.order())
      throw FormatError("pretrain demodulator shape mismatch");
  } else if (m.pretrain_demodulator) {
    throw FormatError("pretrain demodulator present on a non-p2p model");
  }
}

Model zeros_like(const Model& m) {
  Model z;
  z.arch = m.arch;
  z.constellation = m.constellation;
  for (const auto& e : m.encoders) z.encoders.push_back(nn::zeros_like(e));
  for (const auto& l : m.entropy_logits) z.entropy_logits.push_back(nn::Vector::Zero(l.size()));
  for (const auto& e : m.entropy_nets) z.entropy_nets.push_back(nn::zeros_like(e));
  z.demodulator = nn::zeros_like(m.demodulator);
  if (m.pretrain_demodulator) z.pretrain_demodulator = nn::zeros_like(*m.pretrain_demodulator);
  return z;
}

namespace {

void add_mlp(std::vector<ParamBlock>& out, const std::string& prefix, nn::Mlp& mlp) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    auto& l = mlp.layers[i];
    const std::string base = prefix + ".layer." + std::to_string(i);
    out.push_back({base + ".weight", {l.weight.data(), static_cast<std::size_t>(l.weight.size())},
                   l.weight.rows(), l.weight.cols()});
    out.push_back({base + ".bias", {l.bias.data(), static_cast<std::size_t>(l.bias.size())}, l.bias.size(), 1});
  }
}

}  // namespace

std::vector<ParamBlock> named_parameters(Model& m) {
  std::vector<ParamBlock> out;
  for (std::size_t b = 0; b < m.encoders.size(); ++b) add_mlp(out, "encoder." + std::to_string(b), m.encoders[b]);
  for (std::size_t b = 0; b < m.entropy_logits.size(); ++b) {
    auto& l = m.entropy_logits[b];
    out.push_back({"entropy." + std::to_string(b) + ".logits", {l.data(), static_cast<std::size_t>(l.size())},
                   l.size(), 1});
  }
  for (std::size_t b = 0; b < m.entropy_nets.size(); ++b)
    add_mlp(out, "entropy_net." + std::to_string(b), m.entropy_nets[b]);
  add_mlp(out, "demod", m.demodulator);
  if (m.pretrain_demodulator) add_mlp(out, "pretrain_demod", *m.pretrain_demodulator);
  return out;
}

std::vector<nn::Matrix> encoder_inputs(const Model& m, const nn::Matrix& y_relay) {
  if (y_relay.rows() != m.dest_dim())
    throw InvalidArgument("relay observation has " + std::to_string(y_relay.rows()) + " features, expected " +
                          std::to_string(m.dest_dim()));
  if (m.arch.iq_mode == IqMode::kJoint) return {y_relay};
  return {nn::Matrix(y_relay.row(0)), nn::Matrix(y_relay.row(1))};
}

std::vector<nn::Matrix> encoder_logits(const Model& m, const nn::Matrix& y_relay) {
  auto inputs = encoder_inputs(m, y_relay);
  std::vector<nn::Matrix> out;
  for (int b = 0; b < m.branches(); ++b) out.push_back(nn::forward_batch(m.encoders[b], inputs[b]));
  return out;
}

std::vector<std::vector<int>> encode_hard(const Model& m, const nn::Matrix& y_relay) {
  const auto logits = encoder_logits(m, y_relay);
  std::vector<std::vector<int>> u(logits.size());
  for (std::size_t b = 0; b < logits.size(); ++b) {
    u[b].resize(logits[b].cols());
    for (Eigen::Index i = 0; i < logits[b].cols(); ++i)
      u[b][i] = nn::argmax(std::span<const double>(logits[b].col(i).data(), logits[b].rows()));
  }
  return u;
}

std::vector<nn::Matrix> entropy_log2_table(const Model& m, const nn::Matrix* y_dest, int n) {
  std::vector<nn::Matrix> out;
  const double inv_ln2 = 1.0 / std::log(2.0);
  if (m.arch.variant == Variant::kConditional) {
    if (y_dest == nullptr || y_dest->cols() == 0)
      throw InvalidArgument("conditional entropy model requires y_D");
    if (y_dest->rows() != m.dest_dim()) throw InvalidArgument("y_D feature count mismatch");
    for (const auto& net : m.entropy_nets) out.push_back(nn::log_softmax_cols(nn::forward_batch(net, *y_dest)) * inv_ln2);
  } else {
    for (const auto& l : m.entropy_logits) {
      nn::Vector lp = nn::log_softmax(l) * inv_ln2;
      out.push_back(lp.replicate(1, n));
    }
  }
  return out;
}

nn::Vector entropy_model_logprob(const Model& m, const std::vector<std::vector<int>>& u, const nn::Matrix* y_dest) {
  if (static_cast<int>(u.size()) != m.branches()) throw InvalidArgument("index branch count mismatch");
  const int n = static_cast<int>(u[0].size());
  const auto table = entropy_log2_table(m, y_dest, n);
  nn::Vector out = nn::Vector::Zero(n);
  for (int b = 0; b < m.branches(); ++b) {
    if (static_cast<int>(u[b].size()) != n) throw InvalidArgument("index branch lengths differ");
    for (int i = 0; i < n; ++i) {
      if (u[b][i] < 0 || u[b][i] >= m.codebook_size()) throw InvalidArgument("relay index out of range");
      out[i] += table[b](u[b][i], i);
    }
  }
  return out;
}

std::vector<nn::Matrix> one_hot(const Model& m, const std::vector<std::vector<int>>& u) {
  std::vector<nn::Matrix> out;
  for (const auto& branch : u) {
    nn::Matrix oh = nn::Matrix::Zero(m.codebook_size(), static_cast<Eigen::Index>(branch.size()));
    for (std::size_t i = 0; i < branch.size(); ++i) {
      if (branch[i] < 0 || branch[i] >= m.codebook_size()) throw InvalidArgument("relay index out of range");
      oh(branch[i], static_cast<Eigen::Index>(i)) = 1.0;
    }
    out.push_back(std::move(oh));
  }
  return out;
}

nn::Matrix demod_input(const std::vector<nn::Matrix>& u_blocks, const nn::Matrix* y_dest) {
  Eigen::Index rows = 0;
  const Eigen::Index n = u_blocks.empty() ? (y_dest ? y_dest->cols() : 0) : u_blocks.front().cols();
  for (const auto& b : u_blocks) {
    if (b.cols() != n) throw InvalidArgument("relay blocks have different sample counts");
    rows += b.rows();
  }
  if (y_dest) {
    if (y_dest->cols() != n) throw InvalidArgument("y_D sample count differs from relay blocks");
    rows += y_dest->rows();
  }
  nn::Matrix in(rows, n);
  Eigen::Index r = 0;
  for (const auto& b : u_blocks) {
    in.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  if (y_dest) in.middleRows(r, y_dest->rows()) = *y_dest;
  return in;
}

nn::Matrix demod_logits(const Model& m, const nn::Matrix& y_dest, const std::vector<nn::Matrix>& u_blocks) {
  if (static_cast<int>(u_blocks.size()) != m.branches()) throw InvalidArgument("relay block count mismatch");
  for (const auto& b : u_blocks)
    if (b.rows() != m.codebook_size()) throw InvalidArgument("relay block must have K rows");
  if (y_dest.rows() != m.dest_dim()) throw InvalidArgument("y_D feature count mismatch");
  return nn::forward_batch(m.demodulator, demod_input(u_blocks, &y_dest));
}

nn::Matrix demod_posterior(const Model& m, const nn::Matrix& y_dest, const std::vector<nn::Matrix>& u_blocks) {
  return nn::softmax_cols(demod_logits(m, y_dest, u_blocks));
}

nn::Matrix demod_posterior(const Model& m, const nn::Matrix& y_dest, const std::vector<std::vector<int>>& u) {
  return demod_posterior(m, y_dest, one_hot(m, u));
}

int hard_decide(const nn::Vector& posterior) { return nn::argmax(posterior); }

// ---------------------------------------------------------------------------
// Model container: a JSON document
//   { "format": "ncf-model", "version": 1, "variant", "iq_mode", "codebook_size",
//     "hidden", "scheme", "power", "metadata": {...},
//     "tensors": [ { "name", "shape": [rows, cols], "data": [row-major values] } ] }

std::vector<ConstParamBlock> named_parameters(const Model& m) {
  std::vector<ConstParamBlock> out;
  for (const auto& p : named_parameters(const_cast<Model&>(m))) out.push_back({p.name, p.data, p.rows, p.cols});
  return out;
}

std::string serialize_model(const Model& m) {
  json doc;
  doc["format"] = "ncf-model";
  doc["version"] = kModelFormatVersion;
  doc["variant"] = std::string(variant_name(m.arch.variant));
  doc["iq_mode"] = std::string(iq_mode_name(m.arch.iq_mode));
  doc["codebook_size"] = m.arch.codebook_size;
  doc["hidden"] = m.arch.hidden;
  doc["scheme"] = std::string(scheme_name(m.constellation.scheme));
  doc["power"] = m.constellation.power;
  doc["metadata"] = m.metadata;
  json tensors = json::array();
  for (const auto& p : named_parameters(m)) {
    json t;
    t["name"] = p.name;
    t["shape"] = {p.rows, p.cols};
    std::vector<double> row_major(p.data.size());
    for (long r = 0; r < p.rows; ++r)
      for (long c = 0; c < p.cols; ++c) row_major[r * p.cols + c] = p.data[c * p.rows + r];
    t["data"] = row_major;
    tensors.push_back(std::move(t));
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump(1) + "\n";
}

Model deserialize_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "ncf-model") throw FormatError("not an ncf-model container");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw FormatError("unsupported model format version " + std::to_string(version));
    Architecture arch;
    arch.variant = parse_variant(doc.at("variant").get<std::string>());
    arch.iq_mode = parse_iq_mode(doc.at("iq_mode").get<std::string>());
    arch.codebook_size = doc.at("codebook_size").get<int>();
    arch.hidden = doc.at("hidden").get<std::vector<int>>();
    const auto c = make_constellation(parse_scheme(doc.at("scheme").get<std::string>()), doc.at("power").get<double>());
    Rng dummy(0);
    Model m = build_model(arch, c, dummy);
    m.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
    auto params = named_parameters(m);
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != params.size())
      throw FormatError("model has " + std::to_string(tensors.size()) + " tensors, architecture needs " +
                        std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = tensors[i];
      auto& p = params[i];
      if (t.at("name").get<std::string>() != p.name)
        throw FormatError("tensor " + std::to_string(i) + " is '" + t.at("name").get<std::string>() + "', expected '" +
                          p.name + "'");
      const auto shape = t.at("shape").get<std::vector<long>>();
      if (shape.size() != 2 || shape[0] != p.rows || shape[1] != p.cols)
        throw FormatError("tensor '" + p.name + "' has the wrong shape");
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != p.data.size()) throw FormatError("tensor '" + p.name + "' has the wrong element count");
      for (long r = 0; r < p.rows; ++r)
        for (long col = 0; col < p.cols; ++col) p.data[col * p.rows + r] = data[r * p.cols + col];
    }
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const Model& m, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out << serialize_model(m);
    if (!out) throw IoError("failed writing model file '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move model file into '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("model file not found: '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace ncf
