#pragma once

// Learned compress-and-forward schemes: relay encoder(s), entropy model and
// destination demodulator.
//
// Relay indices are 0-based everywhere in the library and in every file the
// tools write. In split I/Q mode branch 0 compresses the in-phase component
// and branch 1 the quadrature component of y_R.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "channel.hpp"
#include "nnkit.hpp"

namespace ncf {

enum class Variant { kMarginal, kConditional, kP2p };
enum class IqMode { kJoint, kSplit };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::string_view iq_mode_name(IqMode m);
IqMode parse_iq_mode(std::string_view name);

struct Architecture {
  Variant variant = Variant::kMarginal;
  IqMode iq_mode = IqMode::kJoint;
  int codebook_size = 32;            // K, per encoder
  std::vector<int> hidden = {100, 100};
};

struct Model {
  Architecture arch;
  Constellation constellation;
  std::vector<nn::Mlp> encoders;          // one per branch
  std::vector<nn::Vector> entropy_logits;  // marginal / p2p: free logits per branch
  std::vector<nn::Mlp> entropy_nets;       // conditional: y_D features -> K logits, per branch
  nn::Mlp demodulator;                     // [u blocks ; y_D features] -> |X| logits
  std::optional<nn::Mlp> pretrain_demodulator;  // p2p stage 1: [u blocks] -> |X| logits
  std::map<std::string, std::string> metadata;

  int branches() const { return static_cast<int>(encoders.size()); }
  int codebook_size() const { return arch.codebook_size; }
  int dest_dim() const { return constellation.feature_dim(); }
  int order() const { return constellation.order(); }
};

Model build_model(const Architecture& arch, const Constellation& c, Rng& rng);
// Structure check (shapes, variant invariants, finiteness).
void validate(const Model& m);
// Parameter-shaped copy with all entries zero; used to hold gradients.
Model zeros_like(const Model& m);

struct ParamBlock {
  std::string name;
  std::span<double> data;
  long rows = 0;
  long cols = 0;
};
// Every learnable block with a stable dotted name, e.g. "encoder.0.layer.1.weight",
// "entropy.0.logits", "demod.layer.2.bias", "pretrain_demod.layer.0.weight".
std::vector<ParamBlock> named_parameters(Model& m);

struct ConstParamBlock {
  std::string name;
  std::span<const double> data;
  long rows = 0;
  long cols = 0;
};
std::vector<ConstParamBlock> named_parameters(const Model& m);

// Per-branch encoder inputs from relay observations (feature_dim x n).
std::vector<nn::Matrix> encoder_inputs(const Model& m, const nn::Matrix& y_relay);
// Raw logits per branch (K x n each).
std::vector<nn::Matrix> encoder_logits(const Model& m, const nn::Matrix& y_relay);
// Hard index per branch and sample: argmax with smallest-index tie-break.
std::vector<std::vector<int>> encode_hard(const Model& m, const nn::Matrix& y_relay);

// log2 q(k [| y_D]) for every k (K x n per branch). y_dest may be empty for
// marginal/p2p models; conditional models reject an empty y_dest.
std::vector<nn::Matrix> entropy_log2_table(const Model& m, const nn::Matrix* y_dest, int n);
// log2 probability of the given indices, summed over branches, one per sample.
nn::Vector entropy_model_logprob(const Model& m, const std::vector<std::vector<int>>& u,
                                 const nn::Matrix* y_dest = nullptr);

// One-hot blocks (K x n per branch) for hard indices.
std::vector<nn::Matrix> one_hot(const Model& m, const std::vector<std::vector<int>>& u);
// Concatenate relay blocks and (optionally) y_D features into network inputs.
nn::Matrix demod_input(const std::vector<nn::Matrix>& u_blocks, const nn::Matrix* y_dest);

// Demodulator logits / posteriors (|X| x n). u_blocks are one-hot or simplex.
nn::Matrix demod_logits(const Model& m, const nn::Matrix& y_dest, const std::vector<nn::Matrix>& u_blocks);
nn::Matrix demod_posterior(const Model& m, const nn::Matrix& y_dest, const std::vector<nn::Matrix>& u_blocks);
nn::Matrix demod_posterior(const Model& m, const nn::Matrix& y_dest, const std::vector<std::vector<int>>& u);

// argmax with smallest-index tie-break.
int hard_decide(const nn::Vector& posterior);

inline constexpr int kModelFormatVersion = 1;
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);
std::string serialize_model(const Model& m);
Model deserialize_model(const std::string& text);

}  // namespace ncf
