#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "densekit/common.hpp"
#include "densekit/nn/tape.hpp"

namespace densekit::nn {

enum class Pooling { Mean, Cls };

std::string pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

struct EncoderConfig {
  int num_layers = 2;
  int num_heads = 2;
  int model_dim = 32;
  int ff_dim = 64;
  int max_seq_len = 64;
  int vocab_size = 261;
  Pooling pooling = Pooling::Mean;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Named weight tensors in a fixed insertion order (the checkpoint layout and
/// the optimizer walk both follow it).
class ParameterSet {
 public:
  void add(const std::string& name, Matrix m);
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  bool has(const std::string& name) const { return tensors_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }
  long long scalar_count() const;
  bool same_shapes(const ParameterSet& other) const;
  void check_finite() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Matrix> tensors_;
};

/// normal(0, 0.02) projections and embeddings, ones/zeros layer norms.
ParameterSet init_parameters(const EncoderConfig& config, std::uint64_t seed);

/// Closed form for the number of trainable scalars:
///   V*d + S*d + 2d                      embeddings + embedding layer norm
/// + L * (4*(d*d + d) + 4d               attention projections + 2 layer norms
///        + d*f + f + f*d + d)           feed-forward
/// + (d*d + d) + 2d + d*V + V            MLM head (dense, norm, output)
/// with V = vocab_size, d = model_dim, f = ff_dim, S = max_seq_len,
/// L = num_layers.
long long parameter_count(const EncoderConfig& config);

/// Per-parameter Vars on a tape; leaves for training, constants for frozen
/// (teacher) models.
using ParamVars = std::unordered_map<std::string, Var>;
ParamVars param_leaves(Tape& tape, const ParameterSet& params);
ParamVars param_constants(Tape& tape, const ParameterSet& params);

/// Forward products kept for pooling, the MLM head, and attention-relation
/// distillation. pad_mask entries: 1 = padded position.
struct TraceVars {
  Var hidden;                       // seq x d
  std::vector<Var> queries, keys, values;  // per layer, seq x d
  std::vector<std::uint8_t> pad_mask;
  std::vector<int> non_pad;
};

/// Value-level mirror of TraceVars.
struct ForwardTrace {
  Matrix hidden;
  std::vector<Matrix> queries, keys, values;
  std::vector<std::uint8_t> pad_mask;
  std::vector<int> non_pad;
};

TraceVars encoder_forward(Tape& tape, const EncoderConfig& config,
                          const ParamVars& params, const std::vector<int>& ids,
                          const std::vector<std::uint8_t>& pad_mask);

/// Mean pooling averages non-pad rows; CLS returns row 0. 1xd result.
Var pool_embedding(Tape& tape, const TraceVars& trace, Pooling strategy);

/// Per-position vocabulary logits, seq x vocab_size.
Var mlm_head(Tape& tape, const ParamVars& params, const TraceVars& trace);

// --- value-level wrappers (fresh tape per call, constants only) ---
ForwardTrace forward(const EncoderConfig& config, const ParameterSet& params,
                     const std::vector<int>& ids,
                     const std::vector<std::uint8_t>& pad_mask);
Matrix pool(const ForwardTrace& trace, Pooling strategy);
Matrix mlm_logits(const EncoderConfig& config, const ParameterSet& params,
                  const std::vector<int>& ids,
                  const std::vector<std::uint8_t>& pad_mask);

}  // namespace densekit::nn
