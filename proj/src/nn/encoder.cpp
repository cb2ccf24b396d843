#include "densekit/nn/encoder.hpp"

#include <cmath>

#include "densekit/rng.hpp"

namespace densekit::nn {

namespace {
constexpr Scalar kLnEps = 1e-5;
constexpr Scalar kMaskBias = -1e30;
constexpr Scalar kInitStd = 0.02;

std::string layer_prefix(int l) { return "layer" + std::to_string(l) + "."; }

Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, kInitStd);
  return m;
}
}  // namespace

std::string pooling_name(Pooling p) {
  return p == Pooling::Mean ? "mean" : "cls";
}

Pooling pooling_from_name(const std::string& name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "cls") return Pooling::Cls;
  throw ValidationError("unknown pooling strategy: " + name);
}

void EncoderConfig::validate() const {
  require(num_layers >= 1, "num_layers must be >= 1");
  require(num_heads >= 1, "num_heads must be >= 1");
  require(model_dim >= 1, "model_dim must be >= 1");
  require(ff_dim >= 1, "ff_dim must be >= 1");
  require(max_seq_len >= 2, "max_seq_len must be >= 2");
  require(vocab_size >= 1, "vocab_size must be >= 1");
  require(model_dim % num_heads == 0, "model_dim must be divisible by num_heads");
}

void ParameterSet::add(const std::string& name, Matrix m) {
  require(tensors_.emplace(name, std::move(m)).second,
          "duplicate parameter name: " + name);
  names_.push_back(name);
}

Matrix& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), "unknown parameter: " + name);
  return it->second;
}

const Matrix& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), "unknown parameter: " + name);
  return it->second;
}

long long ParameterSet::scalar_count() const {
  long long n = 0;
  for (const auto& name : names_) n += tensors_.at(name).size();
  return n;
}

bool ParameterSet::same_shapes(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (const auto& name : names_) {
    const Matrix& a = tensors_.at(name);
    const Matrix& b = other.tensors_.at(name);
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  }
  return true;
}

void ParameterSet::check_finite() const {
  for (const auto& name : names_)
    require(tensors_.at(name).allFinite(), "non-finite parameter: " + name);
}

ParameterSet init_parameters(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int d = config.model_dim, f = config.ff_dim;
  ParameterSet p;
  p.add("tok_emb", normal_matrix(rng, config.vocab_size, d));
  p.add("pos_emb", normal_matrix(rng, config.max_seq_len, d));
  p.add("emb_ln_g", Matrix::Ones(1, d));
  p.add("emb_ln_b", Matrix::Zero(1, d));
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string pre = layer_prefix(l);
    p.add(pre + "wq", normal_matrix(rng, d, d));
    p.add(pre + "bq", Matrix::Zero(1, d));
    p.add(pre + "wk", normal_matrix(rng, d, d));
    p.add(pre + "bk", Matrix::Zero(1, d));
    p.add(pre + "wv", normal_matrix(rng, d, d));
    p.add(pre + "bv", Matrix::Zero(1, d));
    p.add(pre + "wo", normal_matrix(rng, d, d));
    p.add(pre + "bo", Matrix::Zero(1, d));
    p.add(pre + "ln1_g", Matrix::Ones(1, d));
    p.add(pre + "ln1_b", Matrix::Zero(1, d));
    p.add(pre + "ff1_w", normal_matrix(rng, d, f));
    p.add(pre + "ff1_b", Matrix::Zero(1, f));
    p.add(pre + "ff2_w", normal_matrix(rng, f, d));
    p.add(pre + "ff2_b", Matrix::Zero(1, d));
    p.add(pre + "ln2_g", Matrix::Ones(1, d));
    p.add(pre + "ln2_b", Matrix::Zero(1, d));
  }
  p.add("mlm_w", normal_matrix(rng, d, d));
  p.add("mlm_b", Matrix::Zero(1, d));
  p.add("mlm_ln_g", Matrix::Ones(1, d));
  p.add("mlm_ln_b", Matrix::Zero(1, d));
  p.add("mlm_out_w", normal_matrix(rng, d, config.vocab_size));
  p.add("mlm_out_b", Matrix::Zero(1, config.vocab_size));
  return p;
}

long long parameter_count(const EncoderConfig& c) {
  const long long V = c.vocab_size, d = c.model_dim, f = c.ff_dim,
                  S = c.max_seq_len, L = c.num_layers;
  return V * d + S * d + 2 * d +
         L * (4 * (d * d + d) + 4 * d + d * f + f + f * d + d) +
         (d * d + d) + 2 * d + d * V + V;
}

ParamVars param_leaves(Tape& tape, const ParameterSet& params) {
  ParamVars vars;
  for (const auto& name : params.names()) vars[name] = tape.leaf(params.at(name));
  return vars;
}

ParamVars param_constants(Tape& tape, const ParameterSet& params) {
  ParamVars vars;
  for (const auto& name : params.names())
    vars[name] = tape.constant(params.at(name));
  return vars;
}

namespace {
Var pvar(const ParamVars& params, const std::string& name) {
  auto it = params.find(name);
  require(it != params.end(), "missing parameter var: " + name);
  return it->second;
}

Var linear(Tape& t, Var x, const ParamVars& p, const std::string& w,
           const std::string& b) {
  return t.add_row_broadcast(t.matmul(x, pvar(p, w)), pvar(p, b));
}
}  // namespace

TraceVars encoder_forward(Tape& tape, const EncoderConfig& config,
                          const ParamVars& params, const std::vector<int>& ids,
                          const std::vector<std::uint8_t>& pad_mask) {
  config.validate();
  const int seq = static_cast<int>(ids.size());
  require(seq >= 1, "empty id sequence");
  require(seq <= config.max_seq_len,
          "sequence length " + std::to_string(seq) + " exceeds max_seq_len " +
              std::to_string(config.max_seq_len));
  require(pad_mask.size() == ids.size(), "pad_mask length mismatch");
  for (int id : ids)
    require(id >= 0 && id < config.vocab_size,
            "token id out of range: " + std::to_string(id));

  TraceVars trace;
  trace.pad_mask = pad_mask;
  for (int i = 0; i < seq; ++i)
    if (!pad_mask[static_cast<std::size_t>(i)]) trace.non_pad.push_back(i);
  require(!trace.non_pad.empty(), "all positions are padding");

  std::vector<int> positions(static_cast<std::size_t>(seq));
  for (int i = 0; i < seq; ++i) positions[static_cast<std::size_t>(i)] = i;

  Var x = tape.add(tape.gather_rows(pvar(params, "tok_emb"), ids),
                   tape.gather_rows(pvar(params, "pos_emb"), positions));
  x = tape.layer_norm_rows(x, pvar(params, "emb_ln_g"), pvar(params, "emb_ln_b"),
                           kLnEps);

  // Additive attention bias: padded key columns are unreachable from any row.
  Matrix bias = Matrix::Zero(seq, seq);
  for (int j = 0; j < seq; ++j)
    if (pad_mask[static_cast<std::size_t>(j)]) bias.col(j).setConstant(kMaskBias);
  Var attn_bias = tape.constant(bias);

  const int d = config.model_dim;
  const int head_dim = d / config.num_heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));

  for (int l = 0; l < config.num_layers; ++l) {
    const std::string pre = layer_prefix(l);
    Var q = linear(tape, x, params, pre + "wq", pre + "bq");
    Var k = linear(tape, x, params, pre + "wk", pre + "bk");
    Var v = linear(tape, x, params, pre + "wv", pre + "bv");
    trace.queries.push_back(q);
    trace.keys.push_back(k);
    trace.values.push_back(v);

    std::vector<Var> heads;
    for (int h = 0; h < config.num_heads; ++h) {
      std::vector<int> cols(static_cast<std::size_t>(head_dim));
      for (int c = 0; c < head_dim; ++c)
        cols[static_cast<std::size_t>(c)] = h * head_dim + c;
      Var qh = tape.gather_cols(q, cols);
      Var kh = tape.gather_cols(k, cols);
      Var vh = tape.gather_cols(v, cols);
      Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt);
      scores = tape.add(scores, attn_bias);
      Var attn = tape.softmax_rows(scores);
      heads.push_back(tape.matmul(attn, vh));
    }
    Var attn_out = linear(tape, tape.concat_cols(heads), params, pre + "wo",
                          pre + "bo");
    x = tape.layer_norm_rows(tape.add(x, attn_out), pvar(params, pre + "ln1_g"),
                             pvar(params, pre + "ln1_b"), kLnEps);

    Var hidden = tape.gelu(linear(tape, x, params, pre + "ff1_w", pre + "ff1_b"));
    Var ff_out = linear(tape, hidden, params, pre + "ff2_w", pre + "ff2_b");
    x = tape.layer_norm_rows(tape.add(x, ff_out), pvar(params, pre + "ln2_g"),
                             pvar(params, pre + "ln2_b"), kLnEps);
  }
  trace.hidden = x;
  return trace;
}

Var pool_embedding(Tape& tape, const TraceVars& trace, Pooling strategy) {
  require(!trace.non_pad.empty(), "pooling requires at least one non-pad position");
  if (strategy == Pooling::Mean) return tape.mean_rows(trace.hidden, trace.non_pad);
  require(!trace.pad_mask.empty() && trace.pad_mask[0] == 0,
          "cls pooling requires a non-pad first position");
  return tape.gather_rows(trace.hidden, {0});
}

Var mlm_head(Tape& tape, const ParamVars& params, const TraceVars& trace) {
  Var h = tape.gelu(linear(tape, trace.hidden, params, "mlm_w", "mlm_b"));
  h = tape.layer_norm_rows(h, pvar(params, "mlm_ln_g"), pvar(params, "mlm_ln_b"),
                           kLnEps);
  return linear(tape, h, params, "mlm_out_w", "mlm_out_b");
}

ForwardTrace forward(const EncoderConfig& config, const ParameterSet& params,
                     const std::vector<int>& ids,
                     const std::vector<std::uint8_t>& pad_mask) {
  Tape tape;
  ParamVars vars = param_constants(tape, params);
  TraceVars t = encoder_forward(tape, config, vars, ids, pad_mask);
  ForwardTrace out;
  out.hidden = t.hidden.value();
  for (std::size_t l = 0; l < t.queries.size(); ++l) {
    out.queries.push_back(t.queries[l].value());
    out.keys.push_back(t.keys[l].value());
    out.values.push_back(t.values[l].value());
  }
  out.pad_mask = t.pad_mask;
  out.non_pad = t.non_pad;
  return out;
}

Matrix pool(const ForwardTrace& trace, Pooling strategy) {
  require(!trace.non_pad.empty(), "pooling requires at least one non-pad position");
  if (strategy == Pooling::Mean) {
    Matrix out = Matrix::Zero(1, trace.hidden.cols());
    for (int i : trace.non_pad) out.row(0) += trace.hidden.row(i);
    out /= static_cast<Scalar>(trace.non_pad.size());
    return out;
  }
  require(!trace.pad_mask.empty() && trace.pad_mask[0] == 0,
          "cls pooling requires a non-pad first position");
  return trace.hidden.row(0);
}

Matrix mlm_logits(const EncoderConfig& config, const ParameterSet& params,
                  const std::vector<int>& ids,
                  const std::vector<std::uint8_t>& pad_mask) {
  Tape tape;
  ParamVars vars = param_constants(tape, params);
  TraceVars t = encoder_forward(tape, config, vars, ids, pad_mask);
  return mlm_head(tape, vars, t).value();
}

}  // namespace densekit::nn
