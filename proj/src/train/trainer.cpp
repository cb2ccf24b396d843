#include "densekit/train/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "densekit/train/masking.hpp"
#include "json.hpp"

namespace densekit::train {

using nn::Tape;
using nn::Var;

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::Mlm: return "mlm";
    case Objective::Contrastive: return "contrastive";
    case Objective::EmbeddingKd: return "embedding-kd";
    case Objective::RelationKd: return "relation-kd";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "mlm") return Objective::Mlm;
  if (name == "contrastive") return Objective::Contrastive;
  if (name == "embedding-kd") return Objective::EmbeddingKd;
  if (name == "relation-kd") return Objective::RelationKd;
  throw ValidationError("unknown objective: " + name);
}

void StagePlan::validate() const {
  require(!stages.empty(), "plan has no stages");
  require(tau > 0, "tau must be positive");
  require(kd.tau_kd > 0, "tau_kd must be positive");
  require(mask_prob >= 0 && mask_prob <= 1, "mask_prob must lie in [0,1]");
  require(warmup_fraction >= 0 && warmup_fraction < 1,
          "warmup_fraction must lie in [0,1)");
  for (const auto& s : stages) {
    require(s.steps >= 0, "stage steps must be >= 0");
    require(s.batch_size >= 1, "stage batch size must be >= 1");
    require(s.lr > 0, "stage learning rate must be positive");
  }
}

std::string to_jsonl(const TrainLogEntry& e) {
  nlohmann::json j;
  j["step"] = e.step;
  j["stage"] = e.stage;
  j["loss"] = e.loss_name;
  j["value"] = e.value;
  j["lr"] = e.lr;
  return j.dump();
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string batch_fingerprint(const ProportionalSampler::Batch& batch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Record* r : batch.records) {
    h = fnv1a(r->query, h);
    h = fnv1a(r->positive, h);
    for (const auto& n : r->negatives) h = fnv1a(n, h);
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

Scalar schedule_lr(Scalar base, int step_in_stage, int total_steps,
                   double warmup_fraction) {
  if (total_steps <= 1) return base;
  const int warmup = std::max(1, static_cast<int>(std::ceil(
                                     warmup_fraction * total_steps)));
  if (step_in_stage <= warmup)
    return base * static_cast<Scalar>(step_in_stage) /
           static_cast<Scalar>(warmup);
  return base * static_cast<Scalar>(total_steps - step_in_stage + 1) /
         static_cast<Scalar>(total_steps - warmup);
}

std::vector<const DataSource*> select_sources(
    const std::vector<DataSource>& all, const std::vector<std::string>& names) {
  std::vector<const DataSource*> out;
  if (names.empty()) {
    for (const auto& s : all) out.push_back(&s);
    return out;
  }
  for (const auto& name : names) {
    const DataSource* found = nullptr;
    for (const auto& s : all)
      if (s.name() == name) found = &s;
    require(found != nullptr, "stage references unknown source: " + name);
    out.push_back(found);
  }
  return out;
}

struct StepContext {
  const nn::EncoderConfig& config;
  const bpe::TokenizerModel& tokenizer;
  const StagePlan& plan;
  const nn::Checkpoint* teacher;
};

std::vector<std::uint8_t> no_padding(std::size_t n) {
  return std::vector<std::uint8_t>(n, 0);
}

Var pooled_embedding(Tape& tape, const StepContext& ctx, const nn::ParamVars& vars,
                     const std::string& text) {
  auto ids = bpe::encode_truncated(ctx.tokenizer, text, ctx.config.max_seq_len);
  auto trace = nn::encoder_forward(tape, ctx.config, vars, ids, no_padding(ids.size()));
  return nn::pool_embedding(tape, trace, ctx.config.pooling);
}

Var contrastive_step_loss(Tape& tape, const StepContext& ctx,
                          const nn::ParamVars& vars,
                          const ProportionalSampler::Batch& batch) {
  std::vector<Var> q_rows, p_rows;
  std::vector<Var> neg_mats;
  bool any_negatives = false;
  for (const Record* r : batch.records) {
    require(!r->positive.empty(),
            "contrastive stage needs (query, positive) pairs");
    q_rows.push_back(pooled_embedding(tape, ctx, vars, r->query));
    p_rows.push_back(pooled_embedding(tape, ctx, vars, r->positive));
    if (r->negatives.empty()) {
      neg_mats.push_back(Var{});
    } else {
      any_negatives = true;
      std::vector<Var> rows;
      for (const auto& n : r->negatives)
        rows.push_back(pooled_embedding(tape, ctx, vars, n));
      neg_mats.push_back(tape.concat_rows(rows));
    }
  }
  Var q = tape.concat_rows(q_rows);
  Var p = tape.concat_rows(p_rows);
  if (!any_negatives) neg_mats.clear();
  return objectives::contrastive_loss(tape, q, p, neg_mats, ctx.plan.tau);
}

Var mlm_step_loss(Tape& tape, const StepContext& ctx, const nn::ParamVars& vars,
                  const ProportionalSampler::Batch& batch, std::uint64_t step_seed) {
  std::vector<Var> picked_rows;
  long long total_masked = 0;
  for (std::size_t b = 0; b < batch.records.size(); ++b) {
    const std::string& text = batch.records[b]->query;
    auto ids = bpe::encode_truncated(ctx.tokenizer, text, ctx.config.max_seq_len);
    // Re-roll (deterministically) until the batch has at least one masked
    // position overall; a single sequence may legitimately come up empty.
    MaskResult mask;
    for (std::uint64_t attempt = 0;; ++attempt) {
      mask = mask_tokens(ids, ctx.plan.mask_prob,
                         Rng::derive(step_seed, b * 1024 + attempt),
                         ctx.tokenizer.mask_id(), ctx.config.vocab_size,
                         ctx.tokenizer.num_specials());
      if (!mask.positions.empty() || ctx.plan.mask_prob == 0.0 ||
          b + 1 < batch.records.size() || total_masked > 0 || attempt >= 16)
        break;
    }
    if (mask.positions.empty()) continue;
    total_masked += static_cast<long long>(mask.positions.size());
    auto trace = nn::encoder_forward(tape, ctx.config, vars, mask.corrupted,
                                     no_padding(mask.corrupted.size()));
    Var logits = nn::mlm_head(tape, vars, trace);
    Var rows = tape.gather_rows(logits, mask.positions);
    Var log_p = tape.log_softmax_rows(rows);
    std::vector<std::pair<int, int>> picks;
    for (std::size_t k = 0; k < mask.labels.size(); ++k)
      picks.emplace_back(static_cast<int>(k), mask.labels[k]);
    picked_rows.push_back(tape.gather_entries(log_p, picks));
  }
  require(total_masked > 0, "mlm step produced no masked positions");
  Var all = picked_rows.size() == 1 ? picked_rows[0] : tape.concat_cols(picked_rows);
  return tape.scale(tape.sum(all), Scalar(-1) / static_cast<Scalar>(total_masked));
}

// Batch elements for similarity distillation: every query then every
// non-empty passage, teacher and student aligned.
std::vector<std::string> kd_elements(const ProportionalSampler::Batch& batch) {
  std::vector<std::string> texts;
  for (const Record* r : batch.records) texts.push_back(r->query);
  for (const Record* r : batch.records)
    if (!r->positive.empty()) texts.push_back(r->positive);
  return texts;
}

Matrix teacher_embeddings(const StepContext& ctx,
                          const std::vector<std::string>& texts) {
  const nn::EncoderConfig& tcfg = ctx.teacher->config;
  Matrix out(static_cast<Eigen::Index>(texts.size()), tcfg.model_dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto ids = bpe::encode_truncated(ctx.tokenizer, texts[i], tcfg.max_seq_len);
    auto trace = nn::forward(tcfg, ctx.teacher->params, ids, no_padding(ids.size()));
    out.row(static_cast<Eigen::Index>(i)) = nn::pool(trace, tcfg.pooling).row(0);
  }
  return out;
}

Var embedding_kd_step_loss(Tape& tape, const StepContext& ctx,
                           const nn::ParamVars& vars,
                           const ProportionalSampler::Batch& batch) {
  require(ctx.teacher != nullptr, "embedding-kd objective requires a teacher");
  const auto texts = kd_elements(batch);
  require(texts.size() >= 2, "embedding distillation needs at least 2 elements");
  const Matrix t_embs = teacher_embeddings(ctx, texts);
  std::vector<Var> s_rows;
  for (const auto& text : texts)
    s_rows.push_back(pooled_embedding(tape, ctx, vars, text));
  Var s = tape.concat_rows(s_rows);
  Var loss = objectives::embedding_kd_loss(tape, t_embs, s, ctx.plan.kd);
  if (ctx.plan.relation_weight > 0) {
    Var rel = tape.constant_scalar(0);
    const int heads = ctx.plan.relation_heads > 0 ? ctx.plan.relation_heads
                                                  : ctx.config.num_heads;
    for (const auto& text : texts) {
      auto ids = bpe::encode_truncated(ctx.tokenizer, text,
                                       std::min(ctx.config.max_seq_len,
                                                ctx.teacher->config.max_seq_len));
      auto t_trace = nn::forward(ctx.teacher->config, ctx.teacher->params, ids,
                                 no_padding(ids.size()));
      auto s_trace = nn::encoder_forward(tape, ctx.config, vars, ids,
                                         no_padding(ids.size()));
      rel = tape.add(rel, objectives::attention_relation_kd_loss(
                              tape, t_trace, s_trace, heads));
    }
    loss = tape.add(loss, tape.scale(rel, ctx.plan.relation_weight /
                                              static_cast<Scalar>(texts.size())));
  }
  return loss;
}

Var relation_kd_step_loss(Tape& tape, const StepContext& ctx,
                          const nn::ParamVars& vars,
                          const ProportionalSampler::Batch& batch) {
  require(ctx.teacher != nullptr, "relation-kd objective requires a teacher");
  const int heads = ctx.plan.relation_heads > 0 ? ctx.plan.relation_heads
                                                : ctx.config.num_heads;
  Var total = tape.constant_scalar(0);
  for (const Record* r : batch.records) {
    auto ids = bpe::encode_truncated(ctx.tokenizer, r->query,
                                     std::min(ctx.config.max_seq_len,
                                              ctx.teacher->config.max_seq_len));
    auto t_trace = nn::forward(ctx.teacher->config, ctx.teacher->params, ids,
                               no_padding(ids.size()));
    auto s_trace =
        nn::encoder_forward(tape, ctx.config, vars, ids, no_padding(ids.size()));
    total = tape.add(total, objectives::attention_relation_kd_loss(
                                tape, t_trace, s_trace, heads));
  }
  return tape.scale(total, Scalar(1) / static_cast<Scalar>(batch.records.size()));
}

}  // namespace

TrainResult train_embedder(const StagePlan& plan, const nn::EncoderConfig& config,
                           nn::ParameterSet initial,
                           const std::vector<DataSource>& sources,
                           const bpe::TokenizerModel& tokenizer,
                           const nn::Checkpoint* teacher,
                           std::ostream* log_stream) {
  plan.validate();
  config.validate();
  require(config.vocab_size >= tokenizer.vocab_size(),
          "encoder vocab_size smaller than the tokenizer vocabulary");
  initial.check_finite();

  TrainResult result;
  result.params = std::move(initial);
  AdamState adam(result.params);
  StepContext ctx{config, tokenizer, plan, teacher};

  int global_step = 0;
  for (const Stage& stage : plan.stages) {
    auto stage_sources = select_sources(sources, stage.source_names);
    ProportionalSampler sampler(stage_sources, stage.batch_size, stage.seed);
    for (int s = 1; s <= stage.steps; ++s) {
      ++global_step;
      auto batch = sampler.next();
      Tape tape;
      nn::ParamVars vars = nn::param_leaves(tape, result.params);
      Var loss;
      switch (stage.objective) {
        case Objective::Contrastive:
          loss = contrastive_step_loss(tape, ctx, vars, batch);
          break;
        case Objective::Mlm:
          loss = mlm_step_loss(tape, ctx, vars, batch,
                               Rng::derive(stage.seed, static_cast<std::uint64_t>(s)));
          break;
        case Objective::EmbeddingKd:
          loss = embedding_kd_step_loss(tape, ctx, vars, batch);
          break;
        case Objective::RelationKd:
          loss = relation_kd_step_loss(tape, ctx, vars, batch);
          break;
      }
      const Scalar value = loss.scalar();
      if (!std::isfinite(value)) {
        throw std::runtime_error(
            "non-finite loss at step " + std::to_string(global_step) +
            " (stage " + stage.name + ", batch " + batch_fingerprint(batch) + ")");
      }
      tape.backward(loss);
      nn::ParameterSet grads;
      for (const auto& name : result.params.names())
        grads.add(name, tape.grad(vars.at(name)));
      const Scalar lr = schedule_lr(stage.lr, s, stage.steps, plan.warmup_fraction);
      adam_step(result.params, grads, adam, lr, plan.adam);

      TrainLogEntry entry{global_step, stage.name,
                          objective_name(stage.objective), value, lr};
      if (log_stream) (*log_stream) << to_jsonl(entry) << "\n";
      result.log.push_back(std::move(entry));
    }
  }
  result.params.check_finite();
  return result;
}

TrainResult distill_embedder(const nn::Checkpoint& teacher,
                             const nn::EncoderConfig& student_config,
                             nn::ParameterSet student_initial,
                             const std::vector<DataSource>& sources,
                             const bpe::TokenizerModel& tokenizer,
                             const objectives::KDConfig& kd, int steps,
                             int batch_size, Scalar lr, std::uint64_t seed,
                             Scalar relation_weight, int relation_heads,
                             std::ostream* log_stream) {
  require(teacher.config.vocab_size >= tokenizer.vocab_size() &&
              student_config.vocab_size >= tokenizer.vocab_size(),
          "teacher and student must share the tokenizer vocabulary");
  StagePlan plan;
  plan.kd = kd;
  plan.relation_weight = relation_weight;
  plan.relation_heads = relation_heads;
  Stage stage;
  stage.name = "distill";
  stage.steps = steps;
  stage.batch_size = batch_size;
  stage.lr = lr;
  stage.objective = Objective::EmbeddingKd;
  stage.seed = seed;
  plan.stages.push_back(std::move(stage));
  return train_embedder(plan, student_config, std::move(student_initial), sources,
                        tokenizer, &teacher, log_stream);
}

}  // namespace densekit::train
