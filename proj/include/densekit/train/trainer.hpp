#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "densekit/bpe/tokenizer.hpp"
#include "densekit/nn/checkpoint.hpp"
#include "densekit/nn/encoder.hpp"
#include "densekit/objectives/losses.hpp"
#include "densekit/train/adam.hpp"
#include "densekit/train/data.hpp"

namespace densekit::train {

enum class Objective { Mlm, Contrastive, EmbeddingKd, RelationKd };

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct Stage {
  std::string name;
  std::vector<std::string> source_names;  // empty = all provided sources
  int steps = 0;
  int batch_size = 8;
  Scalar lr = 2e-5;
  Objective objective = Objective::Contrastive;
  std::uint64_t seed = 0;
};

struct StagePlan {
  std::vector<Stage> stages;
  Scalar tau = 0.05;             // contrastive temperature
  objectives::KDConfig kd;       // tau_kd = 4 unless overridden
  Scalar relation_weight = 0.0;  // auxiliary relation-KD weight during distillation
  int relation_heads = 0;        // 0 = student head count
  double mask_prob = 0.15;
  AdamConfig adam;
  // Linear warmup over the first 6% of a stage's steps, linear decay after.
  double warmup_fraction = 0.06;

  void validate() const;
};

struct TrainLogEntry {
  int step = 0;  // 1-based within the run
  std::string stage;
  std::string loss_name;
  Scalar value = 0;
  Scalar lr = 0;
};

std::string to_jsonl(const TrainLogEntry& e);

struct TrainResult {
  nn::ParameterSet params;
  std::vector<TrainLogEntry> log;
};

/// Runs the plan's stages in order over one trainable encoder. Parameters and
/// optimizer state persist across stage boundaries; nothing else does. KD
/// objectives require a teacher. Aborts (std::runtime_error) on a non-finite
/// loss, reporting the step and a batch fingerprint. log_stream, when given,
/// receives one JSON line per step.
TrainResult train_embedder(const StagePlan& plan, const nn::EncoderConfig& config,
                           nn::ParameterSet initial,
                           const std::vector<DataSource>& sources,
                           const bpe::TokenizerModel& tokenizer,
                           const nn::Checkpoint* teacher = nullptr,
                           std::ostream* log_stream = nullptr);

/// One-stage similarity-distribution distillation of a frozen teacher into
/// the student, over queries and passages pooled from every source. Teacher
/// and student share the tokenizer. An optional relation-KD term is added
/// with the given weight.
TrainResult distill_embedder(const nn::Checkpoint& teacher,
                             const nn::EncoderConfig& student_config,
                             nn::ParameterSet student_initial,
                             const std::vector<DataSource>& sources,
                             const bpe::TokenizerModel& tokenizer,
                             const objectives::KDConfig& kd, int steps,
                             int batch_size, Scalar lr, std::uint64_t seed,
                             Scalar relation_weight = 0.0,
                             int relation_heads = 0,
                             std::ostream* log_stream = nullptr);

}  // namespace densekit::train
