#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "densekit/common.hpp"
#include "json.hpp"

namespace densekit::cli {

struct TokenizerSection {
  int vocab_size = 50265;
  bool lowercase = true;
  std::vector<std::string> special_tokens = {"<s>", "</s>", "<mask>", "<pad>",
                                             "<unk>"};
};

struct EncoderSection {
  int num_layers = 2;
  int num_heads = 2;
  int model_dim = 32;
  int ff_dim = 64;
  int max_seq_len = 64;
  std::string pooling = "mean";
};

struct StageSection {
  std::string name;
  std::string objective;
  int steps = 0;
  int batch_size = 0;
  double lr = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;  // names; empty = all
};

struct TrainSection {
  std::string objective = "contrastive";
  std::vector<std::string> stages;  // names of [train.<name>] sections
  int batch_size = 16;
  int steps = 100;
  double lr = 2e-5;          // embedder stages
  double distill_lr = 7e-4;  // distillation
  double tau = 0.05;
  double tau_kd = 4.0;
  std::uint64_t seed = 42;
  double mask_prob = 0.15;
  double relation_weight = 0.0;
  int relation_heads = 0;
  std::vector<std::string> sources;  // "name=path" entries
  std::vector<StageSection> stage_sections;
};

struct RetrievalSection {
  int k = 10;
  int workers = 1;
};

struct PathsSection {
  std::string corpus;
  std::string queries;
  std::string qrels;
  std::string checkpoints = ".";
  std::string reports = ".";
};

/// Typed view of the run configuration file. The file is a flat sectioned
/// key-value format; see docs/config.md for the grammar. Every key can be
/// overridden by DENSEKIT_<SECTION>_<KEY> (dots become underscores) and then
/// by command-line flags.
struct RunConfig {
  TokenizerSection tokenizer;
  EncoderSection encoder;
  TrainSection train;
  RetrievalSection retrieval;
  PathsSection paths;

  std::set<std::string> explicit_keys;  // "section.key" seen in file/env

  static RunConfig defaults() { return RunConfig{}; }
  static RunConfig from_file(const std::string& path, bool apply_env = true);
  static RunConfig from_text(const std::string& text, bool apply_env = true);

  bool is_set(const std::string& dotted_key) const {
    return explicit_keys.count(dotted_key) > 0;
  }

  /// Validates every value against the owning module's preconditions.
  void validate() const;

  nlohmann::json echo() const;
};

}  // namespace densekit::cli
