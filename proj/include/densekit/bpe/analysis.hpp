#pragma once

#include <string>
#include <vector>

#include "densekit/bpe/tokenizer.hpp"

namespace densekit::bpe {

struct OverlapReport {
  long long common_count = 0;
  long long only_a = 0;
  long long only_b = 0;
  double common_fraction = 0.0;  // common_count / |vocab_a|

  std::string to_json() const;
  std::string to_table() const;
};

/// Exact set intersection over token strings (specials included).
OverlapReport vocab_overlap(const TokenizerModel& a, const TokenizerModel& b);

struct TokenCountReport {
  struct PerModel {
    std::string name;
    long long total_tokens = 0;               // non-special ids over all samples
    std::vector<long long> per_sample;
    double delta_pct_vs_first = 0.0;          // 100 * (total - first.total) / first.total
  };
  std::size_t sample_count = 0;
  std::vector<PerModel> models;

  std::string to_json() const;
  std::string to_table() const;
};

/// Token totals for each model over the identical sample list. Counts exclude
/// the start/end wrapper ids.
TokenCountReport corpus_token_stats(
    const std::vector<std::pair<std::string, const TokenizerModel*>>& models,
    const std::vector<std::string>& samples);

}  // namespace densekit::bpe
