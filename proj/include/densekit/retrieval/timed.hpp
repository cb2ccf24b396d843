#pragma once

#include <string>
#include <vector>

#include "densekit/bpe/tokenizer.hpp"
#include "densekit/nn/encoder.hpp"
#include "densekit/retrieval/io.hpp"

namespace densekit::retrieval {

/// Wall-clock breakdown, seconds. Corpus encoding is reported both as a
/// total and amortized per query, since folding it into per-query time is a
/// reporting choice; both numbers are emitted.
struct TimingReport {
  double corpus_encode_total = 0;
  double query_encode_per_query = 0;
  double search_per_query = 0;
  /// (query encode + search) / queries
  double per_query_excl_corpus = 0;
  /// (corpus encode + query encode + search) / queries
  double per_query_incl_corpus = 0;
  std::size_t num_queries = 0;
  std::size_t corpus_size = 0;
  int workers = 1;

  std::string to_json() const;
};

struct TimedRunResult {
  std::vector<RankedList> runs;
  TimingReport timing;
};

RowVector embed_text(const nn::EncoderConfig& config,
                     const nn::ParameterSet& params,
                     const bpe::TokenizerModel& tokenizer,
                     const std::string& text);

/// Encode the corpus, encode the queries, exact-search top k. Results match
/// the untimed path bit for bit; timing is measurement only.
TimedRunResult timed_run(const nn::EncoderConfig& config,
                         const nn::ParameterSet& params,
                         const bpe::TokenizerModel& tokenizer,
                         const std::vector<CorpusDoc>& corpus,
                         const std::vector<Query>& queries, int k,
                         int workers = 1);

}  // namespace densekit::retrieval
