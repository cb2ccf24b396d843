#include "densekit/retrieval/timed.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "json.hpp"

namespace densekit::retrieval {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Title and body joined the way the corpus was meant to be read.
std::string doc_text(const CorpusDoc& d) {
  if (d.title.empty()) return d.text;
  if (d.text.empty()) return d.title;
  return d.title + " " + d.text;
}
}  // namespace

RowVector embed_text(const nn::EncoderConfig& config,
                     const nn::ParameterSet& params,
                     const bpe::TokenizerModel& tokenizer,
                     const std::string& text) {
  auto ids = bpe::encode_truncated(tokenizer, text, config.max_seq_len);
  std::vector<std::uint8_t> pad(ids.size(), 0);
  auto trace = nn::forward(config, params, ids, pad);
  return nn::pool(trace, config.pooling).row(0);
}

TimedRunResult timed_run(const nn::EncoderConfig& config,
                         const nn::ParameterSet& params,
                         const bpe::TokenizerModel& tokenizer,
                         const std::vector<CorpusDoc>& corpus,
                         const std::vector<Query>& queries, int k, int workers) {
  require(!corpus.empty(), "corpus must be non-empty");
  require(!queries.empty(), "queries must be non-empty");
  require(k >= 1, "k must be >= 1");
  require(workers >= 1, "workers must be >= 1");

  TimedRunResult result;
  result.timing.num_queries = queries.size();
  result.timing.corpus_size = corpus.size();
  result.timing.workers = workers;

  // Corpus encoding, optionally split across worker threads. The index build
  // itself consumes vectors in input order so results never depend on the
  // worker count.
  auto t0 = Clock::now();
  std::vector<RowVector> doc_embs(corpus.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i)
      doc_embs[i] = embed_text(config, params, tokenizer, doc_text(corpus[i]));
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < corpus.size();
             i = next.fetch_add(1))
          doc_embs[i] = embed_text(config, params, tokenizer, doc_text(corpus[i]));
      });
    for (auto& th : pool) th.join();
  }
  Index index(config.model_dim);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    index.add(corpus[i].id, doc_embs[i]);
  result.timing.corpus_encode_total = seconds_since(t0);

  // Query encoding.
  t0 = Clock::now();
  std::vector<RowVector> query_embs(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    query_embs[i] = embed_text(config, params, tokenizer, queries[i].text);
  const double query_encode_total = seconds_since(t0);

  // Search.
  t0 = Clock::now();
  result.runs.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    result.runs.push_back(index.search(query_embs[i], k, queries[i].id));
  const double search_total = seconds_since(t0);

  const double nq = static_cast<double>(queries.size());
  result.timing.query_encode_per_query = query_encode_total / nq;
  result.timing.search_per_query = search_total / nq;
  result.timing.per_query_excl_corpus = (query_encode_total + search_total) / nq;
  result.timing.per_query_incl_corpus =
      (result.timing.corpus_encode_total + query_encode_total + search_total) / nq;
  return result;
}

std::string TimingReport::to_json() const {
  nlohmann::json j;
  j["corpus_encode_total_s"] = corpus_encode_total;
  j["query_encode_per_query_s"] = query_encode_per_query;
  j["search_per_query_s"] = search_per_query;
  j["per_query_excl_corpus_s"] = per_query_excl_corpus;
  j["per_query_incl_corpus_s"] = per_query_incl_corpus;
  j["num_queries"] = num_queries;
  j["corpus_size"] = corpus_size;
  j["workers"] = workers;
  return j.dump(2) + "\n";
}

}  // namespace densekit::retrieval
