#pragma once

#include <string>
#include <vector>

#include "densekit/retrieval/index.hpp"
#include "densekit/retrieval/metrics.hpp"

namespace densekit::retrieval {

struct CorpusDoc {
  std::string id;
  std::string title;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
};

/// JSON Lines, one {"_id", "title", "text"} per line (title optional).
std::vector<CorpusDoc> read_corpus_jsonl(const std::string& path);

/// JSON Lines, one {"_id", "text"} per line.
std::vector<Query> read_queries_jsonl(const std::string& path);

/// Tab-separated (query-id, corpus-id, score) with one header line.
Qrels read_qrels_tsv(const std::string& path);
void write_qrels_tsv(const std::string& path, const Qrels& qrels);

/// Tab-separated (query-id, doc-id, rank, score), no header.
void write_run_tsv(const std::string& path, const std::vector<RankedList>& runs);
std::vector<RankedList> read_run_tsv(const std::string& path);

}  // namespace densekit::retrieval
