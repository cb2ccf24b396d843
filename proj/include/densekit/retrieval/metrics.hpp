#pragma once

#include <map>
#include <string>
#include <vector>

#include "densekit/common.hpp"
#include "densekit/retrieval/index.hpp"

namespace densekit::retrieval {

/// Relevance judgments: (query id, doc id) -> grade >= 0.
class Qrels {
 public:
  void add(const std::string& query_id, const std::string& doc_id, int grade);
  bool has_query(const std::string& query_id) const;
  /// doc id -> grade for one query; empty map when the query is unknown.
  const std::map<std::string, int>& judgments(const std::string& query_id) const;
  std::size_t num_queries() const { return by_query_.size(); }
  const std::map<std::string, std::map<std::string, int>>& all() const {
    return by_query_;
  }

 private:
  std::map<std::string, std::map<std::string, int>> by_query_;
};

/// Mean over queries of |relevant ∩ top-k| / |relevant| (grades > 0 count as
/// relevant). Every run query must appear in the qrels.
double recall_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k);

struct NdcgResult {
  double mean = 0;
  int evaluated = 0;
  int skipped_no_relevant = 0;  // queries without any relevant doc, excluded
};

/// DCG with gain 2^grade - 1 and log2(rank+1) discount, normalized by the
/// ideal ranking, averaged over queries that have at least one relevant doc.
NdcgResult ndcg_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k);

}  // namespace densekit::retrieval
