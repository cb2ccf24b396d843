#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "densekit/common.hpp"

namespace densekit::retrieval {

struct ScoredDoc {
  std::string doc_id;
  Scalar score = 0;
};

struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> hits;  // descending score, ties by ascending doc id
};

/// Immutable exact-cosine index. Vectors are L2-normalized on insert.
class Index {
 public:
  explicit Index(int dim) : dim_(dim) { require(dim >= 1, "dimension must be >= 1"); }

  void add(const std::string& doc_id, const RowVector& embedding);
  void finalize();  // no-op marker; add() after a search is rejected

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Exact top-k by cosine, k capped at the corpus size. Ties break on
  /// ascending doc id. Empty index yields an empty list.
  RankedList search(const RowVector& query, int k,
                    const std::string& query_id = "") const;

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_set_;
  std::vector<RowVector> rows_;
  mutable Matrix packed_;       // built lazily on first search
  mutable bool packed_valid_ = false;
};

Index build_index(const std::vector<std::pair<std::string, RowVector>>& embeddings);

}  // namespace densekit::retrieval
