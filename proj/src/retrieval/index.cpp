#include "densekit/retrieval/index.hpp"

#include <algorithm>
#include <unordered_set>

namespace densekit::retrieval {

void Index::add(const std::string& doc_id, const RowVector& embedding) {
  require(!packed_valid_, "index is immutable once searched");
  require(embedding.size() == dim_, "embedding dimension mismatch for doc " + doc_id);
  require(embedding.allFinite(), "non-finite embedding for doc " + doc_id);
  const Scalar n = embedding.norm();
  require(n > Scalar(0), "zero embedding for doc " + doc_id);
  require(id_set_.insert(doc_id).second, "duplicate doc id: " + doc_id);
  ids_.push_back(doc_id);
  rows_.push_back(embedding / n);
}

void Index::finalize() {}

RankedList Index::search(const RowVector& query, int k,
                         const std::string& query_id) const {
  require(k >= 1, "k must be >= 1");
  require(query.size() == dim_, "query dimension mismatch");
  RankedList out;
  out.query_id = query_id;
  if (ids_.empty()) return out;

  if (!packed_valid_) {
    packed_.resize(static_cast<Eigen::Index>(rows_.size()), dim_);
    for (std::size_t i = 0; i < rows_.size(); ++i)
      packed_.row(static_cast<Eigen::Index>(i)) = rows_[i];
    packed_valid_ = true;
  }
  const Scalar qn = query.norm();
  require(qn > Scalar(0), "zero query embedding");
  Vector scores = packed_ * (query / qn).transpose();

  std::vector<int> order(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const int kk = std::min<int>(k, static_cast<int>(ids_.size()));
  auto better = [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return ids_[static_cast<std::size_t>(a)] < ids_[static_cast<std::size_t>(b)];
  };
  std::partial_sort(order.begin(), order.begin() + kk, order.end(), better);
  out.hits.reserve(static_cast<std::size_t>(kk));
  for (int r = 0; r < kk; ++r)
    out.hits.push_back({ids_[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])],
                        scores(order[static_cast<std::size_t>(r)])});
  return out;
}

Index build_index(const std::vector<std::pair<std::string, RowVector>>& embeddings) {
  if (embeddings.empty()) return Index(1);
  Index index(static_cast<int>(embeddings.front().second.size()));
  for (const auto& [id, vec] : embeddings) index.add(id, vec);
  return index;
}

}  // namespace densekit::retrieval
