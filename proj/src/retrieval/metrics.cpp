#include "densekit/retrieval/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace densekit::retrieval {

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
  require(grade >= 0, "relevance grade must be >= 0");
  by_query_[query_id][doc_id] = grade;
}

bool Qrels::has_query(const std::string& query_id) const {
  return by_query_.count(query_id) > 0;
}

const std::map<std::string, int>& Qrels::judgments(
    const std::string& query_id) const {
  static const std::map<std::string, int> empty;
  auto it = by_query_.find(query_id);
  return it == by_query_.end() ? empty : it->second;
}

double recall_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k) {
  require(k >= 1, "k must be >= 1");
  require(!runs.empty(), "no ranked lists given");
  double total = 0;
  for (const auto& run : runs) {
    require(qrels.has_query(run.query_id),
            "query missing from qrels: " + run.query_id);
    const auto& judged = qrels.judgments(run.query_id);
    int relevant = 0;
    for (const auto& [doc, grade] : judged)
      if (grade > 0) ++relevant;
    require(relevant > 0, "query has no relevant documents: " + run.query_id);
    int hit = 0;
    const int kk = std::min<int>(k, static_cast<int>(run.hits.size()));
    for (int r = 0; r < kk; ++r) {
      auto it = judged.find(run.hits[static_cast<std::size_t>(r)].doc_id);
      if (it != judged.end() && it->second > 0) ++hit;
    }
    total += static_cast<double>(hit) / static_cast<double>(relevant);
  }
  return total / static_cast<double>(runs.size());
}

NdcgResult ndcg_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k) {
  require(k >= 1, "k must be >= 1");
  require(!runs.empty(), "no ranked lists given");
  NdcgResult result;
  double total = 0;
  for (const auto& run : runs) {
    require(qrels.has_query(run.query_id),
            "query missing from qrels: " + run.query_id);
    const auto& judged = qrels.judgments(run.query_id);
    std::vector<int> grades;
    for (const auto& [doc, grade] : judged)
      if (grade > 0) grades.push_back(grade);
    if (grades.empty()) {
      ++result.skipped_no_relevant;
      continue;
    }
    double dcg = 0;
    const int kk = std::min<int>(k, static_cast<int>(run.hits.size()));
    for (int r = 0; r < kk; ++r) {
      auto it = judged.find(run.hits[static_cast<std::size_t>(r)].doc_id);
      if (it == judged.end() || it->second <= 0) continue;
      dcg += (std::pow(2.0, it->second) - 1.0) / std::log2(r + 2.0);
    }
    std::sort(grades.begin(), grades.end(), std::greater<int>());
    double ideal = 0;
    const int ik = std::min<int>(k, static_cast<int>(grades.size()));
    for (int r = 0; r < ik; ++r)
      ideal += (std::pow(2.0, grades[static_cast<std::size_t>(r)]) - 1.0) /
               std::log2(r + 2.0);
    total += dcg / ideal;
    ++result.evaluated;
  }
  result.mean = result.evaluated > 0 ? total / result.evaluated : 0.0;
  return result;
}

}  // namespace densekit::retrieval
