#pragma once

#include <optional>
#include <vector>

#include "densekit/common.hpp"
#include "densekit/nn/encoder.hpp"
#include "densekit/nn/tape.hpp"

namespace densekit::objectives {

/// Temperature-scaled cosine similarity, (1/tau) * cos(q, p).
template <typename DerivedA, typename DerivedB>
Scalar similarity(const Eigen::MatrixBase<DerivedA>& q,
                  const Eigen::MatrixBase<DerivedB>& p, Scalar tau) {
  require(tau > Scalar(0), "similarity: temperature must be positive");
  require(q.size() == p.size(), "similarity: dimension mismatch");
  const Scalar qn = q.norm();
  const Scalar pn = p.norm();
  require(qn > Scalar(0) && pn > Scalar(0), "similarity: zero vector");
  const Scalar dot = q.reshaped().cwiseProduct(p.reshaped()).sum();
  return dot / (qn * pn * tau);
}

/// Pairwise temperature-scaled cosine scores for one element set.
struct SimilarityMatrix {
  Matrix scores;  // m x m
  Scalar tau = 1.0;
};

SimilarityMatrix similarity_matrix(const Matrix& embeddings, Scalar tau);

/// Batch of (query, positive, optional explicit negatives) embeddings.
/// negatives is either empty or holds one (possibly 0-row) matrix per query.
struct TripleBatch {
  Matrix queries;    // n x d
  Matrix positives;  // n x d
  std::vector<Matrix> negatives;
  Scalar tau = 0.05;

  Eigen::Index size() const { return queries.rows(); }
  void validate() const;
};

struct KDConfig {
  Scalar tau_kd = 4.0;
  bool exclude_self = true;  // drop the self pair from softmax support
  Scalar sim_tau = 0.05;     // temperature of the underlying similarity scores
};

// ---------------------------------------------------------------------------
// Value-level objectives (each runs the tape-level builder on constants, so
// the reported value is exactly the differentiated quantity).
// ---------------------------------------------------------------------------

/// Bidirectional InfoNCE. Per anchor the normalizer sums, literally,
///   sum_j e^{s(q_i,p_j)} + sum_j e^{s(q_j,p_i)}
/// + sum_{j!=i} e^{s(q_i,q_j)} + sum_{j!=i} e^{s(p_i,p_j)},
/// so the positive term is counted twice; explicit negatives extend only the
/// first sum's passage pool. Evaluated as one log-sum-exp per anchor.
/// dedup_positive switches to the variant that counts the positive once.
Scalar contrastive_loss(const TripleBatch& batch, bool dedup_positive = false);

/// Row-stochastic softmax over e^{s(x_i,x_j)/tau_kd}; with exclude_self the
/// support (and the zeroed diagonal) is j != i. m x m result.
Matrix kd_distributions(const SimilarityMatrix& sims, const KDConfig& cfg);

/// -sum_i sum_j p_t(x_i,x_j) log p_s(x_i,x_j) over the distribution support;
/// no 1/m factor.
Scalar embedding_kd_loss(const Matrix& teacher_embeddings,
                         const Matrix& student_embeddings, const KDConfig& cfg);

/// Query-query, key-key and value-value relation distributions from the last
/// layer's projections, re-split into relation_heads; per relation type the
/// mean KL(teacher || student) over heads and non-pad positions, summed over
/// the three types.
Scalar attention_relation_kd_loss(const nn::ForwardTrace& teacher,
                                  const nn::ForwardTrace& student,
                                  int relation_heads);

/// Mean cross entropy over the masked positions only.
Scalar mlm_loss(const Matrix& logits, const std::vector<int>& labels,
                const std::vector<int>& mask_positions);

// ---------------------------------------------------------------------------
// Tape-level builders (training path).
// ---------------------------------------------------------------------------

nn::Var contrastive_loss(nn::Tape& tape, nn::Var query_embs, nn::Var positive_embs,
                         const std::vector<nn::Var>& per_query_negatives,
                         Scalar tau, bool dedup_positive = false);

nn::Var embedding_kd_loss(nn::Tape& tape, const Matrix& teacher_embeddings,
                          nn::Var student_embeddings, const KDConfig& cfg);

nn::Var attention_relation_kd_loss(nn::Tape& tape, const nn::ForwardTrace& teacher,
                                   const nn::TraceVars& student, int relation_heads);

nn::Var mlm_loss(nn::Tape& tape, nn::Var logits, const std::vector<int>& labels,
                 const std::vector<int>& mask_positions);

}  // namespace densekit::objectives
