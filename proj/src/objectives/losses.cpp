#include "densekit/objectives/losses.hpp"

#include <cmath>

namespace densekit::objectives {

using nn::Tape;
using nn::Var;

SimilarityMatrix similarity_matrix(const Matrix& embeddings, Scalar tau) {
  require(tau > Scalar(0), "similarity temperature must be positive");
  require(embeddings.allFinite(), "non-finite embedding");
  Matrix normed = embeddings;
  for (Eigen::Index i = 0; i < normed.rows(); ++i) {
    const Scalar n = normed.row(i).norm();
    require(n > Scalar(0), "similarity_matrix: zero embedding row");
    normed.row(i) /= n;
  }
  SimilarityMatrix out;
  out.tau = tau;
  out.scores = (normed * normed.transpose()) / tau;
  return out;
}

void TripleBatch::validate() const {
  require(queries.rows() >= 1, "batch size must be >= 1");
  require(queries.rows() == positives.rows(), "query/positive count mismatch");
  require(queries.cols() == positives.cols(), "query/positive dimension mismatch");
  require(tau > Scalar(0), "contrastive temperature must be positive");
  require(queries.allFinite() && positives.allFinite(), "non-finite embedding");
  if (!negatives.empty()) {
    require(static_cast<Eigen::Index>(negatives.size()) == queries.rows(),
            "negatives must hold one entry per query");
    for (const auto& m : negatives) {
      if (m.rows() == 0) continue;
      require(m.cols() == queries.cols(), "negative dimension mismatch");
      require(m.allFinite(), "non-finite embedding");
    }
  }
}

Var contrastive_loss(Tape& tape, Var query_embs, Var positive_embs,
                     const std::vector<Var>& per_query_negatives, Scalar tau,
                     bool dedup_positive) {
  require(tau > Scalar(0), "contrastive temperature must be positive");
  const Eigen::Index n = query_embs.rows();
  require(n >= 1, "batch size must be >= 1");
  require(positive_embs.rows() == n, "query/positive count mismatch");
  require(query_embs.value().allFinite() && positive_embs.value().allFinite(),
          "non-finite embedding");
  require(per_query_negatives.empty() ||
              per_query_negatives.size() == static_cast<std::size_t>(n),
          "negatives must hold one entry per query");

  const Scalar inv_tau = Scalar(1) / tau;
  Var qn = tape.l2_normalize_rows(query_embs);
  Var pn = tape.l2_normalize_rows(positive_embs);
  Var s_qp = tape.scale(tape.matmul(qn, tape.transpose(pn)), inv_tau);
  Var s_qq = tape.scale(tape.matmul(qn, tape.transpose(qn)), inv_tau);
  Var s_pp = tape.scale(tape.matmul(pn, tape.transpose(pn)), inv_tau);

  std::vector<Var> anchor_losses;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ii = static_cast<int>(i);
    std::vector<Var> parts;
    // sum_j e^{s(q_i, p_j)}, with explicit negatives appended to the pool
    parts.push_back(tape.gather_rows(s_qp, {ii}));
    if (!per_query_negatives.empty() &&
        per_query_negatives[static_cast<std::size_t>(i)].valid() &&
        per_query_negatives[static_cast<std::size_t>(i)].rows() > 0) {
      Var negs = per_query_negatives[static_cast<std::size_t>(i)];
      require(negs.value().allFinite(), "non-finite embedding");
      Var nn2 = tape.l2_normalize_rows(negs);
      Var qi = tape.gather_rows(qn, {ii});
      parts.push_back(tape.scale(tape.matmul(qi, tape.transpose(nn2)), inv_tau));
    }
    // sum_j e^{s(q_j, p_i)}; the literal form recounts j == i here
    {
      std::vector<std::pair<int, int>> entries;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (dedup_positive && j == i) continue;
        entries.emplace_back(static_cast<int>(j), ii);
      }
      if (!entries.empty()) parts.push_back(tape.gather_entries(s_qp, entries));
    }
    // same-role terms, j != i
    if (n > 1) {
      std::vector<std::pair<int, int>> off;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) off.emplace_back(ii, static_cast<int>(j));
      parts.push_back(tape.gather_entries(s_qq, off));
      parts.push_back(tape.gather_entries(s_pp, off));
    }
    Var z_row = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
    Var log_z = tape.logsumexp_row(z_row);
    Var pos = tape.gather_entries(s_qp, {{ii, ii}});
    anchor_losses.push_back(tape.sub(log_z, pos));
  }
  Var stacked = anchor_losses.size() == 1 ? anchor_losses[0]
                                          : tape.concat_cols(anchor_losses);
  return tape.scale(tape.sum(stacked), Scalar(1) / static_cast<Scalar>(n));
}

Scalar contrastive_loss(const TripleBatch& batch, bool dedup_positive) {
  batch.validate();
  Tape tape;
  Var q = tape.constant(batch.queries);
  Var p = tape.constant(batch.positives);
  std::vector<Var> negs;
  for (const auto& m : batch.negatives) negs.push_back(tape.constant(m));
  return contrastive_loss(tape, q, p, negs, batch.tau, dedup_positive).scalar();
}

Matrix kd_distributions(const SimilarityMatrix& sims, const KDConfig& cfg) {
  require(cfg.tau_kd > Scalar(0), "tau_kd must be positive");
  const Eigen::Index m = sims.scores.rows();
  require(m == sims.scores.cols(), "similarity matrix must be square");
  require(m >= 2, "kd_distributions needs at least 2 elements");
  Matrix probs = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar max_v = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (cfg.exclude_self && j == i) continue;
      max_v = std::max(max_v, sims.scores(i, j) / cfg.tau_kd);
    }
    Scalar z = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (cfg.exclude_self && j == i) continue;
      const Scalar e = std::exp(sims.scores(i, j) / cfg.tau_kd - max_v);
      probs(i, j) = e;
      z += e;
    }
    for (Eigen::Index j = 0; j < m; ++j) probs(i, j) /= z;
  }
  return probs;
}

Var embedding_kd_loss(Tape& tape, const Matrix& teacher_embeddings,
                      Var student_embeddings, const KDConfig& cfg) {
  const Eigen::Index m = teacher_embeddings.rows();
  require(m >= 2, "embedding distillation needs at least 2 elements");
  require(student_embeddings.rows() == m,
          "teacher/student element count mismatch");
  require(cfg.tau_kd > Scalar(0), "tau_kd must be positive");

  const Matrix p_t =
      kd_distributions(similarity_matrix(teacher_embeddings, cfg.sim_tau), cfg);

  Var sn = tape.l2_normalize_rows(student_embeddings);
  Var scaled = tape.scale(tape.matmul(sn, tape.transpose(sn)),
                          Scalar(1) / (cfg.sim_tau * cfg.tau_kd));
  if (cfg.exclude_self) {
    Matrix diag_bias = Matrix::Zero(m, m);
    diag_bias.diagonal().setConstant(Scalar(-1e30));
    scaled = tape.add(scaled, tape.constant(diag_bias));
  }
  Var log_ps = tape.log_softmax_rows(scaled);
  // p_t's diagonal is zero when the self pair is excluded, so the masked
  // entries contribute nothing.
  return tape.scale(tape.sum(tape.hadamard(tape.constant(p_t), log_ps)),
                    Scalar(-1));
}

Scalar embedding_kd_loss(const Matrix& teacher_embeddings,
                         const Matrix& student_embeddings, const KDConfig& cfg) {
  Tape tape;
  Var s = tape.constant(student_embeddings);
  return embedding_kd_loss(tape, teacher_embeddings, s, cfg).scalar();
}

namespace {

// softmax((P P^T)/sqrt(head_dim)) over the non-pad block of one head.
Matrix relation_prob_rows(const Matrix& proj, const std::vector<int>& non_pad,
                          int head, int head_dim) {
  const Eigen::Index n = static_cast<Eigen::Index>(non_pad.size());
  Matrix block(n, head_dim);
  for (Eigen::Index r = 0; r < n; ++r)
    block.row(r) = proj.row(non_pad[static_cast<std::size_t>(r)])
                       .segment(head * head_dim, head_dim);
  Matrix scores =
      (block * block.transpose()) / std::sqrt(static_cast<Scalar>(head_dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar mx = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - mx).exp();
    scores.row(i) /= scores.row(i).sum();
  }
  return scores;
}

}  // namespace

Var attention_relation_kd_loss(Tape& tape, const nn::ForwardTrace& teacher,
                               const nn::TraceVars& student, int relation_heads) {
  require(relation_heads >= 1, "relation_heads must be >= 1");
  require(!teacher.queries.empty() && !student.queries.empty(),
          "traces must hold at least one layer");
  require(teacher.pad_mask == student.pad_mask,
          "teacher/student sequence (and padding) mismatch");
  const int t_dim = static_cast<int>(teacher.queries.back().cols());
  const int s_dim = static_cast<int>(student.queries.back().cols());
  require(t_dim % relation_heads == 0 && s_dim % relation_heads == 0,
          "relation_heads must divide both projection widths");
  const int t_head = t_dim / relation_heads;
  const int s_head = s_dim / relation_heads;
  const std::vector<int>& non_pad = teacher.non_pad;
  require(!non_pad.empty(), "no non-pad positions");
  const Scalar inv_rows =
      Scalar(1) / static_cast<Scalar>(relation_heads * non_pad.size());

  const Matrix* teacher_projs[3] = {&teacher.queries.back(), &teacher.keys.back(),
                                    &teacher.values.back()};
  Var student_projs[3] = {student.queries.back(), student.keys.back(),
                          student.values.back()};

  Var total = tape.constant_scalar(0);
  for (int type = 0; type < 3; ++type) {
    Var type_sum = tape.constant_scalar(0);
    for (int h = 0; h < relation_heads; ++h) {
      const Matrix t_probs =
          relation_prob_rows(*teacher_projs[type], non_pad, h, t_head);
      // KL(t||s) summed over rows = sum t log t - sum t log s
      Scalar neg_entropy = 0;
      for (Eigen::Index i = 0; i < t_probs.rows(); ++i)
        for (Eigen::Index j = 0; j < t_probs.cols(); ++j)
          neg_entropy += t_probs(i, j) * std::log(t_probs(i, j));

      std::vector<int> cols(static_cast<std::size_t>(s_head));
      for (int c = 0; c < s_head; ++c)
        cols[static_cast<std::size_t>(c)] = h * s_head + c;
      Var block = tape.gather_cols(
          tape.gather_rows(student_projs[type], non_pad), cols);
      Var scores = tape.scale(tape.matmul(block, tape.transpose(block)),
                              Scalar(1) / std::sqrt(static_cast<Scalar>(s_head)));
      Var log_s = tape.log_softmax_rows(scores);
      Var cross = tape.sum(tape.hadamard(tape.constant(t_probs), log_s));
      Var kl = tape.sub(tape.constant_scalar(neg_entropy), cross);
      type_sum = tape.add(type_sum, kl);
    }
    total = tape.add(total, tape.scale(type_sum, inv_rows));
  }
  return total;
}

Scalar attention_relation_kd_loss(const nn::ForwardTrace& teacher,
                                  const nn::ForwardTrace& student,
                                  int relation_heads) {
  Tape tape;
  nn::TraceVars sv;
  sv.queries.push_back(tape.constant(student.queries.back()));
  sv.keys.push_back(tape.constant(student.keys.back()));
  sv.values.push_back(tape.constant(student.values.back()));
  sv.pad_mask = student.pad_mask;
  sv.non_pad = student.non_pad;
  return attention_relation_kd_loss(tape, teacher, sv, relation_heads).scalar();
}

Var mlm_loss(Tape& tape, Var logits, const std::vector<int>& labels,
             const std::vector<int>& mask_positions) {
  require(!mask_positions.empty(), "mlm_loss requires at least one masked position");
  require(labels.size() == mask_positions.size(),
          "labels/mask_positions length mismatch");
  const Eigen::Index seq = logits.rows();
  const Eigen::Index vocab = logits.cols();
  for (int p : mask_positions)
    require(p >= 0 && p < seq, "mask position out of range");
  for (int l : labels) require(l >= 0 && l < vocab, "label id out of range");

  Var rows = tape.gather_rows(logits, mask_positions);
  Var log_p = tape.log_softmax_rows(rows);
  std::vector<std::pair<int, int>> picks;
  for (std::size_t k = 0; k < labels.size(); ++k)
    picks.emplace_back(static_cast<int>(k), labels[k]);
  Var picked = tape.gather_entries(log_p, picks);
  return tape.scale(tape.sum(picked),
                    Scalar(-1) / static_cast<Scalar>(labels.size()));
}

Scalar mlm_loss(const Matrix& logits, const std::vector<int>& labels,
                const std::vector<int>& mask_positions) {
  require(logits.allFinite(), "non-finite logits");
  Tape tape;
  Var l = tape.constant(logits);
  return mlm_loss(tape, l, labels, mask_positions).scalar();
}

}  // namespace densekit::objectives
