#pragma once

// Independent brute-force reference implementations used by the unit and
// acceptance suites. Everything here recomputes from first principles and
// stays off the library's fast paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "densekit/bpe/tokenizer.hpp"
#include "densekit/common.hpp"
#include "densekit/rng.hpp"

namespace oracles {

using densekit::Matrix;
using densekit::RowVector;
using densekit::Scalar;

// ---------------------------------------------------------------------------
// BPE: recount every adjacent pair each round; highest count wins, ties by
// lexicographic (left, right); pairs whose concatenation is already a token
// are skipped. Returns the merge list.
// ---------------------------------------------------------------------------
inline std::vector<std::pair<std::string, std::string>> bpe_merges(
    const std::vector<std::string>& corpus, bool lowercase, int budget) {
  namespace bpe = densekit::bpe;
  auto model = bpe::TokenizerModel::byte_level(bpe::SpecialTokens{}, lowercase);
  std::map<std::vector<std::string>, long long> words;
  for (const auto& doc : corpus) {
    for (const auto& w : bpe::pretokenize(model.normalize(doc))) {
      std::vector<std::string> syms;
      for (char c : w)
        syms.push_back(bpe::byte_to_symbol(static_cast<unsigned char>(c)));
      words[syms] += 1;
    }
  }
  std::map<std::string, bool> vocab;
  for (int b = 0; b < 256; ++b)
    vocab[bpe::byte_to_symbol(static_cast<unsigned char>(b))] = true;

  std::vector<std::pair<std::string, std::string>> merges;
  for (int round = 0; round < budget; ++round) {
    std::map<std::pair<std::string, std::string>, long long> counts;
    for (const auto& [syms, count] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        counts[{syms[i], syms[i + 1]}] += count;
    bool found = false;
    std::pair<std::string, std::string> best;
    long long best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count <= 0) continue;
      if (vocab.count(pair.first + pair.second)) continue;
      if (!found || count > best_count ||
          (count == best_count && pair < best)) {
        best = pair;
        best_count = count;
        found = true;
      }
    }
    if (!found) break;
    merges.push_back(best);
    vocab[best.first + best.second] = true;
    std::map<std::vector<std::string>, long long> next;
    for (const auto& [syms, count] : words) {
      std::vector<std::string> merged;
      std::size_t i = 0;
      while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i] == best.first &&
            syms[i + 1] == best.second) {
          merged.push_back(best.first + best.second);
          i += 2;
        } else {
          merged.push_back(syms[i]);
          ++i;
        }
      }
      next[merged] += count;
    }
    words = std::move(next);
  }
  return merges;
}

// ---------------------------------------------------------------------------
// Similarity and losses, direct summation.
// ---------------------------------------------------------------------------
inline Scalar cosine(const RowVector& a, const RowVector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

/// Eq-literal bidirectional InfoNCE via direct exp sums.
inline Scalar contrastive(const Matrix& q, const Matrix& p, Scalar tau,
                          const std::vector<Matrix>& negs = {}) {
  const Eigen::Index n = q.rows();
  auto s = [&](const RowVector& a, const RowVector& b) {
    return cosine(a, b) / tau;
  };
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar z = 0;
    for (Eigen::Index j = 0; j < n; ++j) z += std::exp(s(q.row(i), p.row(j)));
    if (!negs.empty())
      for (Eigen::Index m = 0; m < negs[static_cast<std::size_t>(i)].rows(); ++m)
        z += std::exp(s(q.row(i), negs[static_cast<std::size_t>(i)].row(m)));
    for (Eigen::Index j = 0; j < n; ++j) z += std::exp(s(q.row(j), p.row(i)));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) z += std::exp(s(q.row(i), q.row(j)));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) z += std::exp(s(p.row(i), p.row(j)));
    total += -std::log(std::exp(s(q.row(i), p.row(i))) / z);
  }
  return total / static_cast<Scalar>(n);
}

/// Softmax rows of exp(s_ij / tau_kd) with optional self exclusion.
inline Matrix kd_rows(const Matrix& sims, Scalar tau_kd, bool exclude_self) {
  const Eigen::Index m = sims.rows();
  Matrix probs = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar z = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (exclude_self && j == i) continue;
      z += std::exp(sims(i, j) / tau_kd);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (exclude_self && j == i) continue;
      probs(i, j) = std::exp(sims(i, j) / tau_kd) / z;
    }
  }
  return probs;
}

inline Matrix cosine_sims(const Matrix& embs, Scalar tau) {
  const Eigen::Index m = embs.rows();
  Matrix s(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      s(i, j) = cosine(embs.row(i), embs.row(j)) / tau;
  return s;
}

inline Scalar embedding_kd(const Matrix& teacher, const Matrix& student,
                           Scalar tau_kd, Scalar sim_tau, bool exclude_self) {
  const Matrix pt = kd_rows(cosine_sims(teacher, sim_tau), tau_kd, exclude_self);
  const Matrix ps = kd_rows(cosine_sims(student, sim_tau), tau_kd, exclude_self);
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < pt.rows(); ++i)
    for (Eigen::Index j = 0; j < pt.cols(); ++j) {
      if (exclude_self && j == i) continue;
      loss += -pt(i, j) * std::log(ps(i, j));
    }
  return loss;
}

/// Row-wise softmax of (B B^T)/sqrt(cols) over a head block.
inline Matrix relation_rows(const Matrix& proj, const std::vector<int>& keep,
                            int head, int head_dim) {
  Matrix block(static_cast<Eigen::Index>(keep.size()), head_dim);
  for (std::size_t r = 0; r < keep.size(); ++r)
    block.row(static_cast<Eigen::Index>(r)) =
        proj.row(keep[r]).segment(head * head_dim, head_dim);
  Matrix scores = block * block.transpose() / std::sqrt(Scalar(head_dim));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    RowVector e = (scores.row(i).array() - scores.row(i).maxCoeff()).exp();
    scores.row(i) = e / e.sum();
  }
  return scores;
}

/// Per-position KL between relation rows: mean over heads x positions per
/// relation type, summed over types.
inline Scalar relation_kd(const std::vector<Matrix>& teacher_qkv,
                          const std::vector<Matrix>& student_qkv,
                          const std::vector<int>& keep, int heads) {
  Scalar total = 0;
  for (int type = 0; type < 3; ++type) {
    const int t_head = static_cast<int>(teacher_qkv[type].cols()) / heads;
    const int s_head = static_cast<int>(student_qkv[type].cols()) / heads;
    Scalar acc = 0;
    for (int h = 0; h < heads; ++h) {
      const Matrix t = relation_rows(teacher_qkv[type], keep, h, t_head);
      const Matrix s = relation_rows(student_qkv[type], keep, h, s_head);
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j)
          acc += t(i, j) * (std::log(t(i, j)) - std::log(s(i, j)));
    }
    total += acc / static_cast<Scalar>(heads * keep.size());
  }
  return total;
}

inline Scalar mlm(const Matrix& logits, const std::vector<int>& labels,
                  const std::vector<int>& positions) {
  Scalar loss = 0;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto row = logits.row(positions[k]);
    Scalar z = 0;
    const Scalar mx = row.maxCoeff();
    for (Eigen::Index j = 0; j < row.size(); ++j) z += std::exp(row(j) - mx);
    loss += -(row(labels[k]) - mx - std::log(z));
  }
  return loss / static_cast<Scalar>(positions.size());
}

// ---------------------------------------------------------------------------
// Retrieval: full sort with the tie rule.
// ---------------------------------------------------------------------------
struct ScoredId {
  std::string id;
  Scalar score;
};

inline std::vector<ScoredId> full_sort_search(
    const std::vector<std::pair<std::string, RowVector>>& docs,
    const RowVector& query, int k) {
  std::vector<ScoredId> all;
  for (const auto& [id, v] : docs) all.push_back({id, cosine(v, query)});
  std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
  return all;
}

// ---------------------------------------------------------------------------
// Random valid UTF-8 strings (scalar values only, surrogates excluded).
// ---------------------------------------------------------------------------
inline std::string random_utf8(densekit::Rng& rng, int max_cps = 40) {
  const int n = rng.uniform_int(0, max_cps + 1);
  std::string out;
  for (int i = 0; i < n; ++i) {
    int cp = 0;
    switch (rng.uniform_int(0, 5)) {
      case 0: cp = rng.uniform_int(0x20, 0x7F); break;          // ASCII
      case 1: cp = rng.uniform_int(0x09, 0x0E); break;          // whitespace
      case 2: cp = rng.uniform_int(0xA0, 0x300); break;         // latin ext
      case 3: cp = rng.uniform_int(0x370, 0x400); break;        // greek
      default: cp = rng.uniform_int(0x4E00, 0x4F00); break;     // cjk
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

inline std::string lowercase_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace oracles
