#include "densekit/nn/tape.hpp"

#include <cmath>

namespace densekit::nn {

namespace {
constexpr Scalar kInvSqrt2 = 0.70710678118654752440;
constexpr Scalar kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

const Matrix& Var::value() const {
  require(tape_ != nullptr, "use of an empty Var");
  return tape_->value(*this);
}

Scalar Var::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar() requires a 1x1 value");
  return v(0, 0);
}

Var Tape::make(Matrix value, bool requires_grad, std::function<void()> back) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->back = requires_grad ? std::move(back) : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tape::Node& Tape::node(Var v) {
  check_same_tape(v);
  return *nodes_[static_cast<std::size_t>(v.idx_)];
}

const Tape::Node& Tape::node(Var v) const {
  check_same_tape(v);
  return *nodes_[static_cast<std::size_t>(v.idx_)];
}

void Tape::check_same_tape(Var v) const {
  require(v.tape_ == this && v.idx_ >= 0 &&
              v.idx_ < static_cast<int>(nodes_.size()),
          "Var does not belong to this tape");
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  require(backward_done_, "grad() before backward()");
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::leaf(const Matrix& value) { return make(value, true, nullptr); }

Var Tape::constant(const Matrix& value) { return make(value, false, nullptr); }

Var Tape::constant_scalar(Scalar v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return make(std::move(m), false, nullptr);
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(),
          "add: shape mismatch");
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int ia = a.idx_, ib = b.idx_;
  Var out = make(va + vb, rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ib, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad)
        nodes_[static_cast<std::size_t>(ia)]->grad += g;
      if (nodes_[static_cast<std::size_t>(ib)]->requires_grad)
        nodes_[static_cast<std::size_t>(ib)]->grad += g;
    };
  return out;
}

Var Tape::sub(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(),
          "sub: shape mismatch");
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int ia = a.idx_, ib = b.idx_;
  Var out = make(va - vb, rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ib, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad)
        nodes_[static_cast<std::size_t>(ia)]->grad += g;
      if (nodes_[static_cast<std::size_t>(ib)]->requires_grad)
        nodes_[static_cast<std::size_t>(ib)]->grad -= g;
    };
  return out;
}

Var Tape::hadamard(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(),
          "hadamard: shape mismatch");
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int ia = a.idx_, ib = b.idx_;
  Var out = make(va.cwiseProduct(vb), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ib, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad)
        nodes_[static_cast<std::size_t>(ia)]->grad +=
            g.cwiseProduct(nodes_[static_cast<std::size_t>(ib)]->value);
      if (nodes_[static_cast<std::size_t>(ib)]->requires_grad)
        nodes_[static_cast<std::size_t>(ib)]->grad +=
            g.cwiseProduct(nodes_[static_cast<std::size_t>(ia)]->value);
    };
  return out;
}

Var Tape::scale(Var a, Scalar s) {
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(node(a).value * s, rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, s] {
      nodes_[static_cast<std::size_t>(ia)]->grad +=
          s * nodes_[static_cast<std::size_t>(io)]->grad;
    };
  return out;
}

Var Tape::add_scalar(Var a, Scalar s) {
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(node(a).value.array() + s, rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      nodes_[static_cast<std::size_t>(ia)]->grad +=
          nodes_[static_cast<std::size_t>(io)]->grad;
    };
  return out;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require(va.cols() == vb.rows(), "matmul: inner dimension mismatch");
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int ia = a.idx_, ib = b.idx_;
  Var out = make(va * vb, rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ib, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad)
        nodes_[static_cast<std::size_t>(ia)]->grad +=
            g * nodes_[static_cast<std::size_t>(ib)]->value.transpose();
      if (nodes_[static_cast<std::size_t>(ib)]->requires_grad)
        nodes_[static_cast<std::size_t>(ib)]->grad +=
            nodes_[static_cast<std::size_t>(ia)]->value.transpose() * g;
    };
  return out;
}

Var Tape::transpose(Var a) {
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(node(a).value.transpose(), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      nodes_[static_cast<std::size_t>(ia)]->grad +=
          nodes_[static_cast<std::size_t>(io)]->grad.transpose();
    };
  return out;
}

Var Tape::add_row_broadcast(Var a, Var row) {
  const Matrix& va = node(a).value;
  const Matrix& vr = node(row).value;
  require(vr.rows() == 1 && vr.cols() == va.cols(),
          "add_row_broadcast: row must be 1 x cols(a)");
  bool rg = node(a).requires_grad || node(row).requires_grad;
  int ia = a.idx_, ir = row.idx_;
  Matrix v = va;
  v.rowwise() += vr.row(0);
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ir, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad)
        nodes_[static_cast<std::size_t>(ia)]->grad += g;
      if (nodes_[static_cast<std::size_t>(ir)]->requires_grad)
        nodes_[static_cast<std::size_t>(ir)]->grad += g.colwise().sum();
    };
  return out;
}

Var Tape::gelu(Var a) {
  const Matrix& va = node(a).value;
  Matrix v = va.unaryExpr([](Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::erf(x * kInvSqrt2));
  });
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      const Matrix& x = nodes_[static_cast<std::size_t>(ia)]->value;
      Matrix d = x.unaryExpr([](Scalar t) {
        return Scalar(0.5) * (Scalar(1) + std::erf(t * kInvSqrt2)) +
               t * kInvSqrt2Pi * std::exp(Scalar(-0.5) * t * t);
      });
      nodes_[static_cast<std::size_t>(ia)]->grad +=
          nodes_[static_cast<std::size_t>(io)]->grad.cwiseProduct(d);
    };
  return out;
}

Var Tape::gather_rows(Var a, const std::vector<int>& rows) {
  const Matrix& va = node(a).value;
  Matrix v(static_cast<Eigen::Index>(rows.size()), va.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < va.rows(), "gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(k)) = va.row(rows[k]);
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, rows] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (std::size_t k = 0; k < rows.size(); ++k)
        ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
    };
  return out;
}

Var Tape::gather_cols(Var a, const std::vector<int>& cols) {
  const Matrix& va = node(a).value;
  Matrix v(va.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    require(cols[k] >= 0 && cols[k] < va.cols(), "gather_cols: index out of range");
    v.col(static_cast<Eigen::Index>(k)) = va.col(cols[k]);
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, cols] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (std::size_t k = 0; k < cols.size(); ++k)
        ga.col(cols[k]) += g.col(static_cast<Eigen::Index>(k));
    };
  return out;
}

Var Tape::gather_entries(Var a, const std::vector<std::pair<int, int>>& entries) {
  const Matrix& va = node(a).value;
  Matrix v(1, static_cast<Eigen::Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& [r, c] = entries[k];
    require(r >= 0 && r < va.rows() && c >= 0 && c < va.cols(),
            "gather_entries: index out of range");
    v(0, static_cast<Eigen::Index>(k)) = va(r, c);
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, entries] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (std::size_t k = 0; k < entries.size(); ++k)
        ga(entries[k].first, entries[k].second) += g(0, static_cast<Eigen::Index>(k));
    };
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no parts");
  Eigen::Index total = 0;
  const Eigen::Index cols = node(parts[0]).value.cols();
  bool rg = false;
  for (Var p : parts) {
    require(node(p).value.cols() == cols, "concat_rows: column mismatch");
    total += node(p).value.rows();
    rg = rg || node(p).requires_grad;
  }
  Matrix v(total, cols);
  Eigen::Index off = 0;
  std::vector<int> idx;
  std::vector<Eigen::Index> sizes;
  for (Var p : parts) {
    const Matrix& vp = node(p).value;
    v.middleRows(off, vp.rows()) = vp;
    idx.push_back(p.idx_);
    sizes.push_back(vp.rows());
    off += vp.rows();
  }
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, idx, sizes, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Eigen::Index o = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        auto& p = *nodes_[static_cast<std::size_t>(idx[k])];
        if (p.requires_grad) p.grad += g.middleRows(o, sizes[k]);
        o += sizes[k];
      }
    };
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  Eigen::Index total = 0;
  const Eigen::Index rows = node(parts[0]).value.rows();
  bool rg = false;
  for (Var p : parts) {
    require(node(p).value.rows() == rows, "concat_cols: row mismatch");
    total += node(p).value.cols();
    rg = rg || node(p).requires_grad;
  }
  Matrix v(rows, total);
  Eigen::Index off = 0;
  std::vector<int> idx;
  std::vector<Eigen::Index> sizes;
  for (Var p : parts) {
    const Matrix& vp = node(p).value;
    v.middleCols(off, vp.cols()) = vp;
    idx.push_back(p.idx_);
    sizes.push_back(vp.cols());
    off += vp.cols();
  }
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, idx, sizes, io] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Eigen::Index o = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        auto& p = *nodes_[static_cast<std::size_t>(idx[k])];
        if (p.requires_grad) p.grad += g.middleCols(o, sizes[k]);
        o += sizes[k];
      }
    };
  return out;
}

Var Tape::softmax_rows(Var a) {
  const Matrix& va = node(a).value;
  Matrix v(va.rows(), va.cols());
  for (Eigen::Index i = 0; i < va.rows(); ++i) {
    const Scalar m = va.row(i).maxCoeff();
    v.row(i) = (va.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      const Matrix& y = nodes_[static_cast<std::size_t>(io)]->value;
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const Scalar dot = g.row(i).cwiseProduct(y.row(i)).sum();
        ga.row(i) += (g.row(i).array() - dot).matrix().cwiseProduct(y.row(i));
      }
    };
  return out;
}

Var Tape::log_softmax_rows(Var a) {
  const Matrix& va = node(a).value;
  Matrix v(va.rows(), va.cols());
  for (Eigen::Index i = 0; i < va.rows(); ++i) {
    const Scalar m = va.row(i).maxCoeff();
    const Scalar lse = std::log((va.row(i).array() - m).exp().sum()) + m;
    v.row(i) = va.row(i).array() - lse;
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      const Matrix& y = nodes_[static_cast<std::size_t>(io)]->value;  // log p
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const Scalar gsum = g.row(i).sum();
        ga.row(i) += g.row(i) - gsum * y.row(i).array().exp().matrix();
      }
    };
  return out;
}

Var Tape::layer_norm_rows(Var a, Var gain, Var bias, Scalar eps) {
  const Matrix& x = node(a).value;
  const Matrix& gn = node(gain).value;
  const Matrix& bs = node(bias).value;
  require(gn.rows() == 1 && gn.cols() == x.cols(), "layer_norm: gain must be 1xd");
  require(bs.rows() == 1 && bs.cols() == x.cols(), "layer_norm: bias must be 1xd");
  const Eigen::Index d = x.cols();
  Matrix xhat(x.rows(), d);
  Vector inv_sigma(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar mu = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mu).square().mean();
    const Scalar is = Scalar(1) / std::sqrt(var + eps);
    inv_sigma(i) = is;
    xhat.row(i) = (x.row(i).array() - mu) * is;
  }
  Matrix v = xhat;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    v.row(i) = v.row(i).cwiseProduct(gn.row(0)) + bs.row(0);
  bool rg = node(a).requires_grad || node(gain).requires_grad ||
            node(bias).requires_grad;
  int ia = a.idx_, ig = gain.idx_, ib = bias.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, ig, ib, io, xhat,
                                                  inv_sigma, d] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      const Matrix& gn2 = nodes_[static_cast<std::size_t>(ig)]->value;
      if (nodes_[static_cast<std::size_t>(ig)]->requires_grad) {
        Matrix& ggain = nodes_[static_cast<std::size_t>(ig)]->grad;
        ggain += g.cwiseProduct(xhat).colwise().sum();
      }
      if (nodes_[static_cast<std::size_t>(ib)]->requires_grad) {
        Matrix& gbias = nodes_[static_cast<std::size_t>(ib)]->grad;
        gbias += g.colwise().sum();
      }
      if (nodes_[static_cast<std::size_t>(ia)]->requires_grad) {
        Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          RowVector dxhat = g.row(i).cwiseProduct(gn2.row(0));
          const Scalar m1 = dxhat.mean();
          const Scalar m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
          ga.row(i) += inv_sigma(i) *
                       (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix();
        }
      }
      (void)d;
    };
  return out;
}

Var Tape::l2_normalize_rows(Var a) {
  const Matrix& x = node(a).value;
  Matrix v(x.rows(), x.cols());
  Vector norms(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar n = x.row(i).norm();
    require(n > Scalar(0), "l2_normalize_rows: zero row");
    norms(i) = n;
    v.row(i) = x.row(i) / n;
  }
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, norms] {
      const Matrix& y = nodes_[static_cast<std::size_t>(io)]->value;
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const Scalar dot = g.row(i).cwiseProduct(y.row(i)).sum();
        ga.row(i) += (g.row(i) - dot * y.row(i)) / norms(i);
      }
    };
  return out;
}

Var Tape::mean_rows(Var a, const std::vector<int>& keep) {
  require(!keep.empty(), "mean_rows: no rows kept");
  const Matrix& x = node(a).value;
  Matrix v = Matrix::Zero(1, x.cols());
  for (int i : keep) {
    require(i >= 0 && i < x.rows(), "mean_rows: index out of range");
    v.row(0) += x.row(i);
  }
  v /= static_cast<Scalar>(keep.size());
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, keep] {
      const Matrix& g = nodes_[static_cast<std::size_t>(io)]->grad;
      Matrix& ga = nodes_[static_cast<std::size_t>(ia)]->grad;
      const Scalar w = Scalar(1) / static_cast<Scalar>(keep.size());
      for (int i : keep) ga.row(i) += w * g.row(0);
    };
  return out;
}

Var Tape::logsumexp_row(Var a) {
  const Matrix& x = node(a).value;
  require(x.rows() == 1, "logsumexp_row: expects a 1xn row");
  const Scalar m = x.row(0).maxCoeff();
  Matrix v(1, 1);
  v(0, 0) = std::log((x.row(0).array() - m).exp().sum()) + m;
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io, m] {
      const Matrix& x2 = nodes_[static_cast<std::size_t>(ia)]->value;
      const Scalar g = nodes_[static_cast<std::size_t>(io)]->grad(0, 0);
      RowVector p = (x2.row(0).array() - m).exp();
      p /= p.sum();
      nodes_[static_cast<std::size_t>(ia)]->grad += g * p;
    };
  return out;
}

Var Tape::sum(Var a) {
  const Matrix& x = node(a).value;
  Matrix v(1, 1);
  v(0, 0) = x.sum();
  bool rg = node(a).requires_grad;
  int ia = a.idx_;
  Var out = make(std::move(v), rg, nullptr);
  int io = out.idx_;
  if (rg)
    nodes_[static_cast<std::size_t>(io)]->back = [this, ia, io] {
      const Matrix& x2 = nodes_[static_cast<std::size_t>(ia)]->value;
      nodes_[static_cast<std::size_t>(ia)]->grad.array() +=
          nodes_[static_cast<std::size_t>(io)]->grad(0, 0);
      (void)x2;
    };
  return out;
}

void Tape::backward(Var loss) {
  const Node& ln = node(loss);
  require(ln.value.rows() == 1 && ln.value.cols() == 1,
          "backward: loss must be a 1x1 scalar");
  require(ln.requires_grad,
          "backward: loss is detached from every differentiable leaf");
  require(!backward_done_, "backward: tape already consumed");
  for (auto& n : nodes_) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  nodes_[static_cast<std::size_t>(loss.idx_)]->grad(0, 0) = Scalar(1);
  for (int i = loss.idx_; i >= 0; --i) {
    Node& n = *nodes_[static_cast<std::size_t>(i)];
    if (n.back) n.back();
  }
  backward_done_ = true;
}

}  // namespace densekit::nn
