#include "scenediff/nn/tape.hpp"

#include <cmath>

#include "scenediff/errors.hpp"

namespace scenediff::nn {

// ---- parameters ----------------------------------------------------------------

Param& ParamStore::add(const std::string& name, int rows, int cols, double init_std, std::mt19937_64& rng,
                       bool decay) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value.resize(rows, cols);
  std::normal_distribution<double> normal(0.0, init_std);
  for (int i = 0; i < p->value.size(); ++i) p->value.data()[i] = normal(rng);
  p->grad = Matrix::Zero(rows, cols);
  p->m = Matrix::Zero(rows, cols);
  p->v = Matrix::Zero(rows, cols);
  p->decay = decay;
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::add_zeros(const std::string& name, int rows, int cols, bool decay) {
  std::mt19937_64 unused(0);
  Param& p = add(name, rows, cols, 0.0, unused, decay);
  p.value.setZero();
  return p;
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

long ParamStore::count() const {
  long n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void AdamW::step(ParamStore& params) {
  ++step_count;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (auto& p : params.all()) {
    if (p->decay) p->value *= 1.0 - lr * weight_decay;
    p->m = beta1 * p->m + (1.0 - beta1) * p->grad;
    p->v = beta2 * p->v + (1.0 - beta2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + eps);
  }
}

// ---- tape plumbing -------------------------------------------------------------

Var Tape::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad && record_;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::input(Matrix value) { return push(std::move(value), false); }

Var Tape::param(const Param& p) {
  const Var v = push(p.value, true);
  if (record_) nodes_[v].param = const_cast<Param*>(&p);
  return v;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("backward on a non-recording tape");
  if (nodes_[loss].value.size() != 1) throw ShapeMismatch("backward needs a 1x1 loss");
  nodes_[loss].grad = Matrix::Ones(1, 1);
  for (Var v = loss; v >= 0; --v) {
    Node& n = nodes_[v];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back();
    if (n.param) n.param->grad += n.grad;
  }
}

// ---- ops -----------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw ShapeMismatch("matmul inner dimensions differ");
  const Var out = push(value(a) * value(b), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    const Matrix& g = nodes_[out].grad;
    if (needs(a)) accumulate(a, g * value(b).transpose());
    if (needs(b)) accumulate(b, value(a).transpose() * g);
  });
  return out;
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw ShapeMismatch("add shapes differ");
  const Var out = push(value(a) + value(b), needs(a) || needs(b));
  on_backward(out, [this, a, b, out] {
    accumulate(a, nodes_[out].grad);
    accumulate(b, nodes_[out].grad);
  });
  return out;
}

Var Tape::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) throw ShapeMismatch("add_row shapes differ");
  Matrix r = value(a);
  r.rowwise() += value(row).row(0);
  const Var out = push(std::move(r), needs(a) || needs(row));
  on_backward(out, [this, a, row, out] {
    accumulate(a, nodes_[out].grad);
    if (needs(row)) accumulate(row, nodes_[out].grad.colwise().sum());
  });
  return out;
}

Var Tape::scale(Var a, double c) {
  const Var out = push(c * value(a), needs(a));
  on_backward(out, [this, a, out, c] { accumulate(a, c * nodes_[out].grad); });
  return out;
}

Var Tape::silu(Var a) {
  const Matrix& x = value(a);
  const Matrix sig = (1.0 + (-x.array()).exp()).inverse().matrix();
  const Var out = push(x.cwiseProduct(sig), needs(a));
  on_backward(out, [this, a, out, sig] {
    const auto& x = value(a).array();
    const Matrix d = (sig.array() * (1.0 + x * (1.0 - sig.array()))).matrix();
    accumulate(a, nodes_[out].grad.cwiseProduct(d));
  });
  return out;
}

Var Tape::layernorm(Var a, double eps) {
  const Matrix& x = value(a);
  const int d = static_cast<int>(x.cols());
  Matrix y(x.rows(), d);
  Eigen::VectorXd rstd(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    rstd[i] = 1.0 / std::sqrt(var + eps);
    y.row(i) = (x.row(i).array() - mu) * rstd[i];
  }
  const Var out = push(std::move(y), needs(a));
  on_backward(out, [this, a, out, rstd] {
    const Matrix& g = nodes_[out].grad;
    const Matrix& y = value(out);
    Matrix dx(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i) {
      const double mg = g.row(i).mean();
      const double mgy = g.row(i).dot(y.row(i)) / static_cast<double>(g.cols());
      dx.row(i) = rstd[i] * (g.row(i).array() - mg - y.row(i).array() * mgy);
    }
    accumulate(a, dx);
  });
  return out;
}

Var Tape::modulate(Var x, Var scale_row, Var shift_row) {
  const Matrix& xv = value(x);
  if (value(scale_row).rows() != 1 || value(shift_row).rows() != 1 || value(scale_row).cols() != xv.cols() ||
      value(shift_row).cols() != xv.cols()) {
    throw ShapeMismatch("modulate rows must be 1 x d");
  }
  Matrix y = xv;
  y.array().rowwise() *= (1.0 + value(scale_row).row(0).array());
  y.rowwise() += value(shift_row).row(0);
  const Var out = push(std::move(y), needs(x) || needs(scale_row) || needs(shift_row));
  on_backward(out, [this, x, scale_row, shift_row, out] {
    const Matrix& g = nodes_[out].grad;
    if (needs(x)) {
      Matrix gx = g;
      gx.array().rowwise() *= (1.0 + value(scale_row).row(0).array());
      accumulate(x, gx);
    }
    if (needs(scale_row)) accumulate(scale_row, g.cwiseProduct(value(x)).colwise().sum());
    if (needs(shift_row)) accumulate(shift_row, g.colwise().sum());
  });
  return out;
}

Var Tape::attention(Var q, Var k, Var v, int heads, Var bias, const Matrix* mask) {
  const Matrix& Q = value(q);
  const Matrix& K = value(k);
  const Matrix& V = value(v);
  const int n = static_cast<int>(Q.rows());
  const int m = static_cast<int>(K.rows());
  const int d = static_cast<int>(Q.cols());
  if (K.cols() != d || V.cols() != d || V.rows() != m || heads < 1 || d % heads != 0) {
    throw ShapeMismatch("attention shapes are inconsistent");
  }
  if (bias >= 0 && (value(bias).rows() != n || value(bias).cols() != heads * m)) {
    throw ShapeMismatch("attention bias must be n x heads*m");
  }
  if (mask && (mask->rows() != n || mask->cols() != m)) throw ShapeMismatch("attention mask must be n x m");
  const int dh = d / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix out_v(n, d);
  std::vector<Matrix> probs(heads);
  for (int h = 0; h < heads; ++h) {
    Matrix s = inv * (Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose());
    if (bias >= 0) s += value(bias).middleCols(h * m, m);
    if (mask) s += *mask;
    for (int i = 0; i < n; ++i) {
      const double mx = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - mx).exp();
      s.row(i) /= s.row(i).sum();
    }
    out_v.middleCols(h * dh, dh) = s * V.middleCols(h * dh, dh);
    probs[h] = std::move(s);
  }
  const bool ng = needs(q) || needs(k) || needs(v) || (bias >= 0 && needs(bias));
  const Var out = push(std::move(out_v), ng);
  on_backward(out, [this, q, k, v, bias, out, heads, n, m, d, dh, inv, probs = std::move(probs)] {
    const Matrix& g = nodes_[out].grad;
    const Matrix& Q = value(q);
    const Matrix& K = value(k);
    const Matrix& V = value(v);
    Matrix dq = Matrix::Zero(n, d), dk = Matrix::Zero(m, d), dv = Matrix::Zero(m, d);
    Matrix db = bias >= 0 ? Matrix::Zero(n, heads * m) : Matrix();
    for (int h = 0; h < heads; ++h) {
      const Matrix& P = probs[h];
      const auto gh = g.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh) = P.transpose() * gh;
      const Matrix dp = gh * V.middleCols(h * dh, dh).transpose();
      Matrix ds = P.cwiseProduct(dp);
      const Eigen::VectorXd row = ds.rowwise().sum();
      ds -= P.cwiseProduct(row.replicate(1, m));
      if (bias >= 0) db.middleCols(h * m, m) = ds;
      dq.middleCols(h * dh, dh) = inv * (ds * K.middleCols(h * dh, dh));
      dk.middleCols(h * dh, dh) = inv * (ds.transpose() * Q.middleCols(h * dh, dh));
    }
    accumulate(q, dq);
    accumulate(k, dk);
    accumulate(v, dv);
    if (bias >= 0) accumulate(bias, db);
  });
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  int rows = 0;
  const int cols = static_cast<int>(value(parts.front()).cols());
  bool ng = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ShapeMismatch("concat_rows column counts differ");
    rows += static_cast<int>(value(p).rows());
    ng = ng || needs(p);
  }
  Matrix r(rows, cols);
  int at = 0;
  for (Var p : parts) {
    r.middleRows(at, value(p).rows()) = value(p);
    at += static_cast<int>(value(p).rows());
  }
  const Var out = push(std::move(r), ng);
  on_backward(out, [this, parts, out] {
    int at = 0;
    for (Var p : parts) {
      const int rows = static_cast<int>(value(p).rows());
      if (needs(p)) accumulate(p, nodes_[out].grad.middleRows(at, rows));
      at += rows;
    }
  });
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  const int rows = static_cast<int>(value(parts.front()).rows());
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeMismatch("concat_cols row counts differ");
    cols += static_cast<int>(value(p).cols());
    ng = ng || needs(p);
  }
  Matrix r(rows, cols);
  int at = 0;
  for (Var p : parts) {
    r.middleCols(at, value(p).cols()) = value(p);
    at += static_cast<int>(value(p).cols());
  }
  const Var out = push(std::move(r), ng);
  on_backward(out, [this, parts, out] {
    int at = 0;
    for (Var p : parts) {
      const int cols = static_cast<int>(value(p).cols());
      if (needs(p)) accumulate(p, nodes_[out].grad.middleCols(at, cols));
      at += cols;
    }
  });
  return out;
}

Var Tape::slice_rows(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(a).rows()) throw ShapeMismatch("slice_rows out of range");
  const Var out = push(value(a).middleRows(start, count), needs(a));
  on_backward(out, [this, a, out, start, count] {
    Matrix g = Matrix::Zero(value(a).rows(), value(a).cols());
    g.middleRows(start, count) = nodes_[out].grad;
    accumulate(a, g);
  });
  return out;
}

Var Tape::reshape(Var a, int cols) {
  const Matrix& x = value(a);
  if (cols <= 0 || x.size() % cols != 0) throw ShapeMismatch("reshape does not divide the element count");
  const Var out = push(Eigen::Map<const Matrix>(x.data(), x.size() / cols, cols), needs(a));
  on_backward(out, [this, a, out] {
    const Matrix& g = nodes_[out].grad;
    accumulate(a, Eigen::Map<const Matrix>(g.data(), value(a).rows(), value(a).cols()));
  });
  return out;
}

Var Tape::gather_rows(Var table, const std::vector<int>& rows) {
  const Matrix& t = value(table);
  Matrix r(static_cast<int>(rows.size()), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.rows()) throw ShapeMismatch("gather_rows index out of range");
    r.row(static_cast<int>(i)) = t.row(rows[i]);
  }
  const Var out = push(std::move(r), needs(table));
  on_backward(out, [this, table, out, rows] {
    Matrix g = Matrix::Zero(value(table).rows(), value(table).cols());
    for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += nodes_[out].grad.row(static_cast<int>(i));
    accumulate(table, g);
  });
  return out;
}

Var Tape::edge_bias_layout(Var e, int n) {
  const Matrix& x = value(e);
  if (x.rows() != static_cast<long>(n) * n) throw ShapeMismatch("edge values must have n*n rows");
  const int h = static_cast<int>(x.cols());
  Matrix r(n, h * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < h; ++k) r(i, k * n + j) = x(i * n + j, k);
    }
  }
  const Var out = push(std::move(r), needs(e));
  on_backward(out, [this, e, out, n, h] {
    const Matrix& g = nodes_[out].grad;
    Matrix ge(n * n, h);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < h; ++k) ge(i * n + j, k) = g(i, k * n + j);
      }
    }
    accumulate(e, ge);
  });
  return out;
}

Var Tape::mse(Var a, const Matrix& target) {
  if (value(a).rows() != target.rows() || value(a).cols() != target.cols()) throw ShapeMismatch("mse shapes differ");
  const Matrix diff = value(a) - target;
  Matrix r(1, 1);
  r(0, 0) = diff.squaredNorm() / static_cast<double>(diff.size());
  const Var out = push(std::move(r), needs(a));
  on_backward(out, [this, a, out, diff] {
    accumulate(a, (2.0 * nodes_[out].grad(0, 0) / static_cast<double>(diff.size())) * diff);
  });
  return out;
}

}  // namespace scenediff::nn
