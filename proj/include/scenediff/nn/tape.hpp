#pragma once

// Minimal reverse-mode automatic differentiation over row-major matrices.
// A Tape records the forward pass as a list of nodes; backward() replays the
// recorded closures in reverse and accumulates parameter gradients.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "scenediff/mesh.hpp"

namespace scenediff::nn {

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // first moment
  Matrix v;  // second moment
  bool decay = true;
};

/// Owns parameters in creation order; references stay valid.
class ParamStore {
 public:
  Param& add(const std::string& name, int rows, int cols, double init_std, std::mt19937_64& rng, bool decay = true);
  Param& add_zeros(const std::string& name, int rows, int cols, bool decay = false);

  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  std::vector<std::unique_ptr<Param>>& all() { return params_; }
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }
  void zero_grad();
  long count() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

struct AdamW {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  long step_count = 0;

  /// Decoupled weight decay, bias-corrected moments.
  void step(ParamStore& params);
};

using Var = int;

class Tape {
 public:
  /// With record = false no backward closures are stored (inference).
  explicit Tape(bool record = true) : record_(record) {}

  Var input(Matrix value);
  /// Gradients reach p.grad only on a recording tape.
  Var param(const Param& p);
  const Matrix& value(Var v) const { return nodes_[v].value; }
  const Matrix& grad(Var v) const { return nodes_[v].grad; }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and accumulates into Param::grad.
  void backward(Var loss);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// a (n x d) plus a 1 x d row broadcast over rows.
  Var add_row(Var a, Var row);
  Var scale(Var a, double c);
  Var silu(Var a);
  /// Per-row normalization without affine parameters.
  Var layernorm(Var a, double eps = 1e-5);
  /// x * (1 + scale) + shift with 1 x d rows broadcast.
  Var modulate(Var x, Var scale_row, Var shift_row);
  /// Multi-head scaled dot-product attention. q: n x d, k and v: m x d, d
  /// split into `heads` blocks. `bias` (optional, n x heads*m with head h in
  /// columns [h*m, (h+1)*m)) is added to the logits; `mask` (optional,
  /// constant n x m) is added to every head.
  Var attention(Var q, Var k, Var v, int heads, Var bias = -1, const Matrix* mask = nullptr);
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int start, int count);
  /// Same row-major storage viewed with a new column count.
  Var reshape(Var a, int cols);
  Var gather_rows(Var table, const std::vector<int>& rows);
  /// (n*n) x h edge values -> n x (h*n) attention-bias layout.
  Var edge_bias_layout(Var e, int n);
  /// mean((a - target)^2) as a 1 x 1 node.
  Var mse(Var a, const Matrix& target);

  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Param* param = nullptr;
    std::function<void()> back;
  };

  Var push(Matrix value, bool needs_grad);
  bool needs(Var v) const { return nodes_[v].needs_grad; }
  // Adds g into the gradient of v (allocating it on first use).
  void accumulate(Var v, const Matrix& g);
  template <class F>
  void on_backward(Var out, F&& f) {
    if (record_ && nodes_[out].needs_grad) nodes_[out].back = std::forward<F>(f);
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace scenediff::nn
