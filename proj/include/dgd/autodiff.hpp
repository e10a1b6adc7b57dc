#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace dgd::ad {

using Matrix = Eigen::MatrixXd;

struct Param {
  std::string name;
  Matrix value;
};

struct Var {
  int id = -1;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order; backward() walks them in reverse. Leaf nodes made by parameter()
/// reference external storage, which must outlive the tape; their gradients
/// are read back with grad().
///
/// With recording disabled the tape only evaluates (no closures, no grads).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(const Matrix& value);

  const Matrix& value(Var v) const;
  bool recording() const { return record_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
  void backward(Var out);
  /// Gradient accumulated at a node; zeros when nothing flowed into it.
  Matrix grad(Var v) const;

  // Op construction helpers used by the free functions below.
  Var push(Matrix value, std::vector<int> inputs, std::function<void(const Matrix&)> back);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Matrix* ref = nullptr;
    bool needs_grad = false;
    std::function<void(const Matrix&)> back;
  };
  bool record_;
  std::vector<Node> nodes_;
};

Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_bt(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
/// Elementwise product.
Var mul(Tape& t, Var a, Var b);
/// Adds a 1 x C row to every row of a.
Var add_row(Tape& t, Var a, Var row);
Var scale(Tape& t, Var a, double s);
Var silu(Tape& t, Var a);
/// Column-wise max over rows: N x C -> 1 x C.
Var max_rows(Tape& t, Var a);
Var softmax_rows(Tape& t, Var a);
/// Row `index` of a table: R x C -> 1 x C.
Var pick_row(Tape& t, Var table, int index);
/// sum_i mask_i |pred_i - target_i|, divided by sum(mask) when normalize.
Var masked_l1(Tape& t, Var pred, const Matrix& target, const Matrix& mask, bool normalize);
Var sum_scalars(Tape& t, const std::vector<Var>& terms);

}  // namespace dgd::ad
