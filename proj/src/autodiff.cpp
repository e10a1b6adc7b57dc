#include "dgd/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace dgd::ad {

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {size() - 1};
}

Var Tape::parameter(const Matrix& value) {
  Node n;
  n.ref = &value;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return {size() - 1};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.ref ? *n.ref : n.value;
}

Var Tape::push(Matrix value, std::vector<int> inputs, std::function<void(const Matrix&)> back) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (int i : inputs) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
    if (n.needs_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return {size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var out) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  const Matrix& v = value(out);
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("backward expects a scalar output");
  accumulate(out, Matrix::Ones(1, 1));
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.back) {
      // Closures only accumulate into earlier nodes, so n stays valid.
      n.back(n.grad);
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) {
    const Matrix& val = value(v);
    return Matrix::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.rows()) throw std::invalid_argument("matmul: dimension mismatch");
  return t.push(av * bv, {a.id, b.id}, [&t, a, b](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var matmul_bt(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.cols()) throw std::invalid_argument("matmul_bt: dimension mismatch");
  return t.push(av * bv.transpose(), {a.id, b.id}, [&t, a, b](const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b));
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * t.value(a));
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw std::invalid_argument("add: shape mismatch");
  return t.push(av + bv, {a.id, b.id}, [&t, a, b](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw std::invalid_argument("sub: shape mismatch");
  return t.push(av - bv, {a.id, b.id}, [&t, a, b](const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw std::invalid_argument("mul: shape mismatch");
  return t.push(av.cwiseProduct(bv), {a.id, b.id}, [&t, a, b](const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var add_row(Tape& t, Var a, Var row) {
  const Matrix& av = t.value(a);
  const Matrix& rv = t.value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = av.rowwise() + rv.row(0);
  return t.push(std::move(out), {a.id, row.id}, [&t, a, row](const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var scale(Tape& t, Var a, double s) {
  return t.push(t.value(a) * s, {a.id}, [&t, a, s](const Matrix& g) { t.accumulate(a, g * s); });
}

Var silu(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  const Matrix sig = (1.0 + (-x.array()).exp()).inverse().matrix();
  Matrix out = x.cwiseProduct(sig);
  return t.push(std::move(out), {a.id}, [&t, a, sig](const Matrix& g) {
    const Matrix& x = t.value(a);
    // d/dx x*s(x) = s + x s (1 - s)
    const Matrix d = (sig.array() * (1.0 + x.array() * (1.0 - sig.array()))).matrix();
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var max_rows(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  if (x.rows() == 0) throw std::invalid_argument("max_rows: empty input");
  Matrix out(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Eigen::Index r = 0;
    out(0, c) = x.col(c).maxCoeff(&r);
    arg[static_cast<std::size_t>(c)] = r;
  }
  const Eigen::Index rows = x.rows();
  return t.push(std::move(out), {a.id}, [&t, a, arg, rows](const Matrix& g) {
    Matrix ga = Matrix::Zero(rows, g.cols());
    for (Eigen::Index c = 0; c < g.cols(); ++c) ga(arg[static_cast<std::size_t>(c)], c) = g(0, c);
    t.accumulate(a, ga);
  });
}

Var softmax_rows(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  Matrix y = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  Matrix y_copy = y;
  return t.push(std::move(y), {a.id}, [&t, a, y_copy](const Matrix& g) {
    // dx = y * (g - sum(g * y))
    const Eigen::VectorXd dot = g.cwiseProduct(y_copy).rowwise().sum();
    t.accumulate(a, (y_copy.array() * (g.colwise() - dot).array()).matrix());
  });
}

Var pick_row(Tape& t, Var table, int index) {
  const Matrix& x = t.value(table);
  if (index < 0 || index >= x.rows()) throw std::out_of_range("pick_row: index out of range");
  const Eigen::Index rows = x.rows();
  return t.push(x.row(index), {table.id}, [&t, table, index, rows](const Matrix& g) {
    Matrix gt = Matrix::Zero(rows, g.cols());
    gt.row(index) = g.row(0);
    t.accumulate(table, gt);
  });
}

Var masked_l1(Tape& t, Var pred, const Matrix& target, const Matrix& mask, bool normalize) {
  const Matrix& p = t.value(pred);
  if (p.size() != target.size() || p.size() != mask.size()) throw std::invalid_argument("masked_l1: size mismatch");
  const Eigen::Map<const Eigen::ArrayXd> pv(p.data(), p.size());
  const Eigen::Map<const Eigen::ArrayXd> tv(target.data(), target.size());
  const Eigen::Map<const Eigen::ArrayXd> mv(mask.data(), mask.size());
  const double denom = normalize ? mv.sum() : 1.0;
  if (!(denom > 0)) throw std::invalid_argument("masked_l1: all-zero mask");
  Matrix out(1, 1);
  out(0, 0) = (mv * (pv - tv).abs()).sum() / denom;
  Matrix sign_grad = Matrix::Zero(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double d = pv(i) - tv(i);
    sign_grad.data()[i] = mv(i) * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / denom;
  }
  return t.push(std::move(out), {pred.id}, [&t, pred, sign_grad](const Matrix& g) {
    t.accumulate(pred, sign_grad * g(0, 0));
  });
}

Var sum_scalars(Tape& t, const std::vector<Var>& terms) {
  Matrix total = Matrix::Zero(1, 1);
  std::vector<int> ids;
  for (Var v : terms) {
    const Matrix& val = t.value(v);
    if (val.rows() != 1 || val.cols() != 1) throw std::invalid_argument("sum_scalars: term is not a scalar");
    total += val;
    ids.push_back(v.id);
  }
  return t.push(std::move(total), ids, [&t, terms](const Matrix& g) {
    for (Var v : terms) t.accumulate(v, g);
  });
}

}  // namespace dgd::ad
