#include <doctest.h>

#include "dgd/autodiff.hpp"

#include <functional>
#include <random>

using namespace dgd;
using ad::Matrix;
using ad::Tape;
using ad::Var;
using Eigen::Index;

namespace {

using Graph = std::function<Var(Tape&, const std::vector<Var>&)>;

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Largest relative error between tape gradients and central differences.
double gradient_error(const Graph& f, std::vector<Matrix> inputs, double h = 1e-6) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.parameter(m));
  Var out = f(tape, vars);
  REQUIRE(tape.value(out).size() == 1);
  tape.backward(out);
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix g = tape.grad(vars[k]);
    for (Index i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<Matrix> shifted = inputs;
        shifted[k].data()[i] += delta;
        Tape t(false);
        std::vector<Var> v;
        for (const auto& m : shifted) v.push_back(t.parameter(m));
        return t.value(f(t, v))(0, 0);
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.data()[i]) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

// u^T X v as a scalar readout.
Var readout(Tape& t, Var x, std::mt19937_64& rng) {
  const Index rows = t.value(x).rows(), cols = t.value(x).cols();
  Var u = t.constant(random_matrix(1, rows, rng));
  Var v = t.constant(random_matrix(cols, 1, rng));
  return ad::matmul(t, ad::matmul(t, u, x), v);
}

}  // namespace

TEST_CASE("op gradients match central differences") {
  std::mt19937_64 rng(1);
  const Matrix A = random_matrix(3, 4, rng), B = random_matrix(4, 2, rng), C = random_matrix(3, 4, rng);
  const Matrix row = random_matrix(1, 4, rng), D = random_matrix(5, 4, rng);

  auto check = [&](const char* name, const Graph& g, std::vector<Matrix> in) {
    CAPTURE(name);
    std::mt19937_64 r(7);
    // Rebuild the readout with a fixed stream so every evaluation sees the same weights.
    Graph wrapped = [&](Tape& t, const std::vector<Var>& v) {
      r.seed(7);
      return readout(t, g(t, v), r);
    };
    CHECK(gradient_error(wrapped, std::move(in)) <= 1e-7);
  };

  check("matmul", [](Tape& t, const std::vector<Var>& v) { return ad::matmul(t, v[0], v[1]); }, {A, B});
  check("matmul_bt", [](Tape& t, const std::vector<Var>& v) { return ad::matmul_bt(t, v[0], v[1]); }, {A, D});
  check("add", [](Tape& t, const std::vector<Var>& v) { return ad::add(t, v[0], v[1]); }, {A, C});
  check("sub", [](Tape& t, const std::vector<Var>& v) { return ad::sub(t, v[0], v[1]); }, {A, C});
  check("mul", [](Tape& t, const std::vector<Var>& v) { return ad::mul(t, v[0], v[1]); }, {A, C});
  check("add_row", [](Tape& t, const std::vector<Var>& v) { return ad::add_row(t, v[0], v[1]); }, {A, row});
  check("scale", [](Tape& t, const std::vector<Var>& v) { return ad::scale(t, v[0], -2.5); }, {A});
  check("silu", [](Tape& t, const std::vector<Var>& v) { return ad::silu(t, v[0]); }, {A});
  check("max_rows", [](Tape& t, const std::vector<Var>& v) { return ad::max_rows(t, v[0]); }, {D});
  check("softmax_rows", [](Tape& t, const std::vector<Var>& v) { return ad::softmax_rows(t, v[0]); }, {A});
  check("pick_row", [](Tape& t, const std::vector<Var>& v) { return ad::pick_row(t, v[0], 2); }, {D});
  check("chain", [](Tape& t, const std::vector<Var>& v) {
    Var h = ad::silu(t, ad::add_row(t, ad::matmul(t, v[0], v[1]), v[2]));
    return ad::softmax_rows(t, ad::matmul_bt(t, h, h));
  }, {A, B, random_matrix(1, 2, rng)});
}

TEST_CASE("masked l1 gradient") {
  std::mt19937_64 rng(2);
  const Matrix target = random_matrix(1, 6, rng);
  Matrix mask = Matrix::Ones(1, 6);
  mask(0, 4) = 0;
  for (bool normalize : {true, false}) {
    Graph f = [&](Tape& t, const std::vector<Var>& v) { return ad::masked_l1(t, v[0], target, mask, normalize); };
    CHECK(gradient_error(f, {random_matrix(1, 6, rng)}) <= 1e-7);
  }
  const Matrix three = Matrix::Constant(1, 6, 3.0), zero = Matrix::Zero(1, 6);
  Tape t;
  Var p = t.parameter(three);
  Var loss = ad::masked_l1(t, p, target, mask, true);
  t.backward(loss);
  CHECK(t.grad(p)(0, 4) == 0.0);
  CHECK(t.grad(p).norm() > 0);

  Tape t2;
  Var q = t2.parameter(zero);
  CHECK_THROWS(ad::masked_l1(t2, q, target, Matrix::Zero(1, 6), true));
}

TEST_CASE("sum of scalars and repeated use accumulate") {
  std::mt19937_64 rng(3);
  Graph f = [](Tape& t, const std::vector<Var>& v) {
    Var a = ad::matmul_bt(t, v[0], v[0]);
    Var s1 = ad::matmul(t, ad::pick_row(t, a, 1), t.constant(Matrix::Ones(2, 1)));
    Var s2 = ad::scale(t, ad::pick_row(t, ad::max_rows(t, v[0]), 0), 0.5);
    Var s3 = ad::matmul(t, ad::pick_row(t, v[0], 0), t.constant(Matrix::Ones(3, 1)));
    return ad::sum_scalars(t, {s1, ad::matmul(t, s2, t.constant(Matrix::Ones(3, 1))), s3});
  };
  CHECK(gradient_error(f, {random_matrix(2, 3, rng)}) <= 1e-7);
}

TEST_CASE("shape errors and unused nodes") {
  // parameters are held by reference
  const Matrix A = Matrix::Ones(2, 3), B = Matrix::Ones(2, 2);
  Tape t;
  Var a = t.parameter(A);
  Var b = t.parameter(B);
  CHECK_THROWS(ad::matmul(t, a, b));
  CHECK_THROWS(ad::add(t, a, b));
  CHECK_THROWS(ad::mul(t, a, b));
  Var out = ad::pick_row(t, b, 0);
  CHECK_THROWS(t.backward(b));
  Var one = ad::matmul(t, out, t.constant(Matrix::Ones(2, 1)));
  t.backward(one);
  CHECK(t.grad(a).isZero());
  CHECK(t.grad(b).row(0).isOnes());
  CHECK(t.grad(b).row(1).isZero());
}
