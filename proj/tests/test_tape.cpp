#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <vf/errors.hpp>
#include <vf/tape.hpp>

using namespace vf;
using ad::Tape;

namespace {

using BuildFn = std::function<int(Tape&, const std::vector<int>&)>;

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double lo = 0.2,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return m;
}

double eval_loss(const BuildFn& f, const std::vector<Matrix>& vals) {
  Tape t;
  std::vector<int> ins;
  for (const Matrix& v : vals) ins.push_back(t.input(v));
  return t.value(f(t, ins))(0, 0);
}

/// Central finite differences against one reverse sweep, every entry of
/// every input.
void fd_check(const BuildFn& f, std::vector<Matrix> vals, double h = 1e-5) {
  Tape t;
  std::vector<int> ins;
  for (const Matrix& v : vals) ins.push_back(t.input(v));
  int loss = f(t, ins);
  t.backward(loss);
  std::vector<Matrix> analytic;
  for (int i : ins) analytic.push_back(t.grad(i));

  for (std::size_t k = 0; k < vals.size(); ++k) {
    for (int i = 0; i < vals[k].rows(); ++i) {
      for (int j = 0; j < vals[k].cols(); ++j) {
        double kept = vals[k](i, j);
        vals[k](i, j) = kept + h;
        double up = eval_loss(f, vals);
        vals[k](i, j) = kept - h;
        double down = eval_loss(f, vals);
        vals[k](i, j) = kept;
        double fd = (up - down) / (2 * h);
        double a = analytic[k](i, j);
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
        INFO("input ", k, " entry (", i, ",", j, "): analytic ", a, " fd ", fd);
        CHECK(rel < 1e-6);
      }
    }
  }
}

/// Contracts an op output to 1 x 1 with random weight vectors so every
/// output entry influences the loss distinctly.
BuildFn contracted(std::function<int(Tape&, const std::vector<int>&)> op) {
  return [op = std::move(op)](Tape& t, const std::vector<int>& ins) {
    int out = op(t, ins);
    // the last two inputs are the contraction vectors
    int left = ins[ins.size() - 2];
    int right = ins[ins.size() - 1];
    return t.matmul(t.matmul(left, out), right);
  };
}

std::vector<Matrix> with_contraction(std::mt19937_64& rng, std::vector<Matrix> vals,
                                     int out_rows, int out_cols) {
  vals.push_back(random_matrix(rng, 1, out_rows));
  vals.push_back(random_matrix(rng, out_cols, 1));
  return vals;
}

}  // namespace

TEST_CASE("matmul value and gradient") {
  std::mt19937_64 rng(1);
  Matrix a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 2);
  Tape t;
  int out = t.matmul(t.input(a), t.input(b));
  Matrix manual(3, 2);
  manual.setZero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 4; ++k) manual(i, j) += a(i, k) * b(k, j);
  CHECK((t.value(out) - manual).cwiseAbs().maxCoeff() < 1e-12);

  fd_check(contracted([](Tape& t2, const std::vector<int>& ins) {
             return t2.matmul(ins[0], ins[1]);
           }),
           with_contraction(rng, {a, b}, 3, 2));
}

TEST_CASE("add, add_row, scale, scale_by") {
  std::mt19937_64 rng(2);
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.add(ins[0], ins[1]);
           }),
           with_contraction(rng, {random_matrix(rng, 3, 3), random_matrix(rng, 3, 3)}, 3, 3));
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.add_row(ins[0], ins[1]);
           }),
           with_contraction(rng, {random_matrix(rng, 4, 3), random_matrix(rng, 1, 3)}, 4, 3));
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.scale(ins[0], 2.5);
           }),
           with_contraction(rng, {random_matrix(rng, 2, 5)}, 2, 5));
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.scale_by(ins[1], ins[0]);
           }),
           with_contraction(rng, {random_matrix(rng, 1, 1), random_matrix(rng, 3, 4)}, 3, 4));
}

TEST_CASE("rowwise products") {
  std::mt19937_64 rng(3);
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.rowwise_mul(ins[0], ins[1]);
           }),
           with_contraction(rng, {random_matrix(rng, 4, 1), random_matrix(rng, 4, 3)}, 4, 3));

  Vector c(4);
  c << 0.5, -1.25, 2.0, 0.75;
  fd_check(contracted([c](Tape& t, const std::vector<int>& ins) {
             return t.rowwise_scale(ins[0], c);
           }),
           with_contraction(rng, {random_matrix(rng, 4, 3)}, 4, 3));
}

TEST_CASE("concat_cols splits gradients by column") {
  std::mt19937_64 rng(4);
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.concat_cols(ins[0], ins[1]);
           }),
           with_contraction(rng, {random_matrix(rng, 3, 2), random_matrix(rng, 3, 4)}, 3, 6));
}

TEST_CASE("leaky relu, relu, sigmoid") {
  std::mt19937_64 rng(5);
  // inputs bounded away from the kink
  Matrix a = random_matrix(rng, 4, 3, 0.3, 1.0);
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.leaky_relu(ins[0], 0.2);
           }),
           with_contraction(rng, {a}, 4, 3));
  fd_check(contracted([](Tape& t, const std::vector<int>& ins) {
             return t.relu(ins[0]);
           }),
           with_contraction(rng, {a}, 4, 3));

  Tape t;
  int s = t.sigmoid(t.input(a));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      CHECK(t.value(s)(i, j) == doctest::Approx(1.0 / (1.0 + std::exp(-a(i, j)))));
  // stable at large magnitudes
  Matrix big(1, 2);
  big << 500.0, -500.0;
  Tape t2;
  int s2 = t2.sigmoid(t2.input(big));
  CHECK(t2.value(s2)(0, 0) == doctest::Approx(1.0));
  CHECK(t2.value(s2)(0, 1) == doctest::Approx(0.0));
  CHECK(std::isfinite(t2.value(s2)(0, 0)));

  fd_check(contracted([](Tape& t3, const std::vector<int>& ins) {
             return t3.sigmoid(ins[0]);
           }),
           with_contraction(rng, {a}, 4, 3));
}

TEST_CASE("gather accumulates over duplicate rows") {
  std::mt19937_64 rng(6);
  Matrix a = random_matrix(rng, 5, 3);
  std::vector<int> idx = {2, 0, 2, 4};
  Tape t;
  int g = t.gather_rows(t.input(a), idx);
  for (std::size_t r = 0; r < idx.size(); ++r)
    CHECK((t.value(g).row(static_cast<int>(r)) -
           a.row(idx[r])).cwiseAbs().maxCoeff() < 1e-15);

  fd_check(contracted([idx](Tape& t2, const std::vector<int>& ins) {
             return t2.gather_rows(ins[0], idx);
           }),
           with_contraction(rng, {a}, 4, 3));
}

TEST_CASE("scatter_sum pools by segment, empty segments stay zero") {
  std::mt19937_64 rng(7);
  Matrix a = random_matrix(rng, 4, 3);
  std::vector<int> seg = {1, 0, 1, 3};
  Tape t;
  int out = t.scatter_sum(t.input(a), seg, 4);
  Matrix manual(4, 3);
  manual.setZero();
  for (std::size_t r = 0; r < seg.size(); ++r)
    manual.row(seg[r]) += a.row(static_cast<int>(r));
  CHECK((t.value(out) - manual).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(t.value(out).row(2).cwiseAbs().maxCoeff() == 0.0);

  fd_check(contracted([seg](Tape& t2, const std::vector<int>& ins) {
             return t2.scatter_sum(ins[0], seg, 4);
           }),
           with_contraction(rng, {a}, 4, 3));
}

TEST_CASE("segment_softmax normalizes within segments") {
  std::mt19937_64 rng(8);
  Matrix logits = random_matrix(rng, 6, 1, 0.2, 2.0);
  std::vector<int> seg = {0, 0, 1, 1, 1, 2};
  Tape t;
  int p = t.segment_softmax(t.input(logits), seg, 3);
  double s0 = t.value(p)(0, 0) + t.value(p)(1, 0);
  double s1 = t.value(p)(2, 0) + t.value(p)(3, 0) + t.value(p)(4, 0);
  CHECK(s0 == doctest::Approx(1.0));
  CHECK(s1 == doctest::Approx(1.0));
  CHECK(t.value(p)(5, 0) == doctest::Approx(1.0));
  for (int i = 0; i < 6; ++i) CHECK(t.value(p)(i, 0) > 0.0);

  // shift stability: huge logits stay finite
  Matrix shifted = logits;
  shifted.array() += 1000.0;
  Tape t2;
  int p2 = t2.segment_softmax(t2.input(shifted), seg, 3);
  CHECK((t2.value(p2) - t.value(p)).cwiseAbs().maxCoeff() < 1e-12);

  fd_check(contracted([seg](Tape& t3, const std::vector<int>& ins) {
             return t3.segment_softmax(ins[0], seg, 3);
           }),
           with_contraction(rng, {logits}, 6, 1));
}

TEST_CASE("segment_max picks per-column maxima and routes gradients") {
  Matrix a(5, 2);
  a << 1.0, 9.0,
       4.0, 2.0,
       3.0, 5.0,
       8.0, 6.0,
       7.0, 1.0;
  std::vector<int> seg = {0, 0, 1, 1, 3};
  Tape t;
  int m = t.segment_max(t.input(a), seg, 4);
  Matrix expect(4, 2);
  expect << 4.0, 9.0,
            8.0, 6.0,
            0.0, 0.0,
            7.0, 1.0;
  CHECK((t.value(m) - expect).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(9);
  fd_check(contracted([seg](Tape& t2, const std::vector<int>& ins) {
             return t2.segment_max(ins[0], seg, 4);
           }),
           with_contraction(rng, {a}, 4, 2));
}

TEST_CASE("bce_with_logits is stable and differentiable") {
  Vector y(4);
  y << 1.0, 0.0, 1.0, 0.0;
  Matrix z(4, 1);
  z << 0.7, -0.4, 2.0, 1.1;
  Tape t;
  int loss = t.bce_with_logits(t.input(z), y);
  double manual = 0.0;
  for (int i = 0; i < 4; ++i) {
    double p = 1.0 / (1.0 + std::exp(-z(i, 0)));
    manual += -(y(i) * std::log(p) + (1 - y(i)) * std::log(1 - p));
  }
  manual /= 4.0;
  CHECK(t.value(loss)(0, 0) == doctest::Approx(manual));

  Matrix extreme(2, 1);
  extreme << 800.0, -800.0;
  Vector y2(2);
  y2 << 0.0, 1.0;
  Tape t2;
  CHECK(std::isfinite(t2.value(t2.bce_with_logits(t2.input(extreme), y2))(0, 0)));

  fd_check([y](Tape& t3, const std::vector<int>& ins) {
    return t3.bce_with_logits(ins[0], y);
  }, {z});
}

TEST_CASE("composite expression differentiates end to end") {
  std::mt19937_64 rng(10);
  Matrix x = random_matrix(rng, 5, 3);
  Matrix w = random_matrix(rng, 3, 4);
  Matrix b = random_matrix(rng, 1, 4);
  Vector y(2);
  y << 1.0, 0.0;
  Matrix cls = random_matrix(rng, 4, 1);
  std::vector<int> seg = {0, 0, 0, 1, 1};

  fd_check([y, seg](Tape& t, const std::vector<int>& ins) {
    int h = t.relu(t.add_row(t.matmul(ins[0], ins[1]), ins[2]));
    int pooled = t.scatter_sum(h, seg, 2);
    int logits = t.matmul(pooled, ins[3]);
    return t.bce_with_logits(logits, y);
  }, {x, w, b, cls});
}

TEST_CASE("shape violations throw") {
  Tape t;
  int a = t.input(Matrix::Zero(2, 3));
  int b = t.input(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(t.add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(t.matmul(a, a), ShapeMismatch);
  CHECK_THROWS_AS(t.backward(a), ShapeMismatch);
  CHECK_THROWS_AS(t.scale_by(a, b), ShapeMismatch);
}
