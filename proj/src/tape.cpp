#include <vf/tape.hpp>

#include <cmath>
#include <limits>
#include <utility>

#include <vf/errors.hpp>

namespace vf::ad {

int Tape::push(Matrix v, std::function<void(Tape&)> back) {
  Slot s;
  s.grad = Matrix::Zero(v.rows(), v.cols());
  s.val = std::move(v);
  s.back = std::move(back);
  slots_.push_back(std::move(s));
  return static_cast<int>(slots_.size()) - 1;
}

int Tape::input(Matrix v) { return push(std::move(v), nullptr); }

int Tape::matmul(int a, int b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) throw ShapeMismatch("matmul inner dimensions differ");
  int out = push(A * B, nullptr);
  slots_[out].back = [a, b, out](Tape& t) {
    const Matrix& G = t.grad(out);
    t.grad_mut(a) += G * t.value(b).transpose();
    t.grad_mut(b) += t.value(a).transpose() * G;
  };
  return out;
}

int Tape::add(int a, int b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw ShapeMismatch("add shapes differ");
  int out = push(A + B, nullptr);
  slots_[out].back = [a, b, out](Tape& t) {
    t.grad_mut(a) += t.grad(out);
    t.grad_mut(b) += t.grad(out);
  };
  return out;
}

int Tape::add_row(int a, int row) {
  const Matrix& A = value(a);
  const Matrix& R = value(row);
  if (R.rows() != 1 || R.cols() != A.cols())
    throw ShapeMismatch("add_row expects a 1 x cols row");
  int out = push(A.rowwise() + R.row(0), nullptr);
  slots_[out].back = [a, row, out](Tape& t) {
    const Matrix& G = t.grad(out);
    t.grad_mut(a) += G;
    t.grad_mut(row) += G.colwise().sum();
  };
  return out;
}

int Tape::scale(int a, Scalar c) {
  int out = push(value(a) * c, nullptr);
  slots_[out].back = [a, c, out](Tape& t) { t.grad_mut(a) += c * t.grad(out); };
  return out;
}

int Tape::scale_by(int a, int s) {
  const Matrix& S = value(s);
  if (S.rows() != 1 || S.cols() != 1) throw ShapeMismatch("scale_by expects 1 x 1");
  int out = push(value(a) * S(0, 0), nullptr);
  slots_[out].back = [a, s, out](Tape& t) {
    const Matrix& G = t.grad(out);
    t.grad_mut(a) += t.value(s)(0, 0) * G;
    t.grad_mut(s)(0, 0) += (G.array() * t.value(a).array()).sum();
  };
  return out;
}

int Tape::rowwise_mul(int col, int m) {
  const Matrix& C = value(col);
  const Matrix& M = value(m);
  if (C.cols() != 1 || C.rows() != M.rows())
    throw ShapeMismatch("rowwise_mul expects an n x 1 column matching rows");
  int out = push(M.array().colwise() * C.col(0).array(), nullptr);
  slots_[out].back = [col, m, out](Tape& t) {
    const Matrix& G = t.grad(out);
    t.grad_mut(m) += (G.array().colwise() * t.value(col).col(0).array()).matrix();
    t.grad_mut(col) += (G.array() * t.value(m).array()).rowwise().sum().matrix();
  };
  return out;
}

int Tape::rowwise_scale(int m, Vector c) {
  const Matrix& M = value(m);
  if (c.rows() != M.rows()) throw ShapeMismatch("rowwise_scale length mismatch");
  int out = push(M.array().colwise() * c.array(), nullptr);
  slots_[out].back = [m, c, out](Tape& t) {
    t.grad_mut(m) += (t.grad(out).array().colwise() * c.array()).matrix();
  };
  return out;
}

int Tape::concat_cols(int a, int b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.rows() != B.rows()) throw ShapeMismatch("concat_cols row mismatch");
  Matrix v(A.rows(), A.cols() + B.cols());
  v << A, B;
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, b, out](Tape& t) {
    const Matrix& G = t.grad(out);
    Eigen::Index ac = t.value(a).cols();
    t.grad_mut(a) += G.leftCols(ac);
    t.grad_mut(b) += G.rightCols(G.cols() - ac);
  };
  return out;
}

int Tape::leaky_relu(int a, Scalar slope) {
  const Matrix& A = value(a);
  Matrix v = A.array().max(A.array() * slope).matrix();
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, slope, out](Tape& t) {
    const Matrix& X = t.value(a);
    Matrix d = X.unaryExpr([slope](Scalar x) { return x > 0 ? Scalar(1) : slope; });
    t.grad_mut(a) += (t.grad(out).array() * d.array()).matrix();
  };
  return out;
}

int Tape::sigmoid(int a) {
  const Matrix& A = value(a);
  Matrix v = A.unaryExpr([](Scalar x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, out](Tape& t) {
    const auto& y = t.value(out).array();
    t.grad_mut(a) += (t.grad(out).array() * y * (1.0 - y)).matrix();
  };
  return out;
}

int Tape::gather_rows(int a, std::vector<int> idx) {
  const Matrix& A = value(a);
  Matrix v(static_cast<Eigen::Index>(idx.size()), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = A.row(idx[i]);
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, idx = std::move(idx), out](Tape& t) {
    const Matrix& G = t.grad(out);
    Matrix& dA = t.grad_mut(a);
    for (std::size_t i = 0; i < idx.size(); ++i)
      dA.row(idx[i]) += G.row(static_cast<Eigen::Index>(i));
  };
  return out;
}

int Tape::scatter_sum(int a, std::vector<int> seg, int n_out) {
  const Matrix& A = value(a);
  if (static_cast<Eigen::Index>(seg.size()) != A.rows())
    throw ShapeMismatch("scatter_sum segment list length mismatch");
  Matrix v = Matrix::Zero(n_out, A.cols());
  for (std::size_t i = 0; i < seg.size(); ++i)
    v.row(seg[i]) += A.row(static_cast<Eigen::Index>(i));
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, seg = std::move(seg), out](Tape& t) {
    const Matrix& G = t.grad(out);
    Matrix& dA = t.grad_mut(a);
    for (std::size_t i = 0; i < seg.size(); ++i)
      dA.row(static_cast<Eigen::Index>(i)) += G.row(seg[i]);
  };
  return out;
}

int Tape::segment_softmax(int logits, std::vector<int> seg, int n_seg) {
  const Matrix& L = value(logits);
  if (L.cols() != 1) throw ShapeMismatch("segment_softmax expects a column");
  if (static_cast<Eigen::Index>(seg.size()) != L.rows())
    throw ShapeMismatch("segment_softmax segment list length mismatch");
  // max-shift within each segment keeps exp bounded
  Vector seg_max = Vector::Constant(n_seg, -std::numeric_limits<Scalar>::infinity());
  for (std::size_t i = 0; i < seg.size(); ++i)
    seg_max(seg[i]) = std::max(seg_max(seg[i]), L(static_cast<Eigen::Index>(i), 0));
  Vector expo(L.rows());
  Vector denom = Vector::Zero(n_seg);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    expo(static_cast<Eigen::Index>(i)) =
        std::exp(L(static_cast<Eigen::Index>(i), 0) - seg_max(seg[i]));
    denom(seg[i]) += expo(static_cast<Eigen::Index>(i));
  }
  Matrix v(L.rows(), 1);
  for (std::size_t i = 0; i < seg.size(); ++i)
    v(static_cast<Eigen::Index>(i), 0) = expo(static_cast<Eigen::Index>(i)) / denom(seg[i]);
  int out = push(std::move(v), nullptr);
  slots_[out].back = [logits, seg = std::move(seg), n_seg, out](Tape& t) {
    const Matrix& P = t.value(out);
    const Matrix& G = t.grad(out);
    Vector dot = Vector::Zero(n_seg);
    for (std::size_t i = 0; i < seg.size(); ++i)
      dot(seg[i]) += G(static_cast<Eigen::Index>(i), 0) * P(static_cast<Eigen::Index>(i), 0);
    Matrix& dL = t.grad_mut(logits);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      Eigen::Index r = static_cast<Eigen::Index>(i);
      dL(r, 0) += P(r, 0) * (G(r, 0) - dot(seg[i]));
    }
  };
  return out;
}

int Tape::segment_max(int a, std::vector<int> seg, int n_out) {
  const Matrix& A = value(a);
  if (static_cast<Eigen::Index>(seg.size()) != A.rows())
    throw ShapeMismatch("segment_max segment list length mismatch");
  Matrix v = Matrix::Zero(n_out, A.cols());
  // argmax per (segment, column); first maximal row wins, gradient follows it
  std::vector<std::vector<Eigen::Index>> argmax(
      static_cast<std::size_t>(n_out), std::vector<Eigen::Index>(static_cast<std::size_t>(A.cols()), -1));
  for (std::size_t i = 0; i < seg.size(); ++i) {
    Eigen::Index r = static_cast<Eigen::Index>(i);
    auto& arg_row = argmax[static_cast<std::size_t>(seg[i])];
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      if (arg_row[static_cast<std::size_t>(c)] < 0 || A(r, c) > v(seg[i], c)) {
        v(seg[i], c) = A(r, c);
        arg_row[static_cast<std::size_t>(c)] = r;
      }
    }
  }
  int out = push(std::move(v), nullptr);
  slots_[out].back = [a, argmax = std::move(argmax), out](Tape& t) {
    const Matrix& G = t.grad(out);
    Matrix& dA = t.grad_mut(a);
    for (std::size_t s = 0; s < argmax.size(); ++s) {
      for (std::size_t c = 0; c < argmax[s].size(); ++c) {
        Eigen::Index r = argmax[s][c];
        if (r >= 0)
          dA(r, static_cast<Eigen::Index>(c)) +=
              G(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
      }
    }
  };
  return out;
}

int Tape::bce_with_logits(int z, Vector y) {
  const Matrix& Z = value(z);
  if (Z.cols() != 1) throw ShapeMismatch("bce_with_logits expects a column");
  if (y.rows() != Z.rows()) throw ShapeMismatch("bce_with_logits label length mismatch");
  Eigen::Index n = Z.rows();
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar zi = Z(i, 0);
    Scalar softplus = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    total += softplus - y(i) * zi;
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<Scalar>(n);
  int out = push(std::move(v), nullptr);
  slots_[out].back = [z, y = std::move(y), out](Tape& t) {
    Scalar g = t.grad(out)(0, 0);
    const Matrix& Z = t.value(z);
    Matrix& dZ = t.grad_mut(z);
    Scalar n = static_cast<Scalar>(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      Scalar zi = Z(i, 0);
      Scalar s = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
      dZ(i, 0) += g * (s - y(i)) / n;
    }
  };
  return out;
}

void Tape::backward(int loss) {
  Slot& last = slots_[static_cast<std::size_t>(loss)];
  if (last.val.rows() != 1 || last.val.cols() != 1)
    throw ShapeMismatch("backward expects a 1 x 1 loss");
  last.grad(0, 0) = 1.0;
  for (int i = loss; i >= 0; --i) {
    if (slots_[static_cast<std::size_t>(i)].back)
      slots_[static_cast<std::size_t>(i)].back(*this);
  }
}

}  // namespace vf::ad
