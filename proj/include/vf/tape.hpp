#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace vf {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace ad {

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so backward() is a single reverse sweep. Handles are indices into
/// the tape; gradients accumulate into slots and are read back after
/// backward(). Row convention throughout: states are row vectors, so a
/// linear layer is value(x) * W.
class Tape {
 public:
  int input(Matrix v);  // leaf; gradient is tracked but usually ignored
  int param(Matrix v) { return input(std::move(v)); }

  const Matrix& value(int id) const { return slots_[id].val; }
  const Matrix& grad(int id) const { return slots_[id].grad; }

  int matmul(int a, int b);
  int add(int a, int b);                      // same shape
  int add_row(int a, int row);                // n x q plus 1 x q, broadcast
  int scale(int a, Scalar c);                 // constant factor
  int scale_by(int a, int s);                 // s is a 1 x 1 slot
  int rowwise_mul(int col, int m);            // n x 1 times n x q, per row
  int rowwise_scale(int m, Vector c);         // constant per-row factors
  int concat_cols(int a, int b);
  int leaky_relu(int a, Scalar slope);
  int relu(int a) { return leaky_relu(a, 0.0); }
  int sigmoid(int a);

  int gather_rows(int a, std::vector<int> idx);
  int scatter_sum(int a, std::vector<int> seg, int n_out);
  /// Softmax of an n x 1 column within each segment.
  int segment_softmax(int logits, std::vector<int> seg, int n_seg);
  /// Per-segment column-wise max; empty segments give zero rows.
  int segment_max(int a, std::vector<int> seg, int n_out);

  /// Mean binary cross-entropy of logits z (n x 1) against labels y,
  /// computed in the numerically stable softplus form. Returns a 1 x 1 slot.
  int bce_with_logits(int z, Vector y);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
  /// 1 x 1.
  void backward(int loss);

  std::size_t size() const { return slots_.size(); }

 private:
  struct Slot {
    Matrix val;
    Matrix grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  int push(Matrix v, std::function<void(Tape&)> back);
  Matrix& grad_mut(int id) { return slots_[id].grad; }

  std::vector<Slot> slots_;
};

}  // namespace ad
}  // namespace vf
