#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "smoothpc/geometry.hpp"

// Small dense networks with hand-written reverse-mode gradients. Parameters
// of a network live in one flat vector; layers are column-major views into it.

namespace smoothpc::nn {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}
Matrix silu(const Matrix& x);
Matrix silu_grad(const Matrix& x);

/// Sinusoidal embedding of t in [0, 1] with geometric frequencies.
/// First half sines, second half cosines; `dim` must be even.
Vector time_embedding(double t, int dim);

/// Offset and shape of one weight matrix (or bias, cols == 1) in a flat vector.
struct Slot {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Map<const Matrix> view(const Vector& params) const {
    return {params.data() + offset, rows, cols};
  }
  Eigen::Map<Matrix> view(Vector& params) const { return {params.data() + offset, rows, cols}; }
  Eigen::Index size() const { return rows * cols; }
};

class Layout {
 public:
  Slot add(Eigen::Index rows, Eigen::Index cols);
  Eigen::Index size() const { return size_; }

 private:
  Eigen::Index size_ = 0;
};

/// Gaussian fill with std 1/sqrt(fan_in), i.e. cols of the slot.
void init_lecun(const Slot& slot, Vector& params, std::mt19937_64& rng, double gain = 1.0);

struct ResidualMlpShape {
  int input_dim = 3;
  int cond_dim = 0;
  int output_dim = 3;
  int width = 256;
  int blocks = 6;
};

/// Activations saved by ResidualMlp::forward for the backward pass.
struct ResidualMlpTape {
  Matrix input;
  Vector cond;
  std::vector<Matrix> block_inputs;  // h before each block
  std::vector<Matrix> block_hidden;  // pre-activation inside each block
  Matrix final_hidden;
};

/// Residual MLP applied column-wise to a batch. A conditioning vector shared by
/// the whole batch is concatenated to the input of the stem and every block.
///
///   h   = W_in x + C_in c + b_in
///   h  += W2 silu(W1 silu(h) + C1 c + b1) + b2      (per block)
///   y   = W_out silu(h) + b_out
class ResidualMlp {
 public:
  ResidualMlp() = default;
  explicit ResidualMlp(ResidualMlpShape shape);

  const ResidualMlpShape& shape() const noexcept { return shape_; }
  Eigen::Index parameter_count() const noexcept { return layout_.size(); }

  /// Random hidden weights, zero output layer.
  void initialize(Vector& params, std::mt19937_64& rng) const;

  /// Zeroes conditioning columns [first, first + count) in the stem and every
  /// block, so those inputs start without influence.
  void zero_condition_columns(Vector& params, int first, int count) const;

  /// input: input_dim x B. Returns output_dim x B.
  Matrix forward(const Vector& params, const Matrix& input, const Vector& cond,
                 ResidualMlpTape* tape = nullptr) const;

  /// Accumulates gradients for upstream `grad_out` (output_dim x B). Any of
  /// the outputs may be null.
  void backward(const Vector& params, const ResidualMlpTape& tape, const Matrix& grad_out,
                Vector* grad_params, Matrix* grad_input, Vector* grad_cond) const;

 private:
  struct Block {
    Slot w1, c1, b1, w2, b2;
  };
  ResidualMlpShape shape_;
  Layout layout_;
  Slot w_in_, c_in_, b_in_;
  std::vector<Block> blocks_;
  Slot w_out_, b_out_;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  explicit Adam(Eigen::Index size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Vector& params, const Vector& grad, double learning_rate);
  long steps() const noexcept { return t_; }

 private:
  Vector m_, v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

}  // namespace smoothpc::nn
