#include "smoothpc/nn.hpp"

#include <cmath>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc::nn {

Matrix silu(const Matrix& x) {
  return x.unaryExpr([](double v) { return silu(v); });
}

Matrix silu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) { return silu_grad(v); });
}

Vector time_embedding(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw InvalidParameter("time embedding dimension must be even and >= 2, got " +
                           std::to_string(dim));
  }
  const int half = dim / 2;
  Vector out(dim);
  const double scaled = 1000.0 * t;
  for (int k = 0; k < half; ++k) {
    const double freq = half > 1 ? std::exp(-std::log(10000.0) * k / (half - 1)) : 1.0;
    out(k) = std::sin(scaled * freq);
    out(half + k) = std::cos(scaled * freq);
  }
  return out;
}

Slot Layout::add(Eigen::Index rows, Eigen::Index cols) {
  Slot slot{size_, rows, cols};
  size_ += rows * cols;
  return slot;
}

void init_lecun(const Slot& slot, Vector& params, std::mt19937_64& rng, double gain) {
  std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(slot.cols)));
  auto view = slot.view(params);
  for (Eigen::Index j = 0; j < view.cols(); ++j) {
    for (Eigen::Index i = 0; i < view.rows(); ++i) view(i, j) = normal(rng);
  }
}

ResidualMlp::ResidualMlp(ResidualMlpShape shape) : shape_(shape) {
  if (shape.input_dim < 1 || shape.output_dim < 1 || shape.width < 1 || shape.blocks < 0 ||
      shape.cond_dim < 0) {
    throw InvalidParameter("residual mlp: invalid shape");
  }
  const Eigen::Index w = shape.width;
  const Eigen::Index c = shape.cond_dim;
  w_in_ = layout_.add(w, shape.input_dim);
  c_in_ = layout_.add(w, c);
  b_in_ = layout_.add(w, 1);
  for (int b = 0; b < shape.blocks; ++b) {
    Block block;
    block.w1 = layout_.add(w, w);
    block.c1 = layout_.add(w, c);
    block.b1 = layout_.add(w, 1);
    block.w2 = layout_.add(w, w);
    block.b2 = layout_.add(w, 1);
    blocks_.push_back(block);
  }
  w_out_ = layout_.add(shape.output_dim, w);
  b_out_ = layout_.add(shape.output_dim, 1);
}

void ResidualMlp::initialize(Vector& params, std::mt19937_64& rng) const {
  params = Vector::Zero(parameter_count());
  init_lecun(w_in_, params, rng);
  if (c_in_.cols > 0) init_lecun(c_in_, params, rng);
  for (const auto& block : blocks_) {
    init_lecun(block.w1, params, rng);
    if (block.c1.cols > 0) init_lecun(block.c1, params, rng);
    // small residual branches keep the stack near identity at init
    init_lecun(block.w2, params, rng, 0.5 / std::sqrt(static_cast<double>(blocks_.size())));
  }
}

void ResidualMlp::zero_condition_columns(Vector& params, int first, int count) const {
  if (first < 0 || count < 0 || first + count > shape_.cond_dim) {
    throw InvalidParameter("residual mlp: conditioning column range out of bounds");
  }
  c_in_.view(params).middleCols(first, count).setZero();
  for (const auto& block : blocks_) block.c1.view(params).middleCols(first, count).setZero();
}

Matrix ResidualMlp::forward(const Vector& params, const Matrix& input, const Vector& cond,
                            ResidualMlpTape* tape) const {
  if (input.rows() != shape_.input_dim || cond.size() != shape_.cond_dim) {
    throw InvalidInput("residual mlp: expected input dim " + std::to_string(shape_.input_dim) +
                       " and cond dim " + std::to_string(shape_.cond_dim) + ", got " +
                       std::to_string(input.rows()) + " and " + std::to_string(cond.size()));
  }
  Vector stem_bias = b_in_.view(params);
  if (shape_.cond_dim > 0) stem_bias.noalias() += c_in_.view(params) * cond;
  Matrix h = w_in_.view(params) * input;
  h.colwise() += stem_bias;

  if (tape) {
    tape->input = input;
    tape->cond = cond;
    tape->block_inputs.clear();
    tape->block_hidden.clear();
  }
  for (const auto& block : blocks_) {
    Vector bias = block.b1.view(params);
    if (shape_.cond_dim > 0) bias.noalias() += block.c1.view(params) * cond;
    Matrix v = block.w1.view(params) * silu(h);
    v.colwise() += bias;
    Matrix delta = block.w2.view(params) * silu(v);
    delta.colwise() += Vector(block.b2.view(params));
    if (tape) {
      tape->block_inputs.push_back(h);
      tape->block_hidden.push_back(v);
    }
    h += delta;
  }
  Matrix y = w_out_.view(params) * silu(h);
  y.colwise() += Vector(b_out_.view(params));
  if (tape) tape->final_hidden = std::move(h);
  return y;
}

void ResidualMlp::backward(const Vector& params, const ResidualMlpTape& tape,
                           const Matrix& grad_out, Vector* grad_params, Matrix* grad_input,
                           Vector* grad_cond) const {
  const bool want_params = grad_params != nullptr;
  if (want_params && grad_params->size() != parameter_count()) {
    *grad_params = Vector::Zero(parameter_count());
  }
  Vector cond_grad = Vector::Zero(shape_.cond_dim);

  const Matrix act = silu(tape.final_hidden);
  if (want_params) {
    w_out_.view(*grad_params).noalias() += grad_out * act.transpose();
    b_out_.view(*grad_params) += grad_out.rowwise().sum();
  }
  Matrix gh = (w_out_.view(params).transpose() * grad_out).cwiseProduct(silu_grad(tape.final_hidden));

  for (auto b = static_cast<std::ptrdiff_t>(blocks_.size()) - 1; b >= 0; --b) {
    const auto& block = blocks_[static_cast<std::size_t>(b)];
    const Matrix& h_in = tape.block_inputs[static_cast<std::size_t>(b)];
    const Matrix& v = tape.block_hidden[static_cast<std::size_t>(b)];
    const Matrix gv = (block.w2.view(params).transpose() * gh).cwiseProduct(silu_grad(v));
    const Vector gv_sum = gv.rowwise().sum();
    if (want_params) {
      block.w2.view(*grad_params).noalias() += gh * silu(v).transpose();
      block.b2.view(*grad_params) += gh.rowwise().sum();
      block.w1.view(*grad_params).noalias() += gv * silu(h_in).transpose();
      block.b1.view(*grad_params) += gv_sum;
      if (shape_.cond_dim > 0) block.c1.view(*grad_params).noalias() += gv_sum * tape.cond.transpose();
    }
    if (shape_.cond_dim > 0) cond_grad.noalias() += block.c1.view(params).transpose() * gv_sum;
    gh += (block.w1.view(params).transpose() * gv).cwiseProduct(silu_grad(h_in));
  }

  const Vector gh_sum = gh.rowwise().sum();
  if (want_params) {
    w_in_.view(*grad_params).noalias() += gh * tape.input.transpose();
    b_in_.view(*grad_params) += gh_sum;
    if (shape_.cond_dim > 0) c_in_.view(*grad_params).noalias() += gh_sum * tape.cond.transpose();
  }
  if (shape_.cond_dim > 0) cond_grad.noalias() += c_in_.view(params).transpose() * gh_sum;
  if (grad_input) *grad_input = w_in_.view(params).transpose() * gh;
  if (grad_cond) *grad_cond = std::move(cond_grad);
}

Adam::Adam(Eigen::Index size, double beta1, double beta2, double eps)
    : m_(Vector::Zero(size)), v_(Vector::Zero(size)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Vector& params, const Vector& grad, double learning_rate) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidInput("adam: size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = learning_rate / c1;
  params.array() -= step * m_.array() / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace smoothpc::nn
