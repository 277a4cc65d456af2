#pragma once

#include <cstdint>
#include <vector>

#include "smoothpc/nn.hpp"
#include "smoothpc/sde.hpp"

namespace smoothpc {

/// Score field s(x_t, z, t) over an N x D state. `z` may be empty when the
/// field is unconditional.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual Matrix evaluate(const Matrix& xt, const Vector& z, double t) const = 0;

  /// Whether input_vjp is available.
  virtual bool has_input_gradient() const { return false; }

  /// Vector-Jacobian product J^T v with J = d vec(s) / d vec(x_t), where v
  /// has the shape of x_t. Throws UnsupportedMode when unavailable.
  virtual Matrix input_vjp(const Matrix& xt, const Vector& z, double t, const Matrix& v) const;
};

/// Exact score of the VP-perturbed marginal of an isotropic Gaussian mixture
/// in R^D. Rows of x_t are independent samples.
class GaussianMixtureScore final : public ScoreField {
 public:
  /// means: K x D. Weights must be positive and sum to 1.
  GaussianMixtureScore(Matrix means, double sigma0, Vector weights, VpSchedule schedule);

  Matrix evaluate(const Matrix& xt, const Vector& z, double t) const override;
  bool has_input_gradient() const override { return true; }
  Matrix input_vjp(const Matrix& xt, const Vector& z, double t, const Matrix& v) const override;

  /// log p_t(x) for a single point (row vector of length D).
  double log_density(const Eigen::RowVectorXd& x, double t) const;

  const Matrix& means() const noexcept { return means_; }
  const Vector& weights() const noexcept { return weights_; }
  double sigma0() const noexcept { return sigma0_; }

 private:
  // Responsibilities (K) and per-component scores (K x D) at one point.
  void posterior(const Eigen::RowVectorXd& x, double t, Vector& resp, Matrix& comp_scores) const;

  Matrix means_;
  double sigma0_;
  Vector weights_;
  VpSchedule schedule_;
};

struct ScoreNetConfig {
  int latent_dim = 64;
  int width = 256;
  int blocks = 6;
  int time_embedding_dim = 64;
};

/// Gradients of a network output contracted with an upstream gradient.
struct NetGradients {
  Vector params;
  Matrix input;
  Vector latent;
};

/// Conditional per-point score network s_psi(x_t, z, t). Each point is fed
/// through the same residual MLP with [z, time embedding] concatenated to
/// every block input, so the field is permutation-equivariant. The network
/// output is divided by b_t, i.e. it regresses the negated standardised noise.
class MlpScoreNet final : public ScoreField {
 public:
  MlpScoreNet() = default;
  MlpScoreNet(ScoreNetConfig config, VpSchedule schedule);

  void initialize(std::uint64_t seed);

  const ScoreNetConfig& config() const noexcept { return config_; }
  const VpSchedule& schedule() const noexcept { return schedule_; }
  Vector& parameters() noexcept { return params_; }
  const Vector& parameters() const noexcept { return params_; }
  Eigen::Index parameter_count() const noexcept { return mlp_.parameter_count(); }

  Matrix evaluate(const Matrix& xt, const Vector& z, double t) const override;
  bool has_input_gradient() const override { return true; }
  Matrix input_vjp(const Matrix& xt, const Vector& z, double t, const Matrix& v) const override;

  struct Tape {
    nn::ResidualMlpTape mlp;
    double scale = 1.0;
  };
  /// Same as evaluate, recording activations for backward.
  Matrix forward(const Matrix& xt, const Vector& z, double t, Tape& tape) const;
  /// `grad_score` has the shape of the score (N x 3).
  void backward(const Tape& tape, const Matrix& grad_score, NetGradients& out,
                bool want_params = true) const;

 private:
  void check_inputs(const Matrix& xt, const Vector& z, double t) const;

  ScoreNetConfig config_;
  VpSchedule schedule_;
  nn::ResidualMlp mlp_;
  Vector params_;
};

/// Unconditional score network over latent codes s_theta(z_t, t). As a
/// ScoreField it maps a B x d matrix of latents (one per row) to their scores
/// and ignores the conditioning argument. Output is divided by b_t as for the
/// decoder.
class LatentScoreNet final : public ScoreField {
 public:
  LatentScoreNet() = default;
  LatentScoreNet(ScoreNetConfig config, VpSchedule schedule);

  void initialize(std::uint64_t seed);

  const ScoreNetConfig& config() const noexcept { return config_; }
  const VpSchedule& schedule() const noexcept { return schedule_; }
  Vector& parameters() noexcept { return params_; }
  const Vector& parameters() const noexcept { return params_; }
  Eigen::Index parameter_count() const noexcept { return mlp_.parameter_count(); }

  /// Score of a single latent.
  Vector score(const Vector& zt, double t) const;

  Matrix evaluate(const Matrix& zt_rows, const Vector& z, double t) const override;
  bool has_input_gradient() const override { return true; }
  Matrix input_vjp(const Matrix& zt_rows, const Vector& z, double t, const Matrix& v) const override;

  struct Tape {
    nn::ResidualMlpTape mlp;
    double scale = 1.0;
  };
  /// zt_rows: B x d. Records activations for backward.
  Matrix forward(const Matrix& zt_rows, double t, Tape& tape) const;
  /// out.input receives the B x d gradient w.r.t. the latents.
  void backward(const Tape& tape, const Matrix& grad_score, NetGradients& out,
                bool want_params = true) const;

 private:
  void check_inputs(const Matrix& zt_rows) const;

  ScoreNetConfig config_;
  VpSchedule schedule_;
  nn::ResidualMlp mlp_;
  Vector params_;
};

struct EncoderConfig {
  int latent_dim = 64;
  int hidden1 = 64;
  int hidden2 = 128;
};

struct EncoderOutput {
  Vector mean;
  Vector logvar;
};

inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 4.0;

/// q_phi(z | X): shared per-point MLP, max pooling over points, linear heads
/// for mean and log-variance (clamped to [kLogvarMin, kLogvarMax]).
class PointEncoder {
 public:
  PointEncoder() = default;
  explicit PointEncoder(EncoderConfig config);

  void initialize(std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  Vector& parameters() noexcept { return params_; }
  const Vector& parameters() const noexcept { return params_; }
  Eigen::Index parameter_count() const noexcept { return layout_.size(); }

  EncoderOutput evaluate(const Matrix& points) const;

  struct Tape {
    Matrix input;                       // 3 x N
    Matrix pre1, pre2;                  // pre-activations
    std::vector<Eigen::Index> argmax;   // pooled point per feature
    Vector pooled;
    Vector raw_logvar;
  };
  EncoderOutput forward(const Matrix& points, Tape& tape) const;
  /// Parameter gradient for upstream gradients on (mean, logvar).
  Vector backward(const Tape& tape, const Vector& grad_mean, const Vector& grad_logvar) const;

 private:
  EncoderConfig config_;
  nn::Layout layout_;
  nn::Slot w1_, b1_, w2_, b2_, wm_, bm_, wv_, bv_;
  Vector params_;
};

/// z = mean + exp(logvar / 2) * noise. logvar is clamped first.
Vector reparameterize(const Vector& mean, const Vector& logvar, const Vector& noise);

}  // namespace smoothpc
