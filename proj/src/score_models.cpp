#include "smoothpc/score_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc {

Matrix ScoreField::input_vjp(const Matrix&, const Vector&, double, const Matrix&) const {
  throw UnsupportedMode("score field does not provide input gradients");
}

// ---------------------------------------------------------------------------
// GaussianMixtureScore

GaussianMixtureScore::GaussianMixtureScore(Matrix means, double sigma0, Vector weights,
                                           VpSchedule schedule)
    : means_(std::move(means)), sigma0_(sigma0), weights_(std::move(weights)),
      schedule_(schedule) {
  if (means_.rows() < 1 || means_.rows() != weights_.size()) {
    throw InvalidParameter("mixture: need one weight per component");
  }
  if (!(sigma0_ > 0.0)) throw InvalidParameter("mixture: sigma0 must be positive");
  if ((weights_.array() <= 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw InvalidParameter("mixture: weights must be positive and sum to 1");
  }
}

void GaussianMixtureScore::posterior(const Eigen::RowVectorXd& x, double t, Vector& resp,
                                     Matrix& comp_scores) const {
  const double a = schedule_.drift_coef(t);
  const double b = schedule_.diffusion_std(t);
  const double var = a * a * sigma0_ * sigma0_ + b * b;
  const Eigen::Index k = means_.rows();
  comp_scores.resize(k, means_.cols());
  resp.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::RowVectorXd diff = x - a * means_.row(c);
    comp_scores.row(c) = -diff / var;
    resp(c) = std::log(weights_(c)) - 0.5 * diff.squaredNorm() / var;
  }
  const double top = resp.maxCoeff();
  resp = (resp.array() - top).exp();
  resp /= resp.sum();
}

Matrix GaussianMixtureScore::evaluate(const Matrix& xt, const Vector&, double t) const {
  if (xt.cols() != means_.cols()) throw InvalidInput("mixture: dimension mismatch");
  Matrix out(xt.rows(), xt.cols());
  Vector resp;
  Matrix comp;
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    posterior(xt.row(i), t, resp, comp);
    out.row(i) = resp.transpose() * comp;
  }
  return out;
}

Matrix GaussianMixtureScore::input_vjp(const Matrix& xt, const Vector&, double t,
                                       const Matrix& v) const {
  if (xt.cols() != means_.cols() || v.rows() != xt.rows() || v.cols() != xt.cols()) {
    throw InvalidInput("mixture: dimension mismatch");
  }
  const double a = schedule_.drift_coef(t);
  const double b = schedule_.diffusion_std(t);
  const double var = a * a * sigma0_ * sigma0_ + b * b;
  Matrix out(xt.rows(), xt.cols());
  Vector resp;
  Matrix comp;
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    posterior(xt.row(i), t, resp, comp);
    // Hessian of log p: -I/var + Cov_resp(component scores); symmetric
    const Eigen::RowVectorXd u = v.row(i);
    const Eigen::RowVectorXd score = resp.transpose() * comp;
    const Vector proj = comp * u.transpose();
    out.row(i) = -u / var + (resp.cwiseProduct(proj)).transpose() * comp - score * score.dot(u);
  }
  return out;
}

double GaussianMixtureScore::log_density(const Eigen::RowVectorXd& x, double t) const {
  const double a = schedule_.drift_coef(t);
  const double b = schedule_.diffusion_std(t);
  const double var = a * a * sigma0_ * sigma0_ + b * b;
  const Eigen::Index k = means_.rows();
  Vector terms(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    terms(c) = std::log(weights_(c)) - 0.5 * (x - a * means_.row(c)).squaredNorm() / var;
  }
  const double top = terms.maxCoeff();
  const double dim = static_cast<double>(x.size());
  return top + std::log((terms.array() - top).exp().sum()) -
         0.5 * dim * std::log(2.0 * std::numbers::pi * var);
}

// ---------------------------------------------------------------------------
// MlpScoreNet

namespace {

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

double output_scale(const VpSchedule& schedule, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw InvalidParameter("score network evaluated at t=" + std::to_string(t) +
                           ", must lie in (0, 1]");
  }
  return 1.0 / schedule.diffusion_std(t);
}

}  // namespace

MlpScoreNet::MlpScoreNet(ScoreNetConfig config, VpSchedule schedule)
    : config_(config),
      schedule_(schedule),
      mlp_({3, config.latent_dim + config.time_embedding_dim, 3, config.width, config.blocks}),
      params_(Vector::Zero(mlp_.parameter_count())) {}

void MlpScoreNet::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  mlp_.initialize(params_, rng);
  // the latent starts uninformative; the net learns to read it
  mlp_.zero_condition_columns(params_, 0, config_.latent_dim);
}

void MlpScoreNet::check_inputs(const Matrix& xt, const Vector& z, double) const {
  if (xt.cols() != 3) throw InvalidInput("decoder score expects N x 3 input");
  if (z.size() != config_.latent_dim) {
    throw InvalidInput("decoder score expects latent of dimension " +
                       std::to_string(config_.latent_dim) + ", got " + std::to_string(z.size()));
  }
}

Matrix MlpScoreNet::evaluate(const Matrix& xt, const Vector& z, double t) const {
  check_inputs(xt, z, t);
  const double scale = output_scale(schedule_, t);
  const Vector cond = concat(z, nn::time_embedding(t, config_.time_embedding_dim));
  return scale * mlp_.forward(params_, xt.transpose(), cond).transpose();
}

Matrix MlpScoreNet::forward(const Matrix& xt, const Vector& z, double t, Tape& tape) const {
  check_inputs(xt, z, t);
  tape.scale = output_scale(schedule_, t);
  const Vector cond = concat(z, nn::time_embedding(t, config_.time_embedding_dim));
  return tape.scale * mlp_.forward(params_, xt.transpose(), cond, &tape.mlp).transpose();
}

void MlpScoreNet::backward(const Tape& tape, const Matrix& grad_score, NetGradients& out,
                           bool want_params) const {
  const Matrix grad_out = tape.scale * grad_score.transpose();
  Matrix grad_input;
  Vector grad_cond;
  if (want_params) out.params = Vector::Zero(parameter_count());
  mlp_.backward(params_, tape.mlp, grad_out, want_params ? &out.params : nullptr, &grad_input,
                &grad_cond);
  out.input = grad_input.transpose();
  out.latent = grad_cond.head(config_.latent_dim);
}

Matrix MlpScoreNet::input_vjp(const Matrix& xt, const Vector& z, double t, const Matrix& v) const {
  Tape tape;
  forward(xt, z, t, tape);
  NetGradients grads;
  backward(tape, v, grads, false);
  return grads.input;
}

// ---------------------------------------------------------------------------
// LatentScoreNet

LatentScoreNet::LatentScoreNet(ScoreNetConfig config, VpSchedule schedule)
    : config_(config),
      schedule_(schedule),
      mlp_({config.latent_dim, config.time_embedding_dim, config.latent_dim, config.width,
            config.blocks}),
      params_(Vector::Zero(mlp_.parameter_count())) {}

void LatentScoreNet::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  mlp_.initialize(params_, rng);
}

void LatentScoreNet::check_inputs(const Matrix& zt_rows) const {
  if (zt_rows.cols() != config_.latent_dim) {
    throw InvalidInput("latent score expects dimension " + std::to_string(config_.latent_dim) +
                       ", got " + std::to_string(zt_rows.cols()));
  }
}

Vector LatentScoreNet::score(const Vector& zt, double t) const {
  return evaluate(zt.transpose(), Vector(), t).row(0).transpose();
}

Matrix LatentScoreNet::evaluate(const Matrix& zt_rows, const Vector&, double t) const {
  check_inputs(zt_rows);
  const double scale = output_scale(schedule_, t);
  return scale *
         mlp_.forward(params_, zt_rows.transpose(), nn::time_embedding(t, config_.time_embedding_dim))
             .transpose();
}

Matrix LatentScoreNet::forward(const Matrix& zt_rows, double t, Tape& tape) const {
  check_inputs(zt_rows);
  tape.scale = output_scale(schedule_, t);
  return tape.scale * mlp_.forward(params_, zt_rows.transpose(),
                                   nn::time_embedding(t, config_.time_embedding_dim), &tape.mlp)
                          .transpose();
}

void LatentScoreNet::backward(const Tape& tape, const Matrix& grad_score, NetGradients& out,
                              bool want_params) const {
  const Matrix grad_out = tape.scale * grad_score.transpose();
  Matrix grad_input;
  if (want_params) out.params = Vector::Zero(parameter_count());
  mlp_.backward(params_, tape.mlp, grad_out, want_params ? &out.params : nullptr, &grad_input,
                nullptr);
  out.input = grad_input.transpose();
  out.latent.resize(0);
}

Matrix LatentScoreNet::input_vjp(const Matrix& zt_rows, const Vector&, double t,
                                 const Matrix& v) const {
  Tape tape;
  forward(zt_rows, t, tape);
  NetGradients grads;
  backward(tape, v, grads, false);
  return grads.input;
}

// ---------------------------------------------------------------------------
// PointEncoder

PointEncoder::PointEncoder(EncoderConfig config) : config_(config) {
  if (config.latent_dim < 1 || config.hidden1 < 1 || config.hidden2 < 1) {
    throw InvalidParameter("encoder: invalid dimensions");
  }
  w1_ = layout_.add(config.hidden1, 3);
  b1_ = layout_.add(config.hidden1, 1);
  w2_ = layout_.add(config.hidden2, config.hidden1);
  b2_ = layout_.add(config.hidden2, 1);
  wm_ = layout_.add(config.latent_dim, config.hidden2);
  bm_ = layout_.add(config.latent_dim, 1);
  wv_ = layout_.add(config.latent_dim, config.hidden2);
  bv_ = layout_.add(config.latent_dim, 1);
  params_ = Vector::Zero(layout_.size());
}

void PointEncoder::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params_ = Vector::Zero(layout_.size());
  nn::init_lecun(w1_, params_, rng);
  nn::init_lecun(w2_, params_, rng);
  nn::init_lecun(wm_, params_, rng, 0.1);
  nn::init_lecun(wv_, params_, rng, 0.1);
}

EncoderOutput PointEncoder::evaluate(const Matrix& points) const {
  Tape tape;
  return forward(points, tape);
}

EncoderOutput PointEncoder::forward(const Matrix& points, Tape& tape) const {
  if (points.cols() != 3 || points.rows() < 1) throw InvalidInput("encoder expects N x 3, N >= 1");
  tape.input = points.transpose();
  tape.pre1 = w1_.view(params_) * tape.input;
  tape.pre1.colwise() += Vector(b1_.view(params_));
  tape.pre2 = w2_.view(params_) * nn::silu(tape.pre1);
  tape.pre2.colwise() += Vector(b2_.view(params_));

  const Eigen::Index features = tape.pre2.rows();
  tape.pooled.resize(features);
  tape.argmax.assign(static_cast<std::size_t>(features), 0);
  for (Eigen::Index f = 0; f < features; ++f) {
    double best = nn::silu(tape.pre2(f, 0));
    Eigen::Index where = 0;
    for (Eigen::Index n = 1; n < tape.pre2.cols(); ++n) {
      const double value = nn::silu(tape.pre2(f, n));
      if (value > best) {
        best = value;
        where = n;
      }
    }
    tape.pooled(f) = best;
    tape.argmax[static_cast<std::size_t>(f)] = where;
  }

  EncoderOutput out;
  out.mean = wm_.view(params_) * tape.pooled + bm_.view(params_);
  tape.raw_logvar = wv_.view(params_) * tape.pooled + bv_.view(params_);
  out.logvar = tape.raw_logvar.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  return out;
}

Vector PointEncoder::backward(const Tape& tape, const Vector& grad_mean,
                              const Vector& grad_logvar) const {
  Vector grad = Vector::Zero(layout_.size());
  Vector g_raw = grad_logvar;
  for (Eigen::Index j = 0; j < g_raw.size(); ++j) {
    if (tape.raw_logvar(j) < kLogvarMin || tape.raw_logvar(j) > kLogvarMax) g_raw(j) = 0.0;
  }
  wm_.view(grad).noalias() += grad_mean * tape.pooled.transpose();
  bm_.view(grad) += grad_mean;
  wv_.view(grad).noalias() += g_raw * tape.pooled.transpose();
  bv_.view(grad) += g_raw;
  const Vector g_pooled = wm_.view(params_).transpose() * grad_mean +
                          wv_.view(params_).transpose() * g_raw;

  Matrix g_pre2 = Matrix::Zero(tape.pre2.rows(), tape.pre2.cols());
  for (Eigen::Index f = 0; f < g_pre2.rows(); ++f) {
    const Eigen::Index n = tape.argmax[static_cast<std::size_t>(f)];
    g_pre2(f, n) = g_pooled(f) * nn::silu_grad(tape.pre2(f, n));
  }
  const Matrix act1 = nn::silu(tape.pre1);
  w2_.view(grad).noalias() += g_pre2 * act1.transpose();
  b2_.view(grad) += g_pre2.rowwise().sum();
  const Matrix g_pre1 =
      (w2_.view(params_).transpose() * g_pre2).cwiseProduct(nn::silu_grad(tape.pre1));
  w1_.view(grad).noalias() += g_pre1 * tape.input.transpose();
  b1_.view(grad) += g_pre1.rowwise().sum();
  return grad;
}

Vector reparameterize(const Vector& mean, const Vector& logvar, const Vector& noise) {
  if (mean.size() != logvar.size() || mean.size() != noise.size()) {
    throw InvalidInput("reparameterize: size mismatch");
  }
  const Vector clamped = logvar.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  return mean + (0.5 * clamped.array()).exp().matrix().cwiseProduct(noise);
}

}  // namespace smoothpc
