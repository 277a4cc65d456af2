#include "smoothpc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

const double kLogTwoPiE = std::log(2.0 * std::numbers::pi) + 1.0;

double loss_weight(const VpSchedule& schedule, double t) {
  const double g = schedule.sde_diffusion(t);
  return 0.5 * g * g;
}

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace

double recon_dsm_loss(const ScoreField& field, const VpSchedule& schedule, const Matrix& x0,
                      const Vector& z, double t, const Matrix& noise) {
  const Matrix xt = schedule.perturb(x0, t, noise);
  const Matrix target = schedule.conditional_score_target(x0, xt, t);
  const Matrix score = field.evaluate(xt, z, t);
  return loss_weight(schedule, t) * (score - target).squaredNorm() / static_cast<double>(x0.rows());
}

double latent_dsm_loss(const ScoreField& field, const VpSchedule& schedule, const Vector& z0,
                       double t, const Vector& noise) {
  const Matrix z0_row = z0.transpose();
  const Matrix zt = schedule.perturb(z0_row, t, noise.transpose());
  const Matrix target = schedule.conditional_score_target(z0_row, zt, t);
  const Matrix score = field.evaluate(zt, Vector(), t);
  return loss_weight(schedule, t) * (score - target).squaredNorm();
}

double recon_dsm_loss_grad(const MlpScoreNet& net, const Matrix& x0, const Vector& z, double t,
                           const Matrix& noise, NetGradients& grads) {
  const auto& schedule = net.schedule();
  const Matrix xt = schedule.perturb(x0, t, noise);
  const Matrix target = schedule.conditional_score_target(x0, xt, t);
  MlpScoreNet::Tape tape;
  const Matrix residual = net.forward(xt, z, t, tape) - target;
  const double weight = loss_weight(schedule, t) / static_cast<double>(x0.rows());
  net.backward(tape, 2.0 * weight * residual, grads);
  // x_t = a x0 + b n; the target itself does not depend on x0 for fixed noise
  grads.input *= schedule.drift_coef(t);
  return weight * residual.squaredNorm();
}

double latent_dsm_loss_grad(const LatentScoreNet& net, const Vector& z0, double t,
                            const Vector& noise, NetGradients& grads) {
  const auto& schedule = net.schedule();
  const Matrix z0_row = z0.transpose();
  const Matrix zt = schedule.perturb(z0_row, t, noise.transpose());
  const Matrix target = schedule.conditional_score_target(z0_row, zt, t);
  LatentScoreNet::Tape tape;
  const Matrix residual = net.forward(zt, t, tape) - target;
  const double weight = loss_weight(schedule, t);
  net.backward(tape, 2.0 * weight * residual, grads);
  grads.input *= schedule.drift_coef(t);
  return weight * residual.squaredNorm();
}

double entropy_closed_form(const Vector& logvar) {
  return 0.5 * (logvar.sum() + kLogTwoPiE * static_cast<double>(logvar.size()));
}

double entropy_monte_carlo(const Vector& mean, const Vector& logvar, const Vector& noise) {
  // z - mean = exp(logvar/2) noise, so -log q(z) depends on the noise only
  (void)mean;
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  return 0.5 * (logvar.sum() + noise.squaredNorm() + log_two_pi * static_cast<double>(logvar.size()));
}

void canonical_order(std::vector<PointCloud>& dataset) {
  std::stable_sort(dataset.begin(), dataset.end(), [](const PointCloud& a, const PointCloud& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    const auto& pa = a.points();
    const auto& pb = b.points();
    for (Eigen::Index i = 0; i < pa.rows(); ++i) {
      for (int c = 0; c < 3; ++c) {
        if (pa(i, c) != pb(i, c)) return pa(i, c) < pb(i, c);
      }
    }
    return false;
  });
}

Trainer::Trainer(GenerativeModel& model, TrainConfig config)
    : model_(model),
      config_(config),
      encoder_opt_(model.encoder.parameter_count()),
      decoder_opt_(model.decoder.parameter_count()),
      prior_opt_(model.prior.parameter_count()),
      rng_(config.seed) {
  if (config.batch_size < 1) throw InvalidParameter("train: batch size must be >= 1");
  if (!(config.lr_encoder >= 0.0 && config.lr_decoder >= 0.0 && config.lr_prior >= 0.0)) {
    throw InvalidParameter("train: learning rates must be non-negative");
  }
  if (!(config.min_time > 0.0 && config.min_time < 1.0)) {
    throw InvalidParameter("train: min_time must lie in (0, 1)");
  }
  // resumed runs continue a distinct random stream
  if (model.epochs_completed > 0) {
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(model.epochs_completed)};
    rng_.seed(seq);
  }
}

double Trainer::lr_scale(int epoch) const {
  if (epoch < config_.constant_epochs) return 1.0;
  if (config_.decay_epochs <= 0) return 1.0;
  const double progress =
      static_cast<double>(epoch - config_.constant_epochs + 1) / config_.decay_epochs;
  return std::clamp(1.0 - progress, 0.0, 1.0);
}

LossReport Trainer::train_step(std::span<const PointCloud> batch, double lr_scale) {
  if (batch.empty()) throw InvalidInput("train_step: empty batch");
  const int d = model_.config.latent_dim;

  Vector g_enc = Vector::Zero(model_.encoder.parameter_count());
  Vector g_dec = Vector::Zero(model_.decoder.parameter_count());
  Vector g_prior = Vector::Zero(model_.prior.parameter_count());
  LossReport report;
  report.epoch = model_.epochs_completed;

  std::uniform_real_distribution<double> time_dist(config_.min_time, 1.0);
  for (const auto& cloud : batch) {
    const Matrix& x0 = cloud.points();
    const double t = time_dist(rng_);
    const Vector eps_z = gaussian_matrix(rng_, d, 1);
    const Vector latent_noise = gaussian_matrix(rng_, d, 1);
    const Matrix point_noise = gaussian_matrix(rng_, x0.rows(), 3);

    PointEncoder::Tape enc_tape;
    const EncoderOutput posterior = model_.encoder.forward(x0, enc_tape);
    const Vector z0 = reparameterize(posterior.mean, posterior.logvar, eps_z);

    NetGradients latent_grads;
    const double latent_loss = latent_dsm_loss_grad(model_.prior, z0, t, latent_noise, latent_grads);
    NetGradients recon_grads;
    const double recon_loss = recon_dsm_loss_grad(model_.decoder, x0, z0, t, point_noise, recon_grads);

    double entropy = 0.0;
    Vector g_logvar(d);
    if (config_.entropy == EntropyMode::closed_form) {
      entropy = entropy_closed_form(posterior.logvar);
      g_logvar.setConstant(-0.5);
    } else {
      entropy = entropy_monte_carlo(posterior.mean, posterior.logvar, eps_z);
      // noise is held fixed, so the sample estimate moves only through logvar
      g_logvar.setConstant(-0.5);
    }

    // dz0 collects both DSM paths into the encoder
    const Vector g_z0 = latent_grads.input.row(0).transpose() + recon_grads.latent;
    const Vector sigma = (0.5 * posterior.logvar.array()).exp().matrix();
    g_logvar += g_z0.cwiseProduct(eps_z).cwiseProduct(sigma) * 0.5;

    g_enc += model_.encoder.backward(enc_tape, g_z0, g_logvar);
    g_dec += recon_grads.params;
    g_prior += latent_grads.params;

    report.recon += recon_loss;
    report.latent += latent_loss;
    report.entropy += entropy;
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  report.recon *= inv;
  report.latent *= inv;
  report.entropy *= inv;
  report.total = report.latent + report.recon - report.entropy;
  g_enc *= inv;
  g_dec *= inv;
  g_prior *= inv;

  if (!std::isfinite(report.total) || !g_enc.allFinite() || !g_dec.allFinite() ||
      !g_prior.allFinite()) {
    throw NumericalAbort("non-finite loss or gradient at epoch " + std::to_string(report.epoch) +
                         " (recon=" + std::to_string(report.recon) +
                         ", latent=" + std::to_string(report.latent) +
                         ", entropy=" + std::to_string(report.entropy) + ")");
  }

  encoder_opt_.step(model_.encoder.parameters(), g_enc, config_.lr_encoder * lr_scale);
  decoder_opt_.step(model_.decoder.parameters(), g_dec, config_.lr_decoder * lr_scale);
  prior_opt_.step(model_.prior.parameters(), g_prior, config_.lr_prior * lr_scale);
  return report;
}

LossReport Trainer::train_epoch(std::span<const PointCloud> dataset) {
  if (dataset.empty()) throw InvalidInput("train: empty dataset");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng_);

  const double scale = lr_scale(model_.epochs_completed);
  LossReport epoch;
  epoch.epoch = model_.epochs_completed;
  std::vector<PointCloud> batch;
  const auto batch_size = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batch.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      batch.push_back(dataset[order[i]]);
    }
    const LossReport step = train_step(batch, scale);
    const double w = static_cast<double>(batch.size()) / static_cast<double>(order.size());
    epoch.recon += w * step.recon;
    epoch.latent += w * step.latent;
    epoch.entropy += w * step.entropy;
  }
  epoch.total = epoch.latent + epoch.recon - epoch.entropy;
  ++model_.epochs_completed;
  return epoch;
}

std::vector<LossReport> Trainer::train(std::vector<PointCloud> dataset,
                                       const std::function<void(const LossReport&)>& on_epoch) {
  if (dataset.size() < 2) throw InvalidInput("train: dataset needs at least 2 clouds");
  for (const auto& cloud : dataset) {
    if (cloud.size() != dataset.front().size()) {
      throw InvalidInput("train: all clouds must have the same number of points");
    }
  }
  canonical_order(dataset);
  std::vector<LossReport> curve;
  for (int e = 0; e < config_.epochs; ++e) {
    curve.push_back(train_epoch(dataset));
    if (on_epoch) on_epoch(curve.back());
  }
  return curve;
}

}  // namespace smoothpc
