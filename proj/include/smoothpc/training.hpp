#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "smoothpc/checkpoint.hpp"

namespace smoothpc {

enum class EntropyMode { closed_form, monte_carlo };

struct TrainConfig {
  int batch_size = 32;
  int epochs = 200;
  double lr_encoder = 2e-3;
  double lr_decoder = 2e-4;
  double lr_prior = 1e-4;
  std::uint64_t seed = 0;
  /// Diffusion times are drawn from U(min_time, 1).
  double min_time = kDefaultMinTime;
  /// Learning rates stay constant for `constant_epochs`, then decay linearly
  /// to zero over `decay_epochs`.
  int constant_epochs = 1000;
  int decay_epochs = 1000;
  EntropyMode entropy = EntropyMode::closed_form;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossReport {
  int epoch = 0;
  double recon = 0.0;
  double latent = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

/// Likelihood-weighted DSM loss (g_t^2 / 2) * ||s(x_t, z, t) - target||_F^2 / N
/// with x_t = a_t x0 + b_t noise and the conditional target of the VP kernel.
double recon_dsm_loss(const ScoreField& field, const VpSchedule& schedule, const Matrix& x0,
                      const Vector& z, double t, const Matrix& noise);

/// Same objective on a single latent code, without averaging.
double latent_dsm_loss(const ScoreField& field, const VpSchedule& schedule, const Vector& z0,
                       double t, const Vector& noise);

/// recon_dsm_loss for the decoder network with gradients: `grads.params`
/// w.r.t. network parameters, `grads.latent` w.r.t. z, `grads.input` w.r.t. x0.
double recon_dsm_loss_grad(const MlpScoreNet& net, const Matrix& x0, const Vector& z, double t,
                           const Matrix& noise, NetGradients& grads);

/// latent_dsm_loss for the prior network; `grads.input` is w.r.t. z0 (1 x d).
double latent_dsm_loss_grad(const LatentScoreNet& net, const Vector& z0, double t,
                            const Vector& noise, NetGradients& grads);

/// Entropy of N(mean, diag(exp(logvar))): 1/2 sum(logvar + log(2 pi e)).
double entropy_closed_form(const Vector& logvar);

/// Single-sample estimate -log q(z) at z = mean + exp(logvar/2) noise.
double entropy_monte_carlo(const Vector& mean, const Vector& logvar, const Vector& noise);

/// Runs the ELBO training loop on a GenerativeModel. Owns one Adam state per
/// parameter group and the random stream. Minimises L_z + L_x - H.
class Trainer {
 public:
  Trainer(GenerativeModel& model, TrainConfig config);

  /// One optimiser update from a batch of clouds. Throws NumericalAbort on a
  /// non-finite loss or gradient; parameters are left untouched in that case.
  LossReport train_step(std::span<const PointCloud> batch, double lr_scale = 1.0);

  /// Shuffles (seeded) and runs every minibatch once; reports batch-weighted
  /// mean losses labelled with model.epochs_completed, which is incremented.
  LossReport train_epoch(std::span<const PointCloud> dataset);

  /// Runs config.epochs epochs. The dataset is put in a canonical order first,
  /// so the result does not depend on the order clouds are supplied in.
  std::vector<LossReport> train(std::vector<PointCloud> dataset,
                                const std::function<void(const LossReport&)>& on_epoch = {});

  /// Learning-rate multiplier applied during `epoch`.
  double lr_scale(int epoch) const;

  const TrainConfig& config() const noexcept { return config_; }

 private:
  GenerativeModel& model_;
  TrainConfig config_;
  nn::Adam encoder_opt_, decoder_opt_, prior_opt_;
  std::mt19937_64 rng_;
};

/// Lexicographic order on (size, coordinates).
void canonical_order(std::vector<PointCloud>& dataset);

}  // namespace smoothpc
