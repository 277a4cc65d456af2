#include "smoothpc/sampler.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

Matrix standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace

ConstraintMode parse_constraint_mode(std::string_view name) {
  if (name == "off") return ConstraintMode::off;
  if (name == "frozen" || name == "frozen_score") return ConstraintMode::frozen_score;
  if (name == "exact" || name == "exact_chain") return ConstraintMode::exact_chain;
  throw InvalidParameter("unknown constraint mode '" + std::string(name) + "'");
}

std::string_view to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::off: return "off";
    case ConstraintMode::frozen_score: return "frozen";
    case ConstraintMode::exact_chain: return "exact";
  }
  return "unknown";
}

void validate(const SamplerConfig& config) {
  if (config.n_steps < 1) throw InvalidParameter("sampler: n_steps must be >= 1");
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) {
    throw InvalidParameter("sampler: alpha must be finite and >= 0");
  }
  if (config.knn_k < 1) throw InvalidParameter("sampler: knn_k must be >= 1");
  if (config.graph_refresh_stride < 1) {
    throw InvalidParameter("sampler: graph_refresh_stride must be >= 1");
  }
  if (!(config.min_time > 0.0 && config.min_time < 1.0)) {
    throw InvalidParameter("sampler: min_time must lie in (0, 1)");
  }
}

std::vector<double> time_grid(int n_steps, double min_time) {
  if (n_steps < 1) throw InvalidParameter("time grid needs at least one step");
  std::vector<double> grid(static_cast<std::size_t>(n_steps) + 1);
  const double dt = 1.0 / n_steps;
  for (int i = 0; i <= n_steps; ++i) {
    grid[static_cast<std::size_t>(i)] = std::max(1.0 - i * dt, min_time);
  }
  grid.back() = min_time;
  return grid;
}

Matrix tweedie_denoise(const Matrix& xt, const Matrix& score, const VpSchedule& schedule,
                       double t) {
  const double a = schedule.drift_coef(t);
  const double b = schedule.diffusion_std(t);
  return (xt + (b * b) * score) / a;
}

Matrix reverse_step(const Matrix& xt, const Matrix& score, const VpSchedule& schedule, double t,
                    double dt, const Matrix& noise) {
  if (score.rows() != xt.rows() || score.cols() != xt.cols() || noise.rows() != xt.rows() ||
      noise.cols() != xt.cols()) {
    throw InvalidInput("reverse_step: shape mismatch");
  }
  const double beta = schedule.beta(t);
  const double g = std::sqrt(beta);
  // f_t(x) = -beta/2 x
  return xt - (-0.5 * beta * xt - beta * score) * dt + (g * std::sqrt(dt)) * noise;
}

Matrix reverse_step(const Matrix& xt, const ScoreField& field, const Vector& z,
                    const VpSchedule& schedule, double t, double dt, const Matrix& noise) {
  return reverse_step(xt, field.evaluate(xt, z, t), schedule, t, dt, noise);
}

Matrix constraint_gradient(const Matrix& xt, const ScoreField& field, const Vector& z,
                           const VpSchedule& schedule, double t, const Laplacian& laplacian,
                           ConstraintMode mode, const Matrix* score) {
  if (mode == ConstraintMode::off) return Matrix::Zero(xt.rows(), xt.cols());
  if (mode == ConstraintMode::exact_chain && !field.has_input_gradient()) {
    throw UnsupportedMode("exact_chain constraint needs a score field with input gradients");
  }
  const Matrix s = score ? *score : field.evaluate(xt, z, t);
  const Matrix denoised = tweedie_denoise(xt, s, schedule, t);
  const Matrix outer = smoothness_gradient(denoised, laplacian);
  const double a = schedule.drift_coef(t);
  if (mode == ConstraintMode::frozen_score) return outer / a;
  const double b = schedule.diffusion_std(t);
  return (outer + (b * b) * field.input_vjp(xt, z, t, outer)) / a;
}

Matrix constrained_reverse_step(const Matrix& xt, const ScoreField& field, const Vector& z,
                                const VpSchedule& schedule, double t, double dt,
                                const SamplerConfig& config, const Matrix& noise,
                                const Laplacian* laplacian) {
  const Matrix score = field.evaluate(xt, z, t);
  Matrix next = reverse_step(xt, score, schedule, t, dt, noise);
  if (!config.constraint_active() || t > config.constraint_max_time) return next;

  if (laplacian) {
    next -= config.alpha *
            constraint_gradient(xt, field, z, schedule, t, *laplacian, config.mode, &score);
  } else {
    const Laplacian fresh = knn_laplacian(tweedie_denoise(xt, score, schedule, t), config.knn_k);
    next -= config.alpha *
            constraint_gradient(xt, field, z, schedule, t, fresh, config.mode, &score);
  }
  return next;
}

Matrix run_reverse_chain(const ScoreField& field, const Vector& z, const VpSchedule& schedule,
                         Matrix x_init, const SamplerConfig& config, std::mt19937_64& rng,
                         Trajectory* trajectory) {
  validate(config);
  const bool constrained = config.constraint_active();
  if (constrained && config.knn_k > x_init.rows() - 1) {
    throw InvalidParameter("sampler: knn_k=" + std::to_string(config.knn_k) +
                           " needs more than " + std::to_string(x_init.rows()) + " points");
  }
  const auto grid = time_grid(config.n_steps, config.min_time);
  Matrix x = std::move(x_init);
  Laplacian laplacian;
  int active_steps = 0;

  for (int i = 0; i < config.n_steps; ++i) {
    const double t = grid[static_cast<std::size_t>(i)];
    const double dt = t - grid[static_cast<std::size_t>(i) + 1];
    const Matrix noise = standard_normal(rng, x.rows(), x.cols());
    const Matrix score = field.evaluate(x, z, t);
    Matrix next = reverse_step(x, score, schedule, t, dt, noise);

    double step_smoothness = std::numeric_limits<double>::quiet_NaN();
    if (constrained && t <= config.constraint_max_time) {
      const Matrix denoised = tweedie_denoise(x, score, schedule, t);
      if (active_steps % config.graph_refresh_stride == 0) {
        laplacian = knn_laplacian(denoised, config.knn_k);
      }
      ++active_steps;
      next -= config.alpha *
              constraint_gradient(x, field, z, schedule, t, laplacian, config.mode, &score);
      if (trajectory) step_smoothness = smoothness(denoised, laplacian);
    } else if (trajectory && config.knn_k < x.rows()) {
      step_smoothness = self_smoothness(tweedie_denoise(x, score, schedule, t), config.knn_k);
    }
    if (trajectory) trajectory->entries.push_back({i, t, x, step_smoothness});

    if (!next.allFinite()) {
      throw NumericalAbort("non-finite sampler state at step " + std::to_string(i) +
                           " (t=" + std::to_string(t) + ")");
    }
    x = std::move(next);
  }

  if (config.final_denoise) {
    x = tweedie_denoise(x, field.evaluate(x, z, config.min_time), schedule, config.min_time);
    if (!x.allFinite()) throw NumericalAbort("non-finite state after final denoise");
  }
  return x;
}

Vector sample_latent(const LatentScoreNet& prior, const SamplerConfig& config,
                     std::mt19937_64& rng) {
  SamplerConfig latent_config = config;
  latent_config.mode = ConstraintMode::off;
  latent_config.final_denoise = false;
  Matrix z1 = standard_normal(rng, 1, prior.config().latent_dim);
  const Matrix z0 =
      run_reverse_chain(prior, Vector(), prior.schedule(), std::move(z1), latent_config, rng);
  return z0.row(0).transpose();
}

std::mt19937_64 cloud_rng(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

namespace {

void check_generate_args(const SamplerConfig& config, int n_clouds, int n_points) {
  validate(config);
  if (n_clouds < 0) throw InvalidParameter("generate: n_clouds must be >= 0");
  if (n_points < 1) throw InvalidParameter("generate: n_points must be >= 1");
  if (config.constraint_active() && config.knn_k > n_points - 1) {
    throw InvalidParameter("generate: knn_k=" + std::to_string(config.knn_k) +
                           " requires n_points > knn_k");
  }
}

}  // namespace

GenerateResult generate(const GenerativeModel& model, const SamplerConfig& config, int n_clouds,
                        int n_points) {
  check_generate_args(config, n_clouds, n_points);
  GenerateResult result;
  for (int c = 0; c < n_clouds; ++c) {
    auto rng = cloud_rng(config.seed, static_cast<std::size_t>(c));
    const Vector z = sample_latent(model.prior, config, rng);
    Matrix x_init = standard_normal(rng, n_points, 3);
    Trajectory trajectory;
    Matrix x = run_reverse_chain(model.decoder, z, model.schedule, std::move(x_init), config, rng,
                                 config.record_trajectory ? &trajectory : nullptr);
    result.clouds.emplace_back(std::move(x));
    result.latents.push_back(z);
    if (config.record_trajectory) result.trajectories.push_back(std::move(trajectory));
  }
  return result;
}

GenerateResult generate_with_field(const ScoreField& decoder, const VpSchedule& schedule,
                                   const Vector& z, const SamplerConfig& config, int n_clouds,
                                   int n_points) {
  check_generate_args(config, n_clouds, n_points);
  GenerateResult result;
  for (int c = 0; c < n_clouds; ++c) {
    auto rng = cloud_rng(config.seed, static_cast<std::size_t>(c));
    Matrix x_init = standard_normal(rng, n_points, 3);
    Trajectory trajectory;
    Matrix x = run_reverse_chain(decoder, z, schedule, std::move(x_init), config, rng,
                                 config.record_trajectory ? &trajectory : nullptr);
    result.clouds.emplace_back(std::move(x));
    result.latents.push_back(z);
    if (config.record_trajectory) result.trajectories.push_back(std::move(trajectory));
  }
  return result;
}

}  // namespace smoothpc
