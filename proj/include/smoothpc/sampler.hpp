#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "smoothpc/checkpoint.hpp"

namespace smoothpc {

enum class ConstraintMode { off, frozen_score, exact_chain };

ConstraintMode parse_constraint_mode(std::string_view name);
std::string_view to_string(ConstraintMode mode);

/// Constraint weight that keeps the integrated guidance comparable across
/// step counts (1e-4 at 1000 steps).
inline double default_alpha(int n_steps) { return 0.1 / n_steps; }

struct SamplerConfig {
  int n_steps = 1000;
  double alpha = default_alpha(1000);
  int knn_k = 30;
  /// Reverse steps between rebuilds of the constraint graph.
  int graph_refresh_stride = 1;
  ConstraintMode mode = ConstraintMode::frozen_score;
  std::uint64_t seed = 0;
  double min_time = kDefaultMinTime;
  /// The constraint is applied only while t <= constraint_max_time.
  double constraint_max_time = 1.0;
  /// Apply one Tweedie denoise to the final state.
  bool final_denoise = false;
  bool record_trajectory = false;

  bool constraint_active() const { return mode != ConstraintMode::off && alpha > 0.0; }

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// Throws InvalidParameter on out-of-range fields.
void validate(const SamplerConfig& config);

struct TrajectoryEntry {
  int step = 0;
  double t = 0.0;
  Matrix state;
  /// S of the Tweedie estimate: under the constraint graph while the
  /// constraint is active, otherwise under a fresh knn_k graph (NaN if the
  /// cloud has too few points for one).
  double smoothness = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;
};

/// Times t_0 = 1 > t_1 > ... > t_n = min_time with spacing 1/n_steps; the
/// last interval is clamped to end at min_time.
std::vector<double> time_grid(int n_steps, double min_time);

/// Posterior-mean estimate (x_t + b_t^2 s) / a_t.
Matrix tweedie_denoise(const Matrix& xt, const Matrix& score, const VpSchedule& schedule, double t);

/// Euler-Maruyama step of the reverse SDE from t to t - dt:
///   x - [f_t(x) - g_t^2 s] dt + g_t sqrt(dt) noise
Matrix reverse_step(const Matrix& xt, const Matrix& score, const VpSchedule& schedule, double t,
                    double dt, const Matrix& noise);
Matrix reverse_step(const Matrix& xt, const ScoreField& field, const Vector& z,
                    const VpSchedule& schedule, double t, double dt, const Matrix& noise);

/// Gradient w.r.t. x_t of trace(X^T L X) at X = tweedie_denoise(x_t, s(x_t)).
/// `score` is s(x_t, z, t) if already computed.
Matrix constraint_gradient(const Matrix& xt, const ScoreField& field, const Vector& z,
                           const VpSchedule& schedule, double t, const Laplacian& laplacian,
                           ConstraintMode mode, const Matrix* score = nullptr);

/// reverse_step minus alpha * constraint_gradient. When `laplacian` is null
/// the graph is built from the current Tweedie estimate. With the constraint
/// inactive this is exactly reverse_step.
Matrix constrained_reverse_step(const Matrix& xt, const ScoreField& field, const Vector& z,
                                const VpSchedule& schedule, double t, double dt,
                                const SamplerConfig& config, const Matrix& noise,
                                const Laplacian* laplacian = nullptr);

/// Full reverse chain from x_init at t = 1 down to min_time. Draws one
/// standard-normal matrix from `rng` per step. Throws NumericalAbort with the
/// step index if the state becomes non-finite.
Matrix run_reverse_chain(const ScoreField& field, const Vector& z, const VpSchedule& schedule,
                         Matrix x_init, const SamplerConfig& config, std::mt19937_64& rng,
                         Trajectory* trajectory = nullptr);

/// Latent code drawn by unconstrained reverse diffusion from N(0, I).
Vector sample_latent(const LatentScoreNet& prior, const SamplerConfig& config,
                     std::mt19937_64& rng);

/// Independent per-cloud random stream.
std::mt19937_64 cloud_rng(std::uint64_t seed, std::size_t index);

struct GenerateResult {
  std::vector<PointCloud> clouds;
  std::vector<Vector> latents;
  std::vector<Trajectory> trajectories;
};

/// Samples clouds from a trained model: latent via the prior, then the
/// decoder chain (constrained per config).
GenerateResult generate(const GenerativeModel& model, const SamplerConfig& config, int n_clouds,
                        int n_points);

/// Decoder chain only, with an arbitrary score field and a fixed latent.
GenerateResult generate_with_field(const ScoreField& decoder, const VpSchedule& schedule,
                                   const Vector& z, const SamplerConfig& config, int n_clouds,
                                   int n_points);

}  // namespace smoothpc
