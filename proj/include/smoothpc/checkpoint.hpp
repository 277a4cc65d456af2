#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "smoothpc/score_models.hpp"

namespace smoothpc {

/// Architecture of the full generative model: encoder, conditional decoder
/// score network and latent prior score network, sharing one VP schedule.
struct ModelConfig {
  double beta_min = 0.1;
  double beta_max = 20.0;
  int latent_dim = 64;
  int time_embedding_dim = 64;
  int encoder_hidden1 = 64;
  int encoder_hidden2 = 128;
  int decoder_width = 256;
  int decoder_blocks = 6;
  int prior_width = 256;
  int prior_blocks = 6;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GenerativeModel {
  GenerativeModel() = default;
  explicit GenerativeModel(const ModelConfig& config);

  /// Random init; each network gets its own stream derived from `seed`.
  void initialize(std::uint64_t seed);

  ModelConfig config;
  VpSchedule schedule;
  PointEncoder encoder;
  MlpScoreNet decoder;
  LatentScoreNet prior;
  /// Number of training epochs already applied.
  int epochs_completed = 0;
};

// Checkpoint file layout (all integers little-endian):
//
//   "SDPC"                      4-byte magic
//   u32 version                 currently 1
//   u32 n_pairs
//   n_pairs x { u32 key_len, key bytes, u32 value_len, value bytes }
//   3 x { u64 count, count x f64 }   encoder, decoder, prior parameters
//
// Keys hold the ModelConfig fields plus `epochs_completed`; values are
// decimal text.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const GenerativeModel& model);
GenerativeModel load_checkpoint(const std::filesystem::path& path);

/// Header key/value pairs exactly as serialised.
std::map<std::string, std::string> checkpoint_header(const GenerativeModel& model);

}  // namespace smoothpc
