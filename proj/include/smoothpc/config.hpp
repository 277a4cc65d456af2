#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "smoothpc/checkpoint.hpp"
#include "smoothpc/sampler.hpp"
#include "smoothpc/training.hpp"

namespace smoothpc {

/// Everything a train/sample run needs. Stored as a flat `key = value` text
/// file; '#' starts a comment. Keys are dotted (`train.epochs`), values are
/// typed by key. Unknown keys and malformed values raise ConfigError naming
/// the key.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  /// Desk-scale sampling: 200 steps (the library default is full-scale).
  SamplerConfig sampler{.n_steps = 200, .alpha = default_alpha(200)};
  int sample_count = 8;
  int sample_points = 256;
  std::string data_dir;
  std::string output_dir = "run";
  std::uint64_t seed = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key, one per line, in a fixed order. Doubles use the shortest
/// round-trip representation so parse(format(c)) == c.
std::string format_run_config(const RunConfig& config);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// FNV-1a 64-bit hash of format_run_config, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace smoothpc
