#include "smoothpc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::string format_number(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(std::string key, T RunConfig::*outer) {
  return {key, [outer](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(c.*outer);
            } else {
              return std::to_string(c.*outer);
            }
          },
          [key, outer](RunConfig& c, const std::string& v) { c.*outer = parse_number<T>(key, v); }};
}

template <typename S, typename T>
Field nested_number(std::string key, S RunConfig::*section, T S::*member) {
  return {key, [section, member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(c.*section.*member);
            } else {
              return std::to_string(c.*section.*member);
            }
          },
          [key, section, member](RunConfig& c, const std::string& v) {
            c.*section.*member = parse_number<T>(key, v);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using M = ModelConfig;
    using T = TrainConfig;
    using S = SamplerConfig;
    std::vector<Field> f;
    f.push_back(number_field("seed", &RunConfig::seed));
    f.push_back({"data.dir", [](const RunConfig& c) { return c.data_dir; },
                 [](RunConfig& c, const std::string& v) { c.data_dir = v; }});
    f.push_back({"output.dir", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, const std::string& v) { c.output_dir = v; }});

    f.push_back(nested_number("schedule.beta_min", &RunConfig::model, &M::beta_min));
    f.push_back(nested_number("schedule.beta_max", &RunConfig::model, &M::beta_max));
    f.push_back(nested_number("model.latent_dim", &RunConfig::model, &M::latent_dim));
    f.push_back(nested_number("model.time_embedding_dim", &RunConfig::model, &M::time_embedding_dim));
    f.push_back(nested_number("model.encoder_hidden1", &RunConfig::model, &M::encoder_hidden1));
    f.push_back(nested_number("model.encoder_hidden2", &RunConfig::model, &M::encoder_hidden2));
    f.push_back(nested_number("model.decoder_width", &RunConfig::model, &M::decoder_width));
    f.push_back(nested_number("model.decoder_blocks", &RunConfig::model, &M::decoder_blocks));
    f.push_back(nested_number("model.prior_width", &RunConfig::model, &M::prior_width));
    f.push_back(nested_number("model.prior_blocks", &RunConfig::model, &M::prior_blocks));

    f.push_back(nested_number("train.batch_size", &RunConfig::train, &T::batch_size));
    f.push_back(nested_number("train.epochs", &RunConfig::train, &T::epochs));
    f.push_back(nested_number("train.lr_encoder", &RunConfig::train, &T::lr_encoder));
    f.push_back(nested_number("train.lr_decoder", &RunConfig::train, &T::lr_decoder));
    f.push_back(nested_number("train.lr_prior", &RunConfig::train, &T::lr_prior));
    f.push_back(nested_number("train.seed", &RunConfig::train, &T::seed));
    f.push_back(nested_number("train.min_time", &RunConfig::train, &T::min_time));
    f.push_back(nested_number("train.constant_epochs", &RunConfig::train, &T::constant_epochs));
    f.push_back(nested_number("train.decay_epochs", &RunConfig::train, &T::decay_epochs));
    f.push_back({"train.entropy",
                 [](const RunConfig& c) {
                   return std::string(c.train.entropy == EntropyMode::closed_form ? "closed_form"
                                                                                  : "monte_carlo");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "closed_form") {
                     c.train.entropy = EntropyMode::closed_form;
                   } else if (v == "monte_carlo") {
                     c.train.entropy = EntropyMode::monte_carlo;
                   } else {
                     throw ConfigError("config key 'train.entropy': expected closed_form or "
                                       "monte_carlo, got '" + v + "'");
                   }
                 }});

    f.push_back(nested_number("sampler.n_steps", &RunConfig::sampler, &S::n_steps));
    f.push_back(nested_number("sampler.alpha", &RunConfig::sampler, &S::alpha));
    f.push_back(nested_number("sampler.knn_k", &RunConfig::sampler, &S::knn_k));
    f.push_back(nested_number("sampler.graph_refresh_stride", &RunConfig::sampler,
                              &S::graph_refresh_stride));
    f.push_back({"sampler.mode",
                 [](const RunConfig& c) { return std::string(to_string(c.sampler.mode)); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.sampler.mode = parse_constraint_mode(v);
                   } catch (const InvalidParameter&) {
                     throw ConfigError("config key 'sampler.mode': expected off, frozen or exact, got '" +
                                       v + "'");
                   }
                 }});
    f.push_back(nested_number("sampler.seed", &RunConfig::sampler, &S::seed));
    f.push_back(nested_number("sampler.min_time", &RunConfig::sampler, &S::min_time));
    f.push_back(nested_number("sampler.constraint_max_time", &RunConfig::sampler,
                              &S::constraint_max_time));
    f.push_back({"sampler.final_denoise",
                 [](const RunConfig& c) { return std::string(c.sampler.final_denoise ? "true" : "false"); },
                 [](RunConfig& c, const std::string& v) {
                   c.sampler.final_denoise = parse_bool("sampler.final_denoise", v);
                 }});
    f.push_back({"sampler.record_trajectory",
                 [](const RunConfig& c) {
                   return std::string(c.sampler.record_trajectory ? "true" : "false");
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.sampler.record_trajectory = parse_bool("sampler.record_trajectory", v);
                 }});
    f.push_back(number_field("sample.count", &RunConfig::sample_count));
    f.push_back(number_field("sample.points", &RunConfig::sample_points));
    return f;
  }();
  return table;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&key](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate config key '" + key + "'");
    }
    it->set(config, value);
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& field : fields()) {
    out += field.key;
    out += " = ";
    out += field.get(config);
    out += '\n';
  }
  return out;
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config '" + path.string() + "'");
  out << format_run_config(config);
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : format_run_config(config)) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace smoothpc
