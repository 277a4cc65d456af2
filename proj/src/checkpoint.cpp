#include "smoothpc/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <vector>

#include "smoothpc/error.hpp"

namespace smoothpc {

GenerativeModel::GenerativeModel(const ModelConfig& c)
    : config(c),
      schedule(c.beta_min, c.beta_max),
      encoder({c.latent_dim, c.encoder_hidden1, c.encoder_hidden2}),
      decoder({c.latent_dim, c.decoder_width, c.decoder_blocks, c.time_embedding_dim}, schedule),
      prior({c.latent_dim, c.prior_width, c.prior_blocks, c.time_embedding_dim}, schedule) {}

void GenerativeModel::initialize(std::uint64_t seed) {
  encoder.initialize(seed * 3 + 1);
  decoder.initialize(seed * 3 + 2);
  prior.initialize(seed * 3 + 3);
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'P', 'C'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.append(bytes.data(), bytes.size());
  } else {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
  }
}

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw InvalidInput(source_ + ": truncated checkpoint");
  }

  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

template <typename T>
T parse_value(const std::map<std::string, std::string>& header, const std::string& key,
              const std::string& source) {
  const auto it = header.find(key);
  if (it == header.end()) throw InvalidInput(source + ": checkpoint header lacks '" + key + "'");
  T value{};
  const auto& text = it->second;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput(source + ": bad value '" + text + "' for '" + key + "'");
  }
  return value;
}

void put_vector(std::string& out, const Vector& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
}

void get_vector(Reader& in, Vector& target, const char* name, const std::string& source) {
  const auto count = in.get<std::uint64_t>();
  if (count != static_cast<std::uint64_t>(target.size())) {
    throw InvalidInput(source + ": " + name + " has " + std::to_string(count) +
                       " parameters, architecture expects " + std::to_string(target.size()));
  }
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = in.get<double>();
}

}  // namespace

std::map<std::string, std::string> checkpoint_header(const GenerativeModel& model) {
  const auto& c = model.config;
  return {
      {"beta_max", format_double(c.beta_max)},
      {"beta_min", format_double(c.beta_min)},
      {"decoder_blocks", std::to_string(c.decoder_blocks)},
      {"decoder_width", std::to_string(c.decoder_width)},
      {"encoder_hidden1", std::to_string(c.encoder_hidden1)},
      {"encoder_hidden2", std::to_string(c.encoder_hidden2)},
      {"epochs_completed", std::to_string(model.epochs_completed)},
      {"latent_dim", std::to_string(c.latent_dim)},
      {"prior_blocks", std::to_string(c.prior_blocks)},
      {"prior_width", std::to_string(c.prior_width)},
      {"time_embedding_dim", std::to_string(c.time_embedding_dim)},
  };
}

void save_checkpoint(const std::filesystem::path& path, const GenerativeModel& model) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto header = checkpoint_header(model);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  for (const auto& [key, value] : header) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out += key;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(value.size()));
    out += value;
  }
  put_vector(out, model.encoder.parameters());
  put_vector(out, model.decoder.parameters());
  put_vector(out, model.prior.parameters());

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write checkpoint '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for checkpoint '" + path.string() + "'");
}

GenerativeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  const std::string source = path.string();
  Reader in(std::move(data), source);

  if (in.bytes(4) != std::string(kMagic, 4)) throw InvalidInput(source + ": not an SDPC checkpoint");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InvalidInput(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::string> header;
  const auto pairs = in.get<std::uint32_t>();
  for (std::uint32_t p = 0; p < pairs; ++p) {
    std::string key = in.bytes(in.get<std::uint32_t>());
    header[key] = in.bytes(in.get<std::uint32_t>());
  }

  ModelConfig c;
  c.beta_min = parse_value<double>(header, "beta_min", source);
  c.beta_max = parse_value<double>(header, "beta_max", source);
  c.latent_dim = parse_value<int>(header, "latent_dim", source);
  c.time_embedding_dim = parse_value<int>(header, "time_embedding_dim", source);
  c.encoder_hidden1 = parse_value<int>(header, "encoder_hidden1", source);
  c.encoder_hidden2 = parse_value<int>(header, "encoder_hidden2", source);
  c.decoder_width = parse_value<int>(header, "decoder_width", source);
  c.decoder_blocks = parse_value<int>(header, "decoder_blocks", source);
  c.prior_width = parse_value<int>(header, "prior_width", source);
  c.prior_blocks = parse_value<int>(header, "prior_blocks", source);

  GenerativeModel model(c);
  model.epochs_completed = parse_value<int>(header, "epochs_completed", source);
  get_vector(in, model.encoder.parameters(), "encoder", source);
  get_vector(in, model.decoder.parameters(), "decoder", source);
  get_vector(in, model.prior.parameters(), "prior", source);
  if (!in.done()) throw InvalidInput(source + ": trailing bytes after parameter vectors");
  return model;
}

}  // namespace smoothpc
