#include "prom/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

namespace prom {
namespace {

constexpr char kMagic[8] = {'P', 'R', 'O', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::size_t count) {
    need(count);
    std::string out = data_.substr(pos_, count);
    pos_ += count;
    return out;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t count) const {
    if (pos_ + count > data_.size()) {
      throw std::runtime_error("checkpoint: truncated file");
    }
  }

  std::string data_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["vocab_size"] = cfg.vocab_size;
  j["model_dim"] = cfg.model_dim;
  j["head_count"] = cfg.head_count;
  j["encoder_layers"] = cfg.encoder_layers;
  j["decoder_layers"] = cfg.decoder_layers;
  j["feedforward_dim"] = cfg.feedforward_dim;
  j["max_src_len"] = cfg.max_src_len;
  j["max_tgt_len"] = cfg.max_tgt_len;
  j["n"] = cfg.n;
  j["lambda"] = cfg.lambda;
  j["use_copy_indicator"] = cfg.use_copy_indicator;
  j["seed"] = cfg.seed;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.model_dim = j.at("model_dim").get<int>();
  cfg.head_count = j.at("head_count").get<int>();
  cfg.encoder_layers = j.at("encoder_layers").get<int>();
  cfg.decoder_layers = j.at("decoder_layers").get<int>();
  cfg.feedforward_dim = j.at("feedforward_dim").get<int>();
  cfg.max_src_len = j.at("max_src_len").get<int>();
  cfg.max_tgt_len = j.at("max_tgt_len").get<int>();
  cfg.n = j.at("n").get<int>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.use_copy_indicator = j.at("use_copy_indicator").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const Params& params) {
  cfg.validate();
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  std::string cfg_json = config_to_json(cfg).dump();
  put_u64(out, cfg_json.size());
  out += cfg_json;
  put_u64(out, params.arrays.size());
  for (const auto& [name, m] : params.arrays) {  // map order is name order
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, 2);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw std::runtime_error("checkpoint: cannot open " + path +
                             " for writing");
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  file.flush();
  if (!file) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());
  Reader reader(std::move(data));
  if (reader.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  std::uint64_t cfg_len = reader.u64();
  std::string cfg_json = reader.bytes(cfg_len);
  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(nlohmann::json::parse(cfg_json));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad config: ") +
                             e.what());
  }
  std::uint64_t count = reader.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t name_len = reader.u32();
    std::string name = reader.bytes(name_len);
    std::uint32_t rank = reader.u32();
    if (rank != 2) {
      throw std::runtime_error("checkpoint: unsupported rank for " + name);
    }
    std::uint64_t rows = reader.u64();
    std::uint64_t cols = reader.u64();
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = reader.f64();
    }
    ckpt.params.arrays.emplace(std::move(name), std::move(m));
  }
  if (!reader.at_end()) {
    throw std::runtime_error("checkpoint: trailing bytes in " + path);
  }
  return ckpt;
}

}  // namespace prom
