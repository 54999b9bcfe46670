#include "hint/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace hint {

namespace {

constexpr char kMagic[8] = {'H', 'I', 'N', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void require_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  if (b != 1)
    throw std::runtime_error("checkpoint I/O requires a little-endian host");
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError(path, 0, "truncated checkpoint");
  return v;
}

void write_str(std::ofstream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::ifstream& in, const std::string& path) {
  auto len = read_pod<std::uint64_t>(in, path);
  if (len > (1ull << 32)) throw ParseError(path, 0, "implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError(path, 0, "truncated checkpoint");
  return s;
}

}  // namespace

std::string config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["variant"] = to_name(c.variant);
  j["channels"] = to_name(c.channels);
  j["tensor_input"] = c.tensor_input;
  j["share_direction_params"] = c.share_direction_params;
  j["ad_pool"] = to_name(c.ad_pool);
  j["k"] = c.k;
  j["sgru_dim"] = c.sgru_dim;
  j["lstm_dim"] = c.lstm_dim;
  j["emb_dim"] = c.emb_dim;
  j["comp_bias"] = c.comp_bias;
  j["scorer_hidden"] = c.scorer_hidden;
  j["scan"] = to_name(c.scan);
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.channels = channel_mode_from_name(j.at("channels").get<std::string>());
    c.tensor_input = j.at("tensor_input").get<bool>();
    c.share_direction_params = j.at("share_direction_params").get<bool>();
    c.ad_pool = ad_pool_from_name(j.at("ad_pool").get<std::string>());
    c.k = j.at("k").get<int>();
    c.sgru_dim = j.at("sgru_dim").get<int>();
    c.lstm_dim = j.at("lstm_dim").get<int>();
    c.emb_dim = j.at("emb_dim").get<int>();
    c.comp_bias = j.at("comp_bias").get<bool>();
    c.scorer_hidden = j.at("scorer_hidden").get<int>();
    c.scan = scan_order_from_name(j.at("scan").get<std::string>());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model configuration", 0, e.what());
  }
}

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     HintParams& params, const CheckpointMeta& meta) {
  require_little_endian();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);

  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_str(out, config_to_json(config));
  write_str(out, meta.json);

  auto tensors = collect_tensors(params, config);
  write_pod<std::uint64_t>(out, tensors.size());
  for (const NamedTensor& t : tensors) {
    write_str(out, t.name);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols));
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.size * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open checkpoint " + path);

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ParseError(path, 0, "not a checkpoint file");
  auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ParseError(path, 0, "unsupported checkpoint version " +
                                  std::to_string(version));

  LoadedCheckpoint result;
  result.config = config_from_json(read_str(in, path));
  result.meta.json = read_str(in, path);
  result.params = allocate_params(result.config);

  auto tensors = collect_tensors(result.params, result.config);
  std::map<std::string, NamedTensor*> by_name;
  for (NamedTensor& t : tensors) by_name[t.name] = &t;

  auto count = read_pod<std::uint64_t>(in, path);
  if (count != tensors.size())
    throw ParseError(path, 0, "tensor count does not match configuration");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_str(in, path);
    auto rows = read_pod<std::uint64_t>(in, path);
    auto cols = read_pod<std::uint64_t>(in, path);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ParseError(path, 0, "unexpected tensor " + name);
    NamedTensor* t = it->second;
    if (rows != static_cast<std::uint64_t>(t->rows) ||
        cols != static_cast<std::uint64_t>(t->cols))
      throw ParseError(path, 0, "shape mismatch for tensor " + name);
    in.read(reinterpret_cast<char*>(t->data),
            static_cast<std::streamsize>(t->size * sizeof(double)));
    if (!in) throw ParseError(path, 0, "truncated checkpoint");
    by_name.erase(it);
  }
  return result;
}

}  // namespace hint
