#include "densekit/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace densekit::nn {

namespace {
using json = nlohmann::json;
constexpr char kMagic[8] = {'D', 'K', 'C', 'K', 'P', 'T', '0', '1'};

void require_little_endian() {
  require(std::endian::native == std::endian::little,
          "checkpoint format requires a little-endian host");
}

json config_to_json(const EncoderConfig& c) {
  json j;
  j["num_layers"] = c.num_layers;
  j["num_heads"] = c.num_heads;
  j["model_dim"] = c.model_dim;
  j["ff_dim"] = c.ff_dim;
  j["max_seq_len"] = c.max_seq_len;
  j["vocab_size"] = c.vocab_size;
  j["pooling"] = pooling_name(c.pooling);
  return j;
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.pooling = pooling_from_name(j.at("pooling").get<std::string>());
  c.validate();
  return c;
}
}  // namespace

void save_checkpoint(const std::string& path, const EncoderConfig& config,
                     const ParameterSet& params) {
  require_little_endian();
  config.validate();
  json header;
  header["version"] = 1;
  header["config"] = config_to_json(config);
  json table = json::array();
  std::uint64_t offset = 0;
  for (const auto& name : params.names()) {
    const Matrix& m = params.at(name);
    json t;
    t["name"] = name;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    t["offset"] = offset;
    table.push_back(std::move(t));
    offset += static_cast<std::uint64_t>(m.size());
  }
  header["tensors"] = std::move(table);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  const std::uint64_t hlen = header_text.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& name : params.names()) {
    const Matrix& m = params.at(name);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
  }
  require(out.good(), "failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
          "not a checkpoint file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  require(in.good() && hlen > 0 && hlen < (1ULL << 30), "corrupt checkpoint header");
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  require(in.good(), "truncated checkpoint header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint header: ") + e.what());
  }
  require(header.at("version").get<int>() == 1, "unsupported checkpoint version");

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  std::uint64_t expect_offset = 0;
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    require(t.at("offset").get<std::uint64_t>() == expect_offset,
            "non-contiguous tensor table in checkpoint");
    require(rows >= 0 && cols >= 0, "negative tensor shape in checkpoint");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
    require(in.good(), "truncated checkpoint payload at tensor: " + name);
    ck.params.add(name, std::move(m));
    expect_offset += static_cast<std::uint64_t>(rows * cols);
  }
  ck.params.check_finite();
  return ck;
}

}  // namespace densekit::nn
