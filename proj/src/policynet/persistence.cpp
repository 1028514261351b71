#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "skyherd/errors.hpp"
#include "skyherd/policy_net.hpp"

namespace skyherd {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'K', 'Y', 'P', 'A', 'R', 'A', 'M'};
constexpr std::size_t kShapeFields = 9;
constexpr std::uint32_t kMaxNameLength = 256;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (std::size_t i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes.data(), 4);
}

void put_tensor(std::ostream& out, const Tensor& t) {
  for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    std::array<unsigned char, 8> bytes{};
    read(bytes.data(), 8);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
    return v;
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> bytes{};
    read(bytes.data(), 4);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v |= std::uint32_t{bytes[i]} << (8 * i);
    return v;
  }

  void read(unsigned char* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw PersistenceError("params file truncated");
    }
  }

  void tensor(Tensor& t) {
    for (double& v : t.values()) v = std::bit_cast<double>(u64());
  }

 private:
  std::istream& in_;
};

std::array<int, kShapeFields> shape_fields(const NetworkShape& s) {
  return {s.sensory_side, s.grid_width,   s.grid_height,  s.memory_planes, s.tactical_hidden,
          s.tactical_out, s.conv_maps,    s.strategic_out, s.head_hidden};
}

}  // namespace

void save_params(const NetworkParams& params, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kParamsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(kShapeFields));
  for (int v : shape_fields(params.shape())) put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(params.parameters().size()));
  for (const auto& p : params.parameters()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_u64(out, d);
    put_tensor(out, p.value);
    put_tensor(out, p.velocity);
  }
  out.flush();
  if (!out) throw PersistenceError("failed writing params");
}

void save_params(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistenceError("cannot open " + path.string() + " for writing");
  save_params(params, out);
}

NetworkParams load_params(std::istream& in) {
  Reader reader(in);
  std::array<unsigned char, 8> magic{};
  reader.read(magic.data(), magic.size());
  if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) {
    throw PersistenceError("not a params file");
  }
  const auto version = reader.u32();
  if (version != kParamsFormatVersion) {
    throw PersistenceError("params format version " + std::to_string(version) +
                           " is not supported (expected " +
                           std::to_string(kParamsFormatVersion) + ")");
  }
  if (reader.u32() != kShapeFields) throw PersistenceError("unexpected shape header");
  std::array<int, kShapeFields> f{};
  for (int& v : f) {
    const auto raw = reader.u32();
    if (raw == 0 || raw > (1u << 20)) throw PersistenceError("implausible shape field");
    v = static_cast<int>(raw);
  }
  NetworkShape shape{f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]};
  NetworkParams params = NetworkParams::zeros(shape);

  if (reader.u32() != static_cast<std::uint32_t>(kLayerCount)) {
    throw PersistenceError("unexpected layer count");
  }
  for (auto& p : params.parameters()) {
    const auto name_length = reader.u32();
    if (name_length > kMaxNameLength) throw PersistenceError("corrupt layer name");
    std::string name(name_length, '\0');
    reader.read(reinterpret_cast<unsigned char*>(name.data()), name_length);
    if (name != p.name) {
      throw PersistenceError("expected layer '" + p.name + "', found '" + name + "'");
    }
    const auto rank = reader.u32();
    if (rank > 8) throw PersistenceError("corrupt rank for layer '" + name + "'");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(reader.u64());
    if (dims != p.value.shape()) {
      throw PersistenceError("layer '" + name + "' has shape " + shape_string(dims) +
                             ", header implies " + shape_string(p.value.shape()));
    }
    reader.tensor(p.value);
    reader.tensor(p.velocity);
  }
  return params;
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot open " + path.string());
  return load_params(in);
}

NetworkParams load_params(const std::filesystem::path& path, const NetworkShape& expected) {
  NetworkParams params = load_params(path);
  for (int l = 0; l < kLayerCount; ++l) {
    const auto layer = static_cast<Layer>(l);
    const auto want = layer_shape(expected, layer);
    if (params.value(layer).shape() != want) {
      throw PersistenceError("layer '" + std::string(layer_name(layer)) + "' has shape " +
                             shape_string(params.value(layer).shape()) + ", expected " +
                             shape_string(want));
    }
  }
  if (!(params.shape() == expected)) {
    throw PersistenceError("params were trained for a different grid geometry");
  }
  return params;
}

}  // namespace skyherd
