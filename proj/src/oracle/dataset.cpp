#include "skyherd/dataset.hpp"

#include <sstream>

#include "skyherd/errors.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

std::array<double, 4> LabeledSample::one_hot() const {
  std::array<double, 4> v{};
  v[static_cast<std::size_t>(index_of(label))] = 1.0;
  return v;
}

Dataset::Dataset(int sense_side, int width, int height)
    : sense_side_(sense_side), width_(width), height_(height) {
  if (sense_side < 1 || width < 1 || height < 1) {
    throw ContractViolation("dataset geometry must be positive");
  }
  words_per_sample_ = (sensory_size() + memory_size() + 63) / 64;
}

void Dataset::reserve(std::size_t samples) {
  bits_.reserve(samples * words_per_sample_);
  labels_.reserve(samples);
  agents_.reserve(samples);
}

void Dataset::push_back(const SensoryMap& sensory, const MemoryMap& memory, Action label) {
  if (sensory.side() != sense_side_ || memory.width() != width_ || memory.height() != height_) {
    throw ContractViolation("sample geometry does not match dataset");
  }
  const std::size_t base = bits_.size();
  bits_.resize(base + words_per_sample_, 0);
  std::size_t offset = 0;
  auto pack = [&](std::span<const std::uint8_t> values) {
    for (std::uint8_t v : values) {
      if (v) bits_[base + offset / 64] |= std::uint64_t{1} << (offset % 64);
      ++offset;
    }
  };
  pack(sensory.cells());
  pack(memory.raw());
  labels_.push_back(static_cast<std::uint8_t>(label));
  agents_.push_back(memory.agent());
}

void Dataset::append(const Dataset& other) {
  if (other.sense_side_ != sense_side_ || other.width_ != width_ || other.height_ != height_) {
    throw ContractViolation("cannot append datasets with different geometry");
  }
  bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  agents_.insert(agents_.end(), other.agents_.begin(), other.agents_.end());
}

bool Dataset::bit(std::size_t sample, std::size_t offset) const {
  return (bits_[sample * words_per_sample_ + offset / 64] >> (offset % 64)) & 1u;
}

LabeledSample Dataset::operator[](std::size_t i) const {
  LabeledSample s{SensoryMap(sense_side_), MemoryMap(width_, height_), label(i)};
  std::size_t offset = 0;
  for (int r = 0; r < sense_side_; ++r) {
    for (int c = 0; c < sense_side_; ++c) s.sensory.set(r, c, bit(i, offset++));
  }
  for (int p = 0; p < kPlaneCount; ++p) {
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) s.memory.set(static_cast<Plane>(p), {r, c}, bit(i, offset++));
    }
  }
  return s;
}

void Dataset::features(std::size_t i, std::span<double> sensory, std::span<double> memory) const {
  const std::uint64_t* words = bits_.data() + i * words_per_sample_;
  const std::size_t ns = sensory_size();
  for (std::size_t k = 0; k < ns; ++k) sensory[k] = static_cast<double>((words[k / 64] >> (k % 64)) & 1u);
  const std::size_t nm = memory_size();
  for (std::size_t k = 0; k < nm; ++k) {
    const std::size_t off = ns + k;
    memory[k] = static_cast<double>((words[off / 64] >> (off % 64)) & 1u);
  }
}

void write_dataset(std::ostream& out, const Dataset& data,
                   const std::map<std::string, std::string>& header) {
  out << "#skyherd-dataset v" << kDatasetFormatVersion << " sense_side=" << data.sense_side()
      << " grid_width=" << data.width() << " grid_height=" << data.height()
      << " samples=" << data.size();
  for (const auto& [key, value] : header) out << ' ' << key << '=' << value;
  out << '\n';

  std::string line;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data[i];
    line.clear();
    for (auto v : s.sensory.cells()) line += v ? '1' : '0';
    line += ' ';
    for (auto v : s.memory.raw()) line += v ? '1' : '0';
    line += ' ';
    for (Action a : kActions) line += a == s.label ? '1' : '0';
    line += '\n';
    out << line;
  }
  out.flush();
  if (!out) throw DatasetError("failed writing dataset");
}

LoadedDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("empty dataset stream");
  const std::string magic = "#skyherd-dataset v";
  if (line.rfind(magic, 0) != 0) throw DatasetError("missing dataset header");
  std::istringstream head(line.substr(magic.size()));
  int version = 0;
  head >> version;
  if (version != kDatasetFormatVersion) {
    throw DatasetError("unsupported dataset version " + std::to_string(version));
  }
  std::map<std::string, std::string> header;
  std::string token;
  while (head >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw DatasetError("malformed header token '" + token + "'");
    header[token.substr(0, eq)] = token.substr(eq + 1);
  }
  auto take = [&](const char* key) -> long long {
    const auto it = header.find(key);
    if (it == header.end()) throw DatasetError(std::string("header lacks ") + key);
    try {
      return parse_integer(it->second, key);
    } catch (const ConfigError& e) {
      throw DatasetError(e.what());
    }
  };
  const int side = static_cast<int>(take("sense_side"));
  const int width = static_cast<int>(take("grid_width"));
  const int height = static_cast<int>(take("grid_height"));
  const auto samples = static_cast<std::size_t>(take("samples"));
  for (const char* key : {"sense_side", "grid_width", "grid_height", "samples"}) header.erase(key);

  LoadedDataset loaded{Dataset(side, width, height), std::move(header)};
  loaded.data.reserve(samples);
  const std::size_t ns = static_cast<std::size_t>(side * side);
  const std::size_t nm = static_cast<std::size_t>(kPlaneCount * width * height);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = " on line " + std::to_string(line_no);
    if (line.size() != ns + nm + 4 + 2 || line[ns] != ' ' || line[ns + 1 + nm] != ' ') {
      throw DatasetError("malformed record" + where);
    }
    SensoryMap sensory(side);
    MemoryMap memory(width, height);
    auto digit = [&](char ch) {
      if (ch != '0' && ch != '1') throw DatasetError("non-binary value" + where);
      return ch == '1';
    };
    for (std::size_t k = 0; k < ns; ++k) {
      sensory.set(static_cast<int>(k) / side, static_cast<int>(k) % side, digit(line[k]));
    }
    const int plane_cells = width * height;
    for (std::size_t k = 0; k < nm; ++k) {
      const int idx = static_cast<int>(k);
      memory.set(static_cast<Plane>(idx / plane_cells),
                 {(idx % plane_cells) / width, idx % width}, digit(line[ns + 1 + k]));
    }
    int hot = -1;
    for (int a = 0; a < 4; ++a) {
      if (digit(line[ns + nm + 2 + static_cast<std::size_t>(a)])) {
        if (hot >= 0) throw DatasetError("label is not one-hot" + where);
        hot = a;
      }
    }
    if (hot < 0) throw DatasetError("label is not one-hot" + where);
    if (memory.count(Plane::agent_current) != 1) throw DatasetError("memory lacks a unique agent cell" + where);
    loaded.data.push_back(sensory, memory, static_cast<Action>(hot));
  }
  if (loaded.data.size() != samples) {
    throw DatasetError("header promises " + std::to_string(samples) + " samples, found " +
                       std::to_string(loaded.data.size()));
  }
  return loaded;
}

}  // namespace skyherd
