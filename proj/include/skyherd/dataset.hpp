#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "skyherd/grid_world.hpp"

namespace skyherd {

// One supervised navigation example: what the agent knew, and the move the
// teacher made.
struct LabeledSample {
  SensoryMap sensory;
  MemoryMap memory;
  Action label = Action::N;

  std::array<double, 4> one_hot() const;
};

// Bit-packed sequence of labeled samples that all share one grid geometry.
// A 20x20 sample (25 + 2400 bits) occupies 38 words.
class Dataset {
 public:
  Dataset(int sense_side, int width, int height);

  int sense_side() const { return sense_side_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t sensory_size() const { return static_cast<std::size_t>(sense_side_ * sense_side_); }
  std::size_t memory_size() const {
    return static_cast<std::size_t>(kPlaneCount * width_ * height_);
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  // Throws ContractViolation when the maps do not match the geometry.
  void push_back(const SensoryMap& sensory, const MemoryMap& memory, Action label);
  void push_back(const LabeledSample& sample) { push_back(sample.sensory, sample.memory, sample.label); }
  void append(const Dataset& other);
  void reserve(std::size_t samples);

  LabeledSample operator[](std::size_t i) const;
  Action label(std::size_t i) const { return static_cast<Action>(labels_[i]); }
  void set_label(std::size_t i, Action a) { labels_[i] = static_cast<std::uint8_t>(a); }
  GridPos agent(std::size_t i) const { return agents_[i]; }

  // Writes the 0/1 features as reals; spans must have sensory_size() and
  // memory_size() elements.
  void features(std::size_t i, std::span<double> sensory, std::span<double> memory) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  bool bit(std::size_t sample, std::size_t offset) const;

  int sense_side_;
  int width_;
  int height_;
  std::size_t words_per_sample_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint8_t> labels_;
  std::vector<GridPos> agents_;
};

inline constexpr int kDatasetFormatVersion = 1;

// Text container: one header line
//   #skyherd-dataset v1 key=value ...
// then one line per sample holding three 0/1 digit strings separated by a
// single space: the sensory map (row-major), the memory planes (plane, row,
// col), and the one-hot label in N W S E order.
void write_dataset(std::ostream& out, const Dataset& data,
                   const std::map<std::string, std::string>& header);

struct LoadedDataset {
  Dataset data;
  std::map<std::string, std::string> header;
};

// Throws DatasetError on malformed input or a version mismatch.
LoadedDataset read_dataset(std::istream& in);

}  // namespace skyherd
