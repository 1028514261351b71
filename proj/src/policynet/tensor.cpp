#include "skyherd/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace skyherd {

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)),
      data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>()), fill) {}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace skyherd
