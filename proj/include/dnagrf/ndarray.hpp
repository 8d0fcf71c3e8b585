#ifndef DNAGRF_NDARRAY_HPP
#define DNAGRF_NDARRAY_HPP

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dnagrf {

/// Row-major dense d-dimensional array (last axis contiguous).
template <class T>
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(std::vector<std::size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(count(shape_), fill) {}

  [[nodiscard]] const std::vector<std::size_t>& shape() const { return shape_; }
  [[nodiscard]] std::size_t rank() const { return shape_.size(); }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  /// Distance between consecutive elements along `axis`.
  [[nodiscard]] std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t a = axis + 1; a < shape_.size(); ++a) s *= shape_[a];
    return s;
  }

  [[nodiscard]] std::size_t offset(const std::vector<std::size_t>& idx) const {
    std::size_t o = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) o = o * shape_[a] + idx[a];
    return o;
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

/// Calls f(line_start_offset) for each 1-D line along `axis`.
template <class F>
void for_each_line(const std::vector<std::size_t>& shape, std::size_t axis, F&& f) {
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  const std::size_t len = shape[axis];
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) f(o * len * inner + i);
}

}  // namespace dnagrf

#endif  // DNAGRF_NDARRAY_HPP
