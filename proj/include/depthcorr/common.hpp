#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthcorr {

// Raised when an operation receives a map, scan or volume with nothing in it.
class EmptyInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Pixel {
  int u = 0;
  int v = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Dense row-major image grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t u, std::size_t v) { return data_[v * width_ + u]; }
  const T& operator()(std::size_t u, std::size_t v) const {
    return data_[v * width_ + u];
  }

  // Edge-clamped read; coordinates may be negative or past the border.
  const T& clamped(long u, long v) const {
    const long w = static_cast<long>(width_);
    const long h = static_cast<long>(height_);
    u = u < 0 ? 0 : (u >= w ? w - 1 : u);
    v = v < 0 ? 0 : (v >= h ? h - 1 : v);
    return data_[static_cast<std::size_t>(v) * width_ + static_cast<std::size_t>(u)];
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Grid<std::uint8_t>;

}  // namespace depthcorr
