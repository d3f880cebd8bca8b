#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace dynba {

struct PixelIndex {
  int x = 0;
  int y = 0;
};

/// Row-major 2D grid of values; the storage type behind every per-pixel map.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  PixelIndex pixel(std::size_t i) const {
    return {static_cast<int>(i % width_), static_cast<int>(i / width_)};
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ScalarGrid = Grid<double>;
using VectorGrid = Grid<Eigen::Vector2d>;

/// Inverse depth per coarse-grid pixel.
using DisparityMap = ScalarGrid;
/// Metric depth per coarse-grid pixel (scene units).
using DepthMap = ScalarGrid;

struct FlowField {
  VectorGrid vectors;
  Grid<unsigned char> valid;

  FlowField() = default;
  FlowField(int width, int height)
      : vectors(width, height, Eigen::Vector2d::Zero()), valid(width, height, 0) {}

  int width() const { return vectors.width(); }
  int height() const { return vectors.height(); }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
};

}  // namespace dynba
