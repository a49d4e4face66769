#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace maskvd {

/// Axis-aligned pixel box, half-open: covers x1..x2-1 and y1..y2-1.
struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool valid_within(int frame_height, int frame_width) const {
    return 0 <= x1 && x1 < x2 && x2 <= frame_width && 0 <= y1 && y1 < y2 &&
           y2 <= frame_height;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Frame geometry and its partition into square regions (one token each).
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(int height, int width, int region_size = 16);

  /// Smallest grid whose padded frame contains a height x width image.
  static GridSpec padded(int height, int width, int region_size = 16);

  int height() const { return height_; }
  int width() const { return width_; }
  int region_size() const { return region_size_; }
  int rows() const { return height_ / region_size_; }
  int cols() const { return width_ / region_size_; }
  int tokens() const { return rows() * cols(); }

  int index(int row, int col) const { return row * cols() + col; }

  /// Pixel rectangle covered by the region at a row-major token index.
  BBox region_box(int token) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int region_size_ = 16;
};

/// Dense row-major 2-D grid.
template <typename T>
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int r, int c, T fill = T{})
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  T& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  const T& operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline GridSpec::GridSpec(int height, int width, int region_size)
    : height_(height), width_(width), region_size_(region_size) {
  if (region_size <= 0) throw std::invalid_argument("region_size must be positive");
  if (height <= 0 || width <= 0) throw std::invalid_argument("frame size must be positive");
  if (height % region_size != 0 || width % region_size != 0) {
    throw std::invalid_argument("frame size " + std::to_string(height) + "x" +
                                std::to_string(width) +
                                " is not a multiple of region size " +
                                std::to_string(region_size));
  }
}

inline GridSpec GridSpec::padded(int height, int width, int region_size) {
  if (region_size <= 0) throw std::invalid_argument("region_size must be positive");
  auto up = [region_size](int v) {
    return (v + region_size - 1) / region_size * region_size;
  };
  return GridSpec(up(height), up(width), region_size);
}

inline BBox GridSpec::region_box(int token) const {
  const int r = token / cols();
  const int c = token % cols();
  return {c * region_size_, r * region_size_, (c + 1) * region_size_,
          (r + 1) * region_size_};
}

}  // namespace maskvd
