#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maskvd/geometry.hpp"

namespace maskvd {

/// Ground-truth boxes of one frame. `classes` is empty or parallel to `boxes`.
struct FrameAnnotation {
  int index = 0;
  std::vector<BBox> boxes;
  std::vector<int> classes;

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

/// Per-pixel count of annotation boxes covering each pixel.
struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<std::int64_t> values;  // row-major, height * width

  std::int64_t at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  std::int64_t max() const;
};

using ScoreGrid = Grid<double>;

/// Boolean selection over the region grid.
class RegionMask {
 public:
  RegionMask() = default;
  explicit RegionMask(const GridSpec& spec, bool fill = false);

  static RegionMask all(const GridSpec& spec) { return RegionMask(spec, true); }

  const GridSpec& spec() const { return spec_; }
  int rows() const { return spec_.rows(); }
  int cols() const { return spec_.cols(); }
  int size() const { return spec_.tokens(); }

  bool at(int row, int col) const { return cells_[spec_.index(row, col)] != 0; }
  bool at(int token) const { return cells_[token] != 0; }
  void set(int row, int col, bool v = true) { cells_[spec_.index(row, col)] = v; }
  void set(int token, bool v = true) { cells_[token] = v; }

  int keep_count() const;
  double keep_rate() const;

  /// Row-major indices of the true cells, strictly increasing.
  std::vector<int> locations() const;

  friend bool operator==(const RegionMask&, const RegionMask&) = default;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> cells_;
};

struct MaskSchedule {
  int period = 8;
  double static_keep = 0.3;
  int dilation = 0;

  void validate() const;
};

enum class FrameKind { kFull, kMasked };

/// Accumulates the object-frequency heatmap over every box of every frame.
/// Throws std::out_of_range naming the frame and box index of the first box
/// outside the spec's frame.
Heatmap accumulate_heatmap(std::span<const FrameAnnotation> annotations,
                           const GridSpec& spec);

/// Sum of heatmap counts inside each region.
ScoreGrid region_scores(const Heatmap& heatmap, const GridSpec& spec);

/// Selects the floor(keep * N) highest-scoring regions. Ties go to the
/// smaller row-major index.
RegionMask static_mask(const ScoreGrid& scores, double keep, const GridSpec& spec);

/// Marks every region whose pixel block intersects a box, then grows the
/// selection by `dilation` regions in Chebyshev distance.
RegionMask dynamic_mask(std::span<const BBox> boxes, const GridSpec& spec,
                        int dilation = 0);

RegionMask combined_mask(const RegionMask& static_part, const RegionMask& dynamic_part);

FrameKind schedule_frame(std::int64_t t, const MaskSchedule& sched);

/// Number of selected regions for a keep fraction over N tokens.
int static_keep_count(double keep, int tokens);

}  // namespace maskvd
