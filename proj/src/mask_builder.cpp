#include "maskvd/mask_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace maskvd {

std::int64_t Heatmap::max() const {
  return values.empty() ? 0 : *std::max_element(values.begin(), values.end());
}

RegionMask::RegionMask(const GridSpec& spec, bool fill)
    : spec_(spec), cells_(static_cast<std::size_t>(spec.tokens()), fill ? 1 : 0) {}

int RegionMask::keep_count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

double RegionMask::keep_rate() const {
  return size() == 0 ? 0.0 : static_cast<double>(keep_count()) / size();
}

std::vector<int> RegionMask::locations() const {
  std::vector<int> out;
  out.reserve(cells_.size());
  for (int i = 0; i < static_cast<int>(cells_.size()); ++i) {
    if (cells_[i]) out.push_back(i);
  }
  return out;
}

void MaskSchedule::validate() const {
  if (period < 1) throw std::invalid_argument("period must be >= 1");
  if (!(static_keep >= 0.0 && static_keep <= 1.0)) {
    throw std::invalid_argument("static keep rate must lie in [0, 1]");
  }
  if (dilation < 0) throw std::invalid_argument("dilation must be >= 0");
}

Heatmap accumulate_heatmap(std::span<const FrameAnnotation> annotations,
                           const GridSpec& spec) {
  const int h = spec.height();
  const int w = spec.width();
  // 2-D difference array, one extra row and column for the closing edges.
  std::vector<std::int64_t> diff(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto d = [&](int y, int x) -> std::int64_t& {
    return diff[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (std::size_t f = 0; f < annotations.size(); ++f) {
    const auto& boxes = annotations[f].boxes;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const BBox& box = boxes[b];
      if (!box.valid_within(h, w)) {
        throw std::out_of_range(
            "annotation box out of bounds: frame " + std::to_string(annotations[f].index) +
            ", box " + std::to_string(b) + " (" + std::to_string(box.x1) + "," +
            std::to_string(box.y1) + "," + std::to_string(box.x2) + "," +
            std::to_string(box.y2) + ")");
      }
      d(box.y1, box.x1) += 1;
      d(box.y1, box.x2) -= 1;
      d(box.y2, box.x1) -= 1;
      d(box.y2, box.x2) += 1;
    }
  }

  Heatmap out{h, w, std::vector<std::int64_t>(static_cast<std::size_t>(h) * w)};
  std::vector<std::int64_t> column(static_cast<std::size_t>(w) + 1, 0);
  for (int y = 0; y < h; ++y) {
    std::int64_t run = 0;
    for (int x = 0; x < w; ++x) {
      column[x] += d(y, x);
      run += column[x];
      out.values[static_cast<std::size_t>(y) * w + x] = run;
    }
  }
  return out;
}

ScoreGrid region_scores(const Heatmap& heatmap, const GridSpec& spec) {
  if (heatmap.height != spec.height() || heatmap.width != spec.width()) {
    throw std::invalid_argument("heatmap is " + std::to_string(heatmap.height) + "x" +
                                std::to_string(heatmap.width) + ", grid expects " +
                                std::to_string(spec.height()) + "x" +
                                std::to_string(spec.width()));
  }
  const int s = spec.region_size();
  ScoreGrid scores(spec.rows(), spec.cols(), 0.0);
  for (int y = 0; y < heatmap.height; ++y) {
    for (int x = 0; x < heatmap.width; ++x) {
      scores(y / s, x / s) += static_cast<double>(heatmap.at(y, x));
    }
  }
  return scores;
}

int static_keep_count(double keep, int tokens) {
  if (!(keep >= 0.0 && keep <= 1.0)) {
    throw std::invalid_argument("static keep rate must lie in [0, 1]");
  }
  return static_cast<int>(std::floor(keep * tokens));
}

RegionMask static_mask(const ScoreGrid& scores, double keep, const GridSpec& spec) {
  if (scores.rows != spec.rows() || scores.cols != spec.cols()) {
    throw std::invalid_argument("score grid does not match the region grid");
  }
  const int n = spec.tokens();
  const int k = static_keep_count(keep, n);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](int a, int b) {
    if (scores.data[a] != scores.data[b]) return scores.data[a] > scores.data[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + k, order.end(), better);

  RegionMask mask(spec);
  for (int i = 0; i < k; ++i) mask.set(order[i]);
  return mask;
}

RegionMask dynamic_mask(std::span<const BBox> boxes, const GridSpec& spec, int dilation) {
  if (dilation < 0) throw std::invalid_argument("dilation must be >= 0");
  RegionMask mask(spec);
  const int s = spec.region_size();
  for (const BBox& box : boxes) {
    if (!box.valid_within(spec.height(), spec.width())) {
      throw std::out_of_range("dynamic-mask box outside the frame");
    }
    const int r0 = std::max(0, box.y1 / s - dilation);
    const int r1 = std::min(spec.rows() - 1, (box.y2 - 1) / s + dilation);
    const int c0 = std::max(0, box.x1 / s - dilation);
    const int c1 = std::min(spec.cols() - 1, (box.x2 - 1) / s + dilation);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) mask.set(r, c);
    }
  }
  return mask;
}

RegionMask combined_mask(const RegionMask& static_part, const RegionMask& dynamic_part) {
  if (!(static_part.spec() == dynamic_part.spec())) {
    throw std::invalid_argument("cannot combine masks over different grids");
  }
  RegionMask out = static_part;
  for (int i = 0; i < out.size(); ++i) {
    if (dynamic_part.at(i)) out.set(i);
  }
  return out;
}

FrameKind schedule_frame(std::int64_t t, const MaskSchedule& sched) {
  if (t < 0) throw std::invalid_argument("frame index must be >= 0");
  sched.validate();
  return t % sched.period == 0 ? FrameKind::kFull : FrameKind::kMasked;
}

}  // namespace maskvd
