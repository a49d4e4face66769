#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "maskvd/detector.hpp"
#include "maskvd/mask_builder.hpp"

namespace maskvd {

/// Raised for malformed input documents; the message carries line context.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Annotation document: {"frame_size": [H, W], "frames": [{"index", "boxes"}]}.
/// Frames may also carry a parallel "classes" array.
struct AnnotationSet {
  int frame_height = 0;
  int frame_width = 0;
  std::vector<FrameAnnotation> frames;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct FrameDetections {
  int index = 0;
  std::vector<Detection> detections;
};

std::string annotations_to_json(const AnnotationSet& set);
AnnotationSet annotations_from_json(const std::string& text);
void save_annotations(const std::filesystem::path& path, const AnnotationSet& set);
AnnotationSet load_annotations(const std::filesystem::path& path);

/// JSON array of {"index", "detections": [{"box", "score", "class"}]} per frame.
std::string detections_to_json(const std::vector<FrameDetections>& frames);
std::vector<FrameDetections> detections_from_json(const std::string& text);

/// Boxes of a detections document keyed by frame, for dynamic-mask input.
std::vector<BBox> detection_boxes(const FrameDetections& frame);

std::string mask_to_json(const RegionMask& mask);
RegionMask mask_from_json(const std::string& text);

/// Binary PGM (P5). Each region becomes a `scale` x `scale` block, 0 or 255.
std::string mask_to_pgm(const RegionMask& mask, int scale = 1);
/// Heatmap rescaled linearly so the maximum count maps to 255.
std::string heatmap_to_pgm(const Heatmap& heatmap);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace maskvd
