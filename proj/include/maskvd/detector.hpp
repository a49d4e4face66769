#pragma once

#include <span>
#include <vector>

#include "maskvd/geometry.hpp"
#include "maskvd/mask_builder.hpp"
#include "maskvd/tensor.hpp"

namespace maskvd {

struct Detection {
  BBox box;
  double score = 0.0;
  int class_id = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int matches = 0;
  int num_detections = 0;
  int num_ground_truth = 0;
  double iou_threshold = 0.5;
};

enum class Connectivity { kFour, kEight };

/// Linear probe over backbone features: objectness is the logistic of one
/// projection, class is the argmax of a second. Active tokens are grouped
/// into connected components on the region grid, one detection each.
struct DetectorHead {
  GridSpec grid;
  RowVector objectness_weight;  // L
  double objectness_bias = 0.0;
  Matrix class_weight;  // L x C
  RowVector class_bias;  // C
  Connectivity connectivity = Connectivity::kFour;

  int num_classes() const { return static_cast<int>(class_bias.size()); }

  /// Per-token objectness in [0, 1].
  Eigen::VectorXd objectness(const Matrix& features) const;
  /// Per-token argmax class.
  std::vector<int> token_classes(const Matrix& features) const;

  std::vector<Detection> detect(const Matrix& features, double threshold = 0.5) const;
};

/// Components of `active` (row-major over grid) in order of their smallest
/// token index; tokens in each component are sorted.
std::vector<std::vector<int>> connected_components(const std::vector<std::uint8_t>& active,
                                                   const GridSpec& grid,
                                                   Connectivity connectivity);

/// Per-token labels derived from ground-truth boxes: a token is positive
/// when one box covers at least half of its region, and takes the class of
/// the box with the largest coverage.
struct TokenLabels {
  std::vector<std::uint8_t> positive;
  std::vector<int> classes;  // -1 where negative
};
TokenLabels token_labels(const FrameAnnotation& annotation, const GridSpec& grid);

/// Closed-form ridge least-squares fit of the head's two linear probes.
/// Objectness targets are +/-`logit_target`; class targets are one-hot +/-1
/// fitted over positive tokens only.
DetectorHead fit_head(std::span<const Matrix> features, std::span<const TokenLabels> labels,
                      const GridSpec& grid, int num_classes, double ridge = 1e-2,
                      double logit_target = 4.0);

double iou(const BBox& a, const BBox& b);

/// Greedy matching per frame in descending score order: each detection takes
/// the unmatched ground truth of highest IoU if that IoU reaches the threshold.
/// Precision is 0 without detections, recall is 0 without ground truth.
EvalResult evaluate(std::span<const std::vector<Detection>> detections,
                    std::span<const std::vector<BBox>> ground_truth,
                    double iou_threshold = 0.5);

}  // namespace maskvd
