#pragma once

#include <span>
#include <vector>

#include "maskvd/annotations.hpp"
#include "maskvd/cost_model.hpp"
#include "maskvd/detector.hpp"
#include "maskvd/mask_builder.hpp"
#include "maskvd/synthetic.hpp"
#include "maskvd/toy_vit.hpp"

namespace maskvd {

enum class MaskMode { kCombined, kStaticOnly, kDynamicOnly };

const char* to_string(MaskMode mode);

struct RunOptions {
  MaskSchedule schedule;
  MaskMode mode = MaskMode::kCombined;
  double detect_threshold = 0.5;
  bool oracle = false;
};

struct FrameRecord {
  int index = 0;
  FrameKind kind = FrameKind::kFull;
  std::vector<Detection> detections;
  CostReport cost;
  int keep_count = 0;
  // Filled when the dense oracle runs alongside.
  double rel_frobenius_error = 0.0;
  double selected_max_abs_error = 0.0;
};

struct RunResult {
  std::vector<FrameRecord> frames;
  EvalResult eval;
  bool has_oracle = false;
  int num_tokens = 0;

  std::vector<std::vector<Detection>> detections() const;
  int dense_frames() const;
  /// Means over every frame, dense frames included.
  double mean_tokens_processed() const;
  double mean_gmacs() const;
  double mean_scatter_gather_ops() const;
  /// Mean keep rate over masked frames only; 1 when there are none.
  double mean_masked_keep_rate() const;
};

/// Static region mask from training annotations at keep rate `keep`.
RegionMask build_static_mask(std::span<const FrameAnnotation> training, const GridSpec& grid,
                             double keep);

/// Streams `frames` through the backbone: full frames on the schedule,
/// masked frames otherwise, with the dynamic mask taken from the previous
/// frame's detections. `ground_truth` (parallel to frames, may be empty)
/// feeds the evaluation.
RunResult run_sequence(std::span<const Frame> frames, std::span<const FrameAnnotation> training,
                       const VitModel& model, const DetectorHead& head, const RunOptions& options,
                       std::span<const FrameAnnotation> ground_truth = {});

struct OracleResult {
  std::vector<Matrix> features;
  std::vector<std::vector<Detection>> detections;
};

/// Every frame through forward_dense with freshly refreshed references.
OracleResult run_oracle(std::span<const Frame> frames, const VitModel& model,
                        const DetectorHead& head, double detect_threshold = 0.5);

struct AblationResult {
  RunResult combined;
  RunResult static_only;
  RunResult dynamic_only;
  double static_only_keep = 0.0;  // k_s used for the static-only run
};

/// Static-only runs at the combined run's masked keep rate (never below
/// the configured k_s); dynamic-only runs with k_s = 0.
AblationResult ablate_masks(std::span<const Frame> frames, std::span<const FrameAnnotation> training,
                            const VitModel& model, const DetectorHead& head,
                            const RunOptions& options,
                            std::span<const FrameAnnotation> ground_truth = {});

/// Fits the detector probe on frame 0 of each training video.
DetectorHead calibrate_head(const VitModel& model, std::span<const GeneratedVideo> training,
                            int num_classes);

/// Pools matches, detections and ground truth over several evaluations.
EvalResult pool(std::span<const EvalResult> results);

std::vector<std::vector<BBox>> boxes_of(std::span<const FrameAnnotation> annotations);

/// Pads every frame so both sides are multiples of the region size.
std::vector<Frame> pad_frames(std::span<const Frame> frames, int region_size);

}  // namespace maskvd
