#include "maskvd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace maskvd {

const char* to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::kCombined: return "combined";
    case MaskMode::kStaticOnly: return "static";
    case MaskMode::kDynamicOnly: return "dynamic";
  }
  return "unknown";
}

std::vector<std::vector<Detection>> RunResult::detections() const {
  std::vector<std::vector<Detection>> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.detections);
  return out;
}

int RunResult::dense_frames() const {
  return static_cast<int>(std::count_if(frames.begin(), frames.end(),
                                        [](const FrameRecord& f) { return f.kind == FrameKind::kFull; }));
}

double RunResult::mean_tokens_processed() const {
  if (frames.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : frames) s += f.cost.tokens_processed;
  return s / static_cast<double>(frames.size());
}

double RunResult::mean_gmacs() const {
  if (frames.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : frames) s += f.cost.backbone_gmacs;
  return s / static_cast<double>(frames.size());
}

double RunResult::mean_scatter_gather_ops() const {
  if (frames.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : frames) s += f.cost.scatter_gather_ops;
  return s / static_cast<double>(frames.size());
}

double RunResult::mean_masked_keep_rate() const {
  double s = 0.0;
  int n = 0;
  for (const auto& f : frames) {
    if (f.kind != FrameKind::kMasked) continue;
    s += static_cast<double>(f.keep_count) / num_tokens;
    ++n;
  }
  return n == 0 ? 1.0 : s / n;
}

RegionMask build_static_mask(std::span<const FrameAnnotation> training, const GridSpec& grid,
                             double keep) {
  const Heatmap heat = accumulate_heatmap(training, grid);
  return static_mask(region_scores(heat, grid), keep, grid);
}

std::vector<Frame> pad_frames(std::span<const Frame> frames, int region_size) {
  std::vector<Frame> out;
  out.reserve(frames.size());
  for (const Frame& f : frames) out.push_back(pad_to_region_multiple(f, region_size));
  return out;
}

namespace {

double relative_frobenius(const Matrix& got, const Matrix& ref) {
  const double denom = ref.norm();
  const double num = (got - ref).norm();
  return denom > 0.0 ? num / denom : num;
}

double selected_max_abs(const Matrix& got, const Matrix& ref, const RegionMask& mask) {
  double m = 0.0;
  for (int t : mask.locations()) m = std::max(m, (got.row(t) - ref.row(t)).cwiseAbs().maxCoeff());
  return m;
}

std::vector<BBox> detection_boxes_of(const std::vector<Detection>& dets) {
  std::vector<BBox> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back(d.box);
  return out;
}

}  // namespace

RunResult run_sequence(std::span<const Frame> frames, std::span<const FrameAnnotation> training,
                       const VitModel& model, const DetectorHead& head, const RunOptions& options,
                       std::span<const FrameAnnotation> ground_truth) {
  if (frames.empty()) throw std::invalid_argument("run_sequence needs at least one frame");
  if (!ground_truth.empty() && ground_truth.size() != frames.size()) {
    throw std::invalid_argument("ground truth does not cover every frame");
  }
  options.schedule.validate();
  const GridSpec& grid = model.config.grid;
  const double static_keep = options.mode == MaskMode::kDynamicOnly ? 0.0 : options.schedule.static_keep;
  const RegionMask fixed = build_static_mask(training, grid, static_keep);

  RunResult result;
  result.num_tokens = grid.tokens();
  result.has_oracle = options.oracle;
  ReferenceState state;
  ReferenceState oracle_state;
  std::vector<Detection> previous;

  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame frame = pad_to_region_multiple(frames[t], grid.region_size());
    FrameRecord rec;
    rec.index = static_cast<int>(t);
    rec.kind = schedule_frame(static_cast<std::int64_t>(t), options.schedule);
    OpTrace trace;
    Matrix features;
    RegionMask mask(grid, true);
    if (rec.kind == FrameKind::kFull) {
      features = forward_dense(frame, model, state, static_cast<std::int64_t>(t), &trace);
    } else {
      const std::vector<BBox> boxes = detection_boxes_of(previous);
      const RegionMask moving = options.mode == MaskMode::kStaticOnly
                                    ? RegionMask(grid)
                                    : dynamic_mask(boxes, grid, options.schedule.dilation);
      mask = combined_mask(fixed, moving);
      features = forward_masked(frame, mask, model, state, &trace);
    }
    rec.cost = measure_run(trace);
    rec.keep_count = mask.keep_count();
    rec.detections = head.detect(features, options.detect_threshold);

    if (options.oracle) {
      const Matrix dense = forward_dense(frame, model, oracle_state, static_cast<std::int64_t>(t));
      rec.rel_frobenius_error = relative_frobenius(features, dense);
      rec.selected_max_abs_error = selected_max_abs(features, dense, mask);
    }
    previous = rec.detections;
    result.frames.push_back(std::move(rec));
  }

  if (!ground_truth.empty()) {
    const auto dets = result.detections();
    const auto gts = boxes_of(ground_truth);
    result.eval = evaluate(dets, gts, 0.5);
  }
  return result;
}

OracleResult run_oracle(std::span<const Frame> frames, const VitModel& model,
                        const DetectorHead& head, double detect_threshold) {
  OracleResult out;
  ReferenceState state;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame frame = pad_to_region_multiple(frames[t], model.config.grid.region_size());
    out.features.push_back(forward_dense(frame, model, state, static_cast<std::int64_t>(t)));
    out.detections.push_back(head.detect(out.features.back(), detect_threshold));
  }
  return out;
}

AblationResult ablate_masks(std::span<const Frame> frames, std::span<const FrameAnnotation> training,
                            const VitModel& model, const DetectorHead& head,
                            const RunOptions& options,
                            std::span<const FrameAnnotation> ground_truth) {
  AblationResult out;
  RunOptions opt = options;
  opt.mode = MaskMode::kCombined;
  out.combined = run_sequence(frames, training, model, head, opt, ground_truth);

  out.static_only_keep = std::max(options.schedule.static_keep, out.combined.mean_masked_keep_rate());
  out.static_only_keep = std::min(1.0, out.static_only_keep);
  opt.mode = MaskMode::kStaticOnly;
  opt.schedule.static_keep = out.static_only_keep;
  out.static_only = run_sequence(frames, training, model, head, opt, ground_truth);

  opt = options;
  opt.mode = MaskMode::kDynamicOnly;
  out.dynamic_only = run_sequence(frames, training, model, head, opt, ground_truth);
  return out;
}

DetectorHead calibrate_head(const VitModel& model, std::span<const GeneratedVideo> training,
                            int num_classes) {
  if (training.empty()) throw std::invalid_argument("calibration needs at least one training video");
  const GridSpec& grid = model.config.grid;
  std::vector<Matrix> features;
  std::vector<TokenLabels> labels;
  for (const auto& video : training) {
    ReferenceState state;
    const Frame frame = pad_to_region_multiple(video.frames.front(), grid.region_size());
    features.push_back(forward_dense(frame, model, state));
    labels.push_back(token_labels(video.annotations.frames.front(), grid));
  }
  return fit_head(features, labels, grid, num_classes);
}

EvalResult pool(std::span<const EvalResult> results) {
  EvalResult out;
  for (const auto& r : results) {
    out.matches += r.matches;
    out.num_detections += r.num_detections;
    out.num_ground_truth += r.num_ground_truth;
    out.iou_threshold = r.iou_threshold;
  }
  out.precision = out.num_detections > 0 ? static_cast<double>(out.matches) / out.num_detections : 0.0;
  out.recall = out.num_ground_truth > 0 ? static_cast<double>(out.matches) / out.num_ground_truth : 0.0;
  out.f1 = out.precision + out.recall > 0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

std::vector<std::vector<BBox>> boxes_of(std::span<const FrameAnnotation> annotations) {
  std::vector<std::vector<BBox>> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) out.push_back(a.boxes);
  return out;
}

}  // namespace maskvd
