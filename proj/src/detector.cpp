#include "maskvd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace maskvd {

Eigen::VectorXd DetectorHead::objectness(const Matrix& features) const {
  if (features.cols() != objectness_weight.size()) {
    throw std::invalid_argument("feature width does not match the detector head");
  }
  Eigen::VectorXd logits = features * objectness_weight.transpose();
  return logits.unaryExpr([this](double z) { return 1.0 / (1.0 + std::exp(-(z + objectness_bias))); });
}

std::vector<int> DetectorHead::token_classes(const Matrix& features) const {
  std::vector<int> out(static_cast<std::size_t>(features.rows()), 0);
  if (num_classes() == 0) return out;
  Matrix logits = features * class_weight;
  logits.rowwise() += class_bias;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::vector<int>> connected_components(const std::vector<std::uint8_t>& active,
                                                   const GridSpec& grid,
                                                   Connectivity connectivity) {
  const int rows = grid.rows(), cols = grid.cols();
  std::vector<int> label(active.size(), -1);
  std::vector<std::vector<int>> comps;
  std::vector<int> stack;
  for (int seed = 0; seed < static_cast<int>(active.size()); ++seed) {
    if (!active[seed] || label[seed] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      comps[id].push_back(t);
      const int r = t / cols, c = t % cols;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (connectivity == Connectivity::kFour && dr != 0 && dc != 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
          const int n = nr * cols + nc;
          if (active[n] && label[n] < 0) {
            label[n] = id;
            stack.push_back(n);
          }
        }
      }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }
  return comps;
}

std::vector<Detection> DetectorHead::detect(const Matrix& features, double threshold) const {
  if (features.rows() != grid.tokens()) {
    throw std::invalid_argument("detector expects " + std::to_string(grid.tokens()) +
                                " token rows, got " + std::to_string(features.rows()));
  }
  const Eigen::VectorXd obj = objectness(features);
  std::vector<std::uint8_t> active(static_cast<std::size_t>(obj.size()));
  bool any = false;
  for (Eigen::Index i = 0; i < obj.size(); ++i) {
    active[static_cast<std::size_t>(i)] = obj[i] > threshold;
    any = any || active[static_cast<std::size_t>(i)];
  }
  if (!any) return {};

  const std::vector<int> cls = token_classes(features);
  const int s = grid.region_size();
  std::vector<Detection> out;
  for (const auto& comp : connected_components(active, grid, connectivity)) {
    int r0 = grid.rows(), r1 = -1, c0 = grid.cols(), c1 = -1;
    double score = 0.0;
    std::vector<int> votes(static_cast<std::size_t>(std::max(1, num_classes())), 0);
    for (int t : comp) {
      const int r = t / grid.cols(), c = t % grid.cols();
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
      score = std::max(score, obj[t]);
      ++votes[static_cast<std::size_t>(cls[static_cast<std::size_t>(t)])];
    }
    const int cls_id = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    out.push_back({BBox{c0 * s, r0 * s, (c1 + 1) * s, (r1 + 1) * s}, score, cls_id});
  }
  return out;
}

TokenLabels token_labels(const FrameAnnotation& annotation, const GridSpec& grid) {
  const int n = grid.tokens();
  const std::int64_t region_area = static_cast<std::int64_t>(grid.region_size()) * grid.region_size();
  TokenLabels out{std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0),
                  std::vector<int>(static_cast<std::size_t>(n), -1)};
  for (int t = 0; t < n; ++t) {
    const BBox region = grid.region_box(t);
    std::int64_t best = 0;
    for (std::size_t b = 0; b < annotation.boxes.size(); ++b) {
      const BBox& box = annotation.boxes[b];
      const std::int64_t w = std::max(0, std::min(box.x2, region.x2) - std::max(box.x1, region.x1));
      const std::int64_t h = std::max(0, std::min(box.y2, region.y2) - std::max(box.y1, region.y1));
      const std::int64_t cover = w * h;
      if (2 * cover >= region_area && cover > best) {
        best = cover;
        out.positive[static_cast<std::size_t>(t)] = 1;
        out.classes[static_cast<std::size_t>(t)] =
            annotation.classes.empty() ? 0 : annotation.classes[b];
      }
    }
  }
  return out;
}

namespace {

Eigen::VectorXd ridge_solve(const Matrix& x, const Matrix& y, double ridge, Matrix& weights) {
  // Augment with a bias column; the bias is not regularized.
  Matrix xa(x.rows(), x.cols() + 1);
  xa.leftCols(x.cols()) = x;
  xa.col(x.cols()).setOnes();
  Matrix gram = xa.transpose() * xa;
  for (Eigen::Index i = 0; i < x.cols(); ++i) gram(i, i) += ridge * static_cast<double>(x.rows());
  weights = gram.ldlt().solve(xa.transpose() * y);
  return weights.row(x.cols()).transpose();
}

}  // namespace

DetectorHead fit_head(std::span<const Matrix> features, std::span<const TokenLabels> labels,
                      const GridSpec& grid, int num_classes, double ridge, double logit_target) {
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("fit_head needs matching, non-empty feature and label lists");
  }
  const Eigen::Index dim = features.front().cols();
  Eigen::Index rows = 0, positives = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].rows() != grid.tokens() || features[i].cols() != dim) {
      throw std::invalid_argument("feature map shape mismatch in fit_head");
    }
    rows += features[i].rows();
    for (auto p : labels[i].positive) positives += p;
  }

  Matrix x(rows, dim), obj_target(rows, 1);
  Matrix xp(positives, dim), cls_target = Matrix::Constant(positives, std::max(1, num_classes), -1.0);
  Eigen::Index r = 0, p = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (Eigen::Index t = 0; t < features[i].rows(); ++t, ++r) {
      x.row(r) = features[i].row(t);
      const bool pos = labels[i].positive[static_cast<std::size_t>(t)] != 0;
      obj_target(r, 0) = pos ? logit_target : -logit_target;
      if (pos) {
        xp.row(p) = features[i].row(t);
        const int c = labels[i].classes[static_cast<std::size_t>(t)];
        if (c < 0 || c >= std::max(1, num_classes)) throw std::out_of_range("token class out of range");
        cls_target(p, c) = 1.0;
        ++p;
      }
    }
  }

  DetectorHead head;
  head.grid = grid;
  Matrix w;
  const Eigen::VectorXd obj_bias = ridge_solve(x, obj_target, ridge, w);
  head.objectness_weight = w.topRows(dim).col(0).transpose();
  head.objectness_bias = obj_bias[0];

  if (num_classes > 0 && positives > 0) {
    const Eigen::VectorXd cls_bias = ridge_solve(xp, cls_target, ridge, w);
    head.class_weight = w.topRows(dim);
    head.class_bias = cls_bias.transpose();
  } else {
    head.class_weight = Matrix::Zero(dim, std::max(1, num_classes));
    head.class_bias = RowVector::Zero(std::max(1, num_classes));
  }
  return head;
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t w = std::max(0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const std::int64_t h = std::max(0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const std::int64_t inter = w * h;
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

EvalResult evaluate(std::span<const std::vector<Detection>> detections,
                    std::span<const std::vector<BBox>> ground_truth, double iou_threshold) {
  if (detections.size() != ground_truth.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(detections.size()) +
                                " detection frames vs " + std::to_string(ground_truth.size()) +
                                " ground-truth frames");
  }
  EvalResult res;
  res.iou_threshold = iou_threshold;
  for (std::size_t f = 0; f < detections.size(); ++f) {
    const auto& dets = detections[f];
    const auto& gts = ground_truth[f];
    res.num_detections += static_cast<int>(dets.size());
    res.num_ground_truth += static_cast<int>(gts.size());

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> taken(gts.size(), false);
    for (std::size_t di : order) {
      int best = -1;
      double best_iou = iou_threshold;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g]) continue;
        const double v = iou(dets[di].box, gts[g]);
        if (v >= best_iou && (best < 0 || v > best_iou)) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
      if (best >= 0) {
        taken[static_cast<std::size_t>(best)] = true;
        ++res.matches;
      }
    }
  }
  res.precision = res.num_detections > 0 ? static_cast<double>(res.matches) / res.num_detections : 0.0;
  res.recall = res.num_ground_truth > 0 ? static_cast<double>(res.matches) / res.num_ground_truth : 0.0;
  res.f1 = res.precision + res.recall > 0
               ? 2.0 * res.precision * res.recall / (res.precision + res.recall)
               : 0.0;
  return res;
}

}  // namespace maskvd
