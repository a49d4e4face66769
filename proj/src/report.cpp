#include "maskvd/report.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

namespace maskvd {

using nlohmann::json;

namespace {

json eval_json(const EvalResult& e) {
  return {{"precision", e.precision},   {"recall", e.recall},
          {"f1", e.f1},                 {"matches", e.matches},
          {"detections", e.num_detections}, {"ground_truth", e.num_ground_truth},
          {"iou_threshold", e.iou_threshold}};
}

}  // namespace

std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

RunSummary summarize(const RunLabel& label, const std::vector<RunResult>& runs) {
  RunSummary s;
  s.label = label;
  std::vector<EvalResult> evals;
  double tokens = 0.0, gmacs = 0.0, ops = 0.0, frob = 0.0;
  std::uint64_t buffer = 0;
  for (const auto& run : runs) {
    s.num_tokens = run.num_tokens;
    s.has_oracle = run.has_oracle;
    evals.push_back(run.eval);
    for (const auto& f : run.frames) {
      ++s.num_frames;
      tokens += f.cost.tokens_processed;
      gmacs += f.cost.backbone_gmacs;
      ops += f.cost.scatter_gather_ops;
      buffer = std::max(buffer, f.cost.buffer_bytes);
      frob += f.rel_frobenius_error;
      s.max_selected_abs_error = std::max(s.max_selected_abs_error, f.selected_max_abs_error);
    }
  }
  s.eval = pool(evals);
  if (s.num_frames > 0) {
    s.tokens_processed = tokens / s.num_frames;
    s.gmacs = gmacs / s.num_frames;
    s.scatter_gather_ops = ops / s.num_frames;
    s.mean_rel_frobenius_error = frob / s.num_frames;
  }
  s.patch_keep_rate = s.num_tokens > 0 ? s.tokens_processed / s.num_tokens : 0.0;
  s.buffer_mb = to_megabytes(buffer);
  return s;
}

std::string csv_header(bool with_oracle) {
  std::string h =
      "dataset,backbone,mask,tokens_processed,patch_keep_rate,period,static_keep_rate,"
      "precision,recall,f1,gmacs,buffer_mb,scatter_gather_ops";
  if (with_oracle) h += ",rel_frobenius_error,selected_max_abs_error";
  return h + "\n";
}

std::string csv_row(const RunSummary& s) {
  const RunLabel& l = s.label;
  std::string row = l.dataset + "," + l.backbone + "," + l.mask_mode + "," +
                    format_number(s.tokens_processed, 2) + "," + format_number(s.patch_keep_rate, 4) +
                    "," + std::to_string(l.period) + "," + format_number(l.static_keep, 3) + "," +
                    format_number(s.eval.precision, 4) + "," + format_number(s.eval.recall, 4) + "," +
                    format_number(s.eval.f1, 4) + "," + format_number(s.gmacs, 6) + "," +
                    format_number(s.buffer_mb, 3) + "," + format_number(s.scatter_gather_ops, 3);
  if (s.has_oracle) {
    row += "," + format_number(s.mean_rel_frobenius_error, 8) + "," +
           format_number(s.max_selected_abs_error, 8);
  }
  return row + "\n";
}

std::string run_to_json(const RunSummary& s, const std::vector<RunResult>& runs) {
  json seqs = json::array();
  for (const auto& run : runs) {
    json frames = json::array();
    for (const auto& f : run.frames) {
      json dets = json::array();
      for (const auto& d : f.detections) {
        dets.push_back({{"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}},
                        {"score", d.score},
                        {"class", d.class_id}});
      }
      json jf = {{"index", f.index},
                 {"kind", f.kind == FrameKind::kFull ? "full" : "masked"},
                 {"keep_count", f.keep_count},
                 {"tokens_processed", f.cost.tokens_processed},
                 {"macs", f.cost.macs},
                 {"gmacs", f.cost.backbone_gmacs},
                 {"scatter_gather_ops", f.cost.scatter_gather_ops},
                 {"buffer_bytes", f.cost.buffer_bytes},
                 {"detections", dets}};
      if (run.has_oracle) {
        jf["rel_frobenius_error"] = f.rel_frobenius_error;
        jf["selected_max_abs_error"] = f.selected_max_abs_error;
      }
      frames.push_back(std::move(jf));
    }
    seqs.push_back({{"eval", eval_json(run.eval)}, {"frames", frames}});
  }
  const RunLabel& l = s.label;
  json doc = {
      {"header",
       {{"dataset", l.dataset},
        {"backbone", l.backbone},
        {"mask", l.mask_mode},
        {"period", l.period},
        {"static_keep_rate", l.static_keep},
        {"seed_scene", l.seed_scene},
        {"seed_model", l.seed_model}}},
      {"summary",
       {{"frames", s.num_frames},
        {"tokens", s.num_tokens},
        {"tokens_processed", s.tokens_processed},
        {"patch_keep_rate", s.patch_keep_rate},
        {"gmacs", s.gmacs},
        {"buffer_mb", s.buffer_mb},
        {"scatter_gather_ops", s.scatter_gather_ops},
        {"eval", eval_json(s.eval)}}},
      {"sequences", seqs}};
  if (s.has_oracle) {
    doc["summary"]["mean_rel_frobenius_error"] = s.mean_rel_frobenius_error;
    doc["summary"]["max_selected_abs_error"] = s.max_selected_abs_error;
  }
  return doc.dump(1) + "\n";
}

}  // namespace maskvd
