#pragma once

#include <string>
#include <vector>

#include "maskvd/harness.hpp"

namespace maskvd {

/// Identifies a run in reports.
struct RunLabel {
  std::string dataset = "synthetic";
  std::string backbone = "windowed";
  std::string mask_mode = "combined";
  int period = 8;
  double static_keep = 0.3;
  std::uint64_t seed_scene = 0;
  std::uint64_t seed_model = 0;
};

/// Table-row summary of a run (or pooled runs).
struct RunSummary {
  RunLabel label;
  int num_tokens = 0;
  int num_frames = 0;
  double tokens_processed = 0.0;  // mean per frame
  double patch_keep_rate = 0.0;
  EvalResult eval;
  double gmacs = 0.0;  // mean per frame
  double buffer_mb = 0.0;
  double scatter_gather_ops = 0.0;  // mean per frame
  bool has_oracle = false;
  double mean_rel_frobenius_error = 0.0;
  double max_selected_abs_error = 0.0;
};

RunSummary summarize(const RunLabel& label, const std::vector<RunResult>& runs);

// CSV columns: dataset,backbone,mask,tokens_processed,patch_keep_rate,period,
// static_keep_rate,precision,recall,f1,gmacs,buffer_mb,scatter_gather_ops,
// and with the oracle on: rel_frobenius_error,selected_max_abs_error.
std::string csv_header(bool with_oracle);
std::string csv_row(const RunSummary& summary);

/// Full per-frame record of every sequence plus the summary, as JSON.
std::string run_to_json(const RunSummary& summary, const std::vector<RunResult>& runs);

/// Fixed-precision decimal, the number format of every CSV cell.
std::string format_number(double v, int digits = 6);

}  // namespace maskvd
