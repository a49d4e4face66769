#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskvd/harness.hpp"
#include "maskvd/report.hpp"

namespace maskvd {

/// Everything a reproducible experiment depends on. Defaults are the
/// ViT-B reference setup; `toy_config()` is the 8x8-grid variant.
struct RunConfig {
  std::string backbone = "windowed";  // windowed | global
  int period = 8;
  double static_keep = 0.3;
  int region_size = 16;
  int dilation = 0;
  std::string mask = "combined";  // combined | static | dynamic

  int embed_dim = 768;
  int num_heads = 12;
  int num_blocks = 12;
  int window_side = 14;
  int ffn_hidden = 3072;
  std::vector<int> global_blocks{3, 6, 9, 12};  // 1-based, windowed backbone only
  int height = 672;
  int width = 672;

  int frames = 32;
  int sequences = 10;
  int training_sequences = 40;
  int num_classes = 3;
  bool moving_camera = false;
  double detect_threshold = 0.5;

  std::uint64_t seed_scene = 1;
  std::uint64_t seed_model = 1;
  bool oracle = false;
  bool toy = false;

  std::string out = ".";
  std::string input;        // directory written by `gen`; empty = generate
  std::string annotations;  // annotation file for `mask`; empty = training suite

  std::vector<int> tokens;          // cost table rows
  std::vector<double> keep_rates;   // cost table rows, as fractions of N

  static RunConfig reference();
  static RunConfig toy_config();

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Overwrites the fields present in a JSON object whose keys are the
/// RunConfig field names. Throws DataError on malformed text, unknown keys
/// or mistyped values.
void apply_config_json(RunConfig& config, const std::string& text);

ModelConfig model_config(const RunConfig& config);
MaskMode parse_mask_mode(const std::string& name);
RunLabel run_label(const RunConfig& config, const std::string& mask_mode);

struct Experiment {
  RunConfig config;
  VitModel model;
  std::vector<GeneratedVideo> training;
  std::vector<FrameAnnotation> training_annotations;
  std::vector<GeneratedVideo> sequences;
  DetectorHead head;
};

/// Builds the model, the training suite and calibrated head, and the
/// evaluation sequences (generated, or read from `config.input`).
Experiment prepare_experiment(const RunConfig& config);

/// Frames and annotations as `gen` writes them, `count` of each.
std::string sequence_frames_name(int index);
std::string sequence_annotations_name(int index);
std::vector<GeneratedVideo> load_sequences(const std::string& directory);

struct ExperimentRun {
  RunSummary summary;
  std::vector<RunResult> runs;
};

ExperimentRun run_experiment(const Experiment& experiment, MaskMode mode, int period);
ExperimentRun run_experiment(const Experiment& experiment);

struct AblationTable {
  ExperimentRun dense;  // every frame full
  ExperimentRun combined;
  ExperimentRun static_only;  // padded to the combined keep rate
  ExperimentRun dynamic_only;
};

AblationTable ablate_experiment(const Experiment& experiment);

// Cost table columns: backbone,row,tokens_kept,patch_keep_rate,gmacs,
// block_reference_mb,output_buffer_mb,total_buffer_mb,eventful_mb,
// scatter_gather_ops. The first row is the dense pass.
std::string cost_table_csv(const RunConfig& config);

}  // namespace maskvd
