#include "maskvd/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>

namespace maskvd {

using nlohmann::json;

RunConfig RunConfig::reference() { return RunConfig{}; }

RunConfig RunConfig::toy_config() {
  RunConfig c;
  c.toy = true;
  c.embed_dim = 64;
  c.num_heads = 4;
  c.num_blocks = 4;
  c.window_side = 4;
  c.ffn_hidden = 256;
  c.global_blocks = {2, 4};
  c.height = 128;
  c.width = 128;
  return c;
}

void RunConfig::validate() const {
  if (backbone != "windowed" && backbone != "global") {
    throw std::invalid_argument("backbone must be windowed or global, got '" + backbone + "'");
  }
  parse_mask_mode(mask);
  MaskSchedule{period, static_keep, dilation}.validate();
  if (region_size < 1) throw std::invalid_argument("region_size must be >= 1");
  if (frames < 1) throw std::invalid_argument("num_frames must be ≥ 1");
  if (sequences < 1) throw std::invalid_argument("sequences must be >= 1");
  if (training_sequences < 1) throw std::invalid_argument("training_sequences must be >= 1");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (!(detect_threshold > 0.0 && detect_threshold < 1.0)) {
    throw std::invalid_argument("detect_threshold must lie in (0, 1)");
  }
  for (double k : keep_rates) {
    if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("keep rates must lie in (0, 1]");
  }
  model_config(*this).validate();
}

namespace {

template <typename T>
void read_field(const json& doc, const char* key, T& field) {
  try {
    field = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

void apply_config_json(RunConfig& c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const char* k = key.c_str();
    if (key == "backbone") read_field(doc, k, c.backbone);
    else if (key == "period") read_field(doc, k, c.period);
    else if (key == "static_keep") read_field(doc, k, c.static_keep);
    else if (key == "region_size") read_field(doc, k, c.region_size);
    else if (key == "dilation") read_field(doc, k, c.dilation);
    else if (key == "mask") read_field(doc, k, c.mask);
    else if (key == "embed_dim") read_field(doc, k, c.embed_dim);
    else if (key == "num_heads") read_field(doc, k, c.num_heads);
    else if (key == "num_blocks") read_field(doc, k, c.num_blocks);
    else if (key == "window_side") read_field(doc, k, c.window_side);
    else if (key == "ffn_hidden") read_field(doc, k, c.ffn_hidden);
    else if (key == "global_blocks") read_field(doc, k, c.global_blocks);
    else if (key == "height") read_field(doc, k, c.height);
    else if (key == "width") read_field(doc, k, c.width);
    else if (key == "frames") read_field(doc, k, c.frames);
    else if (key == "sequences") read_field(doc, k, c.sequences);
    else if (key == "training_sequences") read_field(doc, k, c.training_sequences);
    else if (key == "num_classes") read_field(doc, k, c.num_classes);
    else if (key == "moving_camera") read_field(doc, k, c.moving_camera);
    else if (key == "detect_threshold") read_field(doc, k, c.detect_threshold);
    else if (key == "seed_scene") read_field(doc, k, c.seed_scene);
    else if (key == "seed_model") read_field(doc, k, c.seed_model);
    else if (key == "oracle") read_field(doc, k, c.oracle);
    else if (key == "toy") read_field(doc, k, c.toy);
    else if (key == "out") read_field(doc, k, c.out);
    else if (key == "input") read_field(doc, k, c.input);
    else if (key == "annotations") read_field(doc, k, c.annotations);
    else if (key == "tokens") read_field(doc, k, c.tokens);
    else if (key == "keep_rates") read_field(doc, k, c.keep_rates);
    else throw DataError("config: unknown field '" + key + "'");
  }
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.embed_dim = c.embed_dim;
  m.num_heads = c.num_heads;
  m.num_blocks = c.num_blocks;
  m.window_side = c.window_side;
  m.ffn_hidden = c.ffn_hidden;
  m.grid = GridSpec::padded(c.height, c.width, c.region_size);
  m.seed = c.seed_model;
  if (c.backbone == "global") {
    m.global_blocks.clear();
    for (int b = 1; b <= c.num_blocks; ++b) m.global_blocks.push_back(b);
  } else {
    m.global_blocks = c.global_blocks;
  }
  return m;
}

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "combined") return MaskMode::kCombined;
  if (name == "static") return MaskMode::kStaticOnly;
  if (name == "dynamic") return MaskMode::kDynamicOnly;
  throw std::invalid_argument("mask must be combined, static or dynamic, got '" + name + "'");
}

RunLabel run_label(const RunConfig& c, const std::string& mask_mode) {
  RunLabel l;
  l.dataset = c.input.empty() ? "synthetic" : "input";
  l.backbone = c.backbone;
  l.mask_mode = mask_mode;
  l.period = c.period;
  l.static_keep = c.static_keep;
  l.seed_scene = c.seed_scene;
  l.seed_model = c.seed_model;
  return l;
}

std::string sequence_frames_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames_%03d.mvdf", index);
  return buf;
}

std::string sequence_annotations_name(int index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "annotations_%03d.json", index);
  return buf;
}

std::vector<GeneratedVideo> load_sequences(const std::string& directory) {
  namespace fs = std::filesystem;
  std::vector<GeneratedVideo> out;
  for (int i = 0;; ++i) {
    const fs::path frames = fs::path(directory) / sequence_frames_name(i);
    const fs::path annotations = fs::path(directory) / sequence_annotations_name(i);
    if (!fs::exists(frames)) break;
    GeneratedVideo v;
    v.frames = load_frames(frames);
    v.annotations = load_annotations(annotations);
    if (v.frames.size() != v.annotations.frames.size()) {
      throw DataError(annotations.string() + ": " + std::to_string(v.annotations.frames.size()) +
                      " annotated frames for " + std::to_string(v.frames.size()) + " frames");
    }
    out.push_back(std::move(v));
  }
  if (out.empty()) throw DataError("no " + sequence_frames_name(0) + " in " + directory);
  return out;
}

Experiment prepare_experiment(const RunConfig& config) {
  config.validate();
  Experiment e;
  e.config = config;
  e.model = VitModel::random(model_config(config));
  SceneParams params = scene_params_for(config.height, config.width);
  params.num_frames = config.frames;
  params.num_classes = config.num_classes;
  params.moving_camera = config.moving_camera;
  e.training = generate_suite(params, config.training_sequences, training_seed(config.seed_scene));
  for (const auto& v : e.training) {
    for (const auto& f : v.annotations.frames) e.training_annotations.push_back(f);
  }
  e.sequences = config.input.empty() ? generate_suite(params, config.sequences, config.seed_scene)
                                     : load_sequences(config.input);
  for (const auto& v : e.sequences) {
    if (v.annotations.frame_height != config.height || v.annotations.frame_width != config.width) {
      throw DataError("input frames are " + std::to_string(v.annotations.frame_width) + "x" +
                      std::to_string(v.annotations.frame_height) + ", configured " +
                      std::to_string(config.width) + "x" + std::to_string(config.height));
    }
  }
  e.head = calibrate_head(e.model, e.training, config.num_classes);
  return e;
}

ExperimentRun run_experiment(const Experiment& e, MaskMode mode, int period) {
  RunOptions options;
  options.schedule = {period, e.config.static_keep, e.config.dilation};
  options.mode = mode;
  options.detect_threshold = e.config.detect_threshold;
  options.oracle = e.config.oracle;
  ExperimentRun out;
  for (const auto& v : e.sequences) {
    out.runs.push_back(run_sequence(v.frames, e.training_annotations, e.model, e.head, options,
                                    v.annotations.frames));
  }
  RunConfig labelled = e.config;
  labelled.period = period;
  out.summary = summarize(run_label(labelled, to_string(mode)), out.runs);
  return out;
}

ExperimentRun run_experiment(const Experiment& e) {
  return run_experiment(e, parse_mask_mode(e.config.mask), e.config.period);
}

AblationTable ablate_experiment(const Experiment& e) {
  AblationTable t;
  RunOptions options;
  options.schedule = {e.config.period, e.config.static_keep, e.config.dilation};
  options.detect_threshold = e.config.detect_threshold;
  options.oracle = e.config.oracle;
  double static_keep = 0.0;
  for (const auto& v : e.sequences) {
    AblationResult r = ablate_masks(v.frames, e.training_annotations, e.model, e.head, options,
                                    v.annotations.frames);
    t.combined.runs.push_back(std::move(r.combined));
    t.static_only.runs.push_back(std::move(r.static_only));
    t.dynamic_only.runs.push_back(std::move(r.dynamic_only));
    static_keep += r.static_only_keep;
  }
  t.dense = run_experiment(e, MaskMode::kCombined, 1);
  t.dense.summary.label.mask_mode = "dense";
  t.combined.summary = summarize(run_label(e.config, "combined"), t.combined.runs);
  RunLabel static_label = run_label(e.config, "static");
  static_label.static_keep = static_keep / static_cast<double>(e.sequences.size());
  t.static_only.summary = summarize(static_label, t.static_only.runs);
  RunLabel dynamic_label = run_label(e.config, "dynamic");
  dynamic_label.static_keep = 0.0;
  t.dynamic_only.summary = summarize(dynamic_label, t.dynamic_only.runs);
  return t;
}

std::string cost_table_csv(const RunConfig& config) {
  config.validate();
  const ModelConfig m = model_config(config);
  const int n = m.tokens();
  std::vector<int> rows = config.tokens;
  for (double k : config.keep_rates) rows.push_back(static_cast<int>(std::floor(k * n)));
  for (int t : rows) {
    if (t < 1 || t > n) {
      throw std::invalid_argument("tokens_kept " + std::to_string(t) + " outside 1.." +
                                  std::to_string(n));
    }
  }
  const double output_mb = to_megabytes(token_buffer_bytes(m));
  const double block_mb = to_megabytes(token_buffer_bytes(m) * static_cast<std::uint64_t>(m.num_windowed()));
  const double total_mb = to_megabytes(memory_maskvd(m));
  const double eventful_mb = to_megabytes(memory_eventful(m));
  std::string csv =
      "backbone,row,tokens_kept,patch_keep_rate,gmacs,block_reference_mb,output_buffer_mb,"
      "total_buffer_mb,eventful_mb,scatter_gather_ops\n";
  const auto line = [&](const char* row, int t, double gmacs, int ops) {
    csv += config.backbone + "," + row + "," + std::to_string(t) + "," +
           format_number(static_cast<double>(t) / n, 4) + "," + format_number(gmacs, 4) + "," +
           format_number(block_mb, 3) + "," + format_number(output_mb, 3) + "," +
           format_number(total_mb, 3) + "," + format_number(eventful_mb, 3) + "," +
           std::to_string(ops) + "\n";
  };
  line("dense", n, flops_dense(m), 0);
  for (int t : rows) line("masked", t, flops_masked(m, t), masked_scatter_gather_ops(m));
  return csv;
}

}  // namespace maskvd
