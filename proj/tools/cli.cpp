#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>

#include "maskvd/annotations.hpp"
#include "maskvd/experiment.hpp"
#include "maskvd/frame.hpp"

namespace maskvd::cli {

namespace fs = std::filesystem;

namespace {

// Options whose values land in RunConfig only when given on the command line.
class FlagSet {
 public:
  explicit FlagSet(CLI::App& app) : app_(app) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T RunConfig::*field, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_.add_option(name, *value, help);
    appliers_.push_back([opt, value, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool RunConfig::*field, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_.add_flag(name, *value, help);
    appliers_.push_back([opt, value, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& f : appliers_) f(c);
  }

 private:
  CLI::App& app_;
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_reported(std::ostream& out, const fs::path& path, const std::string& contents) {
  write_text_file(path, contents);
  out << "wrote " << path.string() << " fnv1a64=" << hex64(fnv1a64(contents)) << "\n";
}

void print_seeds(std::ostream& out, const RunConfig& c) {
  out << "# seed_scene=" << c.seed_scene << " seed_model=" << c.seed_model << "\n";
}

SceneParams scene_of(const RunConfig& c) {
  SceneParams p = scene_params_for(c.height, c.width);
  p.num_frames = c.frames;
  p.num_classes = c.num_classes;
  p.moving_camera = c.moving_camera;
  return p;
}

AnnotationSet merged_annotations(const std::vector<GeneratedVideo>& videos) {
  AnnotationSet set;
  for (const auto& v : videos) {
    set.frame_height = v.annotations.frame_height;
    set.frame_width = v.annotations.frame_width;
    for (FrameAnnotation f : v.annotations.frames) {
      f.index = static_cast<int>(set.frames.size());
      set.frames.push_back(std::move(f));
    }
  }
  return set;
}

int cmd_gen(const RunConfig& c, std::ostream& out) {
  c.validate();
  const fs::path dir(c.out);
  fs::create_directories(dir);
  print_seeds(out, c);
  const SceneParams params = scene_of(c);
  const auto videos = generate_suite(params, c.sequences, c.seed_scene);
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const int idx = static_cast<int>(i);
    write_reported(out, dir / sequence_frames_name(idx), encode_frames(videos[i].frames));
    write_reported(out, dir / sequence_annotations_name(idx),
                   annotations_to_json(videos[i].annotations));
  }
  const auto training = generate_suite(params, c.training_sequences, training_seed(c.seed_scene));
  write_reported(out, dir / "training_annotations.json",
                 annotations_to_json(merged_annotations(training)));
  return kExitOk;
}

int cmd_mask(const RunConfig& c, std::ostream& out) {
  c.validate();
  AnnotationSet set;
  if (c.annotations.empty()) {
    set = merged_annotations(generate_suite(scene_of(c), c.training_sequences, training_seed(c.seed_scene)));
  } else {
    set = load_annotations(c.annotations);
  }
  const GridSpec grid = GridSpec::padded(set.frame_height, set.frame_width, c.region_size);
  const Heatmap heat = accumulate_heatmap(set.frames, grid);
  const RegionMask mask = static_mask(region_scores(heat, grid), c.static_keep, grid);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  print_seeds(out, c);
  write_reported(out, dir / "static_mask.json", mask_to_json(mask));
  write_reported(out, dir / "static_mask.pgm", mask_to_pgm(mask, c.region_size));
  write_reported(out, dir / "heatmap.pgm", heatmap_to_pgm(heat));
  out << "keep_count=" << mask.keep_count() << " of " << grid.tokens() << "\n";
  return kExitOk;
}

int cmd_run(const RunConfig& c, std::ostream& out) {
  const Experiment e = prepare_experiment(c);
  const ExperimentRun r = run_experiment(e);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  print_seeds(out, c);
  const std::string csv = csv_header(c.oracle) + csv_row(r.summary);
  write_reported(out, dir / "run.json", run_to_json(r.summary, r.runs));
  write_reported(out, dir / "run.csv", csv);
  out << csv;
  return kExitOk;
}

int cmd_ablate(const RunConfig& c, std::ostream& out) {
  const Experiment e = prepare_experiment(c);
  const AblationTable t = ablate_experiment(e);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  print_seeds(out, c);
  const std::string csv = csv_header(c.oracle) + csv_row(t.dense.summary) +
                          csv_row(t.combined.summary) + csv_row(t.static_only.summary) +
                          csv_row(t.dynamic_only.summary);
  write_reported(out, dir / "ablation.csv", csv);
  out << csv;
  return kExitOk;
}

int cmd_cost(const RunConfig& c, std::ostream& out) {
  const std::string csv = cost_table_csv(c);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_reported(out, dir / "cost.csv", csv);
  out << csv;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-masked video detection: data generation, masks, runs, ablations, costs.",
               "maskvd"};
  app.require_subcommand(1);
  FlagSet flags(app);

  std::string config_file;
  bool toy = false;
  app.add_option("--config", config_file, "JSON file with RunConfig fields")->check(CLI::ExistingFile);
  app.add_flag("--toy", toy, "8x8-grid toy model (L=64, 4 heads, 4 blocks, window 4, 128x128 frames)");

  flags.option("--backbone", &RunConfig::backbone, "windowed | global")
      ->check(CLI::IsMember({"windowed", "global"}));
  flags.option("--period", &RunConfig::period, "full-frame period P (default 8)");
  flags.option("--static-keep", &RunConfig::static_keep, "static keep rate k_s (default 0.3)");
  flags.option("--region-size", &RunConfig::region_size, "region side in pixels (default 16)");
  flags.option("--dilation", &RunConfig::dilation, "dynamic mask dilation in regions (default 0)");
  flags.option("--mask", &RunConfig::mask, "combined | static | dynamic (run only)")
      ->check(CLI::IsMember({"combined", "static", "dynamic"}));
  flags.option("--seed-scene", &RunConfig::seed_scene, "scene seed (default 1)");
  flags.option("--seed-model", &RunConfig::seed_model, "model weight seed (default 1)");
  flags.flag("--oracle", &RunConfig::oracle, "run the dense oracle alongside and report feature error");
  flags.option("--out", &RunConfig::out, "output directory (default .)");
  flags.option("--input", &RunConfig::input, "directory written by gen to evaluate instead of generating");
  flags.option("--annotations", &RunConfig::annotations, "annotation JSON for mask");
  flags.option("--frames", &RunConfig::frames, "frames per sequence (default 32)");
  flags.option("--sequences", &RunConfig::sequences, "evaluation sequences (default 10)");
  flags.option("--training-sequences", &RunConfig::training_sequences,
               "training sequences for the heatmap and detector (default 40)");
  flags.option("--classes", &RunConfig::num_classes, "object classes (default 3)");
  flags.flag("--moving-camera", &RunConfig::moving_camera, "scroll the background by one pixel per frame");
  flags.option("--threshold", &RunConfig::detect_threshold, "objectness threshold (default 0.5)");
  flags.option("--embed-dim", &RunConfig::embed_dim, "token width L (768; toy 64)");
  flags.option("--heads", &RunConfig::num_heads, "attention heads (12; toy 4)");
  flags.option("--blocks", &RunConfig::num_blocks, "transformer blocks (12; toy 4)");
  flags.option("--window", &RunConfig::window_side, "window side in tokens (14; toy 4)");
  flags.option("--ffn", &RunConfig::ffn_hidden, "FFN hidden width (3072; toy 256)");
  flags.option("--global-blocks", &RunConfig::global_blocks,
               "1-based global-attention blocks of the windowed backbone (3,6,9,12; toy 2,4)")
      ->delimiter(',');
  flags.option("--height", &RunConfig::height, "frame height (672; toy 128)");
  flags.option("--width", &RunConfig::width, "frame width (672; toy 128)");
  flags.option("--tokens", &RunConfig::tokens, "cost: kept-token counts, comma separated")
      ->delimiter(',');
  flags.option("--keep-rates", &RunConfig::keep_rates, "cost: keep rates in (0, 1], comma separated")
      ->delimiter(',');

  using Command = int (*)(const RunConfig&, std::ostream&);
  std::vector<std::pair<CLI::App*, Command>> commands = {
      {app.add_subcommand("gen", "write synthetic sequences and annotations"), cmd_gen},
      {app.add_subcommand("mask", "build the static mask and heatmap from annotations"), cmd_mask},
      {app.add_subcommand("run", "stream sequences through the masked backbone"), cmd_run},
      {app.add_subcommand("ablate", "dense, combined, static-only and dynamic-only runs"), cmd_ablate},
      {app.add_subcommand("cost", "MAC and buffer table for the configured backbone"), cmd_cost},
  };
  for (auto& [sub, fn] : commands) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    RunConfig config = toy ? RunConfig::toy_config() : RunConfig::reference();
    if (!config_file.empty()) {
      const std::string text = read_text_file(config_file);
      apply_config_json(config, text);
      if (config.toy && !toy) {
        config = RunConfig::toy_config();
        apply_config_json(config, text);
      }
    }
    flags.apply(config);
    for (auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(config, out);
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const StateError& e) {
    err << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace maskvd::cli
