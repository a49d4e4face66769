#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "maskvd/experiment.hpp"

using namespace maskvd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "maskvd_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string column(const std::vector<std::vector<std::string>>& rows, std::size_t row, const std::string& name) {
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    if (rows[0][i] == name) return rows[row][i];
  }
  FAIL("no column " << name);
  return {};
}

const std::vector<std::string> kSmall = {"--toy", "--frames", "6", "--sequences", "2",
                                         "--training-sequences", "6"};

std::vector<std::string> small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("help exits zero and documents the flags") {
  const Outcome o = call({"--help"});
  CHECK(o.code == 0);
  for (const char* flag : {"--period", "--static-keep", "--backbone", "--region-size", "--dilation",
                           "--seed-scene", "--seed-model", "--oracle", "--toy", "--out", "--config"}) {
    CHECK_MESSAGE(o.out.find(flag) != std::string::npos, flag);
  }
  for (const char* sub : {"gen", "mask", "run", "ablate", "cost"}) CHECK(o.out.find(sub) != std::string::npos);
}

TEST_CASE("usage errors exit 2 with a one-line diagnostic") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"run", "--bogus"}, {"run", "--period", "x"}, {"cost", "--backbone", "diagonal"}, {}}) {
    const Outcome o = call(args);
    CHECK(o.code == 2);
    CHECK(std::count(o.err.begin(), o.err.end(), '\n') == 1);
  }
  const Outcome zero = call({"gen", "--toy", "--frames", "0", "--out", fresh_dir("zero")});
  CHECK(zero.code == 2);
  CHECK(zero.err.find("num_frames must be ≥ 1") != std::string::npos);
  CHECK(call({"run", "--toy", "--period", "0"}).code == 2);
  CHECK(call({"cost", "--tokens", "0"}).code == 2);
}

TEST_CASE("gen is deterministic and its annotations read back") {
  const std::string a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  REQUIRE(call(small({"gen", "--out", a})).code == 0);
  const Outcome second = call(small({"gen", "--out", b}));
  REQUIRE(second.code == 0);
  CHECK(second.out.find("fnv1a64=") != std::string::npos);
  CHECK(second.out.find("seed_scene=1") != std::string::npos);
  for (const std::string name : {"frames_000.mvdf", "frames_001.mvdf", "annotations_001.json",
                                 "training_annotations.json"}) {
    CHECK(read_text_file(fs::path(a) / name) == read_text_file(fs::path(b) / name));
  }
  SceneParams p = scene_params_for(128, 128);
  p.num_frames = 6;
  const auto videos = generate_suite(p, 2, 1);
  CHECK(load_annotations(fs::path(a) / "annotations_001.json") == videos[1].annotations);
  CHECK(load_frames(fs::path(a) / "frames_000.mvdf") == videos[0].frames);
}

TEST_CASE("mask writes JSON and PGM files at the requested keep rate") {
  const std::string dir = fresh_dir("mask");
  for (const auto& [keep, count] : std::vector<std::pair<std::string, int>>{{"0", 0}, {"1", 64}, {"0.3", 19}}) {
    const Outcome o = call(small({"mask", "--static-keep", keep, "--out", dir}));
    REQUIRE(o.code == 0);
    const RegionMask m = mask_from_json(read_text_file(fs::path(dir) / "static_mask.json"));
    CHECK(m.keep_count() == count);
    CHECK(read_text_file(fs::path(dir) / "static_mask.pgm").substr(0, 3) == "P5\n");
    CHECK(fs::exists(fs::path(dir) / "heatmap.pgm"));
  }
}

TEST_CASE("mask reads an annotation file and reports malformed input") {
  const std::string dir = fresh_dir("mask_file");
  const fs::path good = fs::path(dir) / "good.json";
  write_text_file(good, R"({"frame_size": [32, 48], "frames": [{"index": 0, "boxes": [[0, 0, 16, 16]]}]})");
  REQUIRE(call({"mask", "--annotations", good.string(), "--static-keep", "0.2", "--out", dir}).code == 0);
  const RegionMask m = mask_from_json(read_text_file(fs::path(dir) / "static_mask.json"));
  CHECK(m.locations() == std::vector<int>{0});

  const fs::path bad = fs::path(dir) / "bad.json";
  write_text_file(bad, "{\n \"frame_size\": [32, 48],\n \"frames\": [}\n");
  const Outcome o = call({"mask", "--annotations", bad.string(), "--out", dir});
  CHECK(o.code == 3);
  CHECK(o.err.find("line 3") != std::string::npos);
}

TEST_CASE("run with period one is dense") {
  const std::string dir = fresh_dir("run_p1");
  REQUIRE(call(small({"run", "--period", "1", "--out", dir})).code == 0);
  const auto rows = parse_csv(read_text_file(fs::path(dir) / "run.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(column(rows, 1, "patch_keep_rate") == "1.0000");
  CHECK(column(rows, 1, "scatter_gather_ops") == "0.000");
  CHECK(column(rows, 1, "period") == "1");
}

TEST_CASE("run output is byte-identical across invocations and fully numeric") {
  const std::string a = fresh_dir("run_a"), b = fresh_dir("run_b");
  REQUIRE(call(small({"run", "--out", a, "--oracle"})).code == 0);
  REQUIRE(call(small({"run", "--out", b, "--oracle"})).code == 0);
  CHECK(read_text_file(fs::path(a) / "run.csv") == read_text_file(fs::path(b) / "run.csv"));
  CHECK(read_text_file(fs::path(a) / "run.json") == read_text_file(fs::path(b) / "run.json"));
  const auto rows = parse_csv(read_text_file(fs::path(a) / "run.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size() == 15);
  for (std::size_t i = 3; i < rows[1].size(); ++i) {
    CHECK(std::isfinite(std::stod(rows[1][i])));
  }
  const auto doc = nlohmann::json::parse(read_text_file(fs::path(a) / "run.json"));
  CHECK(doc["header"]["seed_scene"] == 1);
  CHECK(doc["header"]["seed_model"] == 1);
}

TEST_CASE("oracle columns match a standalone dense run") {
  const std::string dir = fresh_dir("run_oracle");
  REQUIRE(call(small({"run", "--out", dir, "--oracle", "--period", "3"})).code == 0);
  const auto doc = nlohmann::json::parse(read_text_file(fs::path(dir) / "run.json"));

  RunConfig c = RunConfig::toy_config();
  c.frames = 6;
  c.sequences = 2;
  c.training_sequences = 6;
  const Experiment e = prepare_experiment(c);
  const GridSpec& grid = e.model.config.grid;
  const RegionMask fixed = build_static_mask(e.training_annotations, grid, 0.3);
  for (std::size_t s = 0; s < e.sequences.size(); ++s) {
    const auto& frames_json = doc["sequences"][s]["frames"];
    const OracleResult dense = run_oracle(e.sequences[s].frames, e.model, e.head);
    ReferenceState state;
    std::vector<BBox> previous;
    for (std::size_t t = 0; t < dense.features.size(); ++t) {
      const Matrix got = t % 3 == 0
                             ? forward_dense(e.sequences[s].frames[t], e.model, state)
                             : forward_masked(e.sequences[s].frames[t],
                                              combined_mask(fixed, dynamic_mask(previous, grid)), e.model, state);
      const double want = (got - dense.features[t]).norm() / dense.features[t].norm();
      CHECK(frames_json[t]["rel_frobenius_error"].get<double>() == doctest::Approx(want).epsilon(1e-12));
      previous.clear();
      for (const auto& d : frames_json[t]["detections"]) {
        previous.push_back({d["box"][0], d["box"][1], d["box"][2], d["box"][3]});
      }
    }
  }
}

TEST_CASE("cost table has the dense row and rises with kept tokens") {
  const std::string dir = fresh_dir("cost");
  const Outcome o = call({"cost", "--tokens", "100,500,1000,1764", "--keep-rates", "0.25", "--out", dir});
  REQUIRE(o.code == 0);
  const auto rows = parse_csv(read_text_file(fs::path(dir) / "cost.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(column(rows, 1, "row") == "dense");
  CHECK(std::stod(column(rows, 1, "gmacs")) == doctest::Approx(174.2319).epsilon(1e-6));
  CHECK(column(rows, 6, "tokens_kept") == "441");
  for (std::size_t r = 3; r <= 5; ++r) {
    CHECK(std::stod(column(rows, r, "gmacs")) > std::stod(column(rows, r - 1, "gmacs")));
  }
  CHECK(std::stod(column(rows, 1, "total_buffer_mb")) ==
        doctest::Approx(std::stod(column(rows, 1, "block_reference_mb")) +
                        std::stod(column(rows, 1, "output_buffer_mb")))
            .epsilon(1e-3));
  REQUIRE(call({"cost", "--backbone", "global", "--out", dir}).code == 0);
  const auto g = parse_csv(read_text_file(fs::path(dir) / "cost.csv"));
  CHECK(std::stod(column(g, 1, "gmacs")) > 200.0);
  CHECK(column(g, 1, "block_reference_mb") == "0.000");
}

TEST_CASE("flags override the config file, which overrides defaults") {
  const std::string dir = fresh_dir("config");
  const fs::path cfg = fs::path(dir) / "config.json";
  write_text_file(cfg, R"({"toy": true, "period": 4, "static_keep": 0.5, "frames": 5, "sequences": 1,
                           "training_sequences": 3})");
  REQUIRE(call({"run", "--config", cfg.string(), "--out", dir}).code == 0);
  auto rows = parse_csv(read_text_file(fs::path(dir) / "run.csv"));
  CHECK(column(rows, 1, "period") == "4");
  CHECK(column(rows, 1, "static_keep_rate") == "0.500");
  REQUIRE(call({"run", "--config", cfg.string(), "--period", "2", "--out", dir}).code == 0);
  rows = parse_csv(read_text_file(fs::path(dir) / "run.csv"));
  CHECK(column(rows, 1, "period") == "2");
  CHECK(column(rows, 1, "static_keep_rate") == "0.500");

  write_text_file(cfg, R"({"toy": true, "unknown": 1})");
  CHECK(call({"run", "--config", cfg.string()}).code == 3);
}

TEST_CASE("run evaluates sequences written by gen") {
  const std::string data = fresh_dir("input_data"), out = fresh_dir("input_out"), ref = fresh_dir("input_ref");
  REQUIRE(call(small({"gen", "--out", data})).code == 0);
  REQUIRE(call(small({"run", "--input", data, "--out", out})).code == 0);
  REQUIRE(call(small({"run", "--out", ref})).code == 0);
  auto a = parse_csv(read_text_file(fs::path(out) / "run.csv"));
  auto b = parse_csv(read_text_file(fs::path(ref) / "run.csv"));
  CHECK(a[1][0] == "input");
  a[1][0] = b[1][0];
  CHECK(a == b);
  CHECK(call(small({"run", "--input", fresh_dir("empty")})).code == 3);
}

TEST_CASE("ablate writes one row per mask mode") {
  const std::string dir = fresh_dir("ablate");
  REQUIRE(call(small({"ablate", "--out", dir})).code == 0);
  const auto rows = parse_csv(read_text_file(fs::path(dir) / "ablation.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(column(rows, 1, "mask") == "dense");
  CHECK(column(rows, 2, "mask") == "combined");
  CHECK(column(rows, 3, "mask") == "static");
  CHECK(column(rows, 4, "mask") == "dynamic");
  CHECK(std::stod(column(rows, 3, "static_keep_rate")) >= 0.3);
}
