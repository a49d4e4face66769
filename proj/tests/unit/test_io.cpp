#include <doctest.h>

#include <filesystem>

#include "loop_oracle.hpp"
#include "maskvd/annotations.hpp"
#include "maskvd/frame.hpp"
#include "maskvd/tensor_io.hpp"

using namespace maskvd;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "maskvd_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("frame container round-trips and starts with its header") {
  const std::vector<Frame> frames{oracle::random_frame(48, 32, 1), oracle::random_frame(48, 32, 2)};
  const std::string bytes = encode_frames(frames);
  CHECK(bytes.substr(0, 4) == "MVDF");
  CHECK(bytes.size() == 20 + 2 * 48 * 32 * 3);
  CHECK(static_cast<unsigned char>(bytes[8]) == 48);  // width, little-endian
  CHECK(decode_frames(bytes) == frames);
  save_frames(scratch("f.mvdf"), frames);
  CHECK(load_frames(scratch("f.mvdf")) == frames);
}

TEST_CASE("frame container rejects damage") {
  const std::string bytes = encode_frames({oracle::random_frame(16, 16, 1)});
  CHECK_THROWS_WITH(decode_frames(bytes.substr(0, bytes.size() - 1)), "truncated binary container");
  CHECK_THROWS(decode_frames(bytes + "x"));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(decode_frames(bad));
  CHECK_THROWS_AS(encode_frames({Frame(16, 16), Frame(16, 32)}), std::invalid_argument);
}

TEST_CASE("padding adds zero pixels on the bottom and right") {
  const Frame f = oracle::random_frame(20, 17, 3);
  const Frame p = pad_to_region_multiple(f, 16);
  CHECK(p.width == 32);
  CHECK(p.height == 32);
  CHECK(p.pixel(19, 16)[2] == f.pixel(19, 16)[2]);
  CHECK(p.pixel(20, 0)[0] == 0);
  CHECK(p.pixel(0, 17)[1] == 0);
  CHECK(pad_to_region_multiple(p, 16) == p);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("model weights round-trip exactly") {
  ModelConfig c = ModelConfig::toy();
  c.seed = 77;
  const VitModel m = VitModel::random(c);
  save_model(scratch("w.mvdw"), m);
  const VitModel back = load_model(scratch("w.mvdw"));
  CHECK(back.config == m.config);
  CHECK(back.patch_weight == m.patch_weight);
  CHECK(back.pos_embed == m.pos_embed);
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    CHECK(back.blocks[b].qkv_weight == m.blocks[b].qkv_weight);
    CHECK(back.blocks[b].fc2_bias == m.blocks[b].fc2_bias);
  }
  CHECK_THROWS(decode_model(encode_model(m).substr(0, 100)));
}

TEST_CASE("feature maps round-trip at float precision") {
  Matrix f(3, 2);
  f << 0.5, -1.25, 3.0, 1e-3, 7.0, -0.0625;
  Matrix rounded = f;
  rounded(1, 1) = static_cast<float>(1e-3);
  save_feature_map(scratch("f.mvdt"), f);
  CHECK(load_feature_map(scratch("f.mvdt")) == rounded);
  const std::vector<NamedTensor> two{to_named("a", f), to_named("b", RowVector::Ones(4).eval())};
  const auto back = decode_tensors(encode_tensors(two));
  REQUIRE(back.size() == 2);
  CHECK(back[1].name == "b");
  CHECK(back[1].dims == std::vector<std::uint32_t>{4});
}

TEST_CASE("annotations round-trip through JSON") {
  AnnotationSet set;
  set.frame_height = 64;
  set.frame_width = 96;
  set.frames = {{0, {{0, 0, 10, 10}, {5, 6, 40, 60}}, {1, 2}}, {1, {}, {}}, {2, {{90, 1, 96, 64}}, {}}};
  CHECK(annotations_from_json(annotations_to_json(set)) == set);
  save_annotations(scratch("a.json"), set);
  CHECK(load_annotations(scratch("a.json")) == set);
}

TEST_CASE("malformed annotation JSON reports the line") {
  const std::string text = "{\n  \"frame_size\": [64, 64],\n  \"frames\": [\n    {\"index\": 0 \"boxes\": []}\n  ]\n}\n";
  try {
    annotations_from_json(text);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(annotations_from_json(R"({"frame_size": [64, 64], "frames": [{"index": 0, "boxes": [[0, 0, 80, 8]]}]})"),
                  DataError);
  CHECK_THROWS_AS(annotations_from_json(R"({"frame_size": [64], "frames": []})"), DataError);
}

TEST_CASE("detections round-trip through JSON") {
  std::vector<FrameDetections> dets{{0, {Detection{{0, 0, 16, 16}, 0.75, 2}}}, {1, {}}};
  const auto back = detections_from_json(detections_to_json(dets));
  REQUIRE(back.size() == 2);
  CHECK(back[0].detections == dets[0].detections);
  CHECK(back[1].detections.empty());
  CHECK(detection_boxes(back[0]) == std::vector<BBox>{{0, 0, 16, 16}});
}

TEST_CASE("mask JSON and PGM") {
  const GridSpec g(32, 48, 16);
  RegionMask m(g);
  m.set(0, 2);
  m.set(1, 0);
  CHECK(mask_from_json(mask_to_json(m)) == m);
  const std::string pgm = mask_to_pgm(m, 2);
  CHECK(pgm.substr(0, 11) == "P5\n6 4\n255\n");
  CHECK(pgm.size() == 11 + 24);
  CHECK(static_cast<unsigned char>(pgm[11 + 4]) == 255);  // row 0, column 2 -> region (0, 2)
  CHECK(static_cast<unsigned char>(pgm[11 + 0]) == 0);

  Heatmap h{2, 2, {0, 2, 4, 1}};
  const std::string hp = heatmap_to_pgm(h);
  CHECK(static_cast<unsigned char>(hp.back()) == 63);  // floor(1 * 255 / 4)
  CHECK(static_cast<unsigned char>(hp[hp.size() - 2]) == 255);
}
