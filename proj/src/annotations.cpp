#include "maskvd/annotations.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

namespace maskvd {

using nlohmann::json;

namespace {

// Line and column of a byte offset, for parse diagnostics.
std::string line_context(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1, col = 1, line_start = 0;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
      line_start = i + 1;
    } else {
      ++col;
    }
  }
  std::size_t line_end = text.find('\n', line_start);
  if (line_end == std::string::npos) line_end = text.size();
  std::string snippet = text.substr(line_start, std::min<std::size_t>(line_end - line_start, 80));
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + snippet;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is 1-based and points just past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw DataError("malformed JSON at " + line_context(text, at));
  }
}

BBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be [x1, y1, x2, y2]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json box_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

template <typename Fn>
auto schema_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid ") + what + ": " + e.what());
  }
}

}  // namespace

std::string annotations_to_json(const AnnotationSet& set) {
  json frames = json::array();
  for (const auto& f : set.frames) {
    json boxes = json::array();
    for (const auto& b : f.boxes) boxes.push_back(box_to_json(b));
    json jf = {{"index", f.index}, {"boxes", boxes}};
    if (!f.classes.empty()) jf["classes"] = f.classes;
    frames.push_back(std::move(jf));
  }
  json doc = {{"frame_size", {set.frame_height, set.frame_width}}, {"frames", frames}};
  return doc.dump(1) + "\n";
}

AnnotationSet annotations_from_json(const std::string& text) {
  const json doc = parse_document(text);
  return schema_guard("annotation document", [&] {
    AnnotationSet set;
    const auto& size = doc.at("frame_size");
    if (!size.is_array() || size.size() != 2) throw DataError("frame_size must be [H, W]");
    set.frame_height = size[0].get<int>();
    set.frame_width = size[1].get<int>();
    for (const auto& jf : doc.at("frames")) {
      FrameAnnotation f;
      f.index = jf.at("index").get<int>();
      for (const auto& jb : jf.at("boxes")) {
        const BBox b = box_from_json(jb);
        if (!b.valid_within(set.frame_height, set.frame_width)) {
          throw DataError("frame " + std::to_string(f.index) + ", box " +
                          std::to_string(f.boxes.size()) + " lies outside the frame");
        }
        f.boxes.push_back(b);
      }
      if (jf.contains("classes")) {
        f.classes = jf.at("classes").get<std::vector<int>>();
        if (f.classes.size() != f.boxes.size()) {
          throw DataError("frame " + std::to_string(f.index) + ": classes and boxes differ in length");
        }
      }
      set.frames.push_back(std::move(f));
    }
    return set;
  });
}

void save_annotations(const std::filesystem::path& path, const AnnotationSet& set) {
  write_text_file(path, annotations_to_json(set));
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  return annotations_from_json(read_text_file(path));
}

std::string detections_to_json(const std::vector<FrameDetections>& frames) {
  json doc = json::array();
  for (const auto& f : frames) {
    json dets = json::array();
    for (const auto& d : f.detections) {
      dets.push_back({{"box", box_to_json(d.box)}, {"score", d.score}, {"class", d.class_id}});
    }
    doc.push_back({{"index", f.index}, {"detections", dets}});
  }
  return doc.dump(1) + "\n";
}

std::vector<FrameDetections> detections_from_json(const std::string& text) {
  const json doc = parse_document(text);
  return schema_guard("detections document", [&] {
    std::vector<FrameDetections> out;
    for (const auto& jf : doc) {
      FrameDetections f;
      f.index = jf.at("index").get<int>();
      for (const auto& jd : jf.at("detections")) {
        f.detections.push_back(
            {box_from_json(jd.at("box")), jd.at("score").get<double>(), jd.at("class").get<int>()});
      }
      out.push_back(std::move(f));
    }
    return out;
  });
}

std::vector<BBox> detection_boxes(const FrameDetections& frame) {
  std::vector<BBox> out;
  for (const auto& d : frame.detections) out.push_back(d.box);
  return out;
}

std::string mask_to_json(const RegionMask& mask) {
  json grid = json::array();
  for (int r = 0; r < mask.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < mask.cols(); ++c) row.push_back(mask.at(r, c));
    grid.push_back(std::move(row));
  }
  const GridSpec& s = mask.spec();
  json doc = {{"frame_size", {s.height(), s.width()}},
              {"region_size", s.region_size()},
              {"rows", mask.rows()},
              {"cols", mask.cols()},
              {"keep_count", mask.keep_count()},
              {"keep_rate", mask.keep_rate()},
              {"grid", grid}};
  return doc.dump() + "\n";
}

RegionMask mask_from_json(const std::string& text) {
  const json doc = parse_document(text);
  return schema_guard("mask document", [&] {
    const auto& size = doc.at("frame_size");
    const GridSpec spec(size.at(0).get<int>(), size.at(1).get<int>(), doc.at("region_size").get<int>());
    RegionMask mask(spec);
    const auto& grid = doc.at("grid");
    if (static_cast<int>(grid.size()) != spec.rows()) throw DataError("mask grid row count mismatch");
    for (int r = 0; r < spec.rows(); ++r) {
      if (static_cast<int>(grid[r].size()) != spec.cols()) throw DataError("mask grid column count mismatch");
      for (int c = 0; c < spec.cols(); ++c) mask.set(r, c, grid[r][c].get<bool>());
    }
    return mask;
  });
}

std::string mask_to_pgm(const RegionMask& mask, int scale) {
  if (scale < 1) throw std::invalid_argument("PGM scale must be >= 1");
  const int w = mask.cols() * scale, h = mask.rows() * scale;
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.push_back(static_cast<char>(mask.at(y / scale, x / scale) ? 255 : 0));
  }
  return out;
}

std::string heatmap_to_pgm(const Heatmap& heatmap) {
  std::string out = "P5\n" + std::to_string(heatmap.width) + " " + std::to_string(heatmap.height) + "\n255\n";
  const std::int64_t peak = heatmap.max();
  for (std::int64_t v : heatmap.values) {
    out.push_back(static_cast<char>(peak > 0 ? (v * 255) / peak : 0));
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace maskvd
