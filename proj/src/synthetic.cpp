#include "maskvd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace maskvd {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash3(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  return mix(seed ^ mix(static_cast<std::uint64_t>(a) ^ mix(static_cast<std::uint64_t>(b))));
}

// Signed noise in [-amplitude, amplitude].
int noise(std::uint64_t h, int amplitude) {
  return static_cast<int>(h % static_cast<std::uint64_t>(2 * amplitude + 1)) - amplitude;
}

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

// Background at world coordinates: coarse 32-pixel patches of grey plus
// fine per-pixel grain.
void background_pixel(std::uint64_t seed, std::int64_t wx, std::int64_t wy, std::uint8_t* out) {
  const auto floor_div = [](std::int64_t v, std::int64_t d) {
    return v >= 0 ? v / d : -((-v + d - 1) / d);
  };
  const std::uint64_t coarse = hash3(seed, floor_div(wx, 32), floor_div(wy, 32));
  const std::uint64_t fine = hash3(seed + 1, wx, wy);
  const int base = 60 + noise(coarse, 15);
  for (int ch = 0; ch < 3; ++ch) out[ch] = clamp_u8(base + noise(fine >> (ch * 8), 10));
}

// One step of axis motion with reflection at [0, limit - size].
void step_axis(int& pos, int& vel, int size, int limit) {
  pos += vel;
  const int hi = limit - size;
  if (pos < 0) {
    pos = -pos;
    vel = -vel;
  } else if (pos > hi) {
    pos = 2 * hi - pos;
    vel = -vel;
  }
  pos = std::clamp(pos, 0, hi);
}

}  // namespace

std::array<std::uint8_t, 3> class_color(int class_id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 3> kColors{{
      {230, 40, 40},
      {40, 220, 60},
      {50, 80, 235},
  }};
  return kColors[static_cast<std::size_t>(class_id) % kColors.size()];
}

GeneratedVideo generate(const SyntheticScene& scene, std::uint64_t seed) {
  if (scene.num_frames < 1) throw std::invalid_argument("num_frames must be >= 1");
  if (scene.width <= 0 || scene.height <= 0) throw std::invalid_argument("frame size must be positive");
  struct State {
    int x, y, ux, uy;
  };
  std::vector<State> states;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const SceneObject& o = scene.objects[i];
    if (o.width <= 0 || o.height <= 0 || o.width > scene.width || o.height > scene.height) {
      throw std::invalid_argument("object " + std::to_string(i) + " (" + std::to_string(o.width) +
                                  "x" + std::to_string(o.height) + ") does not fit in a " +
                                  std::to_string(scene.width) + "x" +
                                  std::to_string(scene.height) + " frame");
    }
    if (o.x < 0 || o.y < 0 || o.x + o.width > scene.width || o.y + o.height > scene.height) {
      throw std::invalid_argument("object " + std::to_string(i) + " starts outside the frame");
    }
    states.push_back({o.x, o.y, o.vx - scene.camera_dx, o.vy - scene.camera_dy});
  }

  GeneratedVideo out;
  out.annotations.frame_height = scene.height;
  out.annotations.frame_width = scene.width;
  for (int t = 0; t < scene.num_frames; ++t) {
    if (t > 0) {
      for (std::size_t i = 0; i < states.size(); ++i) {
        step_axis(states[i].x, states[i].ux, scene.objects[i].width, scene.width);
        step_axis(states[i].y, states[i].uy, scene.objects[i].height, scene.height);
      }
    }
    Frame frame(scene.width, scene.height);
    const std::int64_t ox = static_cast<std::int64_t>(t) * scene.camera_dx;
    const std::int64_t oy = static_cast<std::int64_t>(t) * scene.camera_dy;
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        background_pixel(scene.texture_seed, x + ox, y + oy, frame.pixel(x, y));
      }
    }
    FrameAnnotation ann;
    ann.index = t;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const SceneObject& o = scene.objects[i];
      const State& s = states[i];
      for (int y = 0; y < o.height; ++y) {
        for (int x = 0; x < o.width; ++x) {
          const std::uint64_t h = hash3(seed ^ mix(i + 1), x, y);
          std::uint8_t* px = frame.pixel(s.x + x, s.y + y);
          for (int ch = 0; ch < 3; ++ch) px[ch] = clamp_u8(o.color[ch] + noise(h >> (ch * 8), 15));
        }
      }
      ann.boxes.push_back({s.x, s.y, s.x + o.width, s.y + o.height});
      ann.classes.push_back(o.class_id);
    }
    out.frames.push_back(std::move(frame));
    out.annotations.frames.push_back(std::move(ann));
  }
  return out;
}

SceneParams scene_params_for(int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("frame size must be positive");
  SceneParams p;
  const double sy = height / static_cast<double>(p.height);
  const double sx = width / static_cast<double>(p.width);
  const auto scale = [](int v, double s) { return static_cast<int>(std::lround(v * s)); };
  for (Lane& lane : p.lanes) {
    lane.top = scale(lane.top, sy);
    lane.bottom = std::min(height, scale(lane.bottom, sy));
    lane.max_speed = std::max(1, scale(lane.max_speed, sx));
  }
  p.min_width = std::max(1, scale(p.min_width, sx));
  p.max_width = std::max(p.min_width, scale(p.max_width, sx));
  p.min_height = std::max(1, scale(p.min_height, sy));
  p.max_height = std::max(p.min_height, scale(p.max_height, sy));
  p.height = height;
  p.width = width;
  return p;
}

SyntheticScene random_scene(const SceneParams& p, std::uint64_t seed) {
  if (p.min_width < 1 || p.min_width > p.max_width || p.max_width > p.width ||
      p.min_height < 1 || p.min_height > p.max_height) {
    throw std::invalid_argument("object size range does not fit the frame");
  }
  if (p.lanes.empty()) throw std::invalid_argument("scene needs at least one lane");
  for (const Lane& lane : p.lanes) {
    if (lane.top < 0 || lane.bottom > p.height || lane.bottom - lane.top < p.max_height) {
      throw std::invalid_argument("lane [" + std::to_string(lane.top) + ", " +
                                  std::to_string(lane.bottom) + ") cannot hold the tallest object");
    }
  }
  std::mt19937_64 gen(mix(seed));
  auto uniform = [&gen](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  auto chance = [&gen](double prob) { return static_cast<double>(gen() >> 11) * 0x1.0p-53 < prob; };

  SyntheticScene scene;
  scene.height = p.height;
  scene.width = p.width;
  scene.num_frames = p.num_frames;
  scene.texture_seed = mix(seed ^ 0x5eedULL);
  if (p.moving_camera) scene.camera_dx = chance(0.5) ? 1 : -1;

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < p.lanes.size(); ++i) {
    if (chance(p.lanes[i].probability)) used.push_back(i);
  }
  if (used.empty()) used.push_back(0);
  for (std::size_t lane_index : used) {
    const Lane& lane = p.lanes[lane_index];
    SceneObject o;
    o.width = uniform(p.min_width, p.max_width);
    o.height = uniform(p.min_height, p.max_height);
    o.class_id = uniform(0, std::max(0, p.num_classes - 1));
    const auto base = class_color(o.class_id);
    for (int ch = 0; ch < 3; ++ch) o.color[ch] = clamp_u8(base[ch] + uniform(-15, 15));
    o.x = uniform(0, p.width - o.width);
    o.y = uniform(lane.top, lane.bottom - o.height);
    o.vx = lane.max_speed > 0 ? uniform(1, lane.max_speed) * (chance(0.5) ? 1 : -1) : 0;
    scene.objects.push_back(o);
  }
  return scene;
}

std::vector<GeneratedVideo> generate_suite(const SceneParams& params, int count, std::uint64_t seed) {
  std::vector<GeneratedVideo> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = mix(seed ^ mix(static_cast<std::uint64_t>(i) + 1));
    out.push_back(generate(random_scene(params, s), s));
  }
  return out;
}

std::uint64_t training_seed(std::uint64_t scene_seed) { return mix(scene_seed ^ 0x7261696eULL); }

}  // namespace maskvd
