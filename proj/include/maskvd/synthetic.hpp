#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "maskvd/annotations.hpp"
#include "maskvd/frame.hpp"

namespace maskvd {

struct SceneObject {
  int x = 0;  // top-left, pixels
  int y = 0;
  int width = 0;
  int height = 0;
  std::array<std::uint8_t, 3> color{255, 0, 0};
  int vx = 0;  // pixels per frame
  int vy = 0;
  int class_id = 0;
};

/// Textured rectangles moving over a textured background. With a nonzero
/// camera shift the background scrolls by (camera_dx, camera_dy) per frame
/// and every object moves by -shift relative to the static-camera scene.
/// Objects bounce off the frame edges.
struct SyntheticScene {
  int height = 128;
  int width = 128;
  std::vector<SceneObject> objects;
  std::uint64_t texture_seed = 0;
  int num_frames = 16;
  int camera_dx = 0;
  int camera_dy = 0;
};

struct GeneratedVideo {
  std::vector<Frame> frames;
  AnnotationSet annotations;
};

/// Renders the scene. `seed` drives the per-object surface texture.
/// Throws std::invalid_argument if an object does not fit in the frame.
GeneratedVideo generate(const SyntheticScene& scene, std::uint64_t seed);

/// Horizontal strip in which an object may travel.
struct Lane {
  int top = 0;
  int bottom = 0;  // exclusive
  double probability = 1.0;  // chance that a scene has an object here
  int max_speed = 2;  // pixels per frame
};

/// Distribution of random scenes. Objects drive horizontally inside lanes;
/// the frequently used lower lane (a "road") gives the training heatmap its
/// spatial prior. Lanes are separated by more than half a region so objects
/// in different lanes never touch on the region grid.
struct SceneParams {
  int height = 128;
  int width = 128;
  int num_frames = 32;
  std::vector<Lane> lanes{{76, 128, 0.9, 2}, {0, 52, 0.5, 4}};
  int min_width = 40;
  int max_width = 56;
  int min_height = 40;
  int max_height = 48;
  int num_classes = 3;
  bool moving_camera = false;
};

/// The default distribution stretched to an arbitrary frame size; lane
/// extents and object sizes scale with height, widths and speeds with width.
SceneParams scene_params_for(int height, int width);

SyntheticScene random_scene(const SceneParams& params, std::uint64_t seed);

/// Base color of a class; classes differ strongly in channel balance.
std::array<std::uint8_t, 3> class_color(int class_id);

/// `count` independent scenes derived from `seed`, rendered.
std::vector<GeneratedVideo> generate_suite(const SceneParams& params, int count, std::uint64_t seed);

/// Seed of the training suite paired with a scene seed; never equal to any
/// evaluation sequence seed derived from the same scene seed.
std::uint64_t training_seed(std::uint64_t scene_seed);

}  // namespace maskvd
