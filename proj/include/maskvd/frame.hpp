#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace maskvd {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Zero-fills on the bottom and right so both sides are multiples of region_size.
Frame pad_to_region_multiple(const Frame& frame, int region_size);

// Frame container: "MVDF", u32 version, u32 W, u32 H, u32 count, then
// count * H * W * 3 bytes of RGB. All integers little-endian.
inline constexpr std::uint32_t kFrameContainerVersion = 1;

std::string encode_frames(const std::vector<Frame>& frames);
std::vector<Frame> decode_frames(const std::string& bytes);
void save_frames(const std::filesystem::path& path, const std::vector<Frame>& frames);
std::vector<Frame> load_frames(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for the checksums printed by the CLI.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace maskvd
