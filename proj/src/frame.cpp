#include "maskvd/frame.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "byte_io.hpp"

namespace maskvd {

Frame pad_to_region_multiple(const Frame& frame, int region_size) {
  if (region_size <= 0) throw std::invalid_argument("region_size must be positive");
  const int w = (frame.width + region_size - 1) / region_size * region_size;
  const int h = (frame.height + region_size - 1) / region_size * region_size;
  if (w == frame.width && h == frame.height) return frame;
  Frame out(w, h);
  for (int y = 0; y < frame.height; ++y) {
    std::copy_n(frame.pixel(0, y), static_cast<std::size_t>(frame.width) * 3, out.pixel(0, y));
  }
  return out;
}

std::string encode_frames(const std::vector<Frame>& frames) {
  detail::ByteWriter w;
  w.str("MVDF");
  w.u32(kFrameContainerVersion);
  const int width = frames.empty() ? 0 : frames.front().width;
  const int height = frames.empty() ? 0 : frames.front().height;
  w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(height));
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const Frame& f : frames) {
    if (f.width != width || f.height != height) {
      throw std::invalid_argument("all frames in a container must share one size");
    }
    w.raw(f.rgb.data(), f.rgb.size());
  }
  return std::move(w.bytes());
}

std::vector<Frame> decode_frames(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.str(4) != "MVDF") throw std::runtime_error("not a frame container (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFrameContainerVersion) {
    throw std::runtime_error("unsupported frame container version " + std::to_string(version));
  }
  const int width = static_cast<int>(r.u32());
  const int height = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Frame f(width, height);
    const char* p = r.take(f.rgb.size());
    std::copy_n(reinterpret_cast<const std::uint8_t*>(p), f.rgb.size(), f.rgb.begin());
    frames.push_back(std::move(f));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after frame container");
  return frames;
}

void save_frames(const std::filesystem::path& path, const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_frames(frames);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Frame> load_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_frames(bytes);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace maskvd
