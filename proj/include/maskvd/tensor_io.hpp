#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskvd/tensor.hpp"
#include "maskvd/toy_vit.hpp"

namespace maskvd {

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // row-major
};

// Binary layout (little-endian):
//   tensor file:  "MVDT" u32 version, u32 count, tensors
//   weights file: "MVDW" u32 version, config block, u32 count, tensors
//   tensor:       u32 name_len, name, u32 ndims, u32 dims[ndims], f32 values
//   config block: u32 L, H, B, window_side, ffn_hidden, frame_h, frame_w,
//                 region_size, u64 seed, u32 n_global, u32 global[n_global]
inline constexpr std::uint32_t kTensorFormatVersion = 1;

NamedTensor to_named(const std::string& name, const Matrix& m);
NamedTensor to_named(const std::string& name, const RowVector& v);
Matrix to_matrix(const NamedTensor& t);

std::string encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::string& bytes);

std::string encode_model(const VitModel& model);
VitModel decode_model(const std::string& bytes);

void save_model(const std::filesystem::path& path, const VitModel& model);
VitModel load_model(const std::filesystem::path& path);

/// Writes a single N x L feature map as a one-tensor file named "features".
void save_feature_map(const std::filesystem::path& path, const Matrix& features);
Matrix load_feature_map(const std::filesystem::path& path);

}  // namespace maskvd
