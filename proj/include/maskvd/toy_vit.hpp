#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "maskvd/frame.hpp"
#include "maskvd/geometry.hpp"
#include "maskvd/mask_builder.hpp"
#include "maskvd/tensor.hpp"
#include "maskvd/trace.hpp"

namespace maskvd {

/// Backbone geometry. Block indices in `global_blocks` are 1-based; every
/// other block uses windowed attention.
struct ModelConfig {
  int embed_dim = 64;
  int num_heads = 4;
  int num_blocks = 4;
  std::vector<int> global_blocks{2, 4};
  int window_side = 4;
  int ffn_hidden = 256;
  GridSpec grid{128, 128, 16};
  std::uint64_t seed = 0;

  /// ViT-B at 672x672: L=768, 12 heads, 12 blocks, 14x14 windows.
  /// Non-windowed makes every block global.
  static ModelConfig vit_b(bool windowed = true);
  /// 8x8 grid, L=64, 4 heads, 4 blocks (2 and 4 global), 4x4 windows.
  static ModelConfig toy(bool windowed = true);

  int head_dim() const { return embed_dim / num_heads; }
  int patch_dim() const { return grid.region_size() * grid.region_size() * 3; }
  int tokens() const { return grid.tokens(); }
  /// `block` is 0-based.
  bool is_global(int block) const;
  int num_windowed() const;
  bool windowed() const { return num_windowed() > 0; }

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct BlockWeights {
  RowVector ln1_gamma, ln1_beta;
  Matrix qkv_weight;  // L x 3L, output columns [q | k | v], heads contiguous
  RowVector qkv_bias;
  Matrix proj_weight;  // L x L
  RowVector proj_bias;
  RowVector ln2_gamma, ln2_beta;
  Matrix fc1_weight;  // L x F
  RowVector fc1_bias;
  Matrix fc2_weight;  // F x L
  RowVector fc2_bias;
};

struct VitModel {
  ModelConfig config;
  Matrix patch_weight;  // patch_dim x L
  RowVector patch_bias;
  Matrix pos_embed;  // N x L
  std::vector<BlockWeights> blocks;

  /// Deterministic initialization from config.seed (mt19937_64, uniform
  /// draws rounded to float so weights survive fp32 serialization exactly).
  static VitModel random(const ModelConfig& config);
};

/// Raised when a masked frame arrives before any full frame.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Feature-reuse memory for one video stream: the input of every windowed
/// block plus the backbone output, all from the most recent frame.
struct ReferenceState {
  std::vector<Matrix> block_inputs;  // one per windowed block, in block order
  Matrix reference_output;
  std::int64_t last_full_frame = -1;

  bool initialized() const { return last_full_frame >= 0; }
  std::size_t buffer_count() const {
    return block_inputs.size() + (reference_output.size() > 0 ? 1 : 0);
  }
  /// Bytes at fp32 storage, the unit used by cost accounting.
  std::uint64_t buffer_bytes() const;
};

/// Softmax(q k^T / sqrt(d)) v with row-max subtraction.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v);

Matrix layer_norm(const Matrix& x, const RowVector& gamma, const RowVector& beta);
Matrix gelu(const Matrix& x);

/// Flattened (row, col, channel) pixels of one region, scaled to [-0.5, 0.5].
RowVector patch_pixels(const Frame& frame, const GridSpec& grid, int token);

/// Projects every true region of `mask` and adds its positional embedding.
TokenSet patch_embed(const Frame& frame, const RegionMask& mask, const VitModel& model,
                     OpTrace* trace = nullptr);

/// Pre-norm block with attention across exactly the given tokens.
TokenSet msa_block_global(const TokenSet& tokens, const BlockWeights& weights,
                          const ModelConfig& config, OpTrace* trace = nullptr);

/// Pre-norm block over all N tokens with window-restricted attention.
Matrix wmsa_block_dense(const Matrix& x, const BlockWeights& weights,
                        const ModelConfig& config, OpTrace* trace = nullptr);

struct MaskedBlockOutput {
  TokenSet tokens;
  Matrix reference;  // scattered input, the block's next reference
};

/// Scatters `tokens` over `reference`, runs the windowed block, and gathers
/// the outputs back at the token locations.
MaskedBlockOutput wmsa_block_masked(const TokenSet& tokens, const Matrix& reference,
                                    const BlockWeights& weights, const ModelConfig& config,
                                    OpTrace* trace = nullptr);

/// Full forward pass. Overwrites every reference tensor of `state`.
Matrix forward_dense(const Frame& frame, const VitModel& model, ReferenceState& state,
                     std::int64_t frame_index = 0, OpTrace* trace = nullptr);

/// Forward pass over the masked regions only, reusing `state` elsewhere.
/// Rows outside the mask are returned bitwise equal to the prior output.
Matrix forward_masked(const Frame& frame, const RegionMask& mask, const VitModel& model,
                      ReferenceState& state, OpTrace* trace = nullptr);

}  // namespace maskvd
