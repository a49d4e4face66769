#pragma once

// Analytic MAC and buffer accounting for the backbone.
//
// Counting convention: multiply-accumulates of the patch projection, the
// QKV/output/FFN linears and the two attention products (Q K^T and A V).
// Layer norms, softmax, GELU, biases and residual adds are not counted.
//
// Masked frames: global blocks run on the kept tokens only. Windowed blocks
// run QKV, attention and the output projection over the full scattered
// N-token tensor and the FFN over the gathered kept tokens. The patch
// projection covers the kept tokens.
//
// Buffers are sized at 4 bytes per element.

#include <cstdint>

#include "maskvd/toy_vit.hpp"
#include "maskvd/trace.hpp"

namespace maskvd {

struct CostReport {
  double backbone_gmacs = 0.0;
  std::uint64_t macs = 0;
  std::uint64_t buffer_bytes = 0;
  int scatter_gather_ops = 0;
  int tokens_processed = 0;
};

std::uint64_t macs_dense(const ModelConfig& config);
std::uint64_t macs_masked(const ModelConfig& config, int tokens_kept);

double flops_dense(const ModelConfig& config);
/// Throws std::out_of_range unless 0 < tokens_kept <= N.
double flops_masked(const ModelConfig& config, int tokens_kept);

/// Bytes of one N x L token buffer.
std::uint64_t token_buffer_bytes(const ModelConfig& config);

/// One reference tensor per windowed block plus the output buffer.
std::uint64_t memory_maskvd(const ModelConfig& config);

/// Token-gate and buffer storage of a delta-gated transformer: per block,
/// eight N x L references plus the N x N x H attention product and the
/// N x L value product.
std::uint64_t memory_eventful(const ModelConfig& config);
std::uint64_t memory_eventful_block(const ModelConfig& config);
/// The two cached product tensors of one block.
std::uint64_t memory_eventful_products(const ModelConfig& config);

/// Scatter/gather operations on a masked frame: input gather, one scatter
/// and one gather per windowed block, and the final output scatter.
int masked_scatter_gather_ops(const ModelConfig& config);

/// Sums what the backbone recorded while processing one frame.
CostReport measure_run(const OpTrace& trace);

inline double to_megabytes(std::uint64_t bytes) { return static_cast<double>(bytes) / 1e6; }

}  // namespace maskvd
