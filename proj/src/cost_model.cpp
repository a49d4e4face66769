#include "maskvd/cost_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace maskvd {

namespace {

using u64 = std::uint64_t;

u64 windowed_attention_macs(const ModelConfig& c) {
  const GridSpec& g = c.grid;
  const int ws = c.window_side;
  u64 total = 0;
  for (int r = 0; r < g.rows(); r += ws) {
    for (int col = 0; col < g.cols(); col += ws) {
      const u64 n = static_cast<u64>(std::min(ws, g.rows() - r)) *
                    static_cast<u64>(std::min(ws, g.cols() - col));
      total += 2 * n * n * static_cast<u64>(c.embed_dim);
    }
  }
  return total;
}

u64 linear_macs(u64 n, const ModelConfig& c) {
  const u64 L = static_cast<u64>(c.embed_dim);
  const u64 F = static_cast<u64>(c.ffn_hidden);
  return 4 * n * L * L + 2 * n * L * F;
}

}  // namespace

u64 macs_dense(const ModelConfig& c) {
  return macs_masked(c, c.tokens());
}

u64 macs_masked(const ModelConfig& c, int tokens_kept) {
  const int total = c.tokens();
  if (tokens_kept <= 0 || tokens_kept > total) {
    throw std::out_of_range("tokens_kept " + std::to_string(tokens_kept) + " outside (0, " +
                            std::to_string(total) + "]");
  }
  const u64 N = static_cast<u64>(total);
  const u64 n = static_cast<u64>(tokens_kept);
  const u64 L = static_cast<u64>(c.embed_dim);
  const u64 F = static_cast<u64>(c.ffn_hidden);

  u64 macs = n * static_cast<u64>(c.patch_dim()) * L;
  for (int b = 0; b < c.num_blocks; ++b) {
    if (c.is_global(b)) {
      macs += linear_macs(n, c) + 2 * n * n * L;
    } else {
      macs += 4 * N * L * L + windowed_attention_macs(c) + 2 * n * L * F;
    }
  }
  return macs;
}

double flops_dense(const ModelConfig& c) { return static_cast<double>(macs_dense(c)) / 1e9; }

double flops_masked(const ModelConfig& c, int tokens_kept) {
  return static_cast<double>(macs_masked(c, tokens_kept)) / 1e9;
}

u64 token_buffer_bytes(const ModelConfig& c) {
  return static_cast<u64>(c.tokens()) * static_cast<u64>(c.embed_dim) * 4;
}

u64 memory_maskvd(const ModelConfig& c) {
  return static_cast<u64>(c.num_windowed() + 1) * token_buffer_bytes(c);
}

u64 memory_eventful_products(const ModelConfig& c) {
  const u64 N = static_cast<u64>(c.tokens());
  return N * N * static_cast<u64>(c.num_heads) * 4 + token_buffer_bytes(c);
}

u64 memory_eventful_block(const ModelConfig& c) {
  return 8 * token_buffer_bytes(c) + memory_eventful_products(c);
}

u64 memory_eventful(const ModelConfig& c) {
  return static_cast<u64>(c.num_blocks) * memory_eventful_block(c);
}

int masked_scatter_gather_ops(const ModelConfig& c) { return 1 + 2 * c.num_windowed() + 1; }

CostReport measure_run(const OpTrace& trace) {
  CostReport r;
  for (const auto& e : trace.events) {
    r.macs += e.macs;
    if (e.kind == OpKind::kGather || e.kind == OpKind::kScatter) ++r.scatter_gather_ops;
  }
  r.backbone_gmacs = static_cast<double>(r.macs) / 1e9;
  r.buffer_bytes = trace.reference_bytes;
  r.tokens_processed = trace.tokens_processed;
  return r;
}

}  // namespace maskvd
