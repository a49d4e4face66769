#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace maskvd {

enum class OpKind { kPatchEmbed, kLinear, kAttention, kGather, kScatter };

struct TraceEvent {
  OpKind kind;
  std::string label;
  std::uint64_t macs = 0;
};

/// Record of the work executed for one frame. Filled by the backbone,
/// consumed by cost accounting.
struct OpTrace {
  std::vector<TraceEvent> events;
  int tokens_processed = 0;
  std::uint64_t reference_bytes = 0;
  bool masked = false;

  void add(OpKind kind, std::string label, std::uint64_t macs = 0) {
    events.push_back({kind, std::move(label), macs});
  }
  void clear() { *this = OpTrace{}; }
};

}  // namespace maskvd
