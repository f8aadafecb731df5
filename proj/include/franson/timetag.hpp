#pragma once

#include <cstdint>
#include <vector>

namespace franson {

/// Quantized detection timestamps of one detector channel.
struct TimeTagStream {
  std::uint8_t channel_id = 0;
  std::uint32_t resolution_ps = 1; ///< picoseconds per tick
  std::vector<std::uint64_t> tags; ///< non-decreasing tick counts

  std::size_t size() const { return tags.size(); }
  bool operator==(const TimeTagStream &) const = default;
};

} // namespace franson
