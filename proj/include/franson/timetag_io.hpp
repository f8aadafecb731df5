#pragma once

#include "franson/timetag.hpp"

#include <filesystem>
#include <iosfwd>

namespace franson {

// FTAG v1, one channel per file, all integers little-endian:
//   0  "FTAG"
//   4  u16 version (1)
//   6  u32 resolution_ps
//   10 u8  channel_id
//   11 5 reserved zero bytes
//   16 u64 count
//   24 count x u64 tick
inline constexpr std::uint16_t kTimeTagFormatVersion = 1;
inline constexpr std::size_t kTimeTagHeaderBytes = 24;

void write_timetags(const TimeTagStream &stream, std::ostream &out);
void write_timetags(const TimeTagStream &stream, const std::filesystem::path &path);

/// Throws FormatError (with byte offset) on bad magic, unsupported version,
/// truncation or non-monotonic tags.
TimeTagStream read_timetags(std::istream &in);
TimeTagStream read_timetags(const std::filesystem::path &path);

} // namespace franson
