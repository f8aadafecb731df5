#include "franson/timetag_io.hpp"

#include "franson/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace franson {

namespace {

template <typename T> void put_le(std::ostream &out, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

template <typename T> T get_le(const unsigned char *p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

// Reads exactly n bytes or reports where the file ended.
void read_exact(std::istream &in, unsigned char *dst, std::size_t n, std::uint64_t offset,
                const char *what) {
  in.read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got != n)
    throw FormatError(std::string("truncated file while reading ") + what, offset + got);
}

} // namespace

void write_timetags(const TimeTagStream &s, std::ostream &out) {
  out.write("FTAG", 4);
  put_le<std::uint16_t>(out, kTimeTagFormatVersion);
  put_le<std::uint32_t>(out, s.resolution_ps);
  put_le<std::uint8_t>(out, s.channel_id);
  const char reserved[5] = {};
  out.write(reserved, sizeof reserved);
  put_le<std::uint64_t>(out, s.tags.size());
  std::vector<char> body(s.tags.size() * 8);
  for (std::size_t i = 0; i < s.tags.size(); ++i)
    for (std::size_t b = 0; b < 8; ++b)
      body[i * 8 + b] = static_cast<char>((s.tags[i] >> (8 * b)) & 0xff);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out)
    throw std::runtime_error("failed writing time-tag stream");
}

void write_timetags(const TimeTagStream &s, const std::filesystem::path &path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_timetags(s, out);
}

TimeTagStream read_timetags(std::istream &in) {
  std::array<unsigned char, kTimeTagHeaderBytes> hdr{};
  read_exact(in, hdr.data(), hdr.size(), 0, "header");
  if (std::memcmp(hdr.data(), "FTAG", 4) != 0)
    throw FormatError("bad magic, expected \"FTAG\"", 0);
  const auto version = get_le<std::uint16_t>(hdr.data() + 4);
  if (version != kTimeTagFormatVersion)
    throw FormatError("unsupported format version " + std::to_string(version), 4);
  TimeTagStream s;
  s.resolution_ps = get_le<std::uint32_t>(hdr.data() + 6);
  if (s.resolution_ps == 0)
    throw FormatError("resolution must be positive", 6);
  s.channel_id = hdr[10];
  for (std::size_t i = 11; i < 16; ++i)
    if (hdr[i] != 0)
      throw FormatError("reserved header bytes must be zero", i);
  const auto count = get_le<std::uint64_t>(hdr.data() + 16);

  constexpr std::size_t kBlock = 1 << 16;
  std::vector<unsigned char> buf(kBlock * 8);
  std::uint64_t done = 0;
  s.tags.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  while (done < count) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(kBlock, count - done));
    const std::uint64_t offset = kTimeTagHeaderBytes + done * 8;
    read_exact(in, buf.data(), n * 8, offset, "tags");
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = get_le<std::uint64_t>(buf.data() + i * 8);
      if (!s.tags.empty() && t < s.tags.back())
        throw FormatError("tags are not monotonically non-decreasing", offset + i * 8);
      s.tags.push_back(t);
    }
    done += n;
  }
  return s;
}

TimeTagStream read_timetags(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  return read_timetags(in);
}

} // namespace franson
