#pragma once

// Binary checkpoint: magic, version, architecture hash, free-form metadata,
// then named float32 blocks. All integers and floats little-endian.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vinenav/rng.hpp"

namespace vinenav {

inline constexpr char kCheckpointMagic[8] = {'V', 'N', 'C', 'K', 'P', 'T', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Raised when a checkpoint was written for a different network layout.
class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::uint64_t arch_hash = 0;
  std::string metadata;
  std::map<std::string, std::vector<float>> blocks;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::uint64_t arch_hash(const std::string& description) { return detail::fnv1a(description); }

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_le<std::uint64_t>(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

inline std::string read_string(std::istream& is, std::uint64_t limit) {
  const auto n = read_le<std::uint64_t>(is);
  if (n > limit) throw std::runtime_error("corrupt checkpoint string length");
  std::string s(n, '\0');
  if (!is.read(s.data(), std::streamsize(n))) throw std::runtime_error("truncated checkpoint");
  return s;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_le(os, kCheckpointVersion);
  detail::write_le(os, ck.arch_hash);
  detail::write_string(os, ck.metadata);
  detail::write_le<std::uint32_t>(os, std::uint32_t(ck.blocks.size()));
  for (const auto& [name, data] : ck.blocks) {
    detail::write_string(os, name);
    detail::write_le<std::uint64_t>(os, data.size());
    for (float f : data) detail::write_le(os, f);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

/// Loads a checkpoint; with a nonzero expected_hash a different architecture
/// hash raises CheckpointMismatch.
inline Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_hash = 0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint: " + path);
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.arch_hash = detail::read_le<std::uint64_t>(is);
  if (expected_hash != 0 && ck.arch_hash != expected_hash)
    throw CheckpointMismatch("checkpoint architecture hash does not match: " + path);
  ck.metadata = detail::read_string(is, 1u << 24);
  const auto n = detail::read_le<std::uint32_t>(is);
  for (std::uint32_t b = 0; b < n; ++b) {
    std::string name = detail::read_string(is, 4096);
    const auto count = detail::read_le<std::uint64_t>(is);
    if (count > (1ull << 32)) throw std::runtime_error("corrupt checkpoint block size");
    std::vector<float> data(count);
    for (float& f : data) f = detail::read_le<float>(is);
    ck.blocks.emplace(std::move(name), std::move(data));
  }
  return ck;
}

}  // namespace vinenav
