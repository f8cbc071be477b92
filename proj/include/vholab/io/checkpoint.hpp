#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vholab/errors.hpp"
#include "vholab/io/binio.hpp"

namespace vholab {

// ---------------------------------------------------------------------------
// Checkpoint container: magic, format version, length-prefixed payload and
// an FNV-1a checksum over everything before it.  Integrity and version are
// verified before any payload byte is interpreted, so a corrupt or
// incompatible file can never partially load.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kCheckpointMagic = 0x314b43424c4f4856ULL;  // "VHOLBCK1"
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void write_checkpoint(const std::string& path,
                             const std::vector<std::uint8_t>& payload) {
  BinWriter head;
  head.u64(kCheckpointMagic);
  head.u32(kCheckpointVersion);
  head.u64(payload.size());

  std::uint64_t sum = fnv1a(head.bytes().data(), head.bytes().size());
  sum = fnv1a(payload.data(), payload.size(), sum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(head.bytes().data()),
            static_cast<std::streamsize>(head.bytes().size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  BinWriter tail;
  tail.u64(sum);
  out.write(reinterpret_cast<const char*>(tail.bytes().data()), 8);
  if (!out) throw DataError("short write to checkpoint: " + path);
}

inline std::vector<std::uint8_t> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 8 + 4 + 8;
  if (bytes.size() < kHeader + 8)
    throw DataError("checkpoint truncated: " + path);

  BinReader head(std::vector<std::uint8_t>(bytes.begin(),
                                           bytes.begin() + kHeader));
  if (head.u64() != kCheckpointMagic)
    throw DataError("not a checkpoint file: " + path);
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + "): " + path);
  const std::uint64_t payload_len = head.u64();
  if (bytes.size() != kHeader + payload_len + 8)
    throw DataError("checkpoint length mismatch (truncated or trailing data): " +
                    path);

  const std::uint64_t stored = [&] {
    BinReader tail(std::vector<std::uint8_t>(bytes.end() - 8, bytes.end()));
    return tail.u64();
  }();
  const std::uint64_t computed = fnv1a(bytes.data(), kHeader + payload_len);
  if (stored != computed)
    throw DataError("checkpoint checksum mismatch (file is corrupt): " + path);

  return std::vector<std::uint8_t>(bytes.begin() + kHeader,
                                   bytes.end() - 8);
}

}  // namespace vholab
