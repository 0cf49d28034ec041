#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace koos::gz {

inline bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

// RFC 1952 framing via zlib. The member header is pinned (mtime 0, no name,
// fixed OS byte) so identical input always yields identical bytes.
std::vector<std::uint8_t> compress(std::span<const std::uint8_t> bytes, int level = 6);

// Throws Error(truncated_data) on premature end of stream and
// Error(io_error) on corrupt framing or checksum.
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes);

} // namespace koos::gz
