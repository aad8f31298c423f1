/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace terc {

/// Codec level pinned for container determinism.
inline constexpr int kDefaultCodecLevel = 6;

/// DEFLATE with zlib framing, so sections remain readable by standard
/// tools given their offsets.
[[nodiscard]] std::vector<std::byte> deflate_compress(std::span<const std::byte> input,
                                                      int level = kDefaultCodecLevel);

/// Inflates a zlib stream whose uncompressed size is known from the
/// section header.
[[nodiscard]] std::vector<std::byte> deflate_decompress(std::span<const std::byte> input,
                                                        std::size_t uncompressed_size);

/// CRC-32 (IEEE) of a byte span.
[[nodiscard]] std::uint32_t crc32_of(std::span<const std::byte> input);

}  // namespace terc
