/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/codec.hpp"

#include <zlib.h>

#include <string>

#include "terc/error.hpp"

namespace terc {

namespace {
// zlib rejects null buffers even for zero lengths; give empty spans a home.
const Bytef kEmpty[1] = {0};

const Bytef* src_ptr(std::span<const std::byte> s) {
  return s.empty() ? kEmpty : reinterpret_cast<const Bytef*>(s.data());
}
}  // namespace

std::vector<std::byte> deflate_compress(std::span<const std::byte> input, int level) {
  uLongf bound = compressBound(static_cast<uLong>(input.size()));
  std::vector<std::byte> out(bound);
  int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &bound, src_ptr(input),
                     static_cast<uLong>(input.size()), level);
  if (rc != Z_OK) {
    raise(Errc::IoFailure, "deflate failed with zlib status " + std::to_string(rc));
  }
  out.resize(bound);
  return out;
}

std::vector<std::byte> deflate_decompress(std::span<const std::byte> input,
                                          std::size_t uncompressed_size) {
  std::vector<std::byte> out(uncompressed_size > 0 ? uncompressed_size : 1);
  uLongf dest_len = static_cast<uLongf>(uncompressed_size);
  int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &dest_len, src_ptr(input),
                      static_cast<uLong>(input.size()));
  if (rc != Z_OK || dest_len != uncompressed_size) {
    raise(Errc::ChecksumMismatch, "inflate failed with zlib status " + std::to_string(rc));
  }
  out.resize(uncompressed_size);
  return out;
}

std::uint32_t crc32_of(std::span<const std::byte> input) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, src_ptr(input), static_cast<uInt>(input.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace terc
