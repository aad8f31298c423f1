/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "terc/codec.hpp"
#include "terc/layout.hpp"
#include "terc/replay.hpp"
#include "terc/schema.hpp"

// Multi-replay container file. Layout:
//
//   header   magic "TERC0001", format_version u16, schema_hash u64,
//            index_offset u64 (patched at finalize), flags u32
//            (bit0 = finalized, bits 8..15 = codec level)
//   schema   u32 length + canonical schema text
//   entries  per entry, four sections in fixed order
//            (Metadata, Scalars, Planes, Entities), each:
//              section header: section_id u32, uncompressed_len u64,
//                              compressed_len u64, checksum u32 (CRC-32 of
//                              the compressed payload)
//              payload: zlib-framed DEFLATE stream
//   index    entry_count u64, then per entry:
//            replay_id (u32 length + bytes), byte_offset u64, byte_length u64
//
// All integers little-endian. Sections are ordered smallest-first so
// partial reads stop early: metadata, then scalars, then planes, then
// entities.

namespace terc {

inline constexpr std::array<char, 8> kContainerMagic = {'T', 'E', 'R', 'C',
                                                        '0', '0', '0', '1'};
inline constexpr std::uint16_t kContainerFormatVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 8 + 2 + 8 + 8 + 4;
inline constexpr std::size_t kSectionHeaderSize = 4 + 8 + 8 + 4;

enum class SectionId : std::uint32_t { Metadata = 0, Scalars = 1, Planes = 2, Entities = 3 };
inline constexpr std::size_t kSectionCount = 4;

[[nodiscard]] std::string_view to_string(SectionId id);

struct SectionHeader {
  SectionId id = SectionId::Metadata;
  std::uint64_t uncompressed_len = 0;
  std::uint64_t compressed_len = 0;
  std::uint32_t checksum = 0;
};

struct IndexEntry {
  std::string replay_id;
  std::uint64_t byte_offset = 0;  // file offset of the entry's first section header
  std::uint64_t byte_length = 0;  // section headers + payloads
};

struct WriterSummary {
  std::uint64_t entry_count = 0;
  std::uint64_t total_bytes = 0;
  std::array<std::uint64_t, kSectionCount> per_section_bytes{};  // compressed payloads
};

/// Exclusive single-writer handle. Entries stream to disk as they are
/// appended; only the index is held in memory.
class ContainerWriter {
public:
  static ContainerWriter create(const std::filesystem::path& path, const Schema& schema,
                                int codec_level = kDefaultCodecLevel);

  ContainerWriter(ContainerWriter&&) = default;
  ContainerWriter& operator=(ContainerWriter&&) = default;

  /// Validates, flattens, compresses and writes one sequence; returns its
  /// ordinal.
  std::uint64_t append(const ReplaySequence& seq);

  /// Writes the trailing index and patches the header. Idempotent.
  WriterSummary finalize();

  [[nodiscard]] std::uint64_t entry_count() const noexcept { return index_.size(); }
  [[nodiscard]] const Schema& schema() const noexcept { return schema_; }

private:
  ContainerWriter() = default;

  Schema schema_;
  std::uint64_t schema_hash_ = 0;
  int codec_level_ = kDefaultCodecLevel;
  std::ofstream out_;
  std::filesystem::path path_;
  std::uint64_t cursor_ = 0;
  std::vector<IndexEntry> index_;
  std::array<std::uint64_t, kSectionCount> per_section_bytes_{};
  bool finalized_ = false;
  WriterSummary summary_{};
};

enum class ReadLevel : std::uint8_t { MetadataOnly = 0, Scalars = 1, Planes = 2, Full = 3 };

[[nodiscard]] std::string_view to_string(ReadLevel level);

/// Sections decoded so far for one entry; levels below Full leave the
/// later vectors empty.
struct PartialReplay {
  ReadLevel level = ReadLevel::MetadataOnly;
  ReplayMetadata metadata;
  std::uint64_t declared_step_count = 0;          // from metadata.duration_steps
  std::vector<std::uint32_t> steps;               // Scalars level and up
  std::vector<std::vector<FieldValue>> scalars;   // per observation
  std::vector<std::vector<Plane>> planes;         // per observation (Planes level and up)
  std::vector<std::vector<EntityRecord>> entities;  // per observation (Full)

  /// Reassembles a time-major ReplaySequence; requires level Full.
  /// Consumes the partial (rvalue only).
  [[nodiscard]] ReplaySequence to_sequence() &&;
};

/// Shared-state read handle; safe for concurrent read() calls (positioned
/// reads, atomic instrumentation).
class ContainerReader {
public:
  static ContainerReader open(const std::filesystem::path& path);

  [[nodiscard]] const Schema& schema() const noexcept { return schema_; }
  [[nodiscard]] std::uint64_t schema_content_hash() const noexcept { return schema_hash_; }
  [[nodiscard]] std::uint64_t entry_count() const noexcept { return index_.size(); }
  [[nodiscard]] const std::vector<IndexEntry>& index() const noexcept { return index_; }
  [[nodiscard]] int codec_level() const noexcept { return codec_level_; }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  /// File offset of the trailing index (end of the last entry).
  [[nodiscard]] std::uint64_t index_offset() const noexcept { return index_offset_; }

  /// Decompresses exactly the sections at or before `level`.
  [[nodiscard]] PartialReplay read(std::uint64_t entry, ReadLevel level) const;

  /// Full read reassembled into a canonical time-major sequence.
  [[nodiscard]] ReplaySequence read_sequence(std::uint64_t entry) const;

  /// Section headers of one entry (no payload decompression).
  [[nodiscard]] std::array<SectionHeader, kSectionCount> section_headers(
      std::uint64_t entry) const;

  /// Total uncompressed bytes inflated by this handle so far.
  [[nodiscard]] std::uint64_t decompressed_bytes() const noexcept {
    return decompressed_bytes_->load();
  }

private:
  ContainerReader() = default;

  [[nodiscard]] std::vector<std::byte> read_at(std::uint64_t offset, std::size_t len) const;
  [[nodiscard]] std::vector<std::byte> read_section_payload(const IndexEntry& entry,
                                                            SectionId wanted) const;

  struct FdHolder;
  std::shared_ptr<FdHolder> fd_;
  std::shared_ptr<std::atomic<std::uint64_t>> decompressed_bytes_;
  std::filesystem::path path_;
  Schema schema_;
  std::uint64_t schema_hash_ = 0;
  int codec_level_ = kDefaultCodecLevel;
  std::uint64_t index_offset_ = 0;
  std::vector<IndexEntry> index_;
};

struct VerifyFailure {
  std::uint64_t entry = 0;
  SectionId section = SectionId::Metadata;
  std::string detail;
};

struct VerifyReport {
  bool file_ok = false;           // header and schema parse
  bool index_consistent = false;  // index present, offsets/lengths add up
  std::uint64_t entries_ok = 0;
  std::vector<VerifyFailure> checksum_failures;
  std::string note;

  [[nodiscard]] bool ok() const {
    return file_ok && index_consistent && checksum_failures.empty();
  }
};

/// Revalidates every section checksum and cross-checks the index against
/// section lengths. Findings are data; never throws.
[[nodiscard]] VerifyReport verify_container(const std::filesystem::path& path);

/// Serialized section payload builders, shared by the writer and the
/// naive-serialization size comparison in the benchmark suite.
namespace detail {
[[nodiscard]] std::vector<std::byte> metadata_section(const ReplayMetadata& metadata);
[[nodiscard]] std::vector<std::byte> scalars_section(const Schema& schema,
                                                     const ReplaySequence& seq);
[[nodiscard]] std::vector<std::byte> planes_section(const Schema& schema,
                                                    const ReplaySequence& seq);
[[nodiscard]] std::vector<std::byte> entities_section(const Schema& schema,
                                                      const ReplaySequence& seq);
}  // namespace detail

}  // namespace terc
