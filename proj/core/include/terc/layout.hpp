/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "terc/replay.hpp"
#include "terc/schema.hpp"

namespace terc {

/// Output of the instance-major flatten: one column per entity field, all
/// of equal length L, plus the originating timestep of each flat record.
struct FlattenedSoA {
  std::vector<Column> columns;          // schema entity-field order
  std::vector<std::uint32_t> indices;   // timestep of flat record k
  std::uint64_t declared_step_count = 0;

  [[nodiscard]] std::size_t record_count() const noexcept { return indices.size(); }

  bool operator==(const FlattenedSoA&) const = default;
};

/// The four dimension orderings compared by the layout benchmark, named by
/// traversal nesting (outer to inner).
enum class LayoutOrder : std::uint8_t {
  RecordMajor,    // timestep, then entity, then field: interleaved records (naive)
  PerStepColumns, // timestep, then field, then entity: columns within each step
  TimeMajor,      // field, then timestep, then entity: whole-replay columns
  InstanceMajor,  // field, then entity, then timestep: whole-replay columns grouped by UID
};

[[nodiscard]] std::string_view to_string(LayoutOrder order);
inline constexpr std::array<LayoutOrder, 4> kAllLayoutOrders = {
    LayoutOrder::RecordMajor, LayoutOrder::PerStepColumns, LayoutOrder::TimeMajor,
    LayoutOrder::InstanceMajor};

/// Flattens (timestep, entity) pairs in observation order, stable-sorts by
/// instance id (stability keeps each instance's time series in order), and
/// transposes to per-field columns.
[[nodiscard]] FlattenedSoA flatten_sort(const Schema& schema, const ReplaySequence& seq);

/// Inverse transform: per-timestep entity lists, exactly
/// declared_step_count of them, record k appended to indices[k] in flat
/// order (so entities come out UID-sorted within each step). Throws
/// CorruptIndex when an index exceeds declared_step_count.
[[nodiscard]] std::vector<std::vector<EntityRecord>> reconstruct(const Schema& schema,
                                                                 const FlattenedSoA& flat);

/// Serializes entity values of a whole sequence in the given dimension
/// order (pre-compression buffer). Ragged timesteps are emitted unpadded.
/// InstanceMajor delegates to flatten_sort and appends the index column.
[[nodiscard]] std::vector<std::byte> relayout(const Schema& schema, const ReplaySequence& seq,
                                              LayoutOrder order);

/// Bit-packed boolean plane: LSB-first within each octet, row-major pixel
/// order, trailing pad bits zero.
struct PackedPlane {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bytes;

  bool operator==(const PackedPlane&) const = default;
};

[[nodiscard]] PackedPlane pack_bits(const Plane& plane);

/// Exact inverse of pack_bits; set pad bits raise NonZeroPadding.
[[nodiscard]] Plane unpack_bits(const PackedPlane& packed);

}  // namespace terc
