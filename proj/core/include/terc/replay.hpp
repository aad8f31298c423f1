/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "terc/schema.hpp"
#include "terc/wire.hpp"

namespace terc {

/// One field value. Alternative order mirrors ScalarType so
/// `value.index() == static_cast<size_t>(type)` holds for well-typed data.
using FieldValue = std::variant<std::uint8_t, std::uint16_t, std::uint32_t, std::uint64_t,
                                std::int32_t, float, double, bool>;

[[nodiscard]] inline ScalarType value_type(const FieldValue& v) {
  return static_cast<ScalarType>(v.index());
}

/// Numeric view of any alternative (bool maps to 0/1).
[[nodiscard]] double as_double(const FieldValue& v);

/// Instance id view; valid for unsigned alternatives only, throws
/// SchemaMismatch otherwise.
[[nodiscard]] std::uint64_t as_uid(const FieldValue& v);

/// Builds an unsigned FieldValue of the given width from a UID.
[[nodiscard]] FieldValue uid_value(ScalarType type, std::uint64_t uid);

[[nodiscard]] FieldValue value_from_double(ScalarType type, double v);

/// One entity at one timestep: values in schema field order.
struct EntityRecord {
  std::vector<FieldValue> values;

  bool operator==(const EntityRecord&) const = default;
};

/// Row-major 2-D channel; boolean planes store pixels as 0/1 bytes until
/// they are bit-packed for serialization.
struct Plane {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const Plane&) const = default;
};

struct Observation {
  std::uint32_t step = 0;
  std::vector<EntityRecord> entities;
  std::vector<FieldValue> scalars;  // one per schema scalar channel
  std::vector<Plane> planes;        // one per schema plane channel

  bool operator==(const Observation&) const = default;
};

struct ReplayMetadata {
  std::string replay_id;
  std::string scenario_tag;
  std::uint64_t duration_steps = 0;  // equals the owning sequence's declared_step_count
  std::uint64_t entity_count_peak = 0;
  std::uint64_t action_count = 0;
  std::optional<std::int32_t> outcome_label;
  std::uint64_t schema_hash = 0;

  bool operator==(const ReplayMetadata&) const = default;

  void serialize(wire::Writer& out) const;
  static ReplayMetadata deserialize(wire::Reader& in);
};

/// Time-major recording of one episode. Observations are strictly
/// increasing in step; declared_step_count preserves trailing empty steps
/// across round trips.
struct ReplaySequence {
  ReplayMetadata metadata;
  std::vector<Observation> observations;
  std::uint64_t declared_step_count = 0;

  bool operator==(const ReplaySequence&) const = default;
};

/// Structural check of a sequence against its schema (field counts/types,
/// plane geometry, step ordering, unique UIDs per step, metadata/step-count
/// agreement). Throws SchemaMismatch with the first offence.
void validate_sequence(const Schema& schema, const ReplaySequence& seq);

/// Canonical form: entities sorted by UID within each observation.
/// Entity order inside a timestep is otherwise semantically unordered.
[[nodiscard]] ReplaySequence canonicalize(const Schema& schema, ReplaySequence seq);

/// Contiguous little-endian column of one scalar type; the unit of
/// structure-of-arrays storage.
class Column {
public:
  Column() = default;
  explicit Column(ScalarType type) : type_(type) {}

  [[nodiscard]] ScalarType type() const noexcept { return type_; }
  [[nodiscard]] std::size_t size() const noexcept {
    return bytes_.size() / scalar_width(type_);
  }
  [[nodiscard]] const std::vector<std::byte>& bytes() const noexcept { return bytes_; }

  void reserve(std::size_t count) { bytes_.reserve(count * scalar_width(type_)); }
  void append(const FieldValue& v);
  [[nodiscard]] FieldValue at(std::size_t i) const;

  static Column from_bytes(ScalarType type, std::span<const std::byte> bytes);

  bool operator==(const Column&) const = default;

private:
  ScalarType type_ = ScalarType::U8;
  std::vector<std::byte> bytes_;
};

/// LE-encode a single value (used by row-ordered layouts).
void append_value(wire::Writer& out, const FieldValue& v);
[[nodiscard]] FieldValue read_value(wire::Reader& in, ScalarType type);

}  // namespace terc
