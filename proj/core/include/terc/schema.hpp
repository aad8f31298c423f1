/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace terc {

/// Scalar types entity fields and scalar channels may carry. The numeric
/// values double as FieldValue variant indices — keep both in sync.
enum class ScalarType : std::uint8_t { U8 = 0, U16, U32, U64, I32, F32, F64, Bool };

[[nodiscard]] std::size_t scalar_width(ScalarType t);
[[nodiscard]] bool is_unsigned_int(ScalarType t);
[[nodiscard]] bool is_numeric(ScalarType t);
[[nodiscard]] std::string_view to_string(ScalarType t);
[[nodiscard]] std::optional<ScalarType> scalar_type_from(std::string_view token);

/// How quickly a field's value is expected to change; informational tag
/// that also drives the synthetic generator's default behavior.
enum class FieldDynamics : std::uint8_t { Static, Slow, Fast };

[[nodiscard]] std::string_view to_string(FieldDynamics d);
[[nodiscard]] std::optional<FieldDynamics> dynamics_from(std::string_view token);

enum class FieldRole : std::uint8_t { InstanceId, Position, Quantity, Generic };

[[nodiscard]] std::string_view to_string(FieldRole r);
[[nodiscard]] std::optional<FieldRole> role_from(std::string_view token);

struct FieldDescriptor {
  std::string name;
  ScalarType scalar_type = ScalarType::U32;
  FieldDynamics dynamics = FieldDynamics::Slow;
  FieldRole role = FieldRole::Generic;
  /// Reported for a quantity-role field before the entity was ever
  /// observed with a nonzero quantity.
  double quantity_default = 0.0;

  bool operator==(const FieldDescriptor&) const = default;
};

enum class PlaneElement : std::uint8_t { Bool, U8 };

struct PlaneSpec {
  std::string name;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PlaneElement element = PlaneElement::Bool;

  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  /// Serialized bytes for one plane of this spec.
  [[nodiscard]] std::size_t serialized_size() const {
    return element == PlaneElement::Bool ? (pixel_count() + 7) / 8 : pixel_count();
  }

  bool operator==(const PlaneSpec&) const = default;
};

/// Declarative description of everything a replay observation carries.
/// Field order is fixed at creation; serialization depends on it.
struct Schema {
  std::vector<FieldDescriptor> entity_fields;
  std::vector<FieldDescriptor> scalar_channels;
  std::vector<PlaneSpec> plane_channels;
  /// Wall-clock seconds represented by one step; feeds the APM analog.
  double step_seconds = 1.0 / 22.4;

  bool operator==(const Schema&) const = default;

  /// Index of the instance_id field; throws SchemaInvalid when missing.
  [[nodiscard]] std::size_t instance_id_index() const;
  /// (x, y) field indices when a position pair is declared.
  [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>> position_indices() const;
  [[nodiscard]] std::optional<std::size_t> quantity_index() const;
  /// Sum of entity field widths in bytes.
  [[nodiscard]] std::size_t entity_record_width() const;
};

struct SchemaViolation {
  std::string field;  // offending field name; empty for schema-level issues
  std::string message;
};

struct ValidationReport {
  std::vector<SchemaViolation> violations;
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Checks every Schema and FieldDescriptor invariant; violations are data,
/// not failures.
[[nodiscard]] ValidationReport validate_schema(const Schema& schema);

/// Canonical one-line-per-field text form. These exact bytes feed
/// schema_hash and are embedded in container files.
[[nodiscard]] std::string canonical_text(const Schema& schema);

/// Parses canonical text back into a Schema; throws SchemaInvalid.
[[nodiscard]] Schema parse_schema_text(std::string_view text);

/// 64-bit FNV-1a over canonical_text(schema).
[[nodiscard]] std::uint64_t schema_hash(const Schema& schema);

}  // namespace terc
