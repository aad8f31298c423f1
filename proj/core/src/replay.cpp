/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/replay.hpp"

#include <algorithm>
#include <set>

#include "terc/error.hpp"

namespace terc {

double as_double(const FieldValue& v) {
  return std::visit([](auto x) -> double { return static_cast<double>(x); }, v);
}

std::uint64_t as_uid(const FieldValue& v) {
  switch (value_type(v)) {
    case ScalarType::U8: return std::get<std::uint8_t>(v);
    case ScalarType::U16: return std::get<std::uint16_t>(v);
    case ScalarType::U32: return std::get<std::uint32_t>(v);
    case ScalarType::U64: return std::get<std::uint64_t>(v);
    default:
      raise(Errc::SchemaMismatch, "instance id value is not an unsigned integer");
  }
}

FieldValue uid_value(ScalarType type, std::uint64_t uid) {
  switch (type) {
    case ScalarType::U8: return static_cast<std::uint8_t>(uid);
    case ScalarType::U16: return static_cast<std::uint16_t>(uid);
    case ScalarType::U32: return static_cast<std::uint32_t>(uid);
    case ScalarType::U64: return uid;
    default:
      raise(Errc::SchemaInvalid, "instance_id field must be an unsigned integer type");
  }
}

FieldValue value_from_double(ScalarType type, double v) {
  switch (type) {
    case ScalarType::U8: return static_cast<std::uint8_t>(v);
    case ScalarType::U16: return static_cast<std::uint16_t>(v);
    case ScalarType::U32: return static_cast<std::uint32_t>(v);
    case ScalarType::U64: return static_cast<std::uint64_t>(v);
    case ScalarType::I32: return static_cast<std::int32_t>(v);
    case ScalarType::F32: return static_cast<float>(v);
    case ScalarType::F64: return v;
    case ScalarType::Bool: return v != 0.0;
  }
  raise(Errc::SchemaInvalid, "bad scalar type");
}

void ReplayMetadata::serialize(wire::Writer& out) const {
  out.put_string(replay_id);
  out.put_string(scenario_tag);
  out.put(duration_steps);
  out.put(entity_count_peak);
  out.put(action_count);
  out.put_bool(outcome_label.has_value());
  out.put<std::int32_t>(outcome_label.value_or(0));
  out.put(schema_hash);
}

ReplayMetadata ReplayMetadata::deserialize(wire::Reader& in) {
  ReplayMetadata m;
  m.replay_id = in.get_string();
  m.scenario_tag = in.get_string();
  m.duration_steps = in.get<std::uint64_t>();
  m.entity_count_peak = in.get<std::uint64_t>();
  m.action_count = in.get<std::uint64_t>();
  const bool has_outcome = in.get_bool();
  const auto outcome = in.get<std::int32_t>();
  if (has_outcome) m.outcome_label = outcome;
  m.schema_hash = in.get<std::uint64_t>();
  return m;
}

void append_value(wire::Writer& out, const FieldValue& v) {
  switch (value_type(v)) {
    case ScalarType::U8: out.put(std::get<std::uint8_t>(v)); break;
    case ScalarType::U16: out.put(std::get<std::uint16_t>(v)); break;
    case ScalarType::U32: out.put(std::get<std::uint32_t>(v)); break;
    case ScalarType::U64: out.put(std::get<std::uint64_t>(v)); break;
    case ScalarType::I32: out.put(std::get<std::int32_t>(v)); break;
    case ScalarType::F32: out.put_f32(std::get<float>(v)); break;
    case ScalarType::F64: out.put_f64(std::get<double>(v)); break;
    case ScalarType::Bool: out.put_bool(std::get<bool>(v)); break;
  }
}

FieldValue read_value(wire::Reader& in, ScalarType type) {
  switch (type) {
    case ScalarType::U8: return in.get<std::uint8_t>();
    case ScalarType::U16: return in.get<std::uint16_t>();
    case ScalarType::U32: return in.get<std::uint32_t>();
    case ScalarType::U64: return in.get<std::uint64_t>();
    case ScalarType::I32: return in.get<std::int32_t>();
    case ScalarType::F32: return in.get_f32();
    case ScalarType::F64: return in.get_f64();
    case ScalarType::Bool: return in.get_bool();
  }
  raise(Errc::FormatError, "bad scalar type tag");
}

void Column::append(const FieldValue& v) {
  if (value_type(v) != type_) {
    raise(Errc::SchemaMismatch, "column type mismatch: expected " +
                                    std::string(to_string(type_)) + ", got " +
                                    std::string(to_string(value_type(v))));
  }
  const std::size_t at = bytes_.size();
  bytes_.resize(at + scalar_width(type_));
  std::byte* dst = bytes_.data() + at;
  switch (type_) {
    case ScalarType::U8: wire::store_le(dst, std::get<std::uint8_t>(v)); break;
    case ScalarType::U16: wire::store_le(dst, std::get<std::uint16_t>(v)); break;
    case ScalarType::U32: wire::store_le(dst, std::get<std::uint32_t>(v)); break;
    case ScalarType::U64: wire::store_le(dst, std::get<std::uint64_t>(v)); break;
    case ScalarType::I32: wire::store_le(dst, std::get<std::int32_t>(v)); break;
    case ScalarType::F32: wire::store_le_f32(dst, std::get<float>(v)); break;
    case ScalarType::F64: wire::store_le_f64(dst, std::get<double>(v)); break;
    case ScalarType::Bool:
      wire::store_le<std::uint8_t>(dst, std::get<bool>(v) ? 1 : 0);
      break;
  }
}

FieldValue Column::at(std::size_t i) const {
  const std::byte* src = bytes_.data() + i * scalar_width(type_);
  switch (type_) {
    case ScalarType::U8: return wire::load_le<std::uint8_t>(src);
    case ScalarType::U16: return wire::load_le<std::uint16_t>(src);
    case ScalarType::U32: return wire::load_le<std::uint32_t>(src);
    case ScalarType::U64: return wire::load_le<std::uint64_t>(src);
    case ScalarType::I32: return wire::load_le<std::int32_t>(src);
    case ScalarType::F32: return wire::load_le_f32(src);
    case ScalarType::F64: return wire::load_le_f64(src);
    case ScalarType::Bool: return wire::load_le<std::uint8_t>(src) != 0;
  }
  raise(Errc::FormatError, "bad column type");
}

Column Column::from_bytes(ScalarType type, std::span<const std::byte> bytes) {
  if (bytes.size() % scalar_width(type) != 0) {
    raise(Errc::FormatError, "column byte length not a multiple of element width");
  }
  Column c(type);
  c.bytes_.assign(bytes.begin(), bytes.end());
  return c;
}

void validate_sequence(const Schema& schema, const ReplaySequence& seq) {
  const std::size_t uid_idx = schema.instance_id_index();
  std::uint32_t prev_step = 0;
  bool first = true;
  for (const auto& obs : seq.observations) {
    if (!first && obs.step <= prev_step) {
      raise(Errc::SchemaMismatch, "observation steps not strictly increasing at step " +
                                      std::to_string(obs.step));
    }
    first = false;
    prev_step = obs.step;
    if (obs.step >= seq.declared_step_count) {
      raise(Errc::SchemaMismatch,
            "observation step " + std::to_string(obs.step) +
                " outside declared_step_count " + std::to_string(seq.declared_step_count));
    }
    if (obs.scalars.size() != schema.scalar_channels.size()) {
      raise(Errc::SchemaMismatch, "scalar channel count mismatch at step " +
                                      std::to_string(obs.step));
    }
    for (std::size_t i = 0; i < obs.scalars.size(); ++i) {
      if (value_type(obs.scalars[i]) != schema.scalar_channels[i].scalar_type) {
        raise(Errc::SchemaMismatch,
              "scalar channel type mismatch: " + schema.scalar_channels[i].name);
      }
    }
    if (obs.planes.size() != schema.plane_channels.size()) {
      raise(Errc::SchemaMismatch, "plane channel count mismatch at step " +
                                      std::to_string(obs.step));
    }
    for (std::size_t i = 0; i < obs.planes.size(); ++i) {
      const auto& spec = schema.plane_channels[i];
      const auto& plane = obs.planes[i];
      if (plane.width != spec.width || plane.height != spec.height ||
          plane.pixels.size() != spec.pixel_count()) {
        raise(Errc::SchemaMismatch, "plane geometry mismatch: " + spec.name);
      }
      if (spec.element == PlaneElement::Bool) {
        for (auto px : plane.pixels) {
          if (px > 1) raise(Errc::SchemaMismatch, "bool plane pixel not 0/1: " + spec.name);
        }
      }
    }
    std::set<std::uint64_t> uids;
    for (const auto& ent : obs.entities) {
      if (ent.values.size() != schema.entity_fields.size()) {
        raise(Errc::SchemaMismatch, "entity field count mismatch at step " +
                                        std::to_string(obs.step));
      }
      for (std::size_t i = 0; i < ent.values.size(); ++i) {
        if (value_type(ent.values[i]) != schema.entity_fields[i].scalar_type) {
          raise(Errc::SchemaMismatch,
                "entity field type mismatch: " + schema.entity_fields[i].name);
        }
      }
      if (!uids.insert(as_uid(ent.values[uid_idx])).second) {
        raise(Errc::SchemaMismatch, "duplicate UID within step " + std::to_string(obs.step));
      }
    }
  }
  if (seq.metadata.duration_steps != seq.declared_step_count) {
    raise(Errc::SchemaMismatch, "metadata.duration_steps must equal declared_step_count");
  }
}

ReplaySequence canonicalize(const Schema& schema, ReplaySequence seq) {
  const std::size_t uid_idx = schema.instance_id_index();
  for (auto& obs : seq.observations) {
    std::stable_sort(obs.entities.begin(), obs.entities.end(),
                     [uid_idx](const EntityRecord& a, const EntityRecord& b) {
                       return as_uid(a.values[uid_idx]) < as_uid(b.values[uid_idx]);
                     });
  }
  return seq;
}

}  // namespace terc
