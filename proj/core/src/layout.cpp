/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/layout.hpp"

#include <algorithm>
#include <array>

#include "terc/error.hpp"

namespace terc {

std::string_view to_string(LayoutOrder order) {
  switch (order) {
    case LayoutOrder::RecordMajor: return "record_major";
    case LayoutOrder::PerStepColumns: return "per_step_columns";
    case LayoutOrder::TimeMajor: return "time_major";
    case LayoutOrder::InstanceMajor: return "instance_major";
  }
  return "?";
}

namespace {

/// Reference to one flat (timestep, entity) record.
struct FlatRef {
  std::uint64_t uid;
  std::uint32_t step;
  std::uint32_t obs;
  std::uint32_t ent;
};

std::vector<FlatRef> flatten_refs(const Schema& schema, const ReplaySequence& seq) {
  const std::size_t uid_idx = schema.instance_id_index();
  std::vector<FlatRef> refs;
  std::size_t total = 0;
  for (const auto& obs : seq.observations) total += obs.entities.size();
  refs.reserve(total);
  for (std::uint32_t o = 0; o < seq.observations.size(); ++o) {
    const auto& obs = seq.observations[o];
    for (std::uint32_t e = 0; e < obs.entities.size(); ++e) {
      refs.push_back({as_uid(obs.entities[e].values[uid_idx]), obs.step, o, e});
    }
  }
  return refs;
}

}  // namespace

FlattenedSoA flatten_sort(const Schema& schema, const ReplaySequence& seq) {
  auto refs = flatten_refs(schema, seq);
  std::stable_sort(refs.begin(), refs.end(),
                   [](const FlatRef& a, const FlatRef& b) { return a.uid < b.uid; });

  FlattenedSoA flat;
  flat.declared_step_count = seq.declared_step_count;
  flat.columns.reserve(schema.entity_fields.size());
  for (std::size_t f = 0; f < schema.entity_fields.size(); ++f) {
    Column col(schema.entity_fields[f].scalar_type);
    col.reserve(refs.size());
    for (const auto& r : refs) {
      col.append(seq.observations[r.obs].entities[r.ent].values[f]);
    }
    flat.columns.push_back(std::move(col));
  }
  flat.indices.reserve(refs.size());
  for (const auto& r : refs) flat.indices.push_back(r.step);
  return flat;
}

std::vector<std::vector<EntityRecord>> reconstruct(const Schema& schema,
                                                   const FlattenedSoA& flat) {
  for (std::uint32_t idx : flat.indices) {
    if (idx >= flat.declared_step_count) {
      raise(Errc::CorruptIndex, "timestep index " + std::to_string(idx) +
                                    " outside declared_step_count " +
                                    std::to_string(flat.declared_step_count));
    }
  }
  if (flat.columns.size() != schema.entity_fields.size()) {
    raise(Errc::CorruptIndex, "column count does not match schema");
  }
  for (const auto& col : flat.columns) {
    if (col.size() != flat.indices.size()) {
      raise(Errc::CorruptIndex, "column length does not match index length");
    }
  }

  std::vector<std::vector<EntityRecord>> steps(flat.declared_step_count);
  {
    std::vector<std::uint32_t> counts(flat.declared_step_count, 0);
    for (std::uint32_t idx : flat.indices) ++counts[idx];
    for (std::size_t t = 0; t < steps.size(); ++t) steps[t].reserve(counts[t]);
  }
  const std::size_t fields = flat.columns.size();
  for (std::size_t k = 0; k < flat.indices.size(); ++k) {
    EntityRecord rec;
    rec.values.reserve(fields);
    for (std::size_t f = 0; f < fields; ++f) rec.values.push_back(flat.columns[f].at(k));
    steps[flat.indices[k]].push_back(std::move(rec));
  }
  return steps;
}

std::vector<std::byte> relayout(const Schema& schema, const ReplaySequence& seq,
                                LayoutOrder order) {
  wire::Writer out;
  const std::size_t fields = schema.entity_fields.size();
  switch (order) {
    case LayoutOrder::RecordMajor:
      for (const auto& obs : seq.observations) {
        for (const auto& ent : obs.entities) {
          for (const auto& v : ent.values) append_value(out, v);
        }
      }
      break;
    case LayoutOrder::PerStepColumns:
      for (const auto& obs : seq.observations) {
        for (std::size_t f = 0; f < fields; ++f) {
          for (const auto& ent : obs.entities) append_value(out, ent.values[f]);
        }
      }
      break;
    case LayoutOrder::TimeMajor:
      for (std::size_t f = 0; f < fields; ++f) {
        for (const auto& obs : seq.observations) {
          for (const auto& ent : obs.entities) append_value(out, ent.values[f]);
        }
      }
      break;
    case LayoutOrder::InstanceMajor: {
      const FlattenedSoA flat = flatten_sort(schema, seq);
      for (const auto& col : flat.columns) out.put_bytes(col.bytes());
      for (std::uint32_t idx : flat.indices) out.put(idx);
      break;
    }
  }
  return out.take();
}

PackedPlane pack_bits(const Plane& plane) {
  PackedPlane packed;
  packed.width = plane.width;
  packed.height = plane.height;
  const std::size_t pixels = plane.pixels.size();
  packed.bytes.assign((pixels + 7) / 8, 0);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (plane.pixels[i] != 0) packed.bytes[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
  }
  return packed;
}

Plane unpack_bits(const PackedPlane& packed) {
  const std::size_t pixels = static_cast<std::size_t>(packed.width) * packed.height;
  if (packed.bytes.size() != (pixels + 7) / 8) {
    raise(Errc::FormatError, "packed plane byte count does not match geometry");
  }
  Plane plane;
  plane.width = packed.width;
  plane.height = packed.height;
  plane.pixels.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    plane.pixels[i] = (packed.bytes[i >> 3] >> (i & 7)) & 1u;
  }
  // Pad bits beyond the last pixel must be zero.
  if (pixels % 8 != 0 && !packed.bytes.empty()) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xffu << (pixels % 8));
    if ((packed.bytes.back() & pad_mask) != 0) {
      raise(Errc::NonZeroPadding, "trailing pad bits set in packed plane");
    }
  }
  return plane;
}

}  // namespace terc
