/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <unistd.h>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "terc/replay.hpp"
#include "terc/rng.hpp"
#include "terc/schema.hpp"

// Shared fixtures and property-test generators.

namespace terc::test {

/// Two-field schema used by the worked flatten/reconstruct examples:
/// {uid: u32 instance_id, h: u8}.
inline Schema tiny_schema() {
  Schema s;
  s.entity_fields = {
      {"uid", ScalarType::U32, FieldDynamics::Static, FieldRole::InstanceId, 0.0},
      {"h", ScalarType::U8, FieldDynamics::Fast, FieldRole::Generic, 0.0},
  };
  return s;
}

/// Schema exercising every scalar type plus position/quantity roles, two
/// scalar channels and both plane element kinds.
inline Schema full_schema() {
  Schema s;
  s.entity_fields = {
      {"uid", ScalarType::U64, FieldDynamics::Static, FieldRole::InstanceId, 0.0},
      {"x", ScalarType::F32, FieldDynamics::Fast, FieldRole::Position, 0.0},
      {"y", ScalarType::F32, FieldDynamics::Fast, FieldRole::Position, 0.0},
      {"amount", ScalarType::U16, FieldDynamics::Slow, FieldRole::Quantity, 1500.0},
      {"kind", ScalarType::U8, FieldDynamics::Static, FieldRole::Generic, 0.0},
      {"flags", ScalarType::U32, FieldDynamics::Slow, FieldRole::Generic, 0.0},
      {"seq64", ScalarType::U64, FieldDynamics::Slow, FieldRole::Generic, 0.0},
      {"delta", ScalarType::I32, FieldDynamics::Fast, FieldRole::Generic, 0.0},
      {"weight", ScalarType::F64, FieldDynamics::Fast, FieldRole::Generic, 0.0},
      {"alive", ScalarType::Bool, FieldDynamics::Slow, FieldRole::Generic, 0.0},
  };
  s.scalar_channels = {
      {"score", ScalarType::F32, FieldDynamics::Fast, FieldRole::Generic, 0.0},
      {"active", ScalarType::U16, FieldDynamics::Slow, FieldRole::Generic, 0.0},
  };
  s.plane_channels = {
      {"mask", 8, 5, PlaneElement::Bool},
      {"heat", 4, 4, PlaneElement::U8},
  };
  return s;
}

inline FieldValue random_value(Xoshiro256pp& rng, ScalarType type) {
  switch (type) {
    case ScalarType::U8: return static_cast<std::uint8_t>(rng.next());
    case ScalarType::U16: return static_cast<std::uint16_t>(rng.next());
    case ScalarType::U32: return static_cast<std::uint32_t>(rng.next());
    case ScalarType::U64: return rng.next();
    case ScalarType::I32: return static_cast<std::int32_t>(rng.next());
    case ScalarType::F32: return static_cast<float>(rng.next_unit() * 1000.0);
    case ScalarType::F64: return rng.next_unit() * 1000.0;
    case ScalarType::Bool: return rng.next_below(2) != 0;
  }
  return std::uint8_t{0};
}

inline Plane random_plane(Xoshiro256pp& rng, const PlaneSpec& spec) {
  Plane p;
  p.width = spec.width;
  p.height = spec.height;
  p.pixels.resize(spec.pixel_count());
  for (auto& px : p.pixels) {
    px = spec.element == PlaneElement::Bool ? static_cast<std::uint8_t>(rng.next_below(2))
                                            : static_cast<std::uint8_t>(rng.next());
  }
  return p;
}

struct SequenceOptions {
  std::uint32_t max_steps = 16;
  std::uint32_t max_entities_per_step = 128;
  double observe_probability = 0.6;
  double empty_sequence_probability = 0.05;
};

/// Random valid sequence: sparse observed steps, 0..max entities per step
/// with unique UIDs, random trailing empty steps.
inline ReplaySequence random_sequence(Xoshiro256pp& rng, const Schema& schema,
                                      const SequenceOptions& opt = {}) {
  ReplaySequence seq;
  const bool empty = rng.next_unit() < opt.empty_sequence_probability;
  const std::uint32_t span = empty ? 0 : static_cast<std::uint32_t>(rng.next_below(opt.max_steps));

  for (std::uint32_t step = 0; step < span; ++step) {
    if (rng.next_unit() >= opt.observe_probability) continue;
    Observation obs;
    obs.step = step;
    const auto count = rng.next_below(opt.max_entities_per_step + 1);
    std::set<std::uint64_t> uids;
    for (std::uint64_t e = 0; e < count; ++e) {
      EntityRecord rec;
      for (const auto& field : schema.entity_fields) {
        if (field.role == FieldRole::InstanceId) {
          std::uint64_t uid = rng.next_below(1 << 20);
          while (!uids.insert(uid).second) uid = rng.next_below(1 << 20);
          rec.values.push_back(uid_value(field.scalar_type, uid));
        } else {
          rec.values.push_back(random_value(rng, field.scalar_type));
        }
      }
      obs.entities.push_back(std::move(rec));
    }
    for (const auto& channel : schema.scalar_channels) {
      obs.scalars.push_back(random_value(rng, channel.scalar_type));
    }
    for (const auto& plane : schema.plane_channels) {
      obs.planes.push_back(random_plane(rng, plane));
    }
    seq.observations.push_back(std::move(obs));
  }

  const std::uint64_t last_plus_one =
      seq.observations.empty() ? 0 : seq.observations.back().step + 1;
  seq.declared_step_count = last_plus_one + rng.next_below(4);  // trailing empties

  seq.metadata.replay_id = "r" + std::to_string(rng.next());
  seq.metadata.scenario_tag = "prop";
  seq.metadata.duration_steps = seq.declared_step_count;
  std::uint64_t peak = 0;
  for (const auto& obs : seq.observations) {
    peak = std::max<std::uint64_t>(peak, obs.entities.size());
  }
  seq.metadata.entity_count_peak = peak;
  seq.metadata.action_count = rng.next_below(1000);
  if (rng.next_below(2) != 0) {
    seq.metadata.outcome_label = static_cast<std::int32_t>(rng.next_below(3));
  }
  seq.metadata.schema_hash = schema_hash(schema);
  return seq;
}

/// Scratch directory unique to this process, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& prefix) {
    dir_ = std::filesystem::temp_directory_path() /
           (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  [[nodiscard]] std::filesystem::path path(const std::string& name) const {
    return dir_ / name;
  }
  [[nodiscard]] const std::filesystem::path& root() const { return dir_; }

private:
  static inline int counter_ = 0;
  std::filesystem::path dir_;
};

}  // namespace terc::test
