/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "terc/replay.hpp"
#include "terc/schema.hpp"

// Deterministic synthetic digital-twin workload generator. A workload is a
// schema plus per-field evolution behaviors, an entity lifecycle, and an
// action-event stream. Given the same (spec, seed), generate() produces an
// identical ground-truth stream on any platform (pinned xoshiro256++ PRNG,
// fixed draw order).

namespace terc {

/// Field stays at its initial draw from [0, pool).
struct StaticField {
  std::uint64_t pool = 16;
};

/// Quantized random walk: every step the value moves by one of
/// {-bound, -bound/2, +bound/2, +bound}, reflected at the field's range.
/// Position-role fields walk inside their entity's private grid cell.
struct WalkField {
  double bound = 0.5;
};

/// With the given per-step probability: booleans flip, other types resample
/// uniformly from [0, pool) (pool 0 means the full type range).
struct FlipField {
  double probability = 0.01;
  std::uint64_t pool = 0;
};

/// Value decrements by one every `period` steps, wrapping in the field's
/// integer range.
struct DecrementField {
  std::uint32_t period = 50;
};

/// Accumulator: value grows by actions_this_step * U(0, rate); an economy
/// analog for scalar channels.
struct AccrueField {
  double rate = 0.5;
};

using FieldBehavior =
    std::variant<StaticField, WalkField, FlipField, DecrementField, AccrueField>;

struct WorkloadSpec {
  Schema schema;
  /// Parallel to schema.entity_fields; the instance_id entry is ignored
  /// (UIDs are allocated by the lifecycle machinery).
  std::vector<FieldBehavior> entity_behaviors;
  /// Parallel to schema.scalar_channels.
  std::vector<FieldBehavior> scalar_behaviors;

  std::uint64_t entity_count = 1;  // initial and equilibrium population
  std::uint64_t step_count = 1;
  double action_rate = 0.0;  // expected actions per step (Poisson)
  /// Per-entity per-step probability that a live entity's UID is replaced
  /// by a fresh one (the engine-artifact this toolkit repairs).
  double uid_churn_probability = 0.0;
  /// Per-entity per-step retirement probability; spawns arrive at rate
  /// entity_count * turnover, keeping the population near entity_count
  /// while the membership churns.
  double turnover = 0.0;
  std::string scenario_tag = "scenario";

  /// Geometry for position fields and plane rasterization: entities walk
  /// inside never-reused square cells of cell_size with this interior
  /// margin.
  double cell_size = 4.0;
  double cell_margin = 1.0;
};

/// Structural checks (probabilities in range, counts positive, behaviors
/// compatible with field types). Throws SpecInvalid.
void validate(const WorkloadSpec& spec);

/// Plain-text key-value form (the format `convert --spec` consumes).
[[nodiscard]] WorkloadSpec parse_workload(std::string_view text);
[[nodiscard]] WorkloadSpec load_workload(const std::filesystem::path& path);

/// The pinned reference workload used by the acceptance suite.
[[nodiscard]] const std::string& w1_workload_text();
[[nodiscard]] WorkloadSpec w1_reference_workload();

/// Full world state at one step.
struct StreamStep {
  std::vector<EntityRecord> entities;       // live entities, stable logical order
  std::vector<std::uint32_t> logical_ids;   // ground-truth identity per entity
  std::vector<FieldValue> scalars;
  std::uint32_t actions = 0;
};

struct GroundTruthStream {
  Schema schema;
  std::string replay_id;
  std::string scenario_tag;
  std::uint64_t step_count = 0;
  double arena_extent = 0.0;  // square arena side covered by the cells
  std::vector<StreamStep> steps;
  std::uint64_t action_count = 0;
  std::optional<std::int32_t> outcome_label;
  /// Per logical entity: the UID it was born with. Ground truth for
  /// identity-stabilization checks.
  std::vector<std::uint64_t> first_uids;
};

[[nodiscard]] GroundTruthStream generate(const WorkloadSpec& spec, std::uint64_t seed);

struct SamplingPolicy {
  enum class Kind : std::uint8_t { EveryStep, OnAction, EveryN, EveryNOrAction };
  Kind kind = Kind::EveryStep;
  std::uint32_t n = 1;

  static SamplingPolicy every_step() { return {Kind::EveryStep, 1}; }
  static SamplingPolicy on_action() { return {Kind::OnAction, 1}; }
  static SamplingPolicy every_n(std::uint32_t n) { return {Kind::EveryN, n}; }
  static SamplingPolicy every_n_or_action(std::uint32_t n) {
    return {Kind::EveryNOrAction, n};
  }
};

/// Parses "every_step", "on_action", "every_n:<n>", "every_n_or_action:<n>".
[[nodiscard]] SamplingPolicy parse_policy(std::string_view text);

/// Selects observation steps per the policy, rasterizes plane channels
/// from entity positions, and assembles the recorded sequence.
/// metadata.action_count counts the whole stream, sampled or not;
/// declared_step_count is the stream's step_count.
[[nodiscard]] ReplaySequence sample(const GroundTruthStream& stream,
                                    const SamplingPolicy& policy);

}  // namespace terc
