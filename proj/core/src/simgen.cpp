/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/simgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>

#include "terc/error.hpp"
#include "terc/rng.hpp"

namespace terc {

namespace {

std::uint64_t type_range(ScalarType t) {
  switch (t) {
    case ScalarType::U8: return 1ull << 8;
    case ScalarType::U16: return 1ull << 16;
    case ScalarType::U32: return 1ull << 32;
    case ScalarType::U64: return 0;  // full 64-bit range, drawn directly
    case ScalarType::I32: return 1ull << 31;
    case ScalarType::Bool: return 2;
    default: return 0;
  }
}

constexpr double kGenericWalkSpan = 1024.0;

struct CellBounds {
  double lo_x, hi_x, lo_y, hi_y;
};

double reflect(double v, double lo, double hi) {
  if (v < lo) v = lo + (lo - v);
  if (v > hi) v = hi - (v - hi);
  return v;
}

}  // namespace

void validate(const WorkloadSpec& spec) {
  auto schema_report = validate_schema(spec.schema);
  if (!schema_report.ok()) {
    raise(Errc::SpecInvalid, "workload schema: " + schema_report.violations.front().message);
  }
  if (spec.entity_count == 0) raise(Errc::SpecInvalid, "entity_count must be > 0");
  if (spec.step_count == 0) raise(Errc::SpecInvalid, "step_count must be > 0");
  auto check_prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      raise(Errc::SpecInvalid, std::string(what) + " must be in [0, 1]");
    }
  };
  check_prob(spec.uid_churn_probability, "uid_churn_probability");
  check_prob(spec.turnover, "turnover");
  if (spec.action_rate < 0.0) raise(Errc::SpecInvalid, "action_rate must be >= 0");
  if (!(spec.cell_size > 0.0) || !(spec.cell_margin >= 0.0) ||
      spec.cell_margin * 2.0 >= spec.cell_size) {
    raise(Errc::SpecInvalid, "cell_margin must satisfy 0 <= 2*margin < cell_size");
  }
  if (spec.entity_behaviors.size() != spec.schema.entity_fields.size()) {
    raise(Errc::SpecInvalid, "entity_behaviors must match entity field count");
  }
  if (spec.scalar_behaviors.size() != spec.schema.scalar_channels.size()) {
    raise(Errc::SpecInvalid, "scalar_behaviors must match scalar channel count");
  }

  auto check_behavior = [](const FieldDescriptor& field, const FieldBehavior& behavior) {
    const ScalarType t = field.scalar_type;
    if (std::holds_alternative<WalkField>(behavior) && t == ScalarType::Bool) {
      raise(Errc::SpecInvalid, "walk behavior on bool field " + field.name);
    }
    if (std::holds_alternative<DecrementField>(behavior) && t == ScalarType::Bool) {
      raise(Errc::SpecInvalid, "decrement behavior on bool field " + field.name);
    }
    if (const auto* walk = std::get_if<WalkField>(&behavior); walk && !(walk->bound > 0.0)) {
      raise(Errc::SpecInvalid, "walk bound must be > 0 on field " + field.name);
    }
    if (const auto* flip = std::get_if<FlipField>(&behavior)) {
      if (!(flip->probability >= 0.0 && flip->probability <= 1.0)) {
        raise(Errc::SpecInvalid, "flip probability must be in [0, 1] on field " + field.name);
      }
    }
    if (const auto* dec = std::get_if<DecrementField>(&behavior); dec && dec->period == 0) {
      raise(Errc::SpecInvalid, "decrement period must be >= 1 on field " + field.name);
    }
  };
  for (std::size_t i = 0; i < spec.entity_behaviors.size(); ++i) {
    check_behavior(spec.schema.entity_fields[i], spec.entity_behaviors[i]);
  }
  for (std::size_t i = 0; i < spec.scalar_behaviors.size(); ++i) {
    check_behavior(spec.schema.scalar_channels[i], spec.scalar_behaviors[i]);
  }
  if (const auto pos = spec.schema.position_indices()) {
    for (auto idx : {pos->first, pos->second}) {
      const auto t = spec.schema.entity_fields[idx].scalar_type;
      if (t != ScalarType::F32 && t != ScalarType::F64) {
        raise(Errc::SpecInvalid, "position fields must be f32 or f64 for generation");
      }
      if (const auto* walk = std::get_if<WalkField>(&spec.entity_behaviors[idx])) {
        const double span = spec.cell_size - 2.0 * spec.cell_margin;
        if (walk->bound > span / 2.0) {
          raise(Errc::SpecInvalid, "position walk bound must fit half the cell interior");
        }
      }
    }
  }
}

namespace {

class FieldEvolver {
public:
  FieldEvolver(const FieldDescriptor& field, const FieldBehavior& behavior)
      : field_(field), behavior_(behavior) {}

  FieldValue init(Xoshiro256pp& rng, const CellBounds* cell) const {
    const ScalarType t = field_.scalar_type;
    if (const auto* st = std::get_if<StaticField>(&behavior_)) {
      return draw_uniform(rng, t, st->pool);
    }
    if (std::holds_alternative<WalkField>(behavior_)) {
      if (cell) {
        const double mid = field_is_x_ ? (cell->lo_x + cell->hi_x) / 2.0
                                       : (cell->lo_y + cell->hi_y) / 2.0;
        return value_from_double(t, mid);
      }
      return value_from_double(t, kGenericWalkSpan / 2.0);
    }
    if (const auto* flip = std::get_if<FlipField>(&behavior_)) {
      if (t == ScalarType::Bool) return false;
      return draw_uniform(rng, t, flip->pool);
    }
    if (std::holds_alternative<DecrementField>(behavior_)) {
      return draw_uniform(rng, t, 256);
    }
    return value_from_double(t, 0.0);  // Accrue
  }

  void step(Xoshiro256pp& rng, FieldValue& value, std::uint64_t step_index,
            std::uint32_t actions, const CellBounds* cell) const {
    const ScalarType t = field_.scalar_type;
    if (std::holds_alternative<StaticField>(behavior_)) return;
    if (const auto* walk = std::get_if<WalkField>(&behavior_)) {
      double lo = 0.0, hi = kGenericWalkSpan;
      if (cell) {
        lo = field_is_x_ ? cell->lo_x : cell->lo_y;
        hi = field_is_x_ ? cell->hi_x : cell->hi_y;
      }
      double delta;
      if (t == ScalarType::F32 || t == ScalarType::F64) {
        static constexpr double kSteps[4] = {-1.0, -0.5, 0.5, 1.0};
        delta = kSteps[rng.next_below(4)] * walk->bound;
      } else {
        // Integer walks move by at least one unit so the field really does
        // change every step.
        static constexpr double kMul[4] = {-2.0, -1.0, 1.0, 2.0};
        const double unit = std::max(1.0, std::round(walk->bound));
        delta = kMul[rng.next_below(4)] * unit;
      }
      const double old = as_double(value);
      double next = reflect(old + delta, lo, hi);
      // A full step reflected off a boundary can bounce back exactly onto
      // its origin; take the half step instead so walks change every step.
      if (next == old) next = reflect(old + delta / 2.0, lo, hi);
      value = value_from_double(t, next);
      return;
    }
    if (const auto* flip = std::get_if<FlipField>(&behavior_)) {
      if (rng.next_chance(flip->probability)) {
        if (t == ScalarType::Bool) {
          value = !std::get<bool>(value);
        } else {
          value = draw_uniform(rng, t, flip->pool);
        }
      }
      return;
    }
    if (const auto* dec = std::get_if<DecrementField>(&behavior_)) {
      if (step_index % dec->period == 0) {
        value = decrement(value);
      }
      return;
    }
    if (const auto* acc = std::get_if<AccrueField>(&behavior_)) {
      double v = as_double(value);
      for (std::uint32_t a = 0; a < actions; ++a) v += rng.next_unit() * acc->rate;
      value = value_from_double(t, v);
      return;
    }
  }

  void mark_as_x(bool is_x) { field_is_x_ = is_x; }

private:
  static FieldValue draw_uniform(Xoshiro256pp& rng, ScalarType t, std::uint64_t pool) {
    if (t == ScalarType::Bool) return rng.next_below(2) != 0;
    if (t == ScalarType::F32 || t == ScalarType::F64) {
      const double span = pool != 0 ? static_cast<double>(pool) : kGenericWalkSpan;
      return value_from_double(t, rng.next_unit() * span);
    }
    std::uint64_t bound = pool;
    if (bound == 0) bound = type_range(t);
    const std::uint64_t raw = bound == 0 ? rng.next() : rng.next_below(bound);
    switch (t) {
      case ScalarType::U8: return static_cast<std::uint8_t>(raw);
      case ScalarType::U16: return static_cast<std::uint16_t>(raw);
      case ScalarType::U32: return static_cast<std::uint32_t>(raw);
      case ScalarType::U64: return raw;
      case ScalarType::I32: return static_cast<std::int32_t>(raw);
      default: break;
    }
    raise(Errc::SpecInvalid, "bad draw type");
  }

  static FieldValue decrement(const FieldValue& v) {
    switch (value_type(v)) {
      case ScalarType::U8:
        return static_cast<std::uint8_t>(std::get<std::uint8_t>(v) - 1);
      case ScalarType::U16:
        return static_cast<std::uint16_t>(std::get<std::uint16_t>(v) - 1);
      case ScalarType::U32: return std::get<std::uint32_t>(v) - 1;
      case ScalarType::U64: return std::get<std::uint64_t>(v) - 1;
      case ScalarType::I32: return std::get<std::int32_t>(v) - 1;
      case ScalarType::F32: return std::get<float>(v) - 1.0f;
      case ScalarType::F64: return std::get<double>(v) - 1.0;
      case ScalarType::Bool: break;
    }
    raise(Errc::SpecInvalid, "decrement on bool field");
  }

  const FieldDescriptor& field_;
  const FieldBehavior& behavior_;
  bool field_is_x_ = false;
};

struct LiveEntity {
  std::uint32_t logical_id;
  std::uint64_t uid;
  std::uint32_t cell;
  std::uint64_t spawned_at;
  std::vector<FieldValue> values;
};

}  // namespace

GroundTruthStream generate(const WorkloadSpec& spec, std::uint64_t seed) {
  validate(spec);
  Xoshiro256pp rng(seed);

  const Schema& schema = spec.schema;
  const std::size_t uid_idx = schema.instance_id_index();
  const ScalarType uid_type = schema.entity_fields[uid_idx].scalar_type;
  const auto pos = schema.position_indices();

  // Never-reused cell grid sized for the expected population turnover,
  // with headroom; exhausting it wraps around (documented behaviour).
  const double expected_spawns =
      static_cast<double>(spec.step_count) * static_cast<double>(spec.entity_count) *
      spec.turnover;
  const auto cell_budget =
      spec.entity_count + static_cast<std::uint64_t>(std::ceil(expected_spawns * 1.5));
  const auto grid_dim =
      static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(cell_budget))));
  const double arena = grid_dim * spec.cell_size;

  std::vector<FieldEvolver> entity_evolvers;
  entity_evolvers.reserve(schema.entity_fields.size());
  for (std::size_t f = 0; f < schema.entity_fields.size(); ++f) {
    FieldEvolver ev(schema.entity_fields[f], spec.entity_behaviors[f]);
    if (pos) ev.mark_as_x(f == pos->first);
    entity_evolvers.push_back(ev);
  }
  std::vector<FieldEvolver> scalar_evolvers;
  scalar_evolvers.reserve(schema.scalar_channels.size());
  for (std::size_t c = 0; c < schema.scalar_channels.size(); ++c) {
    scalar_evolvers.emplace_back(schema.scalar_channels[c], spec.scalar_behaviors[c]);
  }

  GroundTruthStream stream;
  stream.schema = schema;
  stream.scenario_tag = spec.scenario_tag;
  stream.step_count = spec.step_count;
  stream.arena_extent = arena;
  {
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%016llx", spec.scenario_tag.c_str(),
                  static_cast<unsigned long long>(seed));
    stream.replay_id = id;
  }

  std::uint64_t next_uid = 1;
  std::uint32_t next_logical = 0;
  std::uint32_t next_cell = 0;
  const std::uint32_t cell_count = grid_dim * grid_dim;

  auto cell_bounds = [&](std::uint32_t cell) -> CellBounds {
    const double x0 = (cell % grid_dim) * spec.cell_size;
    const double y0 = (cell / grid_dim) * spec.cell_size;
    return {x0 + spec.cell_margin, x0 + spec.cell_size - spec.cell_margin,
            y0 + spec.cell_margin, y0 + spec.cell_size - spec.cell_margin};
  };

  auto spawn = [&](std::uint64_t at_step) -> LiveEntity {
    LiveEntity e;
    e.logical_id = next_logical++;
    e.uid = next_uid++;
    e.cell = next_cell % cell_count;
    e.spawned_at = at_step;
    ++next_cell;
    stream.first_uids.push_back(e.uid);
    const CellBounds bounds = cell_bounds(e.cell);
    e.values.reserve(schema.entity_fields.size());
    for (std::size_t f = 0; f < schema.entity_fields.size(); ++f) {
      if (f == uid_idx) {
        e.values.push_back(uid_value(uid_type, e.uid));
      } else {
        const bool positional = pos && (f == pos->first || f == pos->second);
        e.values.push_back(entity_evolvers[f].init(rng, positional ? &bounds : nullptr));
      }
    }
    return e;
  };

  std::vector<LiveEntity> live;
  live.reserve(spec.entity_count * 2);
  for (std::uint64_t i = 0; i < spec.entity_count; ++i) live.push_back(spawn(0));

  std::vector<FieldValue> scalars;
  scalars.reserve(schema.scalar_channels.size());
  for (std::size_t c = 0; c < schema.scalar_channels.size(); ++c) {
    scalars.push_back(scalar_evolvers[c].init(rng, nullptr));
  }

  stream.steps.reserve(spec.step_count);
  for (std::uint64_t t = 0; t < spec.step_count; ++t) {
    if (t > 0) {
      // Lifecycle: retirements, then Poisson arrivals.
      if (spec.turnover > 0.0) {
        std::erase_if(live, [&](const LiveEntity&) { return rng.next_chance(spec.turnover); });
        const auto arrivals = rng.next_poisson(
            static_cast<double>(spec.entity_count) * spec.turnover);
        for (std::uint32_t a = 0; a < arrivals; ++a) live.push_back(spawn(t));
      }
      // Field evolution in stable (logical) order.
      for (auto& e : live) {
        const CellBounds bounds = cell_bounds(e.cell);
        for (std::size_t f = 0; f < schema.entity_fields.size(); ++f) {
          if (f == uid_idx) continue;
          const bool positional = pos && (f == pos->first || f == pos->second);
          entity_evolvers[f].step(rng, e.values[f], t, 0, positional ? &bounds : nullptr);
        }
      }
      // UID churn on re-observation; an entity's spawn-step emission is its
      // first observation, so it cannot churn until the following step.
      if (spec.uid_churn_probability > 0.0) {
        for (auto& e : live) {
          if (e.spawned_at == t) continue;
          if (rng.next_chance(spec.uid_churn_probability)) {
            e.uid = next_uid++;
            e.values[uid_idx] = uid_value(uid_type, e.uid);
          }
        }
      }
    }

    const auto actions = rng.next_poisson(spec.action_rate);
    stream.action_count += actions;

    if (t > 0) {
      for (std::size_t c = 0; c < scalar_evolvers.size(); ++c) {
        scalar_evolvers[c].step(rng, scalars[c], t, actions, nullptr);
      }
    }

    StreamStep step;
    step.actions = actions;
    step.scalars = scalars;
    step.entities.reserve(live.size());
    step.logical_ids.reserve(live.size());
    for (const auto& e : live) {
      step.entities.push_back(EntityRecord{e.values});
      step.logical_ids.push_back(e.logical_id);
    }
    stream.steps.push_back(std::move(step));
  }

  stream.outcome_label = static_cast<std::int32_t>(rng.next() & 1);
  return stream;
}

SamplingPolicy parse_policy(std::string_view text) {
  auto parse_n = [&](std::string_view suffix) -> std::uint32_t {
    std::uint32_t n = 0;
    auto [p, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), n);
    if (ec != std::errc() || p != suffix.data() + suffix.size() || n == 0) {
      raise(Errc::SpecInvalid, "policy needs a positive step count: " + std::string(text));
    }
    return n;
  };
  if (text == "every_step") return SamplingPolicy::every_step();
  if (text == "on_action") return SamplingPolicy::on_action();
  constexpr std::string_view kEveryN = "every_n:";
  constexpr std::string_view kEveryNOrAction = "every_n_or_action:";
  if (text.starts_with(kEveryNOrAction)) {
    return SamplingPolicy::every_n_or_action(parse_n(text.substr(kEveryNOrAction.size())));
  }
  if (text.starts_with(kEveryN)) {
    return SamplingPolicy::every_n(parse_n(text.substr(kEveryN.size())));
  }
  raise(Errc::SpecInvalid, "unknown sampling policy: " + std::string(text));
}

namespace {

std::vector<Plane> rasterize_planes(const Schema& schema, const StreamStep& step,
                                    double arena) {
  std::vector<Plane> planes;
  planes.reserve(schema.plane_channels.size());
  const auto pos = schema.position_indices();
  for (const auto& spec : schema.plane_channels) {
    Plane plane;
    plane.width = spec.width;
    plane.height = spec.height;
    plane.pixels.assign(spec.pixel_count(), 0);
    if (pos && arena > 0.0) {
      for (const auto& ent : step.entities) {
        const double x = as_double(ent.values[pos->first]);
        const double y = as_double(ent.values[pos->second]);
        auto px = static_cast<std::int64_t>(x / arena * spec.width);
        auto py = static_cast<std::int64_t>(y / arena * spec.height);
        px = std::clamp<std::int64_t>(px, 0, spec.width - 1);
        py = std::clamp<std::int64_t>(py, 0, spec.height - 1);
        auto& pixel = plane.pixels[static_cast<std::size_t>(py) * spec.width +
                                   static_cast<std::size_t>(px)];
        if (spec.element == PlaneElement::Bool) {
          pixel = 1;
        } else if (pixel < 255) {
          ++pixel;  // u8 planes hold per-cell occupancy counts
        }
      }
    }
    planes.push_back(std::move(plane));
  }
  return planes;
}

}  // namespace

ReplaySequence sample(const GroundTruthStream& stream, const SamplingPolicy& policy) {
  if (policy.n == 0) raise(Errc::SpecInvalid, "sampling policy n must be >= 1");

  ReplaySequence seq;
  seq.declared_step_count = stream.step_count;
  std::uint64_t peak = 0;
  for (std::uint64_t t = 0; t < stream.step_count; ++t) {
    const StreamStep& step = stream.steps[t];
    bool keep = false;
    switch (policy.kind) {
      case SamplingPolicy::Kind::EveryStep: keep = true; break;
      case SamplingPolicy::Kind::OnAction: keep = step.actions > 0; break;
      case SamplingPolicy::Kind::EveryN: keep = t % policy.n == 0; break;
      case SamplingPolicy::Kind::EveryNOrAction:
        keep = t % policy.n == 0 || step.actions > 0;
        break;
    }
    if (!keep) continue;
    Observation obs;
    obs.step = static_cast<std::uint32_t>(t);
    obs.entities = step.entities;
    obs.scalars = step.scalars;
    obs.planes = rasterize_planes(stream.schema, step, stream.arena_extent);
    peak = std::max<std::uint64_t>(peak, obs.entities.size());
    seq.observations.push_back(std::move(obs));
  }

  seq.metadata.replay_id = stream.replay_id;
  seq.metadata.scenario_tag = stream.scenario_tag;
  seq.metadata.duration_steps = stream.step_count;
  seq.metadata.entity_count_peak = peak;
  seq.metadata.action_count = stream.action_count;
  seq.metadata.outcome_label = stream.outcome_label;
  seq.metadata.schema_hash = schema_hash(stream.schema);
  return seq;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double_tok(std::string_view tok, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    raise(Errc::SpecInvalid, std::string("bad ") + what + ": " + std::string(tok));
  }
  return v;
}

std::uint64_t parse_u64_tok(std::string_view tok, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    raise(Errc::SpecInvalid, std::string("bad ") + what + ": " + std::string(tok));
  }
  return v;
}

/// Builds the behavior for one field line from its param tokens, falling
/// back to a default keyed on the dynamics tag.
FieldBehavior behavior_from_tokens(const FieldDescriptor& field,
                                   std::span<const std::string_view> params) {
  std::optional<FieldBehavior> behavior;
  std::optional<std::uint64_t> pool_override;
  for (auto tok : params) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) {
      raise(Errc::SpecInvalid, "bad field parameter: " + std::string(tok));
    }
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "pool") {
      pool_override = parse_u64_tok(val, "pool");
    } else if (key == "walk") {
      behavior = WalkField{parse_double_tok(val, "walk bound")};
    } else if (key == "flip") {
      behavior = FlipField{parse_double_tok(val, "flip probability"), 0};
    } else if (key == "decrement") {
      behavior = DecrementField{static_cast<std::uint32_t>(parse_u64_tok(val, "period"))};
    } else if (key == "accrue") {
      behavior = AccrueField{parse_double_tok(val, "accrue rate")};
    } else {
      raise(Errc::SpecInvalid, "unknown field parameter: " + std::string(key));
    }
  }
  if (!behavior) {
    switch (field.dynamics) {
      case FieldDynamics::Static: behavior = StaticField{16}; break;
      case FieldDynamics::Fast: behavior = WalkField{0.5}; break;
      case FieldDynamics::Slow: behavior = FlipField{0.01, 0}; break;
    }
  }
  if (pool_override) {
    if (auto* st = std::get_if<StaticField>(&*behavior)) {
      st->pool = *pool_override;
    } else if (auto* fl = std::get_if<FlipField>(&*behavior)) {
      fl->pool = *pool_override;
    } else {
      raise(Errc::SpecInvalid, "pool= only applies to static or flip fields");
    }
  }
  return *behavior;
}

}  // namespace

WorkloadSpec parse_workload(std::string_view text) {
  WorkloadSpec spec;
  spec.schema.entity_fields.clear();

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;

    const auto key = tok[0];
    const bool is_field_line = key == "entity" || key == "scalar" || key == "plane";
    if (!is_field_line && tok.size() != 2) {
      raise(Errc::SpecInvalid, std::string(key) + " takes exactly one value");
    }
    if (key == "scenario") {
      spec.scenario_tag = std::string(tok[1]);
    } else if (key == "entity_count") {
      spec.entity_count = parse_u64_tok(tok[1], "entity_count");
    } else if (key == "step_count") {
      spec.step_count = parse_u64_tok(tok[1], "step_count");
    } else if (key == "action_rate") {
      spec.action_rate = parse_double_tok(tok[1], "action_rate");
    } else if (key == "uid_churn") {
      spec.uid_churn_probability = parse_double_tok(tok[1], "uid_churn");
    } else if (key == "turnover") {
      spec.turnover = parse_double_tok(tok[1], "turnover");
    } else if (key == "step_seconds") {
      spec.schema.step_seconds = parse_double_tok(tok[1], "step_seconds");
    } else if (key == "cell_size") {
      spec.cell_size = parse_double_tok(tok[1], "cell_size");
    } else if (key == "cell_margin") {
      spec.cell_margin = parse_double_tok(tok[1], "cell_margin");
    } else if (key == "entity" || key == "scalar") {
      if (tok.size() < 5) {
        raise(Errc::SpecInvalid, "field line needs name, type, dynamics, role");
      }
      FieldDescriptor f;
      f.name = std::string(tok[1]);
      auto st = scalar_type_from(tok[2]);
      if (!st) raise(Errc::SpecInvalid, "unknown scalar type: " + std::string(tok[2]));
      f.scalar_type = *st;
      auto dy = dynamics_from(tok[3]);
      if (!dy) raise(Errc::SpecInvalid, "unknown dynamics: " + std::string(tok[3]));
      f.dynamics = *dy;
      auto ro = role_from(tok[4]);
      if (!ro) raise(Errc::SpecInvalid, "unknown role: " + std::string(tok[4]));
      f.role = *ro;
      const std::span<const std::string_view> params(tok.data() + 5, tok.size() - 5);
      const FieldBehavior behavior = behavior_from_tokens(f, params);
      if (key == "entity") {
        spec.schema.entity_fields.push_back(f);
        spec.entity_behaviors.push_back(behavior);
      } else {
        spec.schema.scalar_channels.push_back(f);
        spec.scalar_behaviors.push_back(behavior);
      }
    } else if (key == "plane") {
      if (tok.size() != 5) {
        raise(Errc::SpecInvalid, "plane line needs name, width, height, element");
      }
      PlaneSpec p;
      p.name = std::string(tok[1]);
      p.width = static_cast<std::uint32_t>(parse_u64_tok(tok[2], "plane width"));
      p.height = static_cast<std::uint32_t>(parse_u64_tok(tok[3], "plane height"));
      if (tok[4] == "bool") {
        p.element = PlaneElement::Bool;
      } else if (tok[4] == "u8") {
        p.element = PlaneElement::U8;
      } else {
        raise(Errc::SpecInvalid, "plane element must be bool or u8");
      }
      spec.schema.plane_channels.push_back(std::move(p));
    } else {
      raise(Errc::SpecInvalid, "unknown workload key: " + std::string(key));
    }
  }
  validate(spec);
  return spec;
}

WorkloadSpec load_workload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoFailure, "cannot open workload file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

const std::string& w1_workload_text() {
  static const std::string text =
      "# W1 reference workload: warehouse robots with a static/slow/fast\n"
      "# field mix and population turnover.\n"
      "scenario warehouse\n"
      "entity_count 64\n"
      "step_count 10000\n"
      "action_rate 0.2\n"
      "uid_churn 0\n"
      "turnover 0.002\n"
      "step_seconds 0.044642857142857144\n"
      "cell_size 4\n"
      "cell_margin 1\n"
      "entity uid u32 static instance_id\n"
      "entity robot_type u8 static generic pool=4\n"
      "entity x_pos f32 fast position walk=0.5\n"
      "entity y_pos f32 fast position walk=0.5\n"
      "entity payload_id u16 slow generic flip=0.02\n"
      "entity battery_charge u8 slow generic decrement=50\n"
      "entity need_assistance bool slow generic flip=0.01\n"
      "scalar total_throughput f32 fast generic accrue=0.5\n"
      "scalar active_robots u16 slow generic flip=0.02 pool=65\n"
      "plane occupancy 64 64 bool\n";
  return text;
}

WorkloadSpec w1_reference_workload() { return parse_workload(w1_workload_text()); }

}  // namespace terc
