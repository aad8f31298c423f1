/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/identity.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <unordered_map>
#include <vector>

#include "terc/error.hpp"

namespace terc {

namespace {

/// Uniform-grid index over last-known instance positions so candidate
/// lookups stay local; the grid pitch is the match radius (minimum 1) and
/// a radius-r query only needs the 3x3 neighbourhood.
class NeighborIndex {
public:
  explicit NeighborIndex(double radius) : pitch_(radius > 1.0 ? radius : 1.0) {}

  void insert_or_move(std::uint64_t uid, double x, double y) {
    const std::uint64_t key = cell_key(x, y);
    auto it = where_.find(uid);
    if (it != where_.end()) {
      if (it->second == key) return;
      auto& old_bucket = buckets_[it->second];
      std::erase(old_bucket, uid);
      it->second = key;
    } else {
      where_.emplace(uid, key);
    }
    buckets_[key].push_back(uid);
  }

  template <typename Fn>
  void for_each_near(double x, double y, Fn&& fn) const {
    const auto cx = coord(x);
    const auto cy = coord(y);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (std::uint64_t uid : it->second) fn(uid);
      }
    }
  }

private:
  [[nodiscard]] std::int64_t coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v / pitch_));
  }
  static std::uint64_t pack(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^
           (static_cast<std::uint64_t>(cy) & 0xffffffffull);
  }
  [[nodiscard]] std::uint64_t cell_key(double x, double y) const {
    return pack(coord(x), coord(y));
  }

  double pitch_;
  std::unordered_map<std::uint64_t, std::uint64_t> where_;              // uid -> cell key
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> buckets_;
};

struct KnownInstance {
  double x = 0.0;
  double y = 0.0;
};

}  // namespace

ReplaySequence stabilize_identity(const Schema& schema, const ReplaySequence& seq,
                                  double match_radius) {
  const std::size_t uid_idx = schema.instance_id_index();
  const auto pos = schema.position_indices();
  if (!pos) raise(Errc::SchemaInvalid, "stabilize_identity requires a position field pair");
  const auto [x_idx, y_idx] = *pos;
  const auto quantity_idx = schema.quantity_index();
  const ScalarType uid_type = schema.entity_fields[uid_idx].scalar_type;
  const double radius_sq = match_radius * match_radius;

  ReplaySequence out = seq;
  std::unordered_map<std::uint64_t, KnownInstance> known;  // uid -> last observed position
  std::unordered_map<std::uint64_t, double> last_nonzero_quantity;
  NeighborIndex nearby(match_radius);

  for (auto& obs : out.observations) {
    // UIDs present this step: raw values first; rewrites claim into it as
    // they are assigned so one original UID cannot absorb two newcomers.
    std::set<std::uint64_t> present;
    for (const auto& ent : obs.entities) present.insert(as_uid(ent.values[uid_idx]));

    for (auto& ent : obs.entities) {
      std::uint64_t uid = as_uid(ent.values[uid_idx]);
      const double x = as_double(ent.values[x_idx]);
      const double y = as_double(ent.values[y_idx]);

      if (!known.contains(uid)) {
        // New UID: look for a unique prior instance, absent right now,
        // within the match radius of this position.
        std::uint64_t match = 0;
        std::size_t matches = 0;
        nearby.for_each_near(x, y, [&](std::uint64_t candidate) {
          if (present.contains(candidate)) return;
          const KnownInstance& last = known.at(candidate);
          const double dx = x - last.x;
          const double dy = y - last.y;
          if (dx * dx + dy * dy <= radius_sq) {
            match = candidate;
            ++matches;
          }
        });
        if (matches > 1) {
          raise(Errc::AmbiguousMatch,
                "multiple prior instances within radius of new UID " + std::to_string(uid) +
                    " at step " + std::to_string(obs.step));
        }
        if (matches == 1) {
          ent.values[uid_idx] = uid_value(uid_type, match);
          present.insert(match);
          uid = match;
        }
      }
      known[uid] = {x, y};
      nearby.insert_or_move(uid, x, y);

      if (quantity_idx) {
        const auto& field = schema.entity_fields[*quantity_idx];
        const double q = as_double(ent.values[*quantity_idx]);
        if (q == 0.0) {
          auto it = last_nonzero_quantity.find(uid);
          const double recalled =
              it != last_nonzero_quantity.end() ? it->second : field.quantity_default;
          ent.values[*quantity_idx] = value_from_double(field.scalar_type, recalled);
        } else {
          last_nonzero_quantity[uid] = q;
        }
      }
    }
  }
  return out;
}

}  // namespace terc
