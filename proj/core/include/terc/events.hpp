/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "terc/error.hpp"

namespace terc {

/// Completion times for a set of one-shot events (e.g. research finishing);
/// queried to build the active-event one-hot vector at any step.
struct EventActivation {
  std::uint32_t event_id = 0;
  std::uint32_t finished_step = 0;

  bool operator==(const EventActivation&) const = default;
};

struct EventActivationTable {
  std::vector<EventActivation> entries;
  std::uint32_t total_events = 0;  // one-hot width

  bool operator==(const EventActivationTable&) const = default;
};

inline void validate(const EventActivationTable& table) {
  std::set<std::uint32_t> seen;
  for (const auto& e : table.entries) {
    if (e.event_id >= table.total_events) {
      raise(Errc::SpecInvalid, "event_id " + std::to_string(e.event_id) +
                                   " outside total_events " + std::to_string(table.total_events));
    }
    if (!seen.insert(e.event_id).second) {
      raise(Errc::SpecInvalid, "duplicate event_id " + std::to_string(e.event_id));
    }
  }
}

/// Bit i is set iff event i finished strictly before `step`
/// (step > finished_step). Monotone in step by construction.
[[nodiscard]] inline std::vector<bool> active_onehot(const EventActivationTable& table,
                                                     std::uint32_t step) {
  validate(table);
  std::vector<bool> bits(table.total_events, false);
  for (const auto& e : table.entries) {
    if (step > e.finished_step) bits[e.event_id] = true;
  }
  return bits;
}

}  // namespace terc
