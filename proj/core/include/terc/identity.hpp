/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include "terc/replay.hpp"
#include "terc/schema.hpp"

namespace terc {

/// Repairs engine-style UID churn and quantity dropouts in a recorded
/// sequence:
///
///  - A UID appearing for the first time at step t whose position lies
///    within match_radius of the last known position of a UID absent at
///    step t is rewritten to that original UID. Two candidates within the
///    radius raise AmbiguousMatch (the caller must tighten the radius).
///  - A quantity-role value of zero is replaced by the entity's last
///    observed nonzero quantity, or by the schema's configured default when
///    the entity has not yet reported one.
///
/// Everything else is preserved bit-exactly. Idempotent. Requires a
/// position field pair; match_radius 0 demands an exact positional match.
[[nodiscard]] ReplaySequence stabilize_identity(const Schema& schema, const ReplaySequence& seq,
                                                double match_radius = 0.0);

}  // namespace terc
