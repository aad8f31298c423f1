/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <map>
#include <set>

#include "support.hpp"
#include "terc/layout.hpp"

using namespace terc;

namespace {

// The worked 3-record example: step0 holds (uid2,h5),(uid1,h3) in arrival
// order, step1 holds (uid1,h3).
ReplaySequence worked_example() {
  ReplaySequence seq;
  seq.observations = {
      {0, {EntityRecord{{2u, std::uint8_t{5}}}, EntityRecord{{1u, std::uint8_t{3}}}}, {}, {}},
      {1, {EntityRecord{{1u, std::uint8_t{3}}}}, {}, {}},
  };
  seq.declared_step_count = 2;
  seq.metadata.duration_steps = 2;
  return seq;
}

std::vector<std::uint8_t> raw(const std::vector<std::byte>& bytes) {
  std::vector<std::uint8_t> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = std::to_integer<std::uint8_t>(bytes[i]);
  return out;
}

}  // namespace

TEST_CASE("flatten groups by instance with time order preserved") {
  const Schema schema = test::tiny_schema();
  const auto flat = flatten_sort(schema, worked_example());

  REQUIRE(flat.record_count() == 3);
  CHECK(flat.columns[0].at(0) == FieldValue{1u});
  CHECK(flat.columns[0].at(1) == FieldValue{1u});
  CHECK(flat.columns[0].at(2) == FieldValue{2u});
  CHECK(flat.columns[1].at(0) == FieldValue{std::uint8_t{3}});
  CHECK(flat.columns[1].at(1) == FieldValue{std::uint8_t{3}});
  CHECK(flat.columns[1].at(2) == FieldValue{std::uint8_t{5}});
  CHECK(flat.indices == std::vector<std::uint32_t>{0, 1, 0});
  CHECK(flat.declared_step_count == 2);
}

TEST_CASE("flatten of an empty sequence is empty") {
  const Schema schema = test::tiny_schema();
  ReplaySequence seq;
  const auto flat = flatten_sort(schema, seq);
  CHECK(flat.record_count() == 0);
  for (const auto& col : flat.columns) CHECK(col.size() == 0);
  CHECK(flat.declared_step_count == 0);
}

TEST_CASE("single constant entity flattens to repeated values") {
  const Schema schema = test::tiny_schema();
  ReplaySequence seq;
  const std::uint32_t kSteps = 32;
  for (std::uint32_t t = 0; t < kSteps; ++t) {
    seq.observations.push_back({t, {EntityRecord{{9u, std::uint8_t{7}}}}, {}, {}});
  }
  seq.declared_step_count = kSteps;
  const auto flat = flatten_sort(schema, seq);
  REQUIRE(flat.record_count() == kSteps);
  for (std::uint32_t k = 0; k < kSteps; ++k) {
    CHECK(flat.columns[0].at(k) == FieldValue{9u});
    CHECK(flat.columns[1].at(k) == FieldValue{std::uint8_t{7}});
    CHECK(flat.indices[k] == k);
  }
}

TEST_CASE("reconstruct inverts the worked example with UID-sorted steps") {
  const Schema schema = test::tiny_schema();
  const auto dense = reconstruct(schema, flatten_sort(schema, worked_example()));
  REQUIRE(dense.size() == 2);
  REQUIRE(dense[0].size() == 2);
  REQUIRE(dense[1].size() == 1);
  CHECK(dense[0][0] == EntityRecord{{1u, std::uint8_t{3}}});
  CHECK(dense[0][1] == EntityRecord{{2u, std::uint8_t{5}}});
  CHECK(dense[1][0] == EntityRecord{{1u, std::uint8_t{3}}});
}

TEST_CASE("reconstruct materializes declared empty steps") {
  const Schema schema = test::tiny_schema();
  FlattenedSoA flat;
  flat.columns = {Column(ScalarType::U32), Column(ScalarType::U8)};
  flat.declared_step_count = 3;
  const auto dense = reconstruct(schema, flat);
  REQUIRE(dense.size() == 3);
  for (const auto& step : dense) CHECK(step.empty());
}

TEST_CASE("reconstruct places a lone record at its recorded step") {
  const Schema schema = test::tiny_schema();
  FlattenedSoA flat;
  Column uid(ScalarType::U32), h(ScalarType::U8);
  uid.append(FieldValue{5u});
  h.append(FieldValue{std::uint8_t{1}});
  flat.columns = {uid, h};
  flat.indices = {4};
  flat.declared_step_count = 5;
  const auto dense = reconstruct(schema, flat);
  REQUIRE(dense.size() == 5);
  for (std::size_t t = 0; t < 4; ++t) CHECK(dense[t].empty());
  REQUIRE(dense[4].size() == 1);
  CHECK(dense[4][0] == EntityRecord{{5u, std::uint8_t{1}}});
}

TEST_CASE("reconstruct rejects out-of-range indices") {
  const Schema schema = test::tiny_schema();
  FlattenedSoA flat;
  Column uid(ScalarType::U32), h(ScalarType::U8);
  uid.append(FieldValue{5u});
  h.append(FieldValue{std::uint8_t{1}});
  flat.columns = {uid, h};
  flat.indices = {7};
  flat.declared_step_count = 5;
  try {
    (void)reconstruct(schema, flat);
    FAIL("expected CorruptIndex");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptIndex);
  }
}

TEST_CASE("relayout emits the worked byte streams") {
  const Schema schema = test::tiny_schema();
  const auto seq = worked_example();

  // Instance-major: uid column 1,1,2 then h column 3,3,5 then indices 0,1,0.
  const auto unt = raw(relayout(schema, seq, LayoutOrder::InstanceMajor));
  const std::vector<std::uint8_t> expected_unt = {
      1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,  // uid column (u32 LE)
      3, 3, 5,                             // h column
      0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0,  // step indices (u32 LE)
  };
  CHECK(unt == expected_unt);

  // Record-major keeps arrival order: (2,5),(1,3) then (1,3).
  const auto tnu = raw(relayout(schema, seq, LayoutOrder::RecordMajor));
  const std::vector<std::uint8_t> expected_tnu = {
      2, 0, 0, 0, 5, 1, 0, 0, 0, 3,  // step 0
      1, 0, 0, 0, 3,                 // step 1
  };
  CHECK(tnu == expected_tnu);
}

TEST_CASE("relayout of an empty sequence is an empty stream") {
  const Schema schema = test::tiny_schema();
  ReplaySequence seq;
  for (auto order : kAllLayoutOrders) {
    CHECK(relayout(schema, seq, order).empty());
  }
}

TEST_CASE("every order serializes the same number of value bytes") {
  const Schema schema = test::full_schema();
  Xoshiro256pp rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto seq = test::random_sequence(rng, schema);
    std::size_t records = 0;
    for (const auto& obs : seq.observations) records += obs.entities.size();
    const std::size_t value_bytes = records * schema.entity_record_width();
    CHECK(relayout(schema, seq, LayoutOrder::RecordMajor).size() == value_bytes);
    CHECK(relayout(schema, seq, LayoutOrder::PerStepColumns).size() == value_bytes);
    CHECK(relayout(schema, seq, LayoutOrder::TimeMajor).size() == value_bytes);
    // Instance-major carries the u32 step index per record on top.
    CHECK(relayout(schema, seq, LayoutOrder::InstanceMajor).size() ==
          value_bytes + records * 4);
  }
}

TEST_CASE("round trip: reconstruct(flatten_sort(s)) is the canonical entity table") {
  const Schema schema = test::full_schema();
  Xoshiro256pp rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const auto seq = test::random_sequence(rng, schema);
    const auto dense = reconstruct(schema, flatten_sort(schema, seq));
    REQUIRE(dense.size() == seq.declared_step_count);

    const auto canon = canonicalize(schema, seq);
    // Observed steps match the canonical per-step entity lists...
    for (const auto& obs : canon.observations) {
      CHECK(dense[obs.step] == obs.entities);
    }
    // ...and nothing appears at unobserved steps.
    std::set<std::uint32_t> observed;
    for (const auto& obs : canon.observations) observed.insert(obs.step);
    for (std::size_t t = 0; t < dense.size(); ++t) {
      if (!observed.contains(static_cast<std::uint32_t>(t))) CHECK(dense[t].empty());
    }
  }
}

TEST_CASE("per-instance time series survive the round trip element-for-element") {
  const Schema schema = test::full_schema();
  Xoshiro256pp rng(31);
  const std::size_t uid_idx = schema.instance_id_index();
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = test::random_sequence(rng, schema);
    const auto dense = reconstruct(schema, flatten_sort(schema, seq));

    std::map<std::uint64_t, std::vector<EntityRecord>> original, rebuilt;
    for (const auto& obs : seq.observations) {
      for (const auto& ent : obs.entities) original[as_uid(ent.values[uid_idx])].push_back(ent);
    }
    for (const auto& step : dense) {
      for (const auto& ent : step) rebuilt[as_uid(ent.values[uid_idx])].push_back(ent);
    }
    CHECK(original == rebuilt);
  }
}

TEST_CASE("entity-observation count is conserved across all orders") {
  const Schema schema = test::full_schema();
  Xoshiro256pp rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = test::random_sequence(rng, schema);
    std::size_t records = 0;
    for (const auto& obs : seq.observations) records += obs.entities.size();
    CHECK(flatten_sort(schema, seq).record_count() == records);
    const std::size_t width = schema.entity_record_width();
    if (width == 0) continue;
    CHECK(relayout(schema, seq, LayoutOrder::TimeMajor).size() / width == records);
  }
}

TEST_CASE("pack_bits worked examples") {
  Plane p;
  p.width = 8;
  p.height = 1;
  p.pixels = {1, 0, 1, 1, 0, 0, 0, 0};
  const auto packed = pack_bits(p);
  REQUIRE(packed.bytes.size() == 1);
  CHECK(packed.bytes[0] == 0x0D);

  Plane zeros;
  zeros.width = 64;
  zeros.height = 64;
  zeros.pixels.assign(64 * 64, 0);
  const auto packed_zeros = pack_bits(zeros);
  CHECK(packed_zeros.bytes == std::vector<std::uint8_t>(512, 0));

  Plane three;
  three.width = 3;
  three.height = 1;
  three.pixels = {1, 1, 1};
  const auto packed_three = pack_bits(three);
  REQUIRE(packed_three.bytes.size() == 1);
  CHECK(packed_three.bytes[0] == 0x07);
}

TEST_CASE("unpack_bits inverts and rejects set pad bits") {
  PackedPlane packed;
  packed.width = 8;
  packed.height = 1;
  packed.bytes = {0x0D};
  CHECK(unpack_bits(packed).pixels == std::vector<std::uint8_t>{1, 0, 1, 1, 0, 0, 0, 0});

  PackedPlane zeros;
  zeros.width = 64;
  zeros.height = 64;
  zeros.bytes.assign(512, 0);
  const auto plane = unpack_bits(zeros);
  CHECK(plane.pixels == std::vector<std::uint8_t>(64 * 64, 0));

  PackedPlane bad;
  bad.width = 3;
  bad.height = 1;
  bad.bytes = {0x08};  // pad bit 3 set
  try {
    (void)unpack_bits(bad);
    FAIL("expected NonZeroPadding");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonZeroPadding);
  }
}

TEST_CASE("pack/unpack are mutually inverse across plane sizes") {
  Xoshiro256pp rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    Plane p;
    // Cover degenerate and large sizes, up to 1024 per side.
    p.width = static_cast<std::uint32_t>(rng.next_below(1025));
    p.height = static_cast<std::uint32_t>(rng.next_below(trial % 3 == 0 ? 1025 : 9));
    p.pixels.resize(static_cast<std::size_t>(p.width) * p.height);
    for (auto& px : p.pixels) px = static_cast<std::uint8_t>(rng.next_below(2));
    const auto packed = pack_bits(p);
    CHECK(packed.bytes.size() == (p.pixels.size() + 7) / 8);
    CHECK(unpack_bits(packed) == p);
  }
}
