/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace terc {

/// One replay's metadata flattened for filtering, plus the derived
/// actions-per-minute analog.
struct MetadataRow {
  std::string container_path;
  std::uint64_t entry_ordinal = 0;
  std::string replay_id;
  std::string scenario_tag;
  std::uint64_t duration_steps = 0;
  std::uint64_t entity_count_peak = 0;
  std::uint64_t action_count = 0;
  std::optional<std::int32_t> outcome_label;
  std::uint64_t schema_hash = 0;
  double apm_analog = 0.0;

  bool operator==(const MetadataRow&) const = default;
};

enum class FilterOp : std::uint8_t { Less, LessEq, Eq, GreaterEq, Greater };

struct FilterPredicate {
  std::string field;
  FilterOp op = FilterOp::Eq;
  std::string value;  // parsed per field kind at evaluation
};

/// Conjunction of predicates; empty matches everything.
struct FilterSpec {
  std::vector<FilterPredicate> predicates;
};

/// Parses "field<op>value" with op in {<, <=, =, ==, >=, >}.
[[nodiscard]] FilterPredicate parse_predicate(std::string_view text);

/// True when the row satisfies the predicate; throws UnknownField for
/// unknown fields and BadFilter for op/type mismatches.
[[nodiscard]] bool matches(const MetadataRow& row, const FilterPredicate& pred);

struct StatsRequest {
  std::string group_by;
  std::string value_field;  // numeric field for mean/std/histogram
  bool want_count = true;
  bool want_mean = false;
  bool want_std = false;
  std::uint32_t histogram_bins = 0;  // 0 disables the histogram
};

struct StatsGroup {
  std::string key;
  std::uint64_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // unbiased; 0 for groups of one
  std::vector<std::uint64_t> histogram;
};

struct StatsTable {
  std::vector<double> bin_edges;  // histogram_bins + 1 edges, global range
  std::vector<StatsGroup> groups; // sorted by key
};

/// Queryable sidecar of per-replay metadata. Built once, then read-only.
class MetadataStore {
public:
  MetadataStore() = default;
  explicit MetadataStore(std::vector<MetadataRow> rows);

  [[nodiscard]] const std::vector<MetadataRow>& rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

  /// Rows satisfying every predicate, in (container_path, ordinal) order.
  [[nodiscard]] std::vector<std::pair<std::string, std::uint64_t>> query(
      const FilterSpec& filter) const;

  [[nodiscard]] StatsTable stats(const StatsRequest& request) const;

  /// Single-file persistence: text header, fixed-width binary columns,
  /// trailing string heap.
  void save(const std::filesystem::path& path) const;
  static MetadataStore load(const std::filesystem::path& path);

  /// All rows as comma-separated text with a header line.
  [[nodiscard]] std::string to_csv() const;

private:
  std::vector<MetadataRow> rows_;
};

struct IndexBuildFailure {
  std::string path;
  std::string message;
};

struct IndexBuildReport {
  MetadataStore store;
  std::vector<IndexBuildFailure> failures;
  /// Instrumentation: bytes inflated while indexing, and the metadata
  /// sections' total uncompressed size. Equal when the build honours the
  /// metadata-only contract.
  std::uint64_t decompressed_bytes = 0;
  std::uint64_t metadata_section_bytes = 0;
};

/// One MetadataRow per entry of each finalized container, read at
/// MetadataOnly level. Unreadable paths are reported and skipped.
[[nodiscard]] IndexBuildReport build_index(std::span<const std::filesystem::path> containers);

}  // namespace terc
