/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/metadata_store.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "terc/container.hpp"
#include "terc/error.hpp"
#include "terc/wire.hpp"

namespace terc {

namespace {

enum class FieldKind : std::uint8_t { Str, U64, I32Opt, F64 };

struct FieldInfo {
  std::string_view name;
  FieldKind kind;
};

constexpr std::array<FieldInfo, 10> kFields = {{
    {"container_path", FieldKind::Str},
    {"entry_ordinal", FieldKind::U64},
    {"replay_id", FieldKind::Str},
    {"scenario_tag", FieldKind::Str},
    {"duration_steps", FieldKind::U64},
    {"entity_count_peak", FieldKind::U64},
    {"action_count", FieldKind::U64},
    {"outcome_label", FieldKind::I32Opt},
    {"schema_hash", FieldKind::U64},
    {"apm_analog", FieldKind::F64},
}};

const FieldInfo& field_info(std::string_view name) {
  for (const auto& f : kFields) {
    if (f.name == name) return f;
  }
  raise(Errc::UnknownField, "no metadata field named " + std::string(name));
}

std::string_view str_of(const MetadataRow& row, std::string_view field) {
  if (field == "container_path") return row.container_path;
  if (field == "replay_id") return row.replay_id;
  return row.scenario_tag;
}

std::uint64_t u64_of(const MetadataRow& row, std::string_view field) {
  if (field == "entry_ordinal") return row.entry_ordinal;
  if (field == "duration_steps") return row.duration_steps;
  if (field == "entity_count_peak") return row.entity_count_peak;
  if (field == "action_count") return row.action_count;
  return row.schema_hash;
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    raise(Errc::BadFilter, std::string("cannot parse ") + what + " from '" +
                               std::string(text) + "'");
  }
  return v;
}

template <typename T>
bool compare(FilterOp op, T lhs, T rhs) {
  switch (op) {
    case FilterOp::Less: return lhs < rhs;
    case FilterOp::LessEq: return lhs <= rhs;
    case FilterOp::Eq: return lhs == rhs;
    case FilterOp::GreaterEq: return lhs >= rhs;
    case FilterOp::Greater: return lhs > rhs;
  }
  return false;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FilterPredicate parse_predicate(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, FilterOp>, 6> kOps = {{
      {"<=", FilterOp::LessEq},
      {">=", FilterOp::GreaterEq},
      {"==", FilterOp::Eq},
      {"<", FilterOp::Less},
      {">", FilterOp::Greater},
      {"=", FilterOp::Eq},
  }};
  for (const auto& [token, op] : kOps) {
    const auto at = text.find(token);
    if (at == std::string_view::npos) continue;
    FilterPredicate pred;
    pred.field = std::string(text.substr(0, at));
    pred.op = op;
    pred.value = std::string(text.substr(at + token.size()));
    // Trim surrounding spaces from both sides.
    auto trim = [](std::string& s) {
      while (!s.empty() && s.front() == ' ') s.erase(s.begin());
      while (!s.empty() && s.back() == ' ') s.pop_back();
    };
    trim(pred.field);
    trim(pred.value);
    if (pred.field.empty() || pred.value.empty()) {
      raise(Errc::BadFilter, "predicate needs field and value: " + std::string(text));
    }
    return pred;
  }
  raise(Errc::BadFilter, "no comparison operator in '" + std::string(text) + "'");
}

bool matches(const MetadataRow& row, const FilterPredicate& pred) {
  const FieldInfo& info = field_info(pred.field);
  switch (info.kind) {
    case FieldKind::Str:
      if (pred.op != FilterOp::Eq) {
        raise(Errc::BadFilter, "string field " + pred.field + " only supports =");
      }
      return str_of(row, pred.field) == pred.value;
    case FieldKind::U64:
      return compare(pred.op, u64_of(row, pred.field),
                     parse_number<std::uint64_t>(pred.value, pred.field.c_str()));
    case FieldKind::I32Opt: {
      if (!row.outcome_label) return false;
      return compare(pred.op, *row.outcome_label,
                     parse_number<std::int32_t>(pred.value, pred.field.c_str()));
    }
    case FieldKind::F64:
      return compare(pred.op, row.apm_analog,
                     parse_number<double>(pred.value, pred.field.c_str()));
  }
  return false;
}

MetadataStore::MetadataStore(std::vector<MetadataRow> rows) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(), [](const MetadataRow& a, const MetadataRow& b) {
    return std::tie(a.container_path, a.entry_ordinal) <
           std::tie(b.container_path, b.entry_ordinal);
  });
}

std::vector<std::pair<std::string, std::uint64_t>> MetadataStore::query(
    const FilterSpec& filter) const {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& row : rows_) {
    bool keep = true;
    for (const auto& pred : filter.predicates) {
      if (!matches(row, pred)) {
        keep = false;
        break;
      }
    }
    if (keep) out.emplace_back(row.container_path, row.entry_ordinal);
  }
  return out;
}

namespace {

std::string group_key(const MetadataRow& row, std::string_view field, FieldKind kind) {
  switch (kind) {
    case FieldKind::Str: return std::string(str_of(row, field));
    case FieldKind::U64: return std::to_string(u64_of(row, field));
    case FieldKind::I32Opt:
      return row.outcome_label ? std::to_string(*row.outcome_label) : "null";
    case FieldKind::F64: return format_double(row.apm_analog);
  }
  return {};
}

/// Numeric view for aggregation; nullopt when the row has no value.
std::optional<double> numeric_value(const MetadataRow& row, std::string_view field,
                                    FieldKind kind) {
  switch (kind) {
    case FieldKind::U64: return static_cast<double>(u64_of(row, field));
    case FieldKind::I32Opt:
      if (!row.outcome_label) return std::nullopt;
      return static_cast<double>(*row.outcome_label);
    case FieldKind::F64: return row.apm_analog;
    case FieldKind::Str: break;
  }
  raise(Errc::BadFilter, "field " + std::string(field) + " is not numeric");
}

}  // namespace

StatsTable MetadataStore::stats(const StatsRequest& request) const {
  const FieldInfo& group_info = field_info(request.group_by);
  const bool needs_values =
      request.want_mean || request.want_std || request.histogram_bins > 0;
  const FieldInfo* value_info = nullptr;
  if (needs_values) {
    if (request.value_field.empty()) {
      raise(Errc::BadFilter, "mean/std/histogram need a value field");
    }
    value_info = &field_info(request.value_field);
    if (value_info->kind == FieldKind::Str) {
      raise(Errc::BadFilter, "field " + request.value_field + " is not numeric");
    }
  }

  StatsTable table;
  if (request.histogram_bins > 0) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& row : rows_) {
      auto v = numeric_value(row, request.value_field, value_info->kind);
      if (!v) continue;
      lo = any ? std::min(lo, *v) : *v;
      hi = any ? std::max(hi, *v) : *v;
      any = true;
    }
    if (!any) hi = lo + 1.0;
    if (hi == lo) hi = lo + 1.0;
    table.bin_edges.resize(request.histogram_bins + 1);
    for (std::uint32_t b = 0; b <= request.histogram_bins; ++b) {
      table.bin_edges[b] = lo + (hi - lo) * b / request.histogram_bins;
    }
  }

  std::map<std::string, std::vector<double>> values_by_group;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& row : rows_) {
    const std::string key = group_key(row, request.group_by, group_info.kind);
    ++counts[key];
    if (!needs_values) continue;
    auto v = numeric_value(row, request.value_field, value_info->kind);
    if (v) values_by_group[key].push_back(*v);
  }

  for (const auto& [key, count] : counts) {
    StatsGroup g;
    g.key = key;
    g.count = count;
    if (needs_values) {
      const auto& vals = values_by_group[key];
      if (!vals.empty()) {
        double sum = 0.0;
        for (double v : vals) sum += v;
        g.mean = sum / static_cast<double>(vals.size());
        if (vals.size() >= 2) {
          double ss = 0.0;
          for (double v : vals) ss += (v - g.mean) * (v - g.mean);
          g.std_dev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
        }
      }
      if (request.histogram_bins > 0) {
        g.histogram.assign(request.histogram_bins, 0);
        const double lo = table.bin_edges.front();
        const double hi = table.bin_edges.back();
        for (double v : vals) {
          auto bin = static_cast<std::int64_t>((v - lo) / (hi - lo) * request.histogram_bins);
          bin = std::clamp<std::int64_t>(bin, 0, request.histogram_bins - 1);
          ++g.histogram[static_cast<std::size_t>(bin)];
        }
      }
    }
    table.groups.push_back(std::move(g));
  }
  return table;
}

namespace {

constexpr std::string_view kStoreHeader = "terc-metastore 1";

void put_str_cell(wire::Writer& cells, wire::Writer& heap, const std::string& s) {
  cells.put<std::uint32_t>(static_cast<std::uint32_t>(heap.size()));
  cells.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  heap.put_bytes(std::as_bytes(std::span(s.data(), s.size())));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void MetadataStore::save(const std::filesystem::path& path) const {
  wire::Writer cells;
  wire::Writer heap;
  for (const auto& row : rows_) {
    put_str_cell(cells, heap, row.container_path);
    cells.put(row.entry_ordinal);
    put_str_cell(cells, heap, row.replay_id);
    put_str_cell(cells, heap, row.scenario_tag);
    cells.put(row.duration_steps);
    cells.put(row.entity_count_peak);
    cells.put(row.action_count);
    cells.put_bool(row.outcome_label.has_value());
    cells.put<std::int32_t>(row.outcome_label.value_or(0));
    cells.put(row.schema_hash);
    cells.put_f64(row.apm_analog);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoFailure, "cannot open for writing: " + path.string());
  out << kStoreHeader << '\n';
  out << "rows " << rows_.size() << '\n';
  out << "heap " << heap.size() << '\n';
  out << "columns";
  for (const auto& f : kFields) out << ' ' << f.name;
  out << '\n';
  out << "end\n";
  out.write(reinterpret_cast<const char*>(cells.bytes().data()),
            static_cast<std::streamsize>(cells.size()));
  out.write(reinterpret_cast<const char*>(heap.bytes().data()),
            static_cast<std::streamsize>(heap.size()));
  if (!out) raise(Errc::IoFailure, "write failed: " + path.string());
}

MetadataStore MetadataStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoFailure, "cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != kStoreHeader) {
    raise(Errc::FormatError, "not a terc-metastore file: " + path.string());
  }
  std::uint64_t row_count = 0;
  std::uint64_t heap_size = 0;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    if (line.starts_with("rows ")) {
      row_count = parse_number<std::uint64_t>(std::string_view(line).substr(5), "row count");
    } else if (line.starts_with("heap ")) {
      heap_size = parse_number<std::uint64_t>(std::string_view(line).substr(5), "heap size");
    } else if (line.starts_with("columns ")) {
      std::string expected = "columns";
      for (const auto& f : kFields) expected += ' ' + std::string(f.name);
      if (line != expected) raise(Errc::FormatError, "unexpected column layout");
    } else {
      raise(Errc::FormatError, "unknown store header line: " + line);
    }
  }
  if (!saw_end) raise(Errc::FormatError, "store header missing end marker");

  constexpr std::size_t kCellBytesPerRow = 8 + 8 + 8 + 8 + 8 + 8 + 8 + 5 + 8 + 8;
  std::vector<std::byte> cells(row_count * kCellBytesPerRow);
  in.read(reinterpret_cast<char*>(cells.data()), static_cast<std::streamsize>(cells.size()));
  std::vector<std::byte> heap(heap_size);
  in.read(reinterpret_cast<char*>(heap.data()), static_cast<std::streamsize>(heap.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != heap_size) {
    raise(Errc::FormatError, "truncated store file");
  }

  auto heap_str = [&](std::uint32_t offset, std::uint32_t len) -> std::string {
    if (static_cast<std::uint64_t>(offset) + len > heap.size()) {
      raise(Errc::FormatError, "string cell outside heap");
    }
    return std::string(reinterpret_cast<const char*>(heap.data()) + offset, len);
  };

  wire::Reader r(cells);
  std::vector<MetadataRow> rows;
  rows.reserve(row_count);
  for (std::uint64_t i = 0; i < row_count; ++i) {
    MetadataRow row;
    const auto path_off = r.get<std::uint32_t>();
    const auto path_len = r.get<std::uint32_t>();
    row.container_path = heap_str(path_off, path_len);
    row.entry_ordinal = r.get<std::uint64_t>();
    const auto id_off = r.get<std::uint32_t>();
    const auto id_len = r.get<std::uint32_t>();
    row.replay_id = heap_str(id_off, id_len);
    const auto tag_off = r.get<std::uint32_t>();
    const auto tag_len = r.get<std::uint32_t>();
    row.scenario_tag = heap_str(tag_off, tag_len);
    row.duration_steps = r.get<std::uint64_t>();
    row.entity_count_peak = r.get<std::uint64_t>();
    row.action_count = r.get<std::uint64_t>();
    const bool has_outcome = r.get_bool();
    const auto outcome = r.get<std::int32_t>();
    if (has_outcome) row.outcome_label = outcome;
    row.schema_hash = r.get<std::uint64_t>();
    row.apm_analog = r.get_f64();
    rows.push_back(std::move(row));
  }
  return MetadataStore(std::move(rows));
}

std::string MetadataStore::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < kFields.size(); ++i) {
    if (i) out += ',';
    out += kFields[i].name;
  }
  out += '\n';
  for (const auto& row : rows_) {
    out += csv_escape(row.container_path);
    out += ',' + std::to_string(row.entry_ordinal);
    out += ',' + csv_escape(row.replay_id);
    out += ',' + csv_escape(row.scenario_tag);
    out += ',' + std::to_string(row.duration_steps);
    out += ',' + std::to_string(row.entity_count_peak);
    out += ',' + std::to_string(row.action_count);
    out += ',';
    out += row.outcome_label ? std::to_string(*row.outcome_label) : "";
    out += ',' + std::to_string(row.schema_hash);
    out += ',' + format_double(row.apm_analog);
    out += '\n';
  }
  return out;
}

IndexBuildReport build_index(std::span<const std::filesystem::path> containers) {
  IndexBuildReport report;
  std::vector<MetadataRow> rows;
  std::set<std::string> seen;
  for (const auto& path : containers) {
    if (!seen.insert(path.string()).second) continue;  // ignore duplicate paths
    try {
      const ContainerReader reader = ContainerReader::open(path);
      const double step_seconds = reader.schema().step_seconds;
      for (std::uint64_t entry = 0; entry < reader.entry_count(); ++entry) {
        report.metadata_section_bytes +=
            reader.section_headers(entry)[0].uncompressed_len;
        const PartialReplay partial = reader.read(entry, ReadLevel::MetadataOnly);
        const ReplayMetadata& m = partial.metadata;
        MetadataRow row;
        row.container_path = path.string();
        row.entry_ordinal = entry;
        row.replay_id = m.replay_id;
        row.scenario_tag = m.scenario_tag;
        row.duration_steps = m.duration_steps;
        row.entity_count_peak = m.entity_count_peak;
        row.action_count = m.action_count;
        row.outcome_label = m.outcome_label;
        row.schema_hash = m.schema_hash;
        const double minutes =
            static_cast<double>(m.duration_steps) * step_seconds / 60.0;
        row.apm_analog = minutes > 0.0 ? static_cast<double>(m.action_count) / minutes : 0.0;
        rows.push_back(std::move(row));
      }
      report.decompressed_bytes += reader.decompressed_bytes();
    } catch (const Error& e) {
      report.failures.push_back({path.string(), e.what()});
    }
  }
  report.store = MetadataStore(std::move(rows));
  return report;
}

}  // namespace terc
