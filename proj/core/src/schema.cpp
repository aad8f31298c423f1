/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/schema.hpp"

#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "terc/error.hpp"
#include "terc/wire.hpp"

namespace terc {

std::size_t scalar_width(ScalarType t) {
  switch (t) {
    case ScalarType::U8: return 1;
    case ScalarType::U16: return 2;
    case ScalarType::U32: return 4;
    case ScalarType::U64: return 8;
    case ScalarType::I32: return 4;
    case ScalarType::F32: return 4;
    case ScalarType::F64: return 8;
    case ScalarType::Bool: return 1;
  }
  return 0;
}

bool is_unsigned_int(ScalarType t) {
  return t == ScalarType::U8 || t == ScalarType::U16 || t == ScalarType::U32 ||
         t == ScalarType::U64;
}

bool is_numeric(ScalarType t) { return t != ScalarType::Bool; }

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::U8: return "u8";
    case ScalarType::U16: return "u16";
    case ScalarType::U32: return "u32";
    case ScalarType::U64: return "u64";
    case ScalarType::I32: return "i32";
    case ScalarType::F32: return "f32";
    case ScalarType::F64: return "f64";
    case ScalarType::Bool: return "bool";
  }
  return "?";
}

std::optional<ScalarType> scalar_type_from(std::string_view token) {
  for (auto t : {ScalarType::U8, ScalarType::U16, ScalarType::U32, ScalarType::U64,
                 ScalarType::I32, ScalarType::F32, ScalarType::F64, ScalarType::Bool}) {
    if (token == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(FieldDynamics d) {
  switch (d) {
    case FieldDynamics::Static: return "static";
    case FieldDynamics::Slow: return "slow";
    case FieldDynamics::Fast: return "fast";
  }
  return "?";
}

std::optional<FieldDynamics> dynamics_from(std::string_view token) {
  for (auto d : {FieldDynamics::Static, FieldDynamics::Slow, FieldDynamics::Fast}) {
    if (token == to_string(d)) return d;
  }
  return std::nullopt;
}

std::string_view to_string(FieldRole r) {
  switch (r) {
    case FieldRole::InstanceId: return "instance_id";
    case FieldRole::Position: return "position";
    case FieldRole::Quantity: return "quantity";
    case FieldRole::Generic: return "generic";
  }
  return "?";
}

std::optional<FieldRole> role_from(std::string_view token) {
  for (auto r : {FieldRole::InstanceId, FieldRole::Position, FieldRole::Quantity,
                 FieldRole::Generic}) {
    if (token == to_string(r)) return r;
  }
  return std::nullopt;
}

std::size_t Schema::instance_id_index() const {
  for (std::size_t i = 0; i < entity_fields.size(); ++i) {
    if (entity_fields[i].role == FieldRole::InstanceId) return i;
  }
  raise(Errc::SchemaInvalid, "no instance_id field");
}

std::optional<std::pair<std::size_t, std::size_t>> Schema::position_indices() const {
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < entity_fields.size(); ++i) {
    if (entity_fields[i].role != FieldRole::Position) continue;
    if (!first) {
      first = i;
    } else {
      return std::make_pair(*first, i);
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> Schema::quantity_index() const {
  for (std::size_t i = 0; i < entity_fields.size(); ++i) {
    if (entity_fields[i].role == FieldRole::Quantity) return i;
  }
  return std::nullopt;
}

std::size_t Schema::entity_record_width() const {
  std::size_t w = 0;
  for (const auto& f : entity_fields) w += scalar_width(f.scalar_type);
  return w;
}

ValidationReport validate_schema(const Schema& schema) {
  ValidationReport report;
  auto flag = [&](std::string field, std::string message) {
    report.violations.push_back({std::move(field), std::move(message)});
  };

  std::set<std::string_view> names;
  auto check_unique = [&](const std::string& name) {
    if (!names.insert(name).second) flag(name, "duplicate name " + name);
  };
  for (const auto& f : schema.entity_fields) check_unique(f.name);
  for (const auto& f : schema.scalar_channels) check_unique(f.name);
  for (const auto& p : schema.plane_channels) check_unique(p.name);

  std::size_t instance_ids = 0;
  std::size_t positions = 0;
  for (const auto& f : schema.entity_fields) {
    if (f.name.empty()) flag(f.name, "empty field name");
    switch (f.role) {
      case FieldRole::InstanceId:
        ++instance_ids;
        if (!is_unsigned_int(f.scalar_type)) {
          flag(f.name, "instance_id field must be an unsigned integer type");
        }
        break;
      case FieldRole::Position:
        ++positions;
        if (!is_numeric(f.scalar_type)) flag(f.name, "position field must be numeric");
        break;
      case FieldRole::Quantity:
        if (!is_numeric(f.scalar_type)) flag(f.name, "quantity field must be numeric");
        break;
      case FieldRole::Generic:
        break;
    }
  }
  if (instance_ids == 0) flag("", "no instance_id field");
  if (instance_ids > 1) flag("", "multiple instance_id fields");
  if (positions != 0 && positions != 2) {
    flag("", "position fields must form one (x, y) pair, found " + std::to_string(positions));
  }

  for (const auto& f : schema.scalar_channels) {
    if (f.role != FieldRole::Generic) {
      flag(f.name, "scalar channel role must be generic");
    }
  }
  for (const auto& p : schema.plane_channels) {
    if (p.pixel_count() == 0) flag(p.name, "plane must have width*height > 0");
  }
  if (!(schema.step_seconds > 0.0)) flag("", "step_seconds must be positive");

  return report;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_field_line(std::string& out, std::string_view kind, const FieldDescriptor& f) {
  out += kind;
  out += ' ';
  out += f.name;
  out += ' ';
  out += to_string(f.scalar_type);
  out += ' ';
  out += to_string(f.dynamics);
  out += ' ';
  out += to_string(f.role);
  if (f.role == FieldRole::Quantity && f.quantity_default != 0.0) {
    out += " default=";
    out += format_double(f.quantity_default);
  }
  out += '\n';
}

}  // namespace

std::string canonical_text(const Schema& schema) {
  std::string out = "terc-schema 1\n";
  out += "step_seconds ";
  out += format_double(schema.step_seconds);
  out += '\n';
  for (const auto& f : schema.entity_fields) append_field_line(out, "entity", f);
  for (const auto& f : schema.scalar_channels) append_field_line(out, "scalar", f);
  for (const auto& p : schema.plane_channels) {
    out += "plane ";
    out += p.name;
    out += ' ';
    out += std::to_string(p.width);
    out += ' ';
    out += std::to_string(p.height);
    out += ' ';
    out += p.element == PlaneElement::Bool ? "bool" : "u8";
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double_or(std::string_view token, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    raise(Errc::SchemaInvalid, std::string("bad ") + what + ": " + std::string(token));
  }
  return v;
}

std::uint64_t parse_u64_or(std::string_view token, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    raise(Errc::SchemaInvalid, std::string("bad ") + what + ": " + std::string(token));
  }
  return v;
}

FieldDescriptor parse_field_line(const std::vector<std::string_view>& tok) {
  if (tok.size() < 5) raise(Errc::SchemaInvalid, "field line needs name, type, dynamics, role");
  FieldDescriptor f;
  f.name = std::string(tok[1]);
  auto st = scalar_type_from(tok[2]);
  if (!st) raise(Errc::SchemaInvalid, "unknown scalar type: " + std::string(tok[2]));
  f.scalar_type = *st;
  auto dy = dynamics_from(tok[3]);
  if (!dy) raise(Errc::SchemaInvalid, "unknown dynamics: " + std::string(tok[3]));
  f.dynamics = *dy;
  auto ro = role_from(tok[4]);
  if (!ro) raise(Errc::SchemaInvalid, "unknown role: " + std::string(tok[4]));
  f.role = *ro;
  for (std::size_t i = 5; i < tok.size(); ++i) {
    constexpr std::string_view kDefault = "default=";
    if (tok[i].starts_with(kDefault)) {
      f.quantity_default = parse_double_or(tok[i].substr(kDefault.size()), "default value");
    } else {
      raise(Errc::SchemaInvalid, "unexpected token: " + std::string(tok[i]));
    }
  }
  return f;
}

}  // namespace

Schema parse_schema_text(std::string_view text) {
  Schema schema;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    auto tok = split_tokens(line);
    if (tok.empty()) continue;
    if (!saw_header) {
      if (tok.size() != 2 || tok[0] != "terc-schema" || tok[1] != "1") {
        raise(Errc::SchemaInvalid, "missing terc-schema 1 header line");
      }
      saw_header = true;
      continue;
    }
    if (tok[0] == "step_seconds") {
      if (tok.size() != 2) raise(Errc::SchemaInvalid, "step_seconds takes one value");
      schema.step_seconds = parse_double_or(tok[1], "step_seconds");
    } else if (tok[0] == "entity") {
      schema.entity_fields.push_back(parse_field_line(tok));
    } else if (tok[0] == "scalar") {
      schema.scalar_channels.push_back(parse_field_line(tok));
    } else if (tok[0] == "plane") {
      if (tok.size() != 5) raise(Errc::SchemaInvalid, "plane line needs name, width, height, element");
      PlaneSpec p;
      p.name = std::string(tok[1]);
      p.width = static_cast<std::uint32_t>(parse_u64_or(tok[2], "plane width"));
      p.height = static_cast<std::uint32_t>(parse_u64_or(tok[3], "plane height"));
      if (tok[4] == "bool") {
        p.element = PlaneElement::Bool;
      } else if (tok[4] == "u8") {
        p.element = PlaneElement::U8;
      } else {
        raise(Errc::SchemaInvalid, "plane element must be bool or u8");
      }
      schema.plane_channels.push_back(std::move(p));
    } else {
      raise(Errc::SchemaInvalid, "unknown schema line kind: " + std::string(tok[0]));
    }
  }
  if (!saw_header) raise(Errc::SchemaInvalid, "empty schema text");
  return schema;
}

std::uint64_t schema_hash(const Schema& schema) {
  return wire::fnv1a64(canonical_text(schema));
}

}  // namespace terc
