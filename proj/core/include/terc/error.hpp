/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace terc {

/// Error categories surfaced by the library. Tools map these onto exit
/// codes (usage errors vs data/I-O errors), tests match on them.
enum class Errc {
  IoFailure,
  BadMagic,
  VersionUnsupported,
  UnfinalizedContainer,
  ChecksumMismatch,
  EntryOutOfRange,
  CorruptIndex,
  SchemaInvalid,
  SchemaMismatch,
  AmbiguousMatch,
  NonZeroPadding,
  UnknownField,
  BadFilter,
  SpecInvalid,
  FormatError,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::IoFailure: return "io failure";
    case Errc::BadMagic: return "bad magic";
    case Errc::VersionUnsupported: return "version unsupported";
    case Errc::UnfinalizedContainer: return "unfinalized container";
    case Errc::ChecksumMismatch: return "checksum mismatch";
    case Errc::EntryOutOfRange: return "entry out of range";
    case Errc::CorruptIndex: return "corrupt index";
    case Errc::SchemaInvalid: return "schema invalid";
    case Errc::SchemaMismatch: return "schema mismatch";
    case Errc::AmbiguousMatch: return "ambiguous match";
    case Errc::NonZeroPadding: return "non-zero padding";
    case Errc::UnknownField: return "unknown field";
    case Errc::BadFilter: return "bad filter";
    case Errc::SpecInvalid: return "spec invalid";
    case Errc::FormatError: return "format error";
  }
  return "unknown error";
}

}  // namespace terc
