/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "terc/container.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstring>

#include "terc/error.hpp"

namespace terc {

std::string_view to_string(SectionId id) {
  switch (id) {
    case SectionId::Metadata: return "metadata";
    case SectionId::Scalars: return "scalars";
    case SectionId::Planes: return "planes";
    case SectionId::Entities: return "entities";
  }
  return "?";
}

std::string_view to_string(ReadLevel level) {
  switch (level) {
    case ReadLevel::MetadataOnly: return "metadata_only";
    case ReadLevel::Scalars: return "scalars";
    case ReadLevel::Planes: return "planes";
    case ReadLevel::Full: return "full";
  }
  return "?";
}

namespace detail {

std::vector<std::byte> metadata_section(const ReplayMetadata& metadata) {
  wire::Writer w;
  metadata.serialize(w);
  return w.take();
}

// observation_count u64, steps u32[], then per scalar channel one column.
std::vector<std::byte> scalars_section(const Schema& schema, const ReplaySequence& seq) {
  wire::Writer w;
  w.put<std::uint64_t>(seq.observations.size());
  for (const auto& obs : seq.observations) w.put(obs.step);
  for (std::size_t c = 0; c < schema.scalar_channels.size(); ++c) {
    for (const auto& obs : seq.observations) append_value(w, obs.scalars[c]);
  }
  return w.take();
}

// Channel-major: all observations of a plane channel stay adjacent, which
// compresses far better than interleaving channels. Bool planes are
// bit-packed. Sizes are implied by the schema and the scalars section's
// observation count.
std::vector<std::byte> planes_section(const Schema& schema, const ReplaySequence& seq) {
  wire::Writer w;
  for (std::size_t c = 0; c < schema.plane_channels.size(); ++c) {
    const auto& spec = schema.plane_channels[c];
    for (const auto& obs : seq.observations) {
      const Plane& plane = obs.planes[c];
      if (spec.element == PlaneElement::Bool) {
        const PackedPlane packed = pack_bits(plane);
        w.put_bytes(std::as_bytes(std::span(packed.bytes)));
      } else {
        w.put_bytes(std::as_bytes(std::span(plane.pixels)));
      }
    }
  }
  return w.take();
}

// flatten_sort output: columns in schema field order, then the u32 index
// column, then declared_step_count. Record count is implied by the section
// length.
std::vector<std::byte> entities_section(const Schema& schema, const ReplaySequence& seq) {
  const FlattenedSoA flat = flatten_sort(schema, seq);
  wire::Writer w;
  std::size_t total = flat.record_count() * (schema.entity_record_width() + 4) + 8;
  w.reserve(total);
  for (const auto& col : flat.columns) w.put_bytes(col.bytes());
  for (std::uint32_t idx : flat.indices) w.put(idx);
  w.put(flat.declared_step_count);
  return w.take();
}

}  // namespace detail

namespace {

struct ParsedHeader {
  std::uint16_t version = 0;
  std::uint64_t schema_hash = 0;
  std::uint64_t index_offset = 0;
  std::uint32_t flags = 0;

  [[nodiscard]] bool finalized() const { return (flags & 1u) != 0; }
  [[nodiscard]] int codec_level() const { return static_cast<int>((flags >> 8) & 0xffu); }
};

void write_header(std::ofstream& out, std::uint64_t schema_hash, std::uint64_t index_offset,
                  std::uint32_t flags) {
  wire::Writer w;
  for (char c : kContainerMagic) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.put(kContainerFormatVersion);
  w.put(schema_hash);
  w.put(index_offset);
  w.put(flags);
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.size()));
}

ParsedHeader parse_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kContainerHeaderSize) raise(Errc::BadMagic, "file shorter than header");
  wire::Reader r(bytes);
  for (char expect : kContainerMagic) {
    if (static_cast<char>(r.get<std::uint8_t>()) != expect) {
      raise(Errc::BadMagic, "container magic mismatch");
    }
  }
  ParsedHeader h;
  h.version = r.get<std::uint16_t>();
  if (h.version != kContainerFormatVersion) {
    raise(Errc::VersionUnsupported,
          "container format version " + std::to_string(h.version) + " not supported");
  }
  h.schema_hash = r.get<std::uint64_t>();
  h.index_offset = r.get<std::uint64_t>();
  h.flags = r.get<std::uint32_t>();
  return h;
}

void write_section(std::ofstream& out, SectionId id, std::span<const std::byte> payload,
                   int level, std::uint64_t& cursor,
                   std::array<std::uint64_t, kSectionCount>& per_section) {
  const std::vector<std::byte> compressed = deflate_compress(payload, level);
  wire::Writer w;
  w.put(static_cast<std::uint32_t>(id));
  w.put<std::uint64_t>(payload.size());
  w.put<std::uint64_t>(compressed.size());
  w.put(crc32_of(compressed));
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.size()));
  out.write(reinterpret_cast<const char*>(compressed.data()),
            static_cast<std::streamsize>(compressed.size()));
  cursor += kSectionHeaderSize + compressed.size();
  per_section[static_cast<std::size_t>(id)] += compressed.size();
}

SectionHeader parse_section_header(wire::Reader& r) {
  SectionHeader h;
  const auto raw_id = r.get<std::uint32_t>();
  if (raw_id >= kSectionCount) {
    raise(Errc::CorruptIndex, "bad section id " + std::to_string(raw_id));
  }
  h.id = static_cast<SectionId>(raw_id);
  h.uncompressed_len = r.get<std::uint64_t>();
  h.compressed_len = r.get<std::uint64_t>();
  h.checksum = r.get<std::uint32_t>();
  return h;
}

}  // namespace

ContainerWriter ContainerWriter::create(const std::filesystem::path& path, const Schema& schema,
                                        int codec_level) {
  auto report = validate_schema(schema);
  if (!report.ok()) {
    raise(Errc::SchemaInvalid, "cannot create container: " + report.violations.front().message);
  }
  if (codec_level < 0 || codec_level > 9) {
    raise(Errc::SpecInvalid, "codec level must be in [0, 9]");
  }

  ContainerWriter w;
  w.schema_ = schema;
  w.schema_hash_ = schema_hash(schema);
  w.codec_level_ = codec_level;
  w.path_ = path;
  w.out_.open(path, std::ios::binary | std::ios::trunc);
  if (!w.out_) raise(Errc::IoFailure, "cannot open for writing: " + path.string());

  write_header(w.out_, w.schema_hash_, 0, static_cast<std::uint32_t>(codec_level) << 8);
  const std::string schema_text = canonical_text(schema);
  wire::Writer sw;
  sw.put_string(schema_text);
  w.out_.write(reinterpret_cast<const char*>(sw.bytes().data()),
               static_cast<std::streamsize>(sw.size()));
  w.cursor_ = kContainerHeaderSize + sw.size();
  w.out_.flush();  // the unfinalized header must be visible to readers now
  if (!w.out_) raise(Errc::IoFailure, "write failed: " + path.string());
  return w;
}

std::uint64_t ContainerWriter::append(const ReplaySequence& seq) {
  if (finalized_) raise(Errc::IoFailure, "append after finalize");
  if (seq.metadata.schema_hash != schema_hash_) {
    raise(Errc::SchemaMismatch, "sequence schema_hash does not match container schema");
  }
  validate_sequence(schema_, seq);

  const std::uint64_t offset = cursor_;
  write_section(out_, SectionId::Metadata, detail::metadata_section(seq.metadata),
                codec_level_, cursor_, per_section_bytes_);
  write_section(out_, SectionId::Scalars, detail::scalars_section(schema_, seq), codec_level_,
                cursor_, per_section_bytes_);
  write_section(out_, SectionId::Planes, detail::planes_section(schema_, seq), codec_level_,
                cursor_, per_section_bytes_);
  write_section(out_, SectionId::Entities, detail::entities_section(schema_, seq), codec_level_,
                cursor_, per_section_bytes_);
  if (!out_) raise(Errc::IoFailure, "write failed: " + path_.string());

  index_.push_back({seq.metadata.replay_id, offset, cursor_ - offset});
  return index_.size() - 1;
}

WriterSummary ContainerWriter::finalize() {
  if (finalized_) return summary_;

  const std::uint64_t index_offset = cursor_;
  wire::Writer w;
  w.put<std::uint64_t>(index_.size());
  for (const auto& e : index_) {
    w.put_string(e.replay_id);
    w.put(e.byte_offset);
    w.put(e.byte_length);
  }
  out_.write(reinterpret_cast<const char*>(w.bytes().data()),
             static_cast<std::streamsize>(w.size()));
  cursor_ += w.size();

  out_.seekp(0);
  write_header(out_, schema_hash_, index_offset,
               1u | (static_cast<std::uint32_t>(codec_level_) << 8));
  out_.flush();
  if (!out_) raise(Errc::IoFailure, "finalize write failed: " + path_.string());
  out_.close();

  finalized_ = true;
  summary_ = {index_.size(), cursor_, per_section_bytes_};
  return summary_;
}

struct ContainerReader::FdHolder {
  int fd = -1;
  ~FdHolder() {
    if (fd >= 0) ::close(fd);
  }
};

std::vector<std::byte> ContainerReader::read_at(std::uint64_t offset, std::size_t len) const {
  std::vector<std::byte> buf(len);
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::pread(fd_->fd, buf.data() + done, len - done,
                        static_cast<off_t>(offset + done));
    if (n < 0) raise(Errc::IoFailure, "pread failed: " + path_.string());
    if (n == 0) raise(Errc::CorruptIndex, "unexpected end of file: " + path_.string());
    done += static_cast<std::size_t>(n);
  }
  return buf;
}

ContainerReader ContainerReader::open(const std::filesystem::path& path) {
  ContainerReader r;
  r.path_ = path;
  r.fd_ = std::make_shared<FdHolder>();
  r.decompressed_bytes_ = std::make_shared<std::atomic<std::uint64_t>>(0);
  r.fd_->fd = ::open(path.c_str(), O_RDONLY);
  if (r.fd_->fd < 0) raise(Errc::IoFailure, "cannot open: " + path.string());

  const auto file_size = static_cast<std::uint64_t>(::lseek(r.fd_->fd, 0, SEEK_END));
  if (file_size < kContainerHeaderSize) raise(Errc::BadMagic, "file shorter than header");

  const auto header_bytes = r.read_at(0, kContainerHeaderSize);
  const ParsedHeader header = parse_header(header_bytes);
  if (!header.finalized()) {
    raise(Errc::UnfinalizedContainer, "container not finalized: " + path.string());
  }
  if (header.index_offset < kContainerHeaderSize || header.index_offset > file_size) {
    raise(Errc::CorruptIndex, "index offset out of bounds");
  }
  r.schema_hash_ = header.schema_hash;
  r.codec_level_ = header.codec_level();
  r.index_offset_ = header.index_offset;

  // Schema text sits right after the header.
  const auto len_bytes = r.read_at(kContainerHeaderSize, 4);
  const auto schema_len = wire::load_le<std::uint32_t>(len_bytes.data());
  if (kContainerHeaderSize + 4 + schema_len > file_size) {
    raise(Errc::CorruptIndex, "schema text extends past end of file");
  }
  const auto text_bytes = r.read_at(kContainerHeaderSize + 4, schema_len);
  r.schema_ = parse_schema_text(
      std::string_view(reinterpret_cast<const char*>(text_bytes.data()), text_bytes.size()));
  if (schema_hash(r.schema_) != r.schema_hash_) {
    raise(Errc::ChecksumMismatch, "embedded schema does not match header hash");
  }

  // Trailing index.
  const auto index_bytes = r.read_at(header.index_offset, file_size - header.index_offset);
  wire::Reader ir(index_bytes);
  const auto entry_count = ir.get<std::uint64_t>();
  r.index_.reserve(entry_count);
  std::uint64_t prev_end = kContainerHeaderSize + 4 + schema_len;
  for (std::uint64_t i = 0; i < entry_count; ++i) {
    IndexEntry e;
    e.replay_id = ir.get_string();
    e.byte_offset = ir.get<std::uint64_t>();
    e.byte_length = ir.get<std::uint64_t>();
    if (e.byte_offset < prev_end || e.byte_offset + e.byte_length > header.index_offset) {
      raise(Errc::CorruptIndex, "index entry " + std::to_string(i) + " overlaps neighbours");
    }
    prev_end = e.byte_offset + e.byte_length;
    r.index_.push_back(std::move(e));
  }
  return r;
}

std::array<SectionHeader, kSectionCount> ContainerReader::section_headers(
    std::uint64_t entry) const {
  if (entry >= index_.size()) {
    raise(Errc::EntryOutOfRange, "entry " + std::to_string(entry) + " of " +
                                     std::to_string(index_.size()));
  }
  const IndexEntry& e = index_[entry];
  std::array<SectionHeader, kSectionCount> headers{};
  std::uint64_t offset = e.byte_offset;
  for (std::size_t s = 0; s < kSectionCount; ++s) {
    const auto bytes = read_at(offset, kSectionHeaderSize);
    wire::Reader hr(bytes);
    headers[s] = parse_section_header(hr);
    if (headers[s].id != static_cast<SectionId>(s)) {
      raise(Errc::CorruptIndex, "sections out of order in entry " + std::to_string(entry));
    }
    offset += kSectionHeaderSize + headers[s].compressed_len;
  }
  if (offset != e.byte_offset + e.byte_length) {
    raise(Errc::CorruptIndex, "entry length mismatch in entry " + std::to_string(entry));
  }
  return headers;
}

std::vector<std::byte> ContainerReader::read_section_payload(const IndexEntry& entry,
                                                             SectionId wanted) const {
  std::uint64_t offset = entry.byte_offset;
  for (std::size_t s = 0; s < kSectionCount; ++s) {
    const auto bytes = read_at(offset, kSectionHeaderSize);
    wire::Reader hr(bytes);
    const SectionHeader h = parse_section_header(hr);
    if (h.id == wanted) {
      const auto compressed = read_at(offset + kSectionHeaderSize, h.compressed_len);
      if (crc32_of(compressed) != h.checksum) {
        raise(Errc::ChecksumMismatch, "section " + std::string(to_string(wanted)) +
                                          " checksum mismatch");
      }
      auto payload = deflate_decompress(compressed, h.uncompressed_len);
      decompressed_bytes_->fetch_add(h.uncompressed_len);
      return payload;
    }
    offset += kSectionHeaderSize + h.compressed_len;
  }
  raise(Errc::CorruptIndex, "section not present");
}

PartialReplay ContainerReader::read(std::uint64_t entry, ReadLevel level) const {
  if (entry >= index_.size()) {
    raise(Errc::EntryOutOfRange, "entry " + std::to_string(entry) + " of " +
                                     std::to_string(index_.size()));
  }
  const IndexEntry& ie = index_[entry];

  PartialReplay out;
  out.level = level;
  {
    const auto payload = read_section_payload(ie, SectionId::Metadata);
    wire::Reader mr(payload);
    out.metadata = ReplayMetadata::deserialize(mr);
    out.declared_step_count = out.metadata.duration_steps;
  }
  if (level < ReadLevel::Scalars) return out;

  {
    const auto payload = read_section_payload(ie, SectionId::Scalars);
    wire::Reader sr(payload);
    const auto obs_count = sr.get<std::uint64_t>();
    out.steps.reserve(obs_count);
    for (std::uint64_t i = 0; i < obs_count; ++i) out.steps.push_back(sr.get<std::uint32_t>());
    out.scalars.assign(obs_count, {});
    for (const auto& channel : schema_.scalar_channels) {
      for (std::uint64_t i = 0; i < obs_count; ++i) {
        out.scalars[i].push_back(read_value(sr, channel.scalar_type));
      }
    }
    if (!sr.exhausted()) raise(Errc::CorruptIndex, "trailing bytes in scalars section");
  }
  if (level < ReadLevel::Planes) return out;

  {
    const auto payload = read_section_payload(ie, SectionId::Planes);
    wire::Reader pr(payload);
    const std::size_t obs_count = out.steps.size();
    out.planes.assign(obs_count, {});
    for (const auto& spec : schema_.plane_channels) {
      for (std::size_t i = 0; i < obs_count; ++i) {
        const auto bytes = pr.get_bytes(spec.serialized_size());
        if (spec.element == PlaneElement::Bool) {
          PackedPlane packed;
          packed.width = spec.width;
          packed.height = spec.height;
          packed.bytes.resize(bytes.size());
          std::memcpy(packed.bytes.data(), bytes.data(), bytes.size());
          out.planes[i].push_back(unpack_bits(packed));
        } else {
          Plane plane;
          plane.width = spec.width;
          plane.height = spec.height;
          plane.pixels.resize(bytes.size());
          std::memcpy(plane.pixels.data(), bytes.data(), bytes.size());
          out.planes[i].push_back(std::move(plane));
        }
      }
    }
    if (!pr.exhausted()) raise(Errc::CorruptIndex, "trailing bytes in planes section");
  }
  if (level < ReadLevel::Full) return out;

  {
    const auto payload = read_section_payload(ie, SectionId::Entities);
    const std::size_t record_width = schema_.entity_record_width() + 4;
    if (payload.size() < 8 || (payload.size() - 8) % record_width != 0) {
      raise(Errc::CorruptIndex, "entities section size inconsistent with schema");
    }
    const std::size_t records = (payload.size() - 8) / record_width;

    FlattenedSoA flat;
    wire::Reader er(payload);
    for (const auto& field : schema_.entity_fields) {
      const std::size_t width = scalar_width(field.scalar_type);
      flat.columns.push_back(
          Column::from_bytes(field.scalar_type, er.get_bytes(records * width)));
    }
    flat.indices.reserve(records);
    for (std::size_t k = 0; k < records; ++k) flat.indices.push_back(er.get<std::uint32_t>());
    flat.declared_step_count = er.get<std::uint64_t>();

    auto dense = reconstruct(schema_, flat);
    if (flat.declared_step_count != out.declared_step_count) {
      raise(Errc::CorruptIndex, "entities declared_step_count disagrees with metadata");
    }

    // Re-attach dense per-step entity lists to the observed steps; any
    // record landing on an unobserved step means the sections disagree.
    out.entities.assign(out.steps.size(), {});
    std::size_t assembled = 0;
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
      auto& slot = dense[out.steps[i]];
      assembled += slot.size();
      out.entities[i] = std::move(slot);
    }
    if (assembled != records) {
      raise(Errc::CorruptIndex, "entities present at unobserved steps");
    }
  }
  return out;
}

ReplaySequence PartialReplay::to_sequence() && {
  if (level != ReadLevel::Full) {
    raise(Errc::EntryOutOfRange, "to_sequence requires a Full read");
  }
  ReplaySequence seq;
  seq.metadata = std::move(metadata);
  seq.declared_step_count = declared_step_count;
  seq.observations.resize(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    seq.observations[i].step = steps[i];
    seq.observations[i].scalars = std::move(scalars[i]);
    seq.observations[i].planes = std::move(planes[i]);
    seq.observations[i].entities = std::move(entities[i]);
  }
  return seq;
}

ReplaySequence ContainerReader::read_sequence(std::uint64_t entry) const {
  return read(entry, ReadLevel::Full).to_sequence();
}

VerifyReport verify_container(const std::filesystem::path& path) {
  VerifyReport report;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    report.note = "cannot open: " + path.string();
    return report;
  }
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());

  std::vector<std::byte> buf;
  auto read_block = [&](std::uint64_t off, std::size_t len) -> bool {
    buf.resize(len);
    in.clear();
    in.seekg(static_cast<std::streamoff>(off));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
    return static_cast<std::size_t>(in.gcount()) == len;
  };

  // Header + embedded schema.
  ParsedHeader header;
  try {
    if (file_size < kContainerHeaderSize || !read_block(0, kContainerHeaderSize)) {
      report.note = "file shorter than header";
      return report;
    }
    header = parse_header(buf);
    if (!header.finalized()) {
      report.note = "container not finalized";
      return report;
    }
    if (!read_block(kContainerHeaderSize, 4)) {
      report.note = "truncated schema length";
      return report;
    }
    const auto schema_len = wire::load_le<std::uint32_t>(buf.data());
    if (kContainerHeaderSize + 4 + schema_len > file_size ||
        !read_block(kContainerHeaderSize + 4, schema_len)) {
      report.note = "truncated schema text";
      return report;
    }
    const Schema schema = parse_schema_text(
        std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
    if (schema_hash(schema) != header.schema_hash) {
      report.note = "embedded schema does not match header hash";
      return report;
    }
  } catch (const Error& e) {
    report.note = e.what();
    return report;
  }
  report.file_ok = true;
  // buf still holds the schema text here.
  const std::uint64_t entries_begin = kContainerHeaderSize + 4 + buf.size();

  // Trailing index.
  std::vector<IndexEntry> index;
  if (header.index_offset < entries_begin || header.index_offset > file_size) {
    report.note = "index offset out of bounds";
    return report;
  }
  try {
    if (!read_block(header.index_offset, file_size - header.index_offset)) {
      report.note = "truncated index";
      return report;
    }
    wire::Reader ir(buf);
    const auto entry_count = ir.get<std::uint64_t>();
    std::uint64_t prev_end = entries_begin;
    for (std::uint64_t i = 0; i < entry_count; ++i) {
      IndexEntry e;
      e.replay_id = ir.get_string();
      e.byte_offset = ir.get<std::uint64_t>();
      e.byte_length = ir.get<std::uint64_t>();
      if (e.byte_offset < prev_end || e.byte_offset + e.byte_length > header.index_offset) {
        report.note = "index entry " + std::to_string(i) + " overlaps neighbours";
        return report;
      }
      prev_end = e.byte_offset + e.byte_length;
      index.push_back(std::move(e));
    }
    if (prev_end != header.index_offset) {
      report.note = "gap between last entry and index";
      return report;
    }
    if (!ir.exhausted()) {
      report.note = "trailing bytes after index";
      return report;
    }
  } catch (const Error& e) {
    report.note = e.what();
    return report;
  }
  report.index_consistent = true;

  // Re-check every section checksum against its stored compressed payload.
  for (std::uint64_t entry = 0; entry < index.size(); ++entry) {
    const IndexEntry& e = index[entry];
    std::uint64_t offset = e.byte_offset;
    bool entry_ok = true;
    for (std::size_t s = 0; s < kSectionCount; ++s) {
      SectionHeader h;
      try {
        if (!read_block(offset, kSectionHeaderSize)) {
          raise(Errc::CorruptIndex, "truncated section header");
        }
        wire::Reader hr(buf);
        h = parse_section_header(hr);
        if (h.id != static_cast<SectionId>(s)) {
          raise(Errc::CorruptIndex, "sections out of order");
        }
        if (offset + kSectionHeaderSize + h.compressed_len >
            e.byte_offset + e.byte_length) {
          raise(Errc::CorruptIndex, "section extends past entry");
        }
      } catch (const Error& err) {
        report.index_consistent = false;
        report.note = "entry " + std::to_string(entry) + ": " + err.what();
        entry_ok = false;
        break;
      }
      if (!read_block(offset + kSectionHeaderSize, h.compressed_len)) {
        report.index_consistent = false;
        entry_ok = false;
        break;
      }
      if (crc32_of(buf) != h.checksum) {
        report.checksum_failures.push_back(
            {entry, static_cast<SectionId>(s), "crc mismatch"});
        entry_ok = false;
      }
      offset += kSectionHeaderSize + h.compressed_len;
    }
    if (entry_ok && offset != e.byte_offset + e.byte_length) {
      report.index_consistent = false;
      entry_ok = false;
    }
    if (entry_ok) ++report.entries_ok;
  }
  return report;
}

}  // namespace terc
