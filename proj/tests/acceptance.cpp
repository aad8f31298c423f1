/*
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Criteria run against the pinned W1 reference workload (seed 42)
// plus property-generated inputs.
//
//   terc-acceptance --cli <terc-bench path> --workloads <dir> [--keep]

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../tests/support.hpp"
#include "terc/container.hpp"
#include "terc/identity.hpp"
#include "terc/metadata_store.hpp"
#include "terc/simgen.hpp"

using namespace terc;
namespace fs = std::filesystem;

namespace {

struct Context {
  std::string cli;
  fs::path workload_dir;
  fs::path tmp;
  fs::path corpus;             // W1 x 20 container, built once via the CLI
  WorkloadSpec w1;
  int failures = 0;
};

void check(Context& ctx, bool ok, const std::string& what) {
  if (!ok) {
    ++ctx.failures;
    std::cout << "       - failed: " << what << '\n';
  }
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

std::string sha_file(const fs::path& path) {
  // Content hash via FNV over the raw bytes; enough to compare two files.
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return std::to_string(h);
}

std::uint64_t rss_self_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::uint64_t kb = 0;
      std::sscanf(line.c_str(), "VmRSS: %lu", &kb);
      return kb * 1024;
    }
  }
  return 0;
}

using Criterion = std::function<void(Context&)>;

void run_criterion(Context& ctx, int number, const std::string& name, const Criterion& fn) {
  const int before = ctx.failures;
  const auto start = std::chrono::steady_clock::now();
  try {
    fn(ctx);
  } catch (const std::exception& e) {
    ++ctx.failures;
    std::cout << "       - exception: " << e.what() << '\n';
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = ctx.failures == before;
  std::printf("[%s] criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              secs);
  std::fflush(stdout);
}

// ---- criterion 1: round-trip losslessness --------------------------------

void criterion_round_trip(Context& ctx) {
  Xoshiro256pp rng(4242);
  const Schema schema = test::full_schema();
  const int kSequences = 1000;
  const int kPerContainer = 100;

  int done = 0;
  while (done < kSequences) {
    const auto path = ctx.tmp / ("rt" + std::to_string(done) + ".terc");
    auto writer = ContainerWriter::create(path, schema);
    std::vector<ReplaySequence> batch;
    for (int i = 0; i < kPerContainer && done + i < kSequences; ++i) {
      batch.push_back(test::random_sequence(rng, schema));
      writer.append(batch.back());

      // Layout-level round trip against the canonical dense table.
      const auto& seq = batch.back();
      const auto dense = reconstruct(schema, flatten_sort(schema, seq));
      check(ctx, dense.size() == seq.declared_step_count, "declared step count preserved");
      const auto canon = canonicalize(schema, seq);
      std::set<std::uint32_t> observed;
      for (const auto& obs : canon.observations) {
        observed.insert(obs.step);
        if (dense[obs.step] != obs.entities) {
          check(ctx, false, "entity table mismatch after flatten/reconstruct");
          break;
        }
      }
      for (std::size_t t = 0; t < dense.size(); ++t) {
        if (!observed.contains(static_cast<std::uint32_t>(t)) && !dense[t].empty()) {
          check(ctx, false, "entities materialized at unobserved step");
        }
      }
    }
    writer.finalize();

    const auto reader = ContainerReader::open(path);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (reader.read_sequence(i) != canonicalize(schema, batch[i])) {
        check(ctx, false, "container round trip mismatch at entry " + std::to_string(i));
      }
    }
    done += static_cast<int>(batch.size());
    fs::remove(path);
  }
}

// ---- criterion 2: layout ordering (Table 2 analog) ------------------------

void criterion_layout_order(Context& ctx) {
  const ContainerReader reader = ContainerReader::open(ctx.corpus);
  std::map<LayoutOrder, std::uint64_t> totals;
  for (std::uint64_t entry = 0; entry < reader.entry_count(); ++entry) {
    const auto seq = reader.read_sequence(entry);
    for (auto order : kAllLayoutOrders) {
      totals[order] +=
          deflate_compress(relayout(reader.schema(), seq, order), reader.codec_level()).size();
    }
  }
  const double unt = static_cast<double>(totals[LayoutOrder::InstanceMajor]);
  const double utn = static_cast<double>(totals[LayoutOrder::TimeMajor]);
  const double tnu = static_cast<double>(totals[LayoutOrder::RecordMajor]);
  std::printf("       instance=%.0f time=%.0f per_step=%llu record=%.0f inst/rec=%.3f\n", unt,
              utn,
              static_cast<unsigned long long>(totals[LayoutOrder::PerStepColumns]), tnu,
              unt / tnu);
  check(ctx, unt < utn, "instance-major smaller than time-major");
  check(ctx, unt < tnu, "instance-major smaller than record-major");
  check(ctx, unt <= 0.6 * tnu, "instance-major <= 0.6 x record-major");
}

// ---- criterion 3: whole-corpus reduction (Fig. 3 analog) -------------------

void criterion_corpus_reduction(Context& ctx) {
  const ContainerReader reader = ContainerReader::open(ctx.corpus);
  const Schema& schema = reader.schema();
  const int level = reader.codec_level();

  // Naive pipeline: identical metadata/scalars/planes sections, but the
  // entity data serialized per timestep in record order, each timestep its
  // own compressed section.
  std::uint64_t naive_total = kContainerHeaderSize + 4 + canonical_text(schema).size();
  for (std::uint64_t entry = 0; entry < reader.entry_count(); ++entry) {
    const auto seq = reader.read_sequence(entry);
    for (const auto& payload :
         {detail::metadata_section(seq.metadata), detail::scalars_section(schema, seq),
          detail::planes_section(schema, seq)}) {
      naive_total += kSectionHeaderSize + deflate_compress(payload, level).size();
    }
    for (const auto& obs : seq.observations) {
      wire::Writer chunk;
      for (const auto& ent : obs.entities) {
        for (const auto& v : ent.values) append_value(chunk, v);
      }
      naive_total += kSectionHeaderSize + deflate_compress(chunk.bytes(), level).size();
    }
  }
  naive_total += fs::file_size(ctx.corpus) - reader.index_offset();  // same index cost

  const auto full_total = static_cast<std::uint64_t>(fs::file_size(ctx.corpus));
  std::printf("       full=%llu naive=%llu ratio=%.3f\n",
              static_cast<unsigned long long>(full_total),
              static_cast<unsigned long long>(naive_total),
              static_cast<double>(full_total) / static_cast<double>(naive_total));
  check(ctx, full_total <= naive_total * 2 / 5, "full pipeline <= 0.4 x naive serialization");
}

// ---- criterion 4: partial-read economy ------------------------------------

void criterion_partial_read(Context& ctx) {
  const ContainerReader reader = ContainerReader::open(ctx.corpus);

  // Decompressed-byte economy on every entry, straight off the
  // instrumentation counter.
  for (std::uint64_t entry = 0; entry < reader.entry_count(); ++entry) {
    std::uint64_t mark = reader.decompressed_bytes();
    (void)reader.read(entry, ReadLevel::Scalars);
    const std::uint64_t scalars_bytes = reader.decompressed_bytes() - mark;
    mark = reader.decompressed_bytes();
    (void)reader.read(entry, ReadLevel::Full);
    const std::uint64_t full_bytes = reader.decompressed_bytes() - mark;
    if (scalars_bytes * 10 > full_bytes) {
      check(ctx, false, "scalars level exceeds 10% of full on entry " + std::to_string(entry));
      return;
    }
  }

  // Wall-time ordering over 100 trials on entry 0.
  auto time_level = [&](ReadLevel level) {
    std::vector<double> samples;
    for (int t = 0; t < 100; ++t) {
      const auto start = std::chrono::steady_clock::now();
      (void)reader.read(0, level);
      samples.push_back(std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count());
    }
    double sum = 0;
    for (double v : samples) sum += v;
    return sum / static_cast<double>(samples.size());
  };
  const double meta_ms = time_level(ReadLevel::MetadataOnly);
  const double scalars_ms = time_level(ReadLevel::Scalars);
  const double full_ms = time_level(ReadLevel::Full);
  std::printf("       mean ms: metadata=%.3f scalars=%.3f full=%.3f\n", meta_ms, scalars_ms,
              full_ms);
  check(ctx, meta_ms < scalars_ms, "metadata faster than scalars");
  check(ctx, scalars_ms < full_ms, "scalars faster than full");
}

// ---- criterion 5: random access -------------------------------------------

void criterion_random_access(Context& ctx) {
  const ContainerReader corpus = ContainerReader::open(ctx.corpus);
  const auto last = corpus.entry_count() - 1;
  const auto seq = corpus.read_sequence(last);

  const auto single_path = ctx.tmp / "single.terc";
  auto writer = ContainerWriter::create(single_path, corpus.schema(), corpus.codec_level());
  writer.append(seq);
  writer.finalize();

  const ContainerReader fresh = ContainerReader::open(ctx.corpus);
  const ContainerReader single = ContainerReader::open(single_path);
  (void)fresh.read(last, ReadLevel::Full);
  (void)single.read(0, ReadLevel::Full);
  check(ctx, fresh.decompressed_bytes() == single.decompressed_bytes(),
        "identical decompressed bytes for last-of-20 vs single-entry");
  fs::remove(single_path);
}

// ---- criterion 6: determinism ----------------------------------------------

void criterion_determinism(Context& ctx) {
  const auto again = ctx.tmp / "w1x20-again.terc";
  const std::string spec = (ctx.workload_dir / "w1.workload").string();
  const std::string command = ctx.cli + " convert --spec " + spec +
                              " --seed 42 --count 20 --out " + again.string() + " --quiet";
  check(ctx, run_command(command) == 0, "second convert run succeeds");
  check(ctx, sha_file(ctx.corpus) == sha_file(again), "byte-identical container files");
  fs::remove(again);
}

// ---- criterion 7: integrity ------------------------------------------------

void criterion_integrity(Context& ctx) {
  // Collect payload extents (entry, section, file offset, length).
  struct Extent {
    std::uint64_t entry;
    std::size_t section;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Extent> extents;
  {
    const ContainerReader reader = ContainerReader::open(ctx.corpus);
    for (std::uint64_t entry = 0; entry < reader.entry_count(); ++entry) {
      const auto headers = reader.section_headers(entry);
      std::uint64_t offset = reader.index()[entry].byte_offset;
      for (std::size_t s = 0; s < kSectionCount; ++s) {
        offset += kSectionHeaderSize;
        extents.push_back({entry, s, offset, headers[s].compressed_len});
        offset += headers[s].compressed_len;
      }
    }
  }

  const auto flipped = ctx.tmp / "flipped.terc";
  Xoshiro256pp rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    const Extent& target = extents[rng.next_below(extents.size())];
    if (target.length == 0) continue;
    const std::uint64_t at = target.offset + rng.next_below(target.length);

    fs::copy_file(ctx.corpus, flipped, fs::copy_options::overwrite_existing);
    {
      std::fstream f(flipped, std::ios::in | std::ios::out | std::ios::binary);
      f.seekg(static_cast<std::streamoff>(at));
      char byte = 0;
      f.read(&byte, 1);
      byte = static_cast<char>(byte ^ (1u << rng.next_below(8)));
      f.seekp(static_cast<std::streamoff>(at));
      f.write(&byte, 1);
    }
    const auto report = verify_container(flipped);
    const bool localized = report.checksum_failures.size() == 1 &&
                           report.checksum_failures[0].entry == target.entry &&
                           static_cast<std::size_t>(report.checksum_failures[0].section) ==
                               target.section;
    if (!localized) {
      check(ctx, false,
            "flip at entry " + std::to_string(target.entry) + " section " +
                std::to_string(target.section) + " not localized");
      break;
    }
  }
  fs::remove(flipped);
}

// ---- criterion 8: query oracle equivalence ----------------------------------

void criterion_query_oracle(Context& ctx) {
  Xoshiro256pp rng(888);
  std::vector<MetadataRow> rows;
  for (int i = 0; i < 500; ++i) {
    MetadataRow row;
    row.container_path = "c" + std::to_string(rng.next_below(5)) + ".terc";
    row.entry_ordinal = static_cast<std::uint64_t>(i);
    row.replay_id = "r" + std::to_string(i);
    row.scenario_tag = rng.next_below(2) ? "warehouse" : "yard";
    row.duration_steps = rng.next_below(10000);
    row.entity_count_peak = rng.next_below(256);
    row.action_count = rng.next_below(2000);
    if (rng.next_below(3) != 0) row.outcome_label = static_cast<std::int32_t>(rng.next_below(2));
    row.schema_hash = rng.next();
    row.apm_analog = rng.next_unit() * 300.0;
    rows.push_back(std::move(row));
  }
  const MetadataStore store(std::move(rows));

  const std::vector<std::string> numeric = {"entry_ordinal", "duration_steps",
                                            "entity_count_peak", "action_count", "apm_analog"};
  const std::vector<FilterOp> ops = {FilterOp::Less, FilterOp::LessEq, FilterOp::Eq,
                                     FilterOp::GreaterEq, FilterOp::Greater};
  for (int trial = 0; trial < 200; ++trial) {
    FilterSpec filter;
    const auto count = rng.next_below(4);
    for (std::uint64_t p = 0; p < count; ++p) {
      FilterPredicate pred;
      switch (rng.next_below(3)) {
        case 0:
          pred = {"scenario_tag", FilterOp::Eq, rng.next_below(2) ? "warehouse" : "yard"};
          break;
        case 1:
          pred = {"outcome_label", ops[rng.next_below(ops.size())],
                  std::to_string(rng.next_below(2))};
          break;
        default:
          pred = {numeric[rng.next_below(numeric.size())], ops[rng.next_below(ops.size())],
                  std::to_string(rng.next_below(10000))};
          break;
      }
      filter.predicates.push_back(std::move(pred));
    }

    std::vector<std::pair<std::string, std::uint64_t>> expected;
    for (const auto& row : store.rows()) {
      bool keep = true;
      for (const auto& pred : filter.predicates) keep = keep && matches(row, pred);
      if (keep) expected.emplace_back(row.container_path, row.entry_ordinal);
    }
    if (store.query(filter) != expected) {
      check(ctx, false, "query mismatch on trial " + std::to_string(trial));
      return;
    }
  }
}

// ---- criterion 9: identity stabilization -------------------------------------

void criterion_identity(Context& ctx) {
  WorkloadSpec spec = ctx.w1;
  spec.uid_churn_probability = 0.05;

  const auto stream = generate(spec, 42);
  const auto seq = sample(stream, SamplingPolicy::every_step());
  const auto fixed = stabilize_identity(spec.schema, seq, 1.0);

  bool mapped = true;
  for (std::size_t t = 0; t < stream.steps.size() && mapped; ++t) {
    const auto& logical = stream.steps[t].logical_ids;
    for (std::size_t e = 0; e < logical.size(); ++e) {
      if (as_uid(fixed.observations[t].entities[e].values[0]) !=
          stream.first_uids[logical[e]]) {
        mapped = false;
        break;
      }
    }
  }
  check(ctx, mapped, "every logical entity maps back to its first UID");

  const auto twice = stabilize_identity(spec.schema, fixed, 1.0);
  check(ctx, twice == fixed, "stabilization is idempotent");
}

// ---- criterion 10: memory bounds ---------------------------------------------

void criterion_memory(Context& ctx) {
  const std::string spec = (ctx.workload_dir / "w1.workload").string();
  const long cores = sysconf(_SC_NPROCESSORS_ONLN);
  std::set<long> instance_counts = {1, 4, cores};
  for (long n : instance_counts) {
    const auto report_path = ctx.tmp / ("par" + std::to_string(n) + ".csv");
    const std::string command = ctx.cli + " bench-parallel --spec " + spec + " --instances " +
                                std::to_string(n) + " --seed 42 --out " + report_path.string();
    check(ctx, run_command(command) == 0, "bench-parallel exits cleanly");

    std::ifstream in(report_path);
    std::string line;
    std::uint64_t peak = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("label", 0) == 0) continue;
      const auto last_comma = line.rfind(',');
      const auto cell = line.substr(last_comma + 1);
      if (!cell.empty()) {
        peak = std::max<std::uint64_t>(peak, std::stoull(cell));
      }
    }
    std::printf("       instances=%ld peak_rss=%.1f MB\n", n,
                static_cast<double>(peak) / (1024.0 * 1024.0));
    check(ctx, peak > 0, "peak rss recorded");
    check(ctx, peak < 512ull * 1024 * 1024,
          "peak rss < 512 MB at N=" + std::to_string(n));
    fs::remove(report_path);
  }

  // Writer memory must not grow with appended entries: append 100 entries
  // of a reduced workload and compare RSS early vs late.
  WorkloadSpec small = ctx.w1;
  small.entity_count = 8;
  small.step_count = 300;
  const auto path = ctx.tmp / "writer-rss.terc";
  auto writer = ContainerWriter::create(path, small.schema);
  std::uint64_t rss_at_10 = 0;
  for (int i = 0; i < 100; ++i) {
    const auto stream = generate(small, 1000 + i);
    writer.append(sample(stream, SamplingPolicy::every_step()));
    if (i == 9) rss_at_10 = rss_self_bytes();
  }
  const std::uint64_t rss_at_100 = rss_self_bytes();
  writer.finalize();
  fs::remove(path);
  std::printf("       writer rss: after 10 appends %.1f MB, after 100 %.1f MB\n",
              static_cast<double>(rss_at_10) / (1024.0 * 1024.0),
              static_cast<double>(rss_at_100) / (1024.0 * 1024.0));
  check(ctx, rss_at_100 <= rss_at_10 + 16ull * 1024 * 1024,
        "writer RSS does not grow with appended entries");
}

// ---- criterion 11: sampling policies -----------------------------------------

void criterion_sampling(Context& ctx) {
  Xoshiro256pp rng(1111);
  WorkloadSpec spec = ctx.w1;
  spec.entity_count = 4;
  spec.step_count = 200;
  for (int trial = 0; trial < 50; ++trial) {
    const auto stream = generate(spec, rng.next());
    const auto n = static_cast<std::uint32_t>(1 + rng.next_below(12));
    auto steps_of = [](const ReplaySequence& seq) {
      std::set<std::uint32_t> steps;
      for (const auto& obs : seq.observations) steps.insert(obs.step);
      return steps;
    };
    auto united = steps_of(sample(stream, SamplingPolicy::every_n(n)));
    for (auto s : steps_of(sample(stream, SamplingPolicy::on_action()))) united.insert(s);
    if (steps_of(sample(stream, SamplingPolicy::every_n_or_action(n))) != united) {
      check(ctx, false, "union mismatch on trial " + std::to_string(trial));
      return;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.workload_dir = "workloads";
  bool keep = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) ctx.cli = argv[++i];
    if (arg == "--workloads" && i + 1 < argc) ctx.workload_dir = argv[++i];
    if (arg == "--keep") keep = true;
  }
  if (ctx.cli.empty()) {
    std::cerr << "usage: terc-acceptance --cli <terc-bench> [--workloads dir] [--keep]\n";
    return 2;
  }

  ctx.tmp = fs::temp_directory_path() / ("terc-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(ctx.tmp);
  ctx.w1 = load_workload(ctx.workload_dir / "w1.workload");

  // The shared W1 x 20 corpus, built end to end through the CLI.
  ctx.corpus = ctx.tmp / "w1x20.terc";
  {
    const std::string command = ctx.cli + " convert --spec " +
                                (ctx.workload_dir / "w1.workload").string() +
                                " --seed 42 --count 20 --out " + ctx.corpus.string() +
                                " --quiet";
    const auto start = std::chrono::steady_clock::now();
    if (run_command(command) != 0) {
      std::cerr << "corpus build failed\n";
      return 1;
    }
    std::printf("corpus: W1 x 20 built in %.1fs (%llu bytes)\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
                static_cast<unsigned long long>(fs::file_size(ctx.corpus)));
  }

  run_criterion(ctx, 1, "round-trip losslessness (1000 sequences)", criterion_round_trip);
  run_criterion(ctx, 2, "layout ordering: instance-major wins", criterion_layout_order);
  run_criterion(ctx, 3, "whole-corpus reduction vs naive pipeline",
                criterion_corpus_reduction);
  run_criterion(ctx, 4, "partial-read economy", criterion_partial_read);
  run_criterion(ctx, 5, "random access independent of position", criterion_random_access);
  run_criterion(ctx, 6, "end-to-end determinism", criterion_determinism);
  run_criterion(ctx, 7, "single-byte corruption localized (100 flips)", criterion_integrity);
  run_criterion(ctx, 8, "query oracle equivalence (200 filters)", criterion_query_oracle);
  run_criterion(ctx, 9, "identity stabilization on churned W1", criterion_identity);
  run_criterion(ctx, 10, "memory bounds for parallel conversion", criterion_memory);
  run_criterion(ctx, 11, "sampling policy union (50 streams)", criterion_sampling);

  if (!keep) {
    std::error_code ec;
    fs::remove_all(ctx.tmp, ec);
  } else {
    std::cout << "kept: " << ctx.tmp << '\n';
  }

  if (ctx.failures == 0) {
    std::cout << "all criteria passed\n";
    return 0;
  }
  std::cout << ctx.failures << " check(s) failed\n";
  return 1;
}
