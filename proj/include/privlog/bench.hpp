#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "privlog/corpus.hpp"

namespace privlog {

// Reference figures measured on real device logs; printed
// next to measured values, never used as pass/fail targets.
inline constexpr double kReferenceMedianLatencyMs = 0.2;
inline constexpr double kReferenceOverheadBytesPerField = 97.1;
inline constexpr double kReferenceCorpusOverheadPercent = 2.41;

struct LatencySummary {
  std::uint64_t median_ns = 0;
  std::uint64_t p95_ns = 0;
  std::uint64_t p99_ns = 0;
  double mean_ns = 0;
};

LatencySummary summarize(std::vector<std::uint64_t> samples);

struct TypeOverhead {
  std::size_t occurrences = 0;
  std::int64_t total_bytes = 0;
  std::int64_t min_bytes = 0;
  std::int64_t max_bytes = 0;
  double mean_bytes() const noexcept {
    return occurrences ? static_cast<double>(total_bytes) / static_cast<double>(occurrences) : 0;
  }
};

struct BenchReport {
  BenchConfig config;
  std::size_t lines = 0;
  std::size_t fields = 0;

  LatencySummary date_extraction, key_derivation, format_processing, hashing, encryption;
  LatencySummary total;  // whole protect_line call
  double throughput_lines_per_s = 0;
  double baseline_lines_per_s = 0;  // detection only, no crypto
  std::uint64_t stage_sum_ns = 0;
  std::uint64_t total_ns = 0;

  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;
  std::array<TypeOverhead, kPiiTypeCount> overhead{};

  std::size_t server_recovered = 0;
  std::uint64_t server_parse_ns = 0;
  std::uint64_t server_decrypt_ns = 0;
  double server_lines_per_s = 0;

  double overhead_percent() const noexcept;
  double mean_overhead_per_field() const noexcept;
};

/// Generates the corpus, protects it line by line on one thread with
/// per-stage timing, then grants the whole span to an in-process server
/// and times recovery.
BenchReport run_bench(const BenchConfig& cfg);

// "stage,median_ns,p95_ns,p99_ns,mean_ns" rows followed by a per-type
// overhead table.
std::string bench_stage_csv(const BenchReport& r);
std::string bench_overhead_csv(const BenchReport& r);
std::string bench_summary(const BenchReport& r);

}  // namespace privlog
