#pragma once

// Deterministic logcat-style corpus with planted PII and a ground-truth
// sidecar, used as the detection/recovery oracle and as bench input.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privlog/date.hpp"
#include "privlog/pii.hpp"

namespace privlog {

enum class PiiDensity { Low, Medium, High };

// 0.1 / 1 / 3 expected fields per line.
double expected_fields_per_line(PiiDensity d) noexcept;
std::optional<PiiDensity> parse_density(std::string_view text) noexcept;
std::string_view to_string(PiiDensity d) noexcept;

struct BenchConfig {
  std::size_t line_count = 1000;
  PiiDensity density = PiiDensity::Medium;
  int day_span = 1;
  std::uint64_t seed = 1;
  LogDate start_date{2024, 10, 1};
  // Extra URL query length range, to exercise long-URL shrinkage.
  std::size_t url_min_query = 8;
  std::size_t url_max_query = 120;

  // Throws InvalidArgument when line_count or day_span < 1.
  void validate() const;
};

struct PlantedPii {
  std::size_t line_no;  // 1-based
  std::size_t start;
  std::size_t end;
  PiiType type;
  std::string plaintext;
};

struct Corpus {
  std::vector<std::string> lines;
  std::vector<LogDate> dates;  // per line
  std::vector<PlantedPii> truth;

  std::string text() const;          // newline-terminated lines
  std::string sidecar_csv() const;   // line_no,start,end,type,plaintext
};

Corpus generate_corpus(const BenchConfig& cfg);

// Inverse of Corpus::sidecar_csv.
std::vector<PlantedPii> parse_sidecar(std::string_view csv_text);

// Generator pieces reused by tests that need a single planted value.
std::string logcat_prefix(const LogDate& date, std::uint32_t millis_of_day, int pid,
                          char level, std::string_view tag);

}  // namespace privlog
