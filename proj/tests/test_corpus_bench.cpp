#include "test_support.hpp"

#include <cmath>
#include <set>

#include "privlog/bench.hpp"
#include "privlog/corpus.hpp"
#include "privlog/csv.hpp"

using namespace privlog;

namespace {

BenchConfig config(std::size_t lines, PiiDensity density, int days, std::uint64_t seed) {
  BenchConfig cfg;
  cfg.line_count = lines;
  cfg.density = density;
  cfg.day_span = days;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("corpus generation is deterministic in the seed", "[corpus]") {
  auto a = generate_corpus(config(500, PiiDensity::Medium, 3, 42));
  auto b = generate_corpus(config(500, PiiDensity::Medium, 3, 42));
  auto c = generate_corpus(config(500, PiiDensity::Medium, 3, 43));
  CHECK(a.text() == b.text());
  CHECK(a.sidecar_csv() == b.sidecar_csv());
  CHECK(a.text() != c.text());
}

TEST_CASE("planted PII count follows the density", "[corpus]") {
  auto within = [](std::size_t got, double want) {
    return std::abs(static_cast<double>(got) - want) <= 0.1 * want;
  };
  CHECK(within(generate_corpus(config(1000, PiiDensity::High, 1, 5)).truth.size(), 3000));
  CHECK(within(generate_corpus(config(1000, PiiDensity::Medium, 1, 5)).truth.size(), 1000));
  CHECK(within(generate_corpus(config(20000, PiiDensity::Low, 1, 5)).truth.size(), 2000));
}

TEST_CASE("corpus spans consecutive days in order", "[corpus]") {
  auto c = generate_corpus(config(1000, PiiDensity::Medium, 10, 1));
  REQUIRE(c.lines.size() == 1000);
  std::set<LogDate> days(c.dates.begin(), c.dates.end());
  CHECK(days.size() == 10);
  CHECK(*days.begin() == LogDate(2024, 10, 1));
  CHECK(*days.rbegin() == LogDate(2024, 10, 10));
  for (std::size_t i = 0; i < c.lines.size(); ++i) {
    REQUIRE(extract_date(c.lines[i], 2024) == c.dates[i]);
    if (i) REQUIRE(c.dates[i - 1] <= c.dates[i]);
  }
  CHECK_ERROR(generate_corpus(config(0, PiiDensity::Low, 1, 1)), ErrorCode::InvalidArgument);
  CHECK_ERROR(generate_corpus(config(1, PiiDensity::Low, 0, 1)), ErrorCode::InvalidArgument);
}

TEST_CASE("detection recalls every planted span exactly", "[corpus][pii]") {
  auto c = generate_corpus(config(3000, PiiDensity::High, 2, 77));
  std::set<PiiType> seen;
  std::size_t i = 0;
  for (std::size_t line = 1; line <= c.lines.size(); ++line) {
    auto spans = detect_pii(c.lines[line - 1]);
    std::vector<PiiSpan> planted;
    for (; i < c.truth.size() && c.truth[i].line_no == line; ++i) {
      const auto& t = c.truth[i];
      planted.push_back({t.type, t.start, t.end, t.plaintext});
      seen.insert(t.type);
    }
    INFO(c.lines[line - 1]);
    REQUIRE(spans == planted);
  }
  CHECK(seen.size() == kPiiTypeCount);
}

TEST_CASE("sidecar CSV round trips", "[corpus]") {
  auto c = generate_corpus(config(300, PiiDensity::High, 1, 3));
  auto back = parse_sidecar(c.sidecar_csv());
  REQUIRE(back.size() == c.truth.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].line_no == c.truth[k].line_no);
    CHECK(back[k].start == c.truth[k].start);
    CHECK(back[k].end == c.truth[k].end);
    CHECK(back[k].type == c.truth[k].type);
    CHECK(back[k].plaintext == c.truth[k].plaintext);
  }
}

TEST_CASE("latency summary percentiles", "[bench]") {
  std::vector<std::uint64_t> v;
  for (std::uint64_t i = 1; i <= 101; ++i) v.push_back(102 - i);  // 1..101 in reverse
  auto s = summarize(v);
  CHECK(s.median_ns == 51);
  CHECK(s.p95_ns == 96);
  CHECK(s.p99_ns == 100);
  CHECK(s.mean_ns == Catch::Approx(51.0));
  CHECK(summarize({}).median_ns == 0);
}

TEST_CASE("bench reports consistent stages and fixed-size overhead", "[bench]") {
  auto r = run_bench(config(2000, PiiDensity::Medium, 3, 11));
  CHECK(r.lines == 2000);
  CHECK(r.fields > 1500);
  CHECK(r.stage_sum_ns <= r.total_ns);
  CHECK(r.server_recovered == r.fields);
  CHECK(r.throughput_lines_per_s > 0);
  CHECK(r.baseline_lines_per_s > 0);

  const auto& imei = r.overhead[static_cast<std::size_t>(PiiType::Imei)];
  REQUIRE(imei.occurrences > 0);
  CHECK(imei.min_bytes == imei.max_bytes);
  CHECK(imei.min_bytes ==
        static_cast<std::int64_t>(protected_element_length(PiiType::Imei)) - 15);
  const auto& url = r.overhead[static_cast<std::size_t>(PiiType::Url)];
  REQUIRE(url.occurrences > 0);
  CHECK(url.min_bytes < 0);

  auto stages = csv::parse(bench_stage_csv(r));
  REQUIRE(stages.size() >= 6);
  CHECK(stages[0][0] == "stage");
  std::uint64_t medians = 0;
  for (std::size_t k = 1; k < stages.size(); ++k) {
    REQUIRE(stages[k].size() == 5);
    if (stages[k][0] != "total") medians += std::stoull(stages[k][1]);
  }
  CHECK(medians > 0);
  auto overhead = csv::parse(bench_overhead_csv(r));
  CHECK(overhead.size() == 1 + kPiiTypeCount);
  auto summary = bench_summary(r);
  CHECK(summary.find("97.1") != std::string::npos);
  CHECK(summary.find("2.41") != std::string::npos);
}
