#include "privlog/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "privlog/client.hpp"
#include "privlog/server.hpp"

namespace privlog {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t percentile(const std::vector<std::uint64_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
  return sorted[std::min(idx, sorted.size() - 1)];
}

DeviceIdentity bench_identity(std::uint64_t seed) {
  DeviceIdentity id;
  Bytes s(8);
  for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  id.uds = kdf32({}, s, "bench-uds");
  auto m = kdf32({}, s, "bench-measurement");
  std::copy(m.view().begin(), m.view().end(), id.measurement.begin());
  id.device_id = "bench-device";
  return id;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

LatencySummary summarize(std::vector<std::uint64_t> samples) {
  LatencySummary s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  s.median_ns = percentile(samples, 0.5);
  s.p95_ns = percentile(samples, 0.95);
  s.p99_ns = percentile(samples, 0.99);
  s.mean_ns = static_cast<double>(std::accumulate(samples.begin(), samples.end(), 0.0)) /
              static_cast<double>(samples.size());
  return s;
}

double BenchReport::overhead_percent() const noexcept {
  return bytes_in ? 100.0 * (static_cast<double>(bytes_out) - static_cast<double>(bytes_in)) /
                        static_cast<double>(bytes_in)
                  : 0;
}

double BenchReport::mean_overhead_per_field() const noexcept {
  std::int64_t total = 0;
  std::size_t n = 0;
  for (const auto& o : overhead) {
    total += o.total_bytes;
    n += o.occurrences;
  }
  return n ? static_cast<double>(total) / static_cast<double>(n) : 0;
}

BenchReport run_bench(const BenchConfig& cfg) {
  BenchReport report;
  report.config = cfg;
  const Corpus corpus = generate_corpus(cfg);
  const LogDate first = cfg.start_date;
  const LogDate last = cfg.start_date.plus_days(cfg.day_span - 1);
  const int year = first.year();

  ServerKeys server = ServerKeys::generate("bench-server");
  const DeviceIdentity identity = bench_identity(cfg.seed);
  ClientState state = client_init(identity, server.longterm().public_key, first);

  // Null pipeline: detection only.
  {
    auto t = Clock::now();
    std::size_t spans = 0;
    for (const auto& line : corpus.lines) {
      extract_date(line, year);
      spans += detect_pii(line).size();
    }
    double secs = std::chrono::duration<double>(Clock::now() - t).count();
    report.baseline_lines_per_s = secs > 0 ? static_cast<double>(corpus.lines.size()) / secs : 0;
    (void)spans;
  }

  std::vector<std::uint64_t> de, kd, fp, hs, en, tot;
  for (auto* v : {&de, &kd, &fp, &hs, &en, &tot}) v->reserve(corpus.lines.size());
  std::vector<std::string> protected_lines;
  protected_lines.reserve(corpus.lines.size());
  std::array<std::vector<std::int64_t>, kPiiTypeCount> per_field;

  LogProtector protector(state, RetentionMode::Streaming);
  auto wall = Clock::now();
  for (const auto& line : corpus.lines) {
    ProtectedLine p = protector.protect_line(line, year);
    const auto& st = p.stats.timings;
    de.push_back(st.date_extraction_ns);
    kd.push_back(st.key_derivation_ns);
    fp.push_back(st.format_processing_ns);
    hs.push_back(st.hashing_ns);
    en.push_back(st.encryption_ns);
    tot.push_back(st.total_ns);
    report.stage_sum_ns += st.stage_sum();
    report.total_ns += st.total_ns;
    report.fields += p.stats.fields;
    report.bytes_in += line.size() + 1;
    if (p.text) {
      report.bytes_out += p.text->size() + 1;
      protected_lines.push_back(std::move(*p.text));
    }
  }
  const double wall_s = std::chrono::duration<double>(Clock::now() - wall).count();
  report.lines = corpus.lines.size();
  report.throughput_lines_per_s = wall_s > 0 ? static_cast<double>(report.lines) / wall_s : 0;

  // Per-occurrence overhead from the ground truth: element length minus
  // plaintext length is what each replacement adds.
  for (const auto& t : corpus.truth) {
    per_field[static_cast<std::size_t>(t.type)].push_back(
        static_cast<std::int64_t>(protected_element_length(t.type)) -
        static_cast<std::int64_t>(t.plaintext.size()));
  }
  for (std::size_t i = 0; i < kPiiTypeCount; ++i) {
    auto& v = per_field[i];
    auto& o = report.overhead[i];
    o.occurrences = v.size();
    if (v.empty()) continue;
    o.total_bytes = std::accumulate(v.begin(), v.end(), std::int64_t{0});
    o.min_bytes = *std::min_element(v.begin(), v.end());
    o.max_bytes = *std::max_element(v.begin(), v.end());
  }

  report.date_extraction = summarize(std::move(de));
  report.key_derivation = summarize(std::move(kd));
  report.format_processing = summarize(std::move(fp));
  report.hashing = summarize(std::move(hs));
  report.encryption = summarize(std::move(en));
  report.total = summarize(std::move(tot));

  // Server side over the whole span.
  const LogDate today = std::max(last, state.chain_date);
  const DhPublicKey offer = server.create_offer("bench-grant");
  GrantRequest req{offer, first, server.server_id(), "bench-grant"};
  GrantOutcome g = create_grant(state, req, identity, today);
  WindowKeys window = accept_grant(
      server, g.grant, {server.server_id(), identity.device_id, attestation_digest(identity)});
  auto t = Clock::now();
  RecoverResult rec = recover_tokens(window, protected_lines, year);
  const double rec_s = std::chrono::duration<double>(Clock::now() - t).count();
  report.server_recovered = rec.tally.recovered;
  report.server_parse_ns = rec.parse_ns;
  report.server_decrypt_ns = rec.decrypt_ns;
  report.server_lines_per_s = rec_s > 0 ? static_cast<double>(protected_lines.size()) / rec_s : 0;
  return report;
}

std::string bench_stage_csv(const BenchReport& r) {
  std::string out = "stage,median_ns,p95_ns,p99_ns,mean_ns\n";
  auto row = [&](const char* name, const LatencySummary& s) {
    out += std::string(name) + "," + std::to_string(s.median_ns) + "," +
           std::to_string(s.p95_ns) + "," + std::to_string(s.p99_ns) + "," +
           fmt("%.1f", s.mean_ns) + "\n";
  };
  row("dateExtraction", r.date_extraction);
  row("keyDerivation", r.key_derivation);
  row("formatProcessing", r.format_processing);
  row("hashing", r.hashing);
  row("encryption", r.encryption);
  row("total", r.total);
  return out;
}

std::string bench_overhead_csv(const BenchReport& r) {
  std::string out = "pii_type,occurrences,mean_bytes,min_bytes,max_bytes\n";
  for (std::size_t i = 0; i < kPiiTypeCount; ++i) {
    const auto& o = r.overhead[i];
    out += std::string(label(kAllPiiTypes[i])) + "," + std::to_string(o.occurrences) + "," +
           fmt("%.2f", o.mean_bytes()) + "," + std::to_string(o.min_bytes) + "," +
           std::to_string(o.max_bytes) + "\n";
  }
  return out;
}

std::string bench_summary(const BenchReport& r) {
  std::string s;
  s += "lines: " + std::to_string(r.lines) + "  fields: " + std::to_string(r.fields) +
       "  density: " + std::string(to_string(r.config.density)) + "  days: " +
       std::to_string(r.config.day_span) + "\n";
  s += "protect median latency: " + fmt("%.4f", r.total.median_ns / 1e6) + " ms (p95 " +
       fmt("%.4f", r.total.p95_ns / 1e6) + ", p99 " + fmt("%.4f", r.total.p99_ns / 1e6) +
       ")  [reference median " + fmt("%.1f", kReferenceMedianLatencyMs) + " ms]\n";
  s += "throughput: " + fmt("%.0f", r.throughput_lines_per_s) +
       " lines/s  (detection-only baseline " + fmt("%.0f", r.baseline_lines_per_s) +
       " lines/s)\n";
  s += "size: " + std::to_string(r.bytes_in) + " -> " + std::to_string(r.bytes_out) +
       " bytes (" + fmt("%+.2f", r.overhead_percent()) + "%)  [reference corpus " +
       fmt("%.2f", kReferenceCorpusOverheadPercent) + "%]\n";
  s += "mean overhead per field: " + fmt("%.1f", r.mean_overhead_per_field()) +
       " bytes  [reference " + fmt("%.1f", kReferenceOverheadBytesPerField) + " bytes]\n";
  s += "server: recovered " + std::to_string(r.server_recovered) + " fields, " +
       fmt("%.0f", r.server_lines_per_s) + " lines/s (parse " +
       fmt("%.1f", r.server_parse_ns / 1e6) + " ms, decrypt " +
       fmt("%.1f", r.server_decrypt_ns / 1e6) + " ms)\n";
  return s;
}

}  // namespace privlog
