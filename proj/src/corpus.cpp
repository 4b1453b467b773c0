#include "privlog/corpus.hpp"

#include <cstdio>
#include <random>

#include "privlog/csv.hpp"
#include "privlog/error.hpp"

namespace privlog {

namespace {

// Plain modulo on mt19937_64 keeps output identical across standard
// libraries (distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  template <typename T, std::size_t N>
  const T& pick(const T (&items)[N]) { return items[below(N)]; }
  char digit() { return static_cast<char>('0' + below(10)); }
  std::string digits(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += digit();
    return s;
  }
  std::string from_alphabet(std::string_view alphabet, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += alphabet[below(alphabet.size())];
    return s;
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::string_view kHex = "0123456789abcdef";
constexpr std::string_view kUpperAlnum = "ABCDEFGHJKLMNPQRSTUVWXYZ0123456789";
constexpr std::string_view kUrlChars =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

const char* const kNames[] = {"alice", "bob",     "carol",  "dave",   "erin",  "frank",
                              "grace", "heidi",   "ivan",   "judy",   "mallory", "niaj",
                              "olivia", "peggy",  "rupert", "sybil",  "trent", "victor"};
const char* const kDomains[] = {"example.com", "mail.example.org", "corp.example.net"};
const char* const kHosts[] = {"api.example.com", "cdn.example.net", "auth.example.org"};
const char* const kPaths[] = {"/v1/session", "/oauth/callback", "/assets/app.js", "/sync"};

const char* const kTags[] = {"AuthService",    "WifiStateMachine", "ConnectivityService",
                             "ActivityManager", "Telephony",       "PaymentsSdk",
                             "SyncManager",     "chromium"};
const char* const kFiller[] = {
    "Activity resumed com.example.app/.MainActivity",
    "GC freed 2048 objects in 12ms",
    "Choreographer skipped 3 frames",
    "battery level 57 status charging",
    "job scheduled id=17 constraints satisfied",
    "onResume called for fragment home",
};

std::string make_value(PiiType type, Rng& rng, const BenchConfig& cfg) {
  switch (type) {
    case PiiType::Email: {
      std::string user = rng.pick(kNames);
      if (rng.below(2)) user += rng.digit();
      return user + "@" + rng.pick(kDomains);
    }
    case PiiType::Phone:
      switch (rng.below(3)) {
        case 0: return "+1 555-" + rng.digits(3) + "-" + rng.digits(4);
        case 1: return "(555) " + rng.digits(3) + "-" + rng.digits(4);
        default: return "555-" + rng.digits(3) + "-" + rng.digits(4);
      }
    case PiiType::Imei: return "35" + rng.digits(13);
    case PiiType::Mac: {
      std::string mac;
      for (int i = 0; i < 6; ++i) {
        if (i) mac += ':';
        mac += rng.from_alphabet(kHex, 2);
      }
      return mac;
    }
    case PiiType::Ipv4:
      if (rng.below(2)) {
        return "10." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
               "." + std::to_string(1 + rng.below(254));
      }
      return "192.168." + std::to_string(rng.below(256)) + "." + std::to_string(1 + rng.below(254));
    case PiiType::Ipv6: {
      std::string ip = rng.below(2) ? "2001:db8" : "fe80:";
      int groups = ip == "fe80:" ? 4 : 6;
      for (int i = 0; i < groups; ++i) ip += ":" + rng.from_alphabet(kHex, 1 + rng.below(4));
      return ip;
    }
    case PiiType::Url: {
      const std::size_t span = cfg.url_max_query - cfg.url_min_query + 1;
      const std::size_t q = cfg.url_min_query + rng.below(span);
      return std::string("https://") + rng.pick(kHosts) + rng.pick(kPaths) +
             "?token=" + rng.from_alphabet(kUrlChars, q);
    }
    case PiiType::Ssn:
      return std::to_string(100 + rng.below(800)) + "-" + rng.digits(2) + "-" + rng.digits(4);
    case PiiType::CreditCard: {
      const char sep = rng.below(2) ? ' ' : '-';
      return "4" + rng.digits(3) + sep + rng.digits(4) + sep + rng.digits(4) + sep +
             rng.digits(4);
    }
    case PiiType::DeviceSerial:
      // Leading letter keeps all-digit serials from colliding with IMEI.
      return std::string(1, "RHTZ"[rng.below(4)]) + rng.from_alphabet(kUpperAlnum, 9 + rng.below(5));
  }
  return {};
}

// Fragment text around one value: prefix + VALUE + suffix.
std::pair<std::string_view, std::string_view> fragment(PiiType type, Rng& rng) {
  using P = std::pair<std::string_view, std::string_view>;
  switch (type) {
    case PiiType::Email: return rng.below(2) ? P{"Login attempt for user ", " accepted"}
                                             : P{"sync account ", " ok"};
    case PiiType::Phone: return rng.below(2) ? P{"incoming call from ", " ringing"}
                                             : P{"sms delivered to ", " id 4"};
    case PiiType::Imei: return P{"device IMEI:", " registered"};
    case PiiType::Mac: return P{"wifi bssid ", " associated"};
    case PiiType::Ipv4: return P{"connect to ", " port 443"};
    case PiiType::Ipv6: return P{"route via ", " up"};
    case PiiType::Url: return P{"fetch ", " status 200"};
    case PiiType::Ssn: return P{"form field ssn ", " submitted"};
    case PiiType::CreditCard: return P{"payment card ", " authorized"};
    case PiiType::DeviceSerial: return P{"serial=", " verified"};
  }
  return {};
}

std::size_t sample_count(PiiDensity d, Rng& rng) {
  switch (d) {
    case PiiDensity::Low: return rng.below(10) == 0 ? 1 : 0;
    case PiiDensity::Medium: {
      auto r = rng.below(4);
      return r == 0 ? 0 : r == 3 ? 2 : 1;
    }
    case PiiDensity::High: return 2 + rng.below(3);
  }
  return 0;
}

}  // namespace

double expected_fields_per_line(PiiDensity d) noexcept {
  switch (d) {
    case PiiDensity::Low: return 0.1;
    case PiiDensity::Medium: return 1.0;
    case PiiDensity::High: return 3.0;
  }
  return 0;
}

std::optional<PiiDensity> parse_density(std::string_view t) noexcept {
  if (t == "low") return PiiDensity::Low;
  if (t == "medium") return PiiDensity::Medium;
  if (t == "high") return PiiDensity::High;
  return std::nullopt;
}

std::string_view to_string(PiiDensity d) noexcept {
  switch (d) {
    case PiiDensity::Low: return "low";
    case PiiDensity::Medium: return "medium";
    case PiiDensity::High: return "high";
  }
  return "?";
}

void BenchConfig::validate() const {
  if (line_count < 1) throw Error(ErrorCode::InvalidArgument, "line_count must be >= 1");
  if (day_span < 1) throw Error(ErrorCode::InvalidArgument, "day_span must be >= 1");
  if (url_min_query < 1 || url_max_query < url_min_query) {
    throw Error(ErrorCode::InvalidArgument, "bad URL query length range");
  }
}

std::string logcat_prefix(const LogDate& date, std::uint32_t ms, int pid, char level,
                          std::string_view tag) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02u-%02u %02u:%02u:%02u.%03u %5d %5d %c ", date.month(),
                date.day(), ms / 3600000, ms / 60000 % 60, ms / 1000 % 60, ms % 1000, pid, pid,
                level);
  return std::string(buf) + std::string(tag) + ": ";
}

Corpus generate_corpus(const BenchConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.lines.reserve(cfg.line_count);
  const auto days = static_cast<std::size_t>(cfg.day_span);
  constexpr std::uint32_t kDayMs = 86'400'000;

  for (std::size_t i = 0; i < cfg.line_count; ++i) {
    const std::size_t day_index = i * days / cfg.line_count;
    // first/last line index of this day, to spread timestamps over the day
    const std::size_t day_begin = (day_index * cfg.line_count + days - 1) / days;
    const std::size_t day_end = ((day_index + 1) * cfg.line_count + days - 1) / days;
    const std::size_t in_day = day_end - day_begin;
    const auto ms = static_cast<std::uint32_t>(
        static_cast<std::uint64_t>(i - day_begin) * (kDayMs - 1) / std::max<std::size_t>(in_day, 1));

    const LogDate date = cfg.start_date.plus_days(static_cast<int>(day_index));
    const int pid = 1000 + static_cast<int>(rng.below(30000));
    const char level = "DIWE"[rng.below(4)];
    std::string line = logcat_prefix(date, ms, pid, level, rng.pick(kTags));

    const std::size_t k = sample_count(cfg.density, rng);
    if (k == 0) line += rng.pick(kFiller);
    for (std::size_t f = 0; f < k; ++f) {
      if (f) line += "; ";
      const auto type = kAllPiiTypes[rng.below(kPiiTypeCount)];
      auto [pre, post] = fragment(type, rng);
      std::string value = make_value(type, rng, cfg);
      line += pre;
      const std::size_t start = line.size();
      line += value;
      corpus.truth.push_back({i + 1, start, line.size(), type, std::move(value)});
      line += post;
    }
    corpus.lines.push_back(std::move(line));
    corpus.dates.push_back(date);
  }
  return corpus;
}

std::string Corpus::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string Corpus::sidecar_csv() const {
  std::string out = "line_no,start,end,type,plaintext\n";
  for (const auto& t : truth) {
    out += csv::join({std::to_string(t.line_no), std::to_string(t.start), std::to_string(t.end),
                      std::string(label(t.type)), t.plaintext});
    out += '\n';
  }
  return out;
}

std::vector<PlantedPii> parse_sidecar(std::string_view text) {
  std::vector<PlantedPii> out;
  auto rows = csv::parse(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "line_no") continue;
    auto type = row.size() == 5 ? parse_label(row[3]) : std::nullopt;
    if (!type) throw Error(ErrorCode::CorruptState, "sidecar: bad row " + std::to_string(r + 1));
    try {
      out.push_back({std::stoul(row[0]), std::stoul(row[1]), std::stoul(row[2]), *type, row[4]});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::CorruptState, "sidecar: bad number in row " + std::to_string(r + 1));
    }
  }
  return out;
}

}  // namespace privlog
