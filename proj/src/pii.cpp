#include "privlog/pii.hpp"

#include <boost/regex.hpp>

#include <algorithm>
#include <cctype>
#include <numeric>

#include "privlog/error.hpp"

namespace privlog {

namespace {

struct PatternDef {
  PiiType type;
  std::string_view label;
  int priority;  // lower wins ties
  int group;     // capture group holding the span; 0 = whole match
  const char* regex;
};

// Mirrored in docs/PII_PATTERNS.md; tests keep the two in sync.
constexpr PatternDef kPatterns[kPiiTypeCount] = {
    {PiiType::Email, "EMAIL", 1, 0,
     R"((?<![\w.%+-])[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}(?![\w-]))"},
    {PiiType::Phone, "PHONE", 8, 0,
     R"((?<![\w+])(?:\+\d{1,3}[ -]?)?(?:\(\d{3}\) ?|\d{3}[ -])\d{3}[ -]\d{4}(?![\w-]))"},
    {PiiType::Imei, "IMEI", 5, 0, R"((?<!\d)\d{15}(?!\d))"},
    {PiiType::Mac, "MAC", 4, 0,
     R"((?<![0-9A-Fa-f:-])(?:[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}|[0-9A-Fa-f]{2}(?:-[0-9A-Fa-f]{2}){5})(?![0-9A-Fa-f:-]))"},
    {PiiType::Ipv4, "IPV4", 3, 0,
     R"((?<![\w.])(?:(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){3}(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)(?!\w|\.\d))"},
    {PiiType::Ipv6, "IPV6", 2, 0,
     R"((?<![0-9A-Fa-f:])(?:(?:[0-9A-Fa-f]{1,4}:){7}[0-9A-Fa-f]{1,4}|(?:[0-9A-Fa-f]{1,4}:){1,6}:[0-9A-Fa-f]{1,4}|(?:[0-9A-Fa-f]{1,4}:){1,5}(?::[0-9A-Fa-f]{1,4}){1,2}|(?:[0-9A-Fa-f]{1,4}:){1,4}(?::[0-9A-Fa-f]{1,4}){1,3}|(?:[0-9A-Fa-f]{1,4}:){1,3}(?::[0-9A-Fa-f]{1,4}){1,4}|(?:[0-9A-Fa-f]{1,4}:){1,2}(?::[0-9A-Fa-f]{1,4}){1,5}|[0-9A-Fa-f]{1,4}:(?::[0-9A-Fa-f]{1,4}){1,6}|(?:[0-9A-Fa-f]{1,4}:){1,7}:)(?![0-9A-Fa-f:]))"},
    {PiiType::Url, "URL", 0, 0, R"(\bhttps?://[^\s<>"']*[^\s<>"'.,;:)])"},
    {PiiType::Ssn, "SSN", 7, 0, R"((?<![\d-])\d{3}-\d{2}-\d{4}(?![\d-]))"},
    {PiiType::CreditCard, "CREDIT_CARD", 6, 0,
     R"((?<![\d-])(?:\d{4}[ -]){3}\d{4}(?![\d-])|(?<!\d)\d{16}(?!\d))"},
    {PiiType::DeviceSerial, "DEVICE_SERIAL", 9, 1,
     R"(\b(?:[Ss]erial(?:[Nn]o)?|SN)[=: ]([A-Z0-9]{8,20})(?![A-Za-z0-9]))"},
};

const PatternDef& def(PiiType t) noexcept { return kPatterns[static_cast<std::size_t>(t)]; }

const std::vector<boost::regex>& compiled() {
  static const std::vector<boost::regex> regexes = [] {
    std::vector<boost::regex> out;
    out.reserve(kPiiTypeCount);
    for (const auto& p : kPatterns) out.emplace_back(p.regex, boost::regex::perl);
    return out;
  }();
  return regexes;
}

bool digits(std::string_view s, std::size_t pos, std::size_t n, unsigned& out) noexcept {
  if (s.size() < pos + n) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + static_cast<unsigned>(s[i] - '0');
  }
  return true;
}

std::optional<LogDate> make_date(int y, unsigned m, unsigned d) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return LogDate(y, m, d);
}

constexpr std::string_view kOpen = "<PII type=\"";
constexpr std::string_view kMid = "\">";
constexpr std::string_view kClose = "</PII>";

}  // namespace

std::string_view label(PiiType type) noexcept { return def(type).label; }

std::optional<PiiType> parse_label(std::string_view text) noexcept {
  for (const auto& p : kPatterns) {
    if (p.label == text) return p.type;
  }
  return std::nullopt;
}

int priority(PiiType type) noexcept { return def(type).priority; }

std::string_view pattern_source(PiiType type) noexcept { return def(type).regex; }

std::vector<PiiSpan> detect_pii(std::string_view line) {
  std::vector<PiiSpan> candidates;
  const auto& regexes = compiled();
  for (std::size_t i = 0; i < kPiiTypeCount; ++i) {
    const auto& p = kPatterns[i];
    boost::cregex_iterator it(line.data(), line.data() + line.size(), regexes[i]);
    for (; it != boost::cregex_iterator(); ++it) {
      const auto& m = *it;
      if (!m[p.group].matched || m.length(p.group) == 0) continue;
      auto start = static_cast<std::size_t>(m.position(p.group));
      auto len = static_cast<std::size_t>(m.length(p.group));
      candidates.push_back({p.type, start, start + len, std::string(line.substr(start, len))});
    }
  }
  if (candidates.empty()) return candidates;

  std::sort(candidates.begin(), candidates.end(), [](const PiiSpan& a, const PiiSpan& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.start != b.start) return a.start < b.start;
    return priority(a.type) < priority(b.type);
  });
  std::vector<PiiSpan> chosen;
  for (auto& c : candidates) {
    bool clash = std::any_of(chosen.begin(), chosen.end(), [&](const PiiSpan& s) {
      return c.start < s.end && s.start < c.end;
    });
    if (!clash) chosen.push_back(std::move(c));
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const PiiSpan& a, const PiiSpan& b) { return a.start < b.start; });
  return chosen;
}

std::optional<LogDate> extract_date(std::string_view line, int assumed_year) {
  unsigned y, m, d;
  // ISO prefix: YYYY-MM-DD not followed by another digit.
  if (line.size() >= 10 && line[4] == '-' && line[7] == '-' && digits(line, 0, 4, y) &&
      digits(line, 5, 2, m) && digits(line, 8, 2, d) &&
      (line.size() == 10 || !std::isdigit(static_cast<unsigned char>(line[10])))) {
    if (y == 0) return std::nullopt;
    return make_date(static_cast<int>(y), m, d);
  }
  // logcat: MM-DD HH:MM:SS.mmm
  unsigned hh, mm, ss, ms;
  if (line.size() >= 18 && line[2] == '-' && line[5] == ' ' && line[8] == ':' &&
      line[11] == ':' && line[14] == '.' && digits(line, 0, 2, m) && digits(line, 3, 2, d) &&
      digits(line, 6, 2, hh) && digits(line, 9, 2, mm) && digits(line, 12, 2, ss) &&
      digits(line, 15, 3, ms) && hh < 24 && mm < 60 && ss < 61) {
    if (assumed_year < 1 || assumed_year > 9999) return std::nullopt;
    return make_date(assumed_year, m, d);
  }
  return std::nullopt;
}

std::string encode_element(const ProtectedField& field) {
  std::string out;
  out.reserve(protected_element_length(field.type) + field.box.ct.size());
  out += kOpen;
  out += label(field.type);
  out += kMid;
  out += to_base64(field.box.serialize());
  out += kClose;
  return out;
}

std::size_t protected_element_length(PiiType type) noexcept {
  constexpr std::size_t kSealedToken = kNonceSize + kTokenSize + kTagSize;
  constexpr std::size_t kPayload = 4 * ((kSealedToken + 2) / 3);
  return kOpen.size() + label(type).size() + kMid.size() + kPayload + kClose.size();
}

std::string encode_protected_line(std::string_view line, const std::vector<PiiSpan>& spans,
                                  const std::vector<ProtectedField>& fields) {
  if (spans.size() != fields.size()) {
    throw Error(ErrorCode::InvalidSpans, "spans and fields differ in length");
  }
  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return spans[a].start < spans[b].start; });

  std::string out;
  out.reserve(line.size() + spans.size() * 96);
  std::size_t cursor = 0;
  for (auto i : order) {
    const auto& s = spans[i];
    if (s.start >= s.end || s.end > line.size()) {
      throw Error(ErrorCode::InvalidSpans, "span out of bounds");
    }
    if (s.start < cursor) throw Error(ErrorCode::InvalidSpans, "overlapping spans");
    out.append(line.substr(cursor, s.start - cursor));
    out += encode_element(fields[i]);
    cursor = s.end;
  }
  out.append(line.substr(cursor));
  return out;
}

ParsedLine parse_protected_line(std::string_view line) {
  ParsedLine parsed;
  parsed.template_text.reserve(line.size());
  std::size_t cursor = 0;  // next byte of `line` not yet copied
  std::size_t search = 0;
  while (true) {
    auto at = line.find(kOpen, search);
    if (at == std::string_view::npos) break;
    search = at + 1;

    auto fail = [&](std::string reason) {
      parsed.warnings.push_back({at, std::move(reason)});
    };
    std::size_t p = at + kOpen.size();
    auto quote = line.find('"', p);
    if (quote == std::string_view::npos || quote - p > 32) {
      fail("unterminated type attribute");
      continue;
    }
    auto type = parse_label(line.substr(p, quote - p));
    if (!type) {
      fail("unknown PII type");
      continue;
    }
    if (line.substr(quote, kMid.size()) != kMid) {
      fail("malformed element header");
      continue;
    }
    std::size_t body = quote + kMid.size();
    auto close = line.find('<', body);
    if (close == std::string_view::npos || line.substr(close, kClose.size()) != kClose) {
      fail("missing closing tag");
      continue;
    }
    auto raw = from_base64(line.substr(body, close - body));
    if (!raw) {
      fail("Malformed: payload is not valid base64");
      continue;
    }
    if (raw->size() < kNonceSize + kTagSize) {
      fail("Malformed: payload shorter than nonce + tag");
      continue;
    }
    parsed.template_text.append(line.substr(cursor, at - cursor));
    parsed.slots.push_back(parsed.template_text.size());
    parsed.fields.push_back({*type, AeadBox::parse(*raw)});
    cursor = close + kClose.size();
    search = cursor;
  }
  parsed.template_text.append(line.substr(cursor));
  return parsed;
}

}  // namespace privlog
