#include "privlog/server.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "privlog/csv.hpp"
#include "privlog/error.hpp"
#include "privlog/kv.hpp"

namespace privlog {

namespace {

using Clock = std::chrono::steady_clock;

// Replay windows longer than this are rejected as nonsensical.
constexpr int kMaxWindowDays = 3660;
constexpr std::string_view kOfferPrefix = "offer.";

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

bool valid_grant_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

Secret<32> decode_secret(const KvDocument& doc, const std::string& key) {
  auto raw = from_base64(doc.get(key));
  if (!raw || raw->size() != 32) throw Error(ErrorCode::CorruptState, "bad field " + key);
  auto s = Secret<32>::from(*raw);
  secure_zero(raw->data(), raw->size());
  return s;
}

DhPublicKey decode_pub(const KvDocument& doc, const std::string& key) {
  auto raw = from_base64(doc.get(key));
  if (!raw || raw->size() != 32) throw Error(ErrorCode::CorruptState, "bad field " + key);
  DhPublicKey out;
  std::copy(raw->begin(), raw->end(), out.begin());
  return out;
}

void check_version(const KvDocument& doc) {
  if (doc.get("v") != "1") {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported version v=" + doc.get("v"));
  }
}

std::string token_b64(const PseudonymToken& t) { return to_base64(t.view()); }

std::string token_element(PiiType type, const PseudonymToken& t) {
  return "<PII type=\"" + std::string(label(type)) + "\">" + token_b64(t) + "</PII>";
}

struct LineOutcome {
  std::vector<RecoveredEvent> events;
  RecoverTally tally;
  std::uint64_t decrypt_ns = 0;
  std::uint64_t parse_ns = 0;
};

void recover_line(const WindowKeys& window, std::string_view line, std::size_t line_no,
                  int assumed_year, LineOutcome& out) {
  out.tally.lines += 1;
  auto t = Clock::now();
  ParsedLine parsed = parse_protected_line(line);
  std::optional<LogDate> date = extract_date(line, assumed_year);
  out.parse_ns += elapsed_ns(t);
  out.tally.malformed += parsed.warnings.size();
  if (parsed.fields.empty()) return;
  out.tally.lines_with_fields += 1;
  out.tally.fields += parsed.fields.size();

  std::vector<std::pair<const LogDate*, const SecretKey32*>> candidates;
  if (date) {
    if (const SecretKey32* k = window.find(*date)) candidates.emplace_back(&*date, k);
  } else {
    for (const auto& [d, k] : window.days) candidates.emplace_back(&d, &k);
  }
  if (candidates.empty()) {
    out.tally.skipped_out_of_window += 1;
    return;
  }

  std::vector<std::optional<std::pair<LogDate, PseudonymToken>>> opened(parsed.fields.size());
  t = Clock::now();
  for (std::size_t i = 0; i < parsed.fields.size(); ++i) {
    for (const auto& [d, key] : candidates) {
      auto pt = aead_try_open(*key, parsed.fields[i].box, {});
      if (pt && pt->size() == kTokenSize) {
        PseudonymToken token;
        std::copy(pt->begin(), pt->end(), token.bytes.begin());
        opened[i] = std::make_pair(*d, token);
        break;
      }
    }
    if (!opened[i]) out.tally.skipped_auth += 1;
  }
  out.decrypt_ns += elapsed_ns(t);

  std::string tmpl = parsed.render([&](std::size_t i, const ProtectedField& f) {
    return opened[i] ? token_element(f.type, opened[i]->second) : encode_element(f);
  });
  for (std::size_t i = 0; i < parsed.fields.size(); ++i) {
    if (!opened[i]) continue;
    out.tally.recovered += 1;
    out.events.push_back({line_no, opened[i]->first, parsed.fields[i].type, opened[i]->second,
                          tmpl});
  }
}

}  // namespace

ServerKeys ServerKeys::generate(std::string server_id) {
  if (server_id.empty() || server_id.find_first_of("\n\r") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "server_id must be a non-empty single line");
  }
  ServerKeys keys;
  keys.server_id_ = std::move(server_id);
  std::array<std::uint8_t, 32> seed;
  random_bytes(seed);
  keys.longterm_ = dh_derive_keypair(seed, "server-longterm");
  secure_zero(seed.data(), seed.size());
  return keys;
}

const DhPublicKey& ServerKeys::create_offer(const std::string& grant_id) {
  if (!valid_grant_id(grant_id)) {
    throw Error(ErrorCode::InvalidArgument, "grant_id must match [A-Za-z0-9._-]{1,64}");
  }
  if (has_offer(grant_id)) {
    throw Error(ErrorCode::InvalidArgument, "offer already outstanding for " + grant_id);
  }
  std::array<std::uint8_t, 32> seed;
  random_bytes(seed);
  auto [it, _] = ephemeral_.emplace(grant_id, dh_derive_keypair(seed, "server-ephemeral"));
  secure_zero(seed.data(), seed.size());
  return it->second.public_key;
}

const DhKeyPair& ServerKeys::offer(const std::string& grant_id) const {
  auto it = ephemeral_.find(grant_id);
  if (it == ephemeral_.end()) {
    throw Error(ErrorCode::InvalidArgument, "no outstanding offer for grant " + grant_id);
  }
  return it->second;
}

std::string ServerKeys::serialize() const {
  KvDocument doc;
  doc.set("v", "1");
  doc.set("server_id", server_id_);
  doc.set("longterm_private", to_base64(longterm_.private_key.view()));
  doc.set("longterm_public", to_base64(longterm_.public_key));
  for (const auto& [id, pair] : ephemeral_) {
    doc.set(std::string(kOfferPrefix) + id, to_base64(pair.private_key.view()));
  }
  return doc.serialize();
}

ServerKeys ServerKeys::parse(std::string_view text) {
  auto doc = KvDocument::parse(text);
  check_version(doc);
  ServerKeys keys;
  keys.server_id_ = doc.get("server_id");
  keys.longterm_ = DhKeyPair::from_private(decode_secret(doc, "longterm_private"));
  if (keys.longterm_.public_key != decode_pub(doc, "longterm_public")) {
    throw Error(ErrorCode::CorruptState, "longterm_public does not match private key");
  }
  for (const auto& [key, value] : doc.entries()) {
    if (key.rfind(kOfferPrefix, 0) != 0) continue;
    keys.ephemeral_.emplace(key.substr(kOfferPrefix.size()),
                            DhKeyPair::from_private(decode_secret(doc, key)));
  }
  return keys;
}

std::string Offer::serialize() const {
  KvDocument doc;
  doc.set("v", "1");
  doc.set("grant_id", grant_id);
  doc.set("server_id", server_id);
  doc.set("server_eph_pub", to_base64(server_eph_pub));
  return doc.serialize();
}

Offer Offer::parse(std::string_view text) {
  auto doc = KvDocument::parse(text);
  if (doc.has("v")) check_version(doc);
  Offer o;
  o.grant_id = doc.get("grant_id");
  o.server_id = doc.get_or("server_id", "");
  o.server_eph_pub = decode_pub(doc, "server_eph_pub");
  return o;
}

const SecretKey32* WindowKeys::find(const LogDate& d) const {
  auto it = days.find(d);
  return it == days.end() ? nullptr : &it->second;
}

std::string WindowKeys::serialize() const {
  KvDocument doc;
  doc.set("v", "1");
  doc.set("grant_id", grant_id);
  for (const auto& [d, k] : days) doc.set("day." + d.iso(), to_base64(k.view()));
  return doc.serialize();
}

WindowKeys WindowKeys::parse(std::string_view text) {
  auto doc = KvDocument::parse(text);
  WindowKeys w;
  if (doc.empty()) return w;
  check_version(doc);
  w.grant_id = doc.get_or("grant_id", "");
  for (const auto& [key, value] : doc.entries()) {
    if (key.rfind("day.", 0) != 0) continue;
    auto d = LogDate::parse_iso(std::string_view(key).substr(4));
    if (!d) throw Error(ErrorCode::CorruptState, "bad window day " + key);
    w.days.emplace(*d, decode_secret(doc, key));
  }
  return w;
}

DayKeys replay_window(const SecretKey32& chain_key, const LogDate& start, const LogDate& end) {
  DayKeys out;
  SecretKey32 ck = chain_key;
  for (LogDate d = start; d <= end; d = d.next()) {
    RatchetOutput step = ratchet_step(ck);
    out.emplace(d, std::move(step.message_key));
    ck = std::move(step.next_chain_key);
  }
  return out;
}

WindowKeys accept_grant(ServerKeys& keys, const Grant& grant, const ExpectedContext& expected) {
  const DhKeyPair& eph = keys.offer(grant.context.grant_id);
  const SecretKey32 z = dh_shared(eph.private_key, grant.client_eph_pub);
  const SecretKey32 export_key = kdf32({}, z.view(), "export-kdf");

  Bytes payload = aead_open(export_key, grant.box, grant.context.canonical_aad());
  auto [granted_ck, start] = parse_grant_payload(payload);
  secure_zero(payload.data(), payload.size());

  const auto& ctx = grant.context;
  if (ctx.server_id != expected.server_id) {
    throw Error(ErrorCode::ContextMismatch, "grant addressed to server '" + ctx.server_id + "'");
  }
  if (ctx.device_id != expected.device_id) {
    throw Error(ErrorCode::ContextMismatch, "grant from device '" + ctx.device_id +
                                                "', expected '" + expected.device_id + "'");
  }
  if (ctx.attest_digest != expected.attest_digest) {
    throw Error(ErrorCode::ContextMismatch, "attestation digest does not match pinned value");
  }
  if (start > ctx.grant_date || days_between(start, ctx.grant_date) > kMaxWindowDays) {
    throw Error(ErrorCode::InvalidWindow,
                "grant window " + start.iso() + ".." + ctx.grant_date.iso() + " is invalid");
  }

  WindowKeys window;
  window.grant_id = ctx.grant_id;
  window.days = replay_window(granted_ck, start, ctx.grant_date);
  keys.consume_offer(ctx.grant_id);
  return window;
}

RecoverTally& RecoverTally::operator+=(const RecoverTally& o) noexcept {
  lines += o.lines;
  lines_with_fields += o.lines_with_fields;
  fields += o.fields;
  recovered += o.recovered;
  skipped_out_of_window += o.skipped_out_of_window;
  skipped_auth += o.skipped_auth;
  malformed += o.malformed;
  return *this;
}

RecoverResult recover_tokens(const WindowKeys& window, const std::vector<std::string>& lines,
                             int assumed_year, unsigned workers) {
  const std::size_t n = std::max<std::size_t>(1, std::min<std::size_t>(workers, lines.size()));
  const std::size_t chunk = lines.empty() ? 0 : (lines.size() + n - 1) / n;
  std::vector<LineOutcome> shards(n);
  auto work = [&](std::size_t shard) {
    const std::size_t begin = shard * chunk, end = std::min(lines.size(), begin + chunk);
    for (std::size_t i = begin; i < end; ++i) {
      recover_line(window, lines[i], i + 1, assumed_year, shards[shard]);
    }
  };
  if (n == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t s = 0; s < n; ++s) pool.emplace_back(work, s);
    for (auto& th : pool) th.join();
  }
  RecoverResult result;
  for (auto& s : shards) {
    result.tally += s.tally;
    result.decrypt_ns += s.decrypt_ns;
    result.parse_ns += s.parse_ns;
    std::move(s.events.begin(), s.events.end(), std::back_inserter(result.events));
  }
  return result;
}

std::vector<LinkageGroup> linkage_report(const std::vector<RecoveredEvent>& events) {
  std::map<PseudonymToken, LinkageGroup> groups;
  for (const auto& e : events) {
    auto [it, fresh] = groups.try_emplace(e.token);
    LinkageGroup& g = it->second;
    if (fresh) {
      g.token = e.token;
      g.type = e.type;
      g.first = g.last = e.date;
    }
    g.count += 1;
    g.first = std::min(g.first, e.date);
    g.last = std::max(g.last, e.date);
    g.per_day[e.date] += 1;
  }
  std::vector<LinkageGroup> out;
  out.reserve(groups.size());
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  // map iteration is already token-ascending; stable sort keeps that for ties
  std::stable_sort(out.begin(), out.end(),
                   [](const LinkageGroup& a, const LinkageGroup& b) { return a.count > b.count; });
  return out;
}

std::vector<TimelineEntry> timeline(const std::vector<RecoveredEvent>& events,
                                    const PseudonymToken& token) {
  std::vector<TimelineEntry> out;
  for (const auto& e : events) {
    if (e.token == token) out.push_back({e.date, e.line_no, e.template_text});
  }
  std::sort(out.begin(), out.end(), [](const TimelineEntry& a, const TimelineEntry& b) {
    return a.date != b.date ? a.date < b.date : a.line_no < b.line_no;
  });
  return out;
}

std::string events_to_csv(const std::vector<RecoveredEvent>& events) {
  std::string out = "line_no,date,pii_type,token_b64,template\n";
  for (const auto& e : events) {
    out += csv::join({std::to_string(e.line_no), e.date.iso(), std::string(label(e.type)),
                      token_b64(e.token), e.template_text});
    out += '\n';
  }
  return out;
}

std::vector<RecoveredEvent> events_from_csv(std::string_view text) {
  auto rows = csv::parse(text);
  std::vector<RecoveredEvent> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "line_no") continue;
    if (row.size() != 5) throw Error(ErrorCode::CorruptState, "events csv: expected 5 columns");
    RecoveredEvent e;
    try {
      e.line_no = std::stoul(row[0]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptState, "events csv: bad line_no");
    }
    auto d = LogDate::parse_iso(row[1]);
    auto type = parse_label(row[2]);
    auto tok = from_base64(row[3]);
    if (!d || !type || !tok || tok->size() != kTokenSize) {
      throw Error(ErrorCode::CorruptState, "events csv: bad row " + std::to_string(r + 1));
    }
    e.date = *d;
    e.type = *type;
    std::copy(tok->begin(), tok->end(), e.token.bytes.begin());
    e.template_text = row[4];
    out.push_back(std::move(e));
  }
  return out;
}

std::string linkage_to_csv(const std::vector<LinkageGroup>& groups) {
  std::string out = "token_b64,pii_type,count,first_date,last_date\n";
  for (const auto& g : groups) {
    out += csv::join({token_b64(g.token), std::string(label(g.type)), std::to_string(g.count),
                      g.first.iso(), g.last.iso()});
    out += '\n';
  }
  return out;
}

std::string timeline_to_csv(const std::vector<TimelineEntry>& entries) {
  std::string out = "date,line_no,template\n";
  for (const auto& e : entries) {
    out += csv::join({e.date.iso(), std::to_string(e.line_no), e.template_text});
    out += '\n';
  }
  return out;
}

}  // namespace privlog
