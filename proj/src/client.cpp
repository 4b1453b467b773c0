#include "privlog/client.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "privlog/error.hpp"
#include "privlog/kv.hpp"

namespace privlog {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

std::string ck_init_label(const LogDate& d) { return "ck-init" + d.iso(); }

template <std::size_t N>
std::array<std::uint8_t, N> decode_fixed(const KvDocument& doc, const std::string& key) {
  auto raw = from_base64(doc.get(key));
  if (!raw || raw->size() != N) throw Error(ErrorCode::CorruptState, "bad field " + key);
  std::array<std::uint8_t, N> out;
  std::copy(raw->begin(), raw->end(), out.begin());
  secure_zero(raw->data(), raw->size());
  return out;
}

SecretKey32 decode_secret(const KvDocument& doc, const std::string& key) {
  auto raw = decode_fixed<32>(doc, key);
  SecretKey32 s{raw};
  secure_zero(raw.data(), raw.size());
  return s;
}

LogDate decode_date(const KvDocument& doc, const std::string& key) {
  auto d = LogDate::parse_iso(doc.get(key));
  if (!d) throw Error(ErrorCode::CorruptState, "bad date " + key);
  return *d;
}

void check_version(const KvDocument& doc) {
  if (!doc.has("v")) throw Error(ErrorCode::CorruptState, "missing version header");
  if (doc.get("v") != "1") {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported version v=" + doc.get("v"));
  }
}

}  // namespace

StageTimings& StageTimings::operator+=(const StageTimings& o) noexcept {
  date_extraction_ns += o.date_extraction_ns;
  key_derivation_ns += o.key_derivation_ns;
  format_processing_ns += o.format_processing_ns;
  hashing_ns += o.hashing_ns;
  encryption_ns += o.encryption_ns;
  total_ns += o.total_ns;
  return *this;
}

ProtectStats& ProtectStats::operator+=(const ProtectStats& o) noexcept {
  lines += o.lines;
  lines_with_pii += o.lines_with_pii;
  fields += o.fields;
  skipped_pre_epoch += o.skipped_pre_epoch;
  bytes_in += o.bytes_in;
  bytes_out += o.bytes_out;
  for (std::size_t i = 0; i < kPiiTypeCount; ++i) {
    fields_by_type[i] += o.fields_by_type[i];
    overhead_by_type[i] += o.overhead_by_type[i];
  }
  timings += o.timings;
  return *this;
}

std::array<std::uint8_t, 32> make_nonce(std::optional<ByteView> rng_seed) {
  std::array<std::uint8_t, 32> nonce;
  if (rng_seed) {
    Bytes raw = kdf({}, *rng_seed, "seeded-nonce", 32);
    std::copy(raw.begin(), raw.end(), nonce.begin());
  } else {
    random_bytes(nonce);
  }
  return nonce;
}

SecretKey32 epoch_chain_key(const SecretKey32& root_key, const LogDate& epoch) {
  return kdf32({}, root_key.view(), ck_init_label(epoch));
}

ClientState client_init(const DeviceIdentity& identity, const DhPublicKey& server_longterm_pub,
                        const LogDate& today, std::optional<ByteView> rng_seed) {
  const CdiSecret cdi = derive_cdi(identity);
  ClientState state;
  state.hash_key = kdf32({}, cdi.view(), "hmac-key");
  state.init_nonce = make_nonce(rng_seed);
  state.dh_pair = dh_derive_keypair(state.init_nonce, "dh-init");
  const SecretKey32 shared = dh_shared(state.dh_pair.private_key, server_longterm_pub);
  state.root_key = kdf32(cdi.view(), shared.view(), "root-key");
  state.chain_key = epoch_chain_key(state.root_key, today);
  state.epoch_date = today;
  state.chain_date = today;
  state.device_id = identity.device_id;
  state.attest_digest = attestation_digest(identity);
  return state;
}

SecretKey32 chain_key_for(const ClientState& state, const LogDate& day) {
  if (day < state.epoch_date) {
    throw Error(ErrorCode::InvalidWindow, "date " + day.iso() + " precedes epoch " +
                                              state.epoch_date.iso());
  }
  SecretKey32 ck = epoch_chain_key(state.root_key, state.epoch_date);
  for (int i = days_between(state.epoch_date, day); i > 0; --i) {
    ck = ratchet_step(ck).next_chain_key;
  }
  return ck;
}

AdvanceResult advance_to(const ClientState& state, const LogDate& target, RetentionMode mode) {
  if (target < state.chain_date) {
    throw Error(ErrorCode::OutOfOrderDate, "cannot rewind chain from " +
                                               state.chain_date.iso() + " to " + target.iso());
  }
  AdvanceResult result{state, {}};
  SecretKey32 ck = state.chain_key;
  for (LogDate d = state.chain_date;; d = d.next()) {
    RatchetOutput step = ratchet_step(ck);
    if (d == target) {
      result.day_keys.emplace(d, std::move(step.message_key));
      break;
    }
    if (mode == RetentionMode::Batch) result.day_keys.emplace(d, std::move(step.message_key));
    ck = std::move(step.next_chain_key);
  }
  result.state.chain_key = std::move(ck);
  result.state.chain_date = target;
  return result;
}

std::string protect_spans(const SecretKey32& hash_key, const SecretKey32& day_key,
                          std::string_view line, const std::vector<PiiSpan>& spans,
                          ProtectStats* stats) {
  std::vector<ProtectedField> fields;
  fields.reserve(spans.size());
  std::uint64_t hashing = 0, encryption = 0;
  for (const auto& span : spans) {
    auto t = Clock::now();
    PseudonymToken token = pseudonymize(hash_key, as_bytes(span.text));
    hashing += elapsed_ns(t);
    t = Clock::now();
    fields.push_back({span.type, aead_seal(day_key, token.view(), {})});
    encryption += elapsed_ns(t);
  }
  auto t = Clock::now();
  std::string out = encode_protected_line(line, spans, fields);
  if (stats) {
    stats->timings.format_processing_ns += elapsed_ns(t);
    stats->timings.hashing_ns += hashing;
    stats->timings.encryption_ns += encryption;
    stats->fields += spans.size();
    stats->lines_with_pii += spans.empty() ? 0 : 1;
    for (const auto& span : spans) {
      auto i = static_cast<std::size_t>(span.type);
      stats->fields_by_type[i] += 1;
      stats->overhead_by_type[i] += static_cast<std::int64_t>(protected_element_length(span.type)) -
                                    static_cast<std::int64_t>(span.length());
    }
  }
  return out;
}

LogProtector::LogProtector(ClientState& state, RetentionMode mode) : state_(state), mode_(mode) {}

const SecretKey32& LogProtector::key_for(const LogDate& day) {
  if (auto it = keys_.find(day); it != keys_.end()) return it->second;
  if (day >= state_.chain_date) {
    AdvanceResult adv = advance_to(state_, day, mode_);
    state_ = std::move(adv.state);
    if (mode_ == RetentionMode::Streaming) keys_.clear();
    keys_.merge(adv.day_keys);
    return keys_.at(day);
  }
  if (mode_ == RetentionMode::Streaming) {
    throw Error(ErrorCode::OutOfOrderDate, "line dated " + day.iso() + " after chain moved to " +
                                               state_.chain_date.iso());
  }
  // Batch: older day in this epoch, re-derived from the root.
  RatchetOutput step = ratchet_step(chain_key_for(state_, day));
  return keys_.emplace(day, std::move(step.message_key)).first->second;
}

ProtectedLine LogProtector::protect_impl(std::string_view line,
                                         const std::vector<PiiSpan>* tagged, int assumed_year) {
  const auto start = Clock::now();
  ProtectedLine out;
  ProtectStats& stats = out.stats;
  stats.lines = 1;
  stats.bytes_in = line.size();

  auto t = Clock::now();
  std::optional<LogDate> date = extract_date(line, assumed_year);
  stats.timings.date_extraction_ns = elapsed_ns(t);
  out.date = date.value_or(state_.chain_date);
  if (out.date < state_.epoch_date) {
    stats.skipped_pre_epoch = 1;
    stats.timings.total_ns = elapsed_ns(start);
    return out;
  }

  t = Clock::now();
  const SecretKey32& key = key_for(out.date);
  stats.timings.key_derivation_ns = elapsed_ns(t);

  t = Clock::now();
  std::vector<PiiSpan> detected;
  if (!tagged) detected = detect_pii(line);
  stats.timings.format_processing_ns = elapsed_ns(t);
  const auto& spans = tagged ? *tagged : detected;

  out.text = spans.empty() ? std::string(line)
                           : protect_spans(state_.hash_key, key, line, spans, &stats);
  stats.bytes_out = out.text->size();
  stats.timings.total_ns = elapsed_ns(start);
  return out;
}

ProtectedLine LogProtector::protect_line(std::string_view line, int assumed_year) {
  return protect_impl(line, nullptr, assumed_year);
}

ProtectedLine LogProtector::protect_tagged(std::string_view line,
                                           const std::vector<PiiSpan>& spans, int assumed_year) {
  return protect_impl(line, &spans, assumed_year);
}

std::vector<ProtectedLine> LogProtector::protect_lines(const std::vector<std::string>& lines,
                                                       int assumed_year, unsigned workers) {
  std::vector<ProtectedLine> out(lines.size());
  if (mode_ == RetentionMode::Streaming || workers <= 1 || lines.size() < 2) {
    for (std::size_t i = 0; i < lines.size(); ++i) out[i] = protect_line(lines[i], assumed_year);
    return out;
  }

  // Serial pass: dates and every key the batch needs.
  std::vector<std::optional<LogDate>> dates(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    LogDate d = extract_date(lines[i], assumed_year).value_or(state_.chain_date);
    if (d >= state_.epoch_date) {
      key_for(d);
      dates[i] = d;
    }
  }

  const ProtectionSnapshot snap{&state_.hash_key, &keys_};
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ProtectedLine& p = out[i];
      p.stats.lines = 1;
      p.stats.bytes_in = lines[i].size();
      if (!dates[i]) {
        p.stats.skipped_pre_epoch = 1;
        continue;
      }
      p.date = *dates[i];
      auto spans = detect_pii(lines[i]);
      p.text = spans.empty() ? lines[i]
                             : protect_spans(*snap.hash_key, snap.day_keys->at(p.date), lines[i],
                                             spans, &p.stats);
      p.stats.bytes_out = p.text->size();
    }
  };
  const std::size_t n = std::min<std::size_t>(workers, lines.size());
  const std::size_t chunk = (lines.size() + n - 1) / n;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n; ++w) {
    std::size_t begin = w * chunk, end = std::min(lines.size(), begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  for (auto& th : pool) th.join();
  return out;
}

Bytes GrantContext::canonical_aad() const {
  Bytes aad;
  auto field = [&](ByteView v) {
    if (v.size() > 0xffff) throw Error(ErrorCode::InvalidArgument, "AAD field too long");
    append_u16be(aad, static_cast<std::uint16_t>(v.size()));
    append(aad, v);
  };
  field(as_bytes(server_id));
  field(as_bytes(device_id));
  field(attest_digest);
  field(as_bytes(grant_id));
  const std::string date = grant_date.iso();
  field(as_bytes(date));
  return aad;
}

std::string Grant::serialize() const {
  KvDocument doc;
  doc.set("v", "1");
  doc.set("client_eph_pub", to_base64(client_eph_pub));
  doc.set("nonce", to_base64(box.nonce));
  doc.set("ciphertext", to_base64(box.ct));
  doc.set("server_id", context.server_id);
  doc.set("device_id", context.device_id);
  doc.set("attest_digest", to_base64(context.attest_digest));
  doc.set("grant_id", context.grant_id);
  doc.set("grant_date", context.grant_date.iso());
  return doc.serialize();
}

Grant Grant::parse(std::string_view text) {
  auto doc = KvDocument::parse(text);
  check_version(doc);
  Grant g;
  g.client_eph_pub = decode_fixed<32>(doc, "client_eph_pub");
  g.box.nonce = decode_fixed<kNonceSize>(doc, "nonce");
  auto ct = from_base64(doc.get("ciphertext"));
  if (!ct || ct->size() < kTagSize) throw Error(ErrorCode::CorruptState, "bad grant ciphertext");
  g.box.ct = std::move(*ct);
  g.context.server_id = doc.get("server_id");
  g.context.device_id = doc.get("device_id");
  g.context.attest_digest = decode_fixed<32>(doc, "attest_digest");
  g.context.grant_id = doc.get("grant_id");
  g.context.grant_date = decode_date(doc, "grant_date");
  return g;
}

Bytes serialize_grant_payload(const SecretKey32& chain_key, const LogDate& start) {
  Bytes out(chain_key.view().begin(), chain_key.view().end());
  append(out, as_bytes(start.iso()));
  return out;
}

std::pair<SecretKey32, LogDate> parse_grant_payload(ByteView payload) {
  if (payload.size() != 42) throw Error(ErrorCode::CorruptState, "grant payload must be 42 bytes");
  auto start = LogDate::parse_iso(as_chars(payload.subspan(32)));
  if (!start) throw Error(ErrorCode::CorruptState, "grant payload date is not ISO");
  return {SecretKey32::from(payload.first(32)), *start};
}

GrantOutcome create_grant(const ClientState& state, const GrantRequest& req,
                          const DeviceIdentity& identity, const LogDate& today,
                          std::optional<ByteView> rng_seed) {
  if (req.start_date < state.epoch_date || req.start_date > today) {
    throw Error(ErrorCode::InvalidWindow, "grant start " + req.start_date.iso() +
                                              " outside [" + state.epoch_date.iso() + ", " +
                                              today.iso() + "]");
  }
  if (state.chain_date > today) {
    throw Error(ErrorCode::InvalidWindow,
                "chain already at " + state.chain_date.iso() + ", after " + today.iso());
  }

  const auto nonce = make_nonce(rng_seed);
  DhKeyPair eph = dh_derive_keypair(nonce, "export-keygen");
  const SecretKey32 z = dh_shared(eph.private_key, req.server_pub);
  const SecretKey32 export_key = kdf32({}, z.view(), "export-kdf");

  const SecretKey32 granted_ck = chain_key_for(state, req.start_date);

  GrantOutcome outcome;
  outcome.grant.client_eph_pub = eph.public_key;
  outcome.grant.context = {req.server_id, identity.device_id, attestation_digest(identity),
                           req.grant_id, today};
  Bytes payload = serialize_grant_payload(granted_ck, req.start_date);
  const Bytes aad = outcome.grant.context.canonical_aad();
  if (rng_seed) {
    // Test mode: the AEAD nonce follows the seed too, so grants reproduce.
    std::array<std::uint8_t, kNonceSize> box_nonce{};
    const Bytes raw = kdf({}, nonce, "seeded-nonce", 16);
    std::copy_n(raw.begin(), kNonceSize, box_nonce.begin());
    outcome.grant.box = aead_seal_with_nonce(export_key, box_nonce, payload, aad);
  } else {
    outcome.grant.box = aead_seal(export_key, payload, aad);
  }
  secure_zero(payload.data(), payload.size());

  // Outer ratchet: fresh DH entropy severs the new epoch from everything
  // the grant reveals.
  ClientState& next = outcome.state;
  next.root_key = kdf32(state.root_key.view(), z.view(), "root-key-rotate");
  next.hash_key = state.hash_key;
  next.dh_pair = std::move(eph);
  next.epoch_date = today.next();
  next.chain_date = next.epoch_date;
  next.chain_key = epoch_chain_key(next.root_key, next.epoch_date);
  next.init_nonce = state.init_nonce;
  next.device_id = state.device_id;
  next.attest_digest = state.attest_digest;
  return outcome;
}

std::string save_state(const ClientState& s) {
  KvDocument doc;
  doc.set("v", "1");
  doc.set("device_id", s.device_id);
  doc.set("attest_digest", to_base64(s.attest_digest));
  doc.set("epoch_date", s.epoch_date.iso());
  doc.set("chain_date", s.chain_date.iso());
  doc.set("root_key", to_base64(s.root_key.view()));
  doc.set("hash_key", to_base64(s.hash_key.view()));
  doc.set("chain_key", to_base64(s.chain_key.view()));
  doc.set("dh_private", to_base64(s.dh_pair.private_key.view()));
  doc.set("dh_public", to_base64(s.dh_pair.public_key));
  doc.set("init_nonce", to_base64(s.init_nonce));
  return doc.serialize();
}

ClientState load_state(std::string_view text) {
  auto doc = KvDocument::parse(text);
  check_version(doc);
  ClientState s;
  s.device_id = doc.get("device_id");
  s.attest_digest = decode_fixed<32>(doc, "attest_digest");
  s.epoch_date = decode_date(doc, "epoch_date");
  s.chain_date = decode_date(doc, "chain_date");
  s.root_key = decode_secret(doc, "root_key");
  s.hash_key = decode_secret(doc, "hash_key");
  s.chain_key = decode_secret(doc, "chain_key");
  s.dh_pair = DhKeyPair::from_private(decode_secret(doc, "dh_private"));
  if (s.dh_pair.public_key != decode_fixed<32>(doc, "dh_public")) {
    throw Error(ErrorCode::CorruptState, "dh_public does not match dh_private");
  }
  s.init_nonce = decode_fixed<32>(doc, "init_nonce");
  if (s.chain_date < s.epoch_date) {
    throw Error(ErrorCode::CorruptState, "chain_date precedes epoch_date");
  }
  return s;
}

}  // namespace privlog
