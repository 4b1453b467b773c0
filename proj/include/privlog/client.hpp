#pragma once

// Device-side engine: state initialization from the CDI, the daily inner
// ratchet, per-line PII protection and grant creation with post-grant root
// rotation (the outer ratchet).

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privlog/crypto.hpp"
#include "privlog/date.hpp"
#include "privlog/dice.hpp"
#include "privlog/pii.hpp"

namespace privlog {

struct ClientState {
  SecretKey32 root_key;
  SecretKey32 hash_key;
  DhKeyPair dh_pair;
  // Chain key whose ratchet step yields chain_date's message key.
  SecretKey32 chain_key;
  LogDate chain_date{1970, 1, 1};
  LogDate epoch_date{1970, 1, 1};
  std::array<std::uint8_t, 32> init_nonce{};
  // Non-secret labels carried for `state` output and grant context.
  std::string device_id;
  AttestationDigest attest_digest{};
};

using DayKeys = std::map<LogDate, SecretKey32>;

// Deterministic 32-byte nonce from a test seed, or fresh CSPRNG bytes.
std::array<std::uint8_t, 32> make_nonce(std::optional<ByteView> rng_seed);

ClientState client_init(const DeviceIdentity& identity, const DhPublicKey& server_longterm_pub,
                        const LogDate& today, std::optional<ByteView> rng_seed = std::nullopt);

// ck_0 for the state's current epoch.
SecretKey32 epoch_chain_key(const SecretKey32& root_key, const LogDate& epoch);

// Re-derives ck_day from the root by stepping epoch_date .. day-1.
// Throws InvalidWindow for a day before the epoch.
SecretKey32 chain_key_for(const ClientState& state, const LogDate& day);

enum class RetentionMode { Streaming, Batch };

struct AdvanceResult {
  ClientState state;
  DayKeys day_keys;
};

/// Ratchets from chain_date to `target`. Returns the message key for each
/// day in [chain_date, target] (Batch) or only target's (Streaming). The
/// returned state holds ck_target, so earlier chain keys are gone.
/// Throws OutOfOrderDate if target < chain_date.
AdvanceResult advance_to(const ClientState& state, const LogDate& target, RetentionMode mode);

struct StageTimings {
  std::uint64_t date_extraction_ns = 0;
  std::uint64_t key_derivation_ns = 0;
  std::uint64_t format_processing_ns = 0;  // detection + replacement
  std::uint64_t hashing_ns = 0;
  std::uint64_t encryption_ns = 0;
  std::uint64_t total_ns = 0;

  std::uint64_t stage_sum() const noexcept {
    return date_extraction_ns + key_derivation_ns + format_processing_ns + hashing_ns +
           encryption_ns;
  }
  StageTimings& operator+=(const StageTimings& o) noexcept;
};

struct ProtectStats {
  std::size_t lines = 0;
  std::size_t lines_with_pii = 0;
  std::size_t fields = 0;  // encryptions performed
  std::size_t skipped_pre_epoch = 0;
  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;
  std::array<std::size_t, kPiiTypeCount> fields_by_type{};
  // Sum over fields of (element length - plaintext length), per type.
  std::array<std::int64_t, kPiiTypeCount> overhead_by_type{};
  StageTimings timings;

  ProtectStats& operator+=(const ProtectStats& o) noexcept;
};

struct ProtectedLine {
  // nullopt when the line was dropped (dated before the epoch).
  std::optional<std::string> text;
  LogDate date{1970, 1, 1};
  ProtectStats stats;
};

/// Read-only view used for protection: the hash key and the day keys of a
/// fixed set of days. Safe to share across worker threads.
struct ProtectionSnapshot {
  const SecretKey32* hash_key = nullptr;
  const DayKeys* day_keys = nullptr;
};

// Seals the given spans with `day_key`. Spans come from detect_pii or from
// a developer annotation.
std::string protect_spans(const SecretKey32& hash_key, const SecretKey32& day_key,
                          std::string_view line, const std::vector<PiiSpan>& spans,
                          ProtectStats* stats = nullptr);

/// Stateful protection session over a ClientState (the "state with cache").
/// Streaming mode keeps only the newest day key and rejects earlier dates;
/// batch mode keeps every key it derives in memory for the session.
/// Keys are never persisted by this class.
class LogProtector {
 public:
  LogProtector(ClientState& state, RetentionMode mode);

  ProtectedLine protect_line(std::string_view line, int assumed_year);

  // Developer-tagged variant: `spans` bypass detection.
  ProtectedLine protect_tagged(std::string_view line, const std::vector<PiiSpan>& spans,
                               int assumed_year);

  /// Protects many lines. Ratchet advancement is done up front on this
  /// thread, then lines are sealed by `workers` threads against an
  /// immutable snapshot. Output order matches input order. Streaming mode
  /// always runs on one thread.
  std::vector<ProtectedLine> protect_lines(const std::vector<std::string>& lines,
                                           int assumed_year, unsigned workers = 1);

  const DayKeys& cached_keys() const noexcept { return keys_; }
  RetentionMode mode() const noexcept { return mode_; }

 private:
  const SecretKey32& key_for(const LogDate& day);
  ProtectedLine protect_impl(std::string_view line, const std::vector<PiiSpan>* tagged,
                             int assumed_year);

  ClientState& state_;
  RetentionMode mode_;
  DayKeys keys_;
};

struct GrantRequest {
  DhPublicKey server_pub{};
  LogDate start_date{1970, 1, 1};
  std::string server_id;
  std::string grant_id;
};

/// Context bound into the grant as AAD.
struct GrantContext {
  std::string server_id;
  std::string device_id;
  AttestationDigest attest_digest{};
  std::string grant_id;
  LogDate grant_date{1970, 1, 1};

  // Each field u16be-length-prefixed, in the order above; date as ISO text.
  Bytes canonical_aad() const;
  friend bool operator==(const GrantContext&, const GrantContext&) = default;
};

struct Grant {
  DhPublicKey client_eph_pub{};
  AeadBox box;
  GrantContext context;

  std::string serialize() const;
  // Throws CorruptState / UnsupportedVersion.
  static Grant parse(std::string_view text);
};

// AEAD plaintext of a grant: 32-byte chain key || 10-byte ISO start date.
Bytes serialize_grant_payload(const SecretKey32& chain_key, const LogDate& start);
std::pair<SecretKey32, LogDate> parse_grant_payload(ByteView payload);

struct GrantOutcome {
  Grant grant;
  ClientState state;  // rotated; the caller must persist it before sending
};

/// Exports ck_{start_date} to the server and rotates the root. Throws
/// InvalidWindow unless epoch_date <= start_date <= today and
/// chain_date <= today.
GrantOutcome create_grant(const ClientState& state, const GrantRequest& req,
                          const DeviceIdentity& identity, const LogDate& today,
                          std::optional<ByteView> rng_seed = std::nullopt);

std::string save_state(const ClientState& state);
// Throws UnsupportedVersion or CorruptState.
ClientState load_state(std::string_view text);

}  // namespace privlog
