#pragma once

// Forensic side: grant ingestion with the replay ratchet, token recovery
// from protected logs, and linkage / timeline analysis over tokens.
// Nothing here ever sees the device hash key, so outputs are tokens only.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privlog/client.hpp"

namespace privlog {

class ServerKeys {
 public:
  static ServerKeys generate(std::string server_id);

  const std::string& server_id() const noexcept { return server_id_; }
  const DhKeyPair& longterm() const noexcept { return longterm_; }

  // Fresh ephemeral pair for one grant. Throws InvalidArgument if an
  // offer for this grant_id is already outstanding.
  const DhPublicKey& create_offer(const std::string& grant_id);
  bool has_offer(const std::string& grant_id) const { return ephemeral_.count(grant_id) != 0; }
  const DhKeyPair& offer(const std::string& grant_id) const;
  void consume_offer(const std::string& grant_id) { ephemeral_.erase(grant_id); }
  std::size_t outstanding_offers() const noexcept { return ephemeral_.size(); }

  std::string serialize() const;
  static ServerKeys parse(std::string_view text);

 private:
  std::string server_id_;
  DhKeyPair longterm_;
  std::map<std::string, DhKeyPair> ephemeral_;
};

struct Offer {
  std::string grant_id;
  std::string server_id;
  DhPublicKey server_eph_pub{};

  std::string serialize() const;
  static Offer parse(std::string_view text);
};

struct ExpectedContext {
  std::string server_id;
  std::string device_id;
  AttestationDigest attest_digest{};
};

/// Day keys K_t for a contiguous granted window.
struct WindowKeys {
  std::string grant_id;
  DayKeys days;

  bool empty() const noexcept { return days.empty(); }
  const SecretKey32* find(const LogDate& d) const;

  std::string serialize() const;
  // An empty document yields an empty window.
  static WindowKeys parse(std::string_view text);
};

/// Opens the grant with the ephemeral key offered for its grant_id, checks
/// the bound context and replays the ratchet from t* through grant_date.
/// The ephemeral pair is deleted on success.
/// Errors: AuthFailure, ContextMismatch, InvalidWindow; InvalidArgument if
/// no offer exists for the grant_id.
WindowKeys accept_grant(ServerKeys& keys, const Grant& grant, const ExpectedContext& expected);

// Forward replay shared by accept_grant and tests: K_t for t in [start, end].
DayKeys replay_window(const SecretKey32& chain_key, const LogDate& start, const LogDate& end);

struct RecoveredEvent {
  std::size_t line_no = 0;  // 1-based
  LogDate date{1970, 1, 1};
  PiiType type = PiiType::Email;
  PseudonymToken token;
  std::string template_text;
};

struct RecoverTally {
  std::size_t lines = 0;
  std::size_t lines_with_fields = 0;
  std::size_t fields = 0;
  std::size_t recovered = 0;
  std::size_t skipped_out_of_window = 0;  // lines
  std::size_t skipped_auth = 0;           // fields
  std::size_t malformed = 0;              // elements

  RecoverTally& operator+=(const RecoverTally& o) noexcept;
  friend bool operator==(const RecoverTally&, const RecoverTally&) = default;
};

struct RecoverResult {
  std::vector<RecoveredEvent> events;
  RecoverTally tally;
  std::uint64_t decrypt_ns = 0;
  std::uint64_t parse_ns = 0;
};

/// Per line: pick K_date from the window (date-less lines try every window
/// key), open each element. Failures are tallied, never thrown. Results
/// are independent of `workers`.
RecoverResult recover_tokens(const WindowKeys& window, const std::vector<std::string>& lines,
                             int assumed_year, unsigned workers = 1);

struct LinkageGroup {
  PseudonymToken token;
  PiiType type = PiiType::Email;
  std::size_t count = 0;
  LogDate first{1970, 1, 1};
  LogDate last{1970, 1, 1};
  std::map<LogDate, std::size_t> per_day;
};

// Sorted by count descending, then token bytes ascending.
std::vector<LinkageGroup> linkage_report(const std::vector<RecoveredEvent>& events);

struct TimelineEntry {
  LogDate date{1970, 1, 1};
  std::size_t line_no = 0;
  std::string template_text;
};

std::vector<TimelineEntry> timeline(const std::vector<RecoveredEvent>& events,
                                    const PseudonymToken& token);

// CSV artifacts.
std::string events_to_csv(const std::vector<RecoveredEvent>& events);
std::vector<RecoveredEvent> events_from_csv(std::string_view text);
std::string linkage_to_csv(const std::vector<LinkageGroup>& groups);
std::string timeline_to_csv(const std::vector<TimelineEntry>& entries);

}  // namespace privlog
