// privlog-client: device-side CLI (init, protect, grant, state).

#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cli_common.hpp"
#include "privlog/client.hpp"
#include "privlog/error.hpp"
#include "privlog/server.hpp"

namespace fs = std::filesystem;
using namespace privlog;
using namespace privlog::cli;

namespace {

struct Globals {
  std::string config, identity, state, today, assumed_year;
};

DhPublicKey parse_pub(const std::string& b64, const std::string& what) {
  auto raw = from_base64(b64);
  if (!raw || raw->size() != kDhKeySize) {
    throw Error(ErrorCode::InvalidArgument, what + " must be a base64 32-byte X25519 key");
  }
  DhPublicKey pub;
  std::copy(raw->begin(), raw->end(), pub.begin());
  return pub;
}

std::string state_path(const Globals& g, const Config& cfg) {
  return require(g.state, "PRIVLOG_STATE_FILE", cfg, "state_file", "--state");
}

DeviceIdentity load_identity(const Globals& g, const Config& cfg) {
  auto path = require(g.identity, "PRIVLOG_IDENTITY_FILE", cfg, "identity_file", "--identity");
  return DeviceIdentity::parse(read_file(path));
}

std::vector<PiiSpan> parse_spans(const std::string& line, const std::vector<std::string>& specs) {
  std::vector<PiiSpan> spans;
  for (const auto& s : specs) {
    auto a = s.find(':');
    auto b = s.find(':', a == std::string::npos ? a : a + 1);
    std::optional<PiiType> type;
    std::size_t start = 0, end = 0;
    bool ok = a != std::string::npos && b != std::string::npos;
    if (ok) {
      try {
        start = std::stoul(s.substr(0, a));
        end = std::stoul(s.substr(a + 1, b - a - 1));
      } catch (const std::exception&) {
        ok = false;
      }
      type = parse_label(s.substr(b + 1));
    }
    if (!ok || !type) {
      throw Error(ErrorCode::InvalidArgument, "--span expects START:END:TYPE, got '" + s + "'");
    }
    if (start >= end || end > line.size()) {
      throw Error(ErrorCode::InvalidSpans, "span " + s + " outside the line");
    }
    spans.push_back({*type, start, end, line.substr(start, end - start)});
  }
  return spans;
}

void print_stats(const ProtectStats& st) {
  std::cout << "lines=" << st.lines << " lines_with_pii=" << st.lines_with_pii
            << " fields=" << st.fields << " skipped_pre_epoch=" << st.skipped_pre_epoch
            << " bytes_in=" << st.bytes_in << " bytes_out=" << st.bytes_out << '\n';
}

int cmd_init(const Globals& g, const std::string& server_pub_flag, const std::string& seed_hex,
             bool force) {
  auto cfg = Config::load(g.config);
  auto path = state_path(g, cfg);
  if (fs::exists(path) && !force) {
    throw Error(ErrorCode::InvalidArgument, path + " exists; pass --force to replace it");
  }
  auto identity = load_identity(g, cfg);
  auto pub = parse_pub(require(server_pub_flag, nullptr, cfg, "server_pub", "--server-pub"),
                       "server public key");
  std::optional<Bytes> seed;
  if (!seed_hex.empty()) {
    seed = from_hex(seed_hex);
    if (!seed || seed->empty()) throw Error(ErrorCode::InvalidArgument, "--test-seed: bad hex");
  }
  auto state = client_init(identity, pub, today_or(g.today),
                           seed ? std::optional<ByteView>(*seed) : std::nullopt);
  write_file_atomic(path, save_state(state));
  std::cout << "initialized " << state.device_id << " epoch " << state.epoch_date.iso() << '\n';
  return 0;
}

int cmd_protect(const Globals& g, const std::string& in, const std::string& out,
                const std::string& mode_flag, unsigned workers, const std::string& dev_line,
                const std::vector<std::string>& span_specs) {
  auto cfg = Config::load(g.config);
  auto path = state_path(g, cfg);
  auto state = load_state(read_file(path));
  auto mode_text = resolve(mode_flag, nullptr, cfg, "mode").value_or("stream");
  if (mode_text != "stream" && mode_text != "batch") {
    throw Error(ErrorCode::InvalidArgument, "--mode must be stream or batch");
  }
  const auto mode = mode_text == "batch" ? RetentionMode::Batch : RetentionMode::Streaming;
  const int year = assumed_year_or(g.assumed_year, cfg, today_or(g.today));
  LogProtector protector(state, mode);

  ProtectStats stats;
  if (!dev_line.empty() || !span_specs.empty()) {
    if (!in.empty()) throw Error(ErrorCode::InvalidArgument, "--line and --in are exclusive");
    auto r = span_specs.empty()
                 ? protector.protect_line(dev_line, year)
                 : protector.protect_tagged(dev_line, parse_spans(dev_line, span_specs), year);
    stats = r.stats;
    if (r.text) std::cout << *r.text << '\n';
  } else {
    if (in.empty() || out.empty()) {
      throw Error(ErrorCode::InvalidArgument, "protect needs --in and --out (or --line)");
    }
    auto lines = read_lines(in);
    auto results = protector.protect_lines(lines, year, workers);
    std::string text;
    for (auto& r : results) {
      stats += r.stats;
      if (r.text) {
        text += *r.text;
        text += '\n';
      }
    }
    write_file_atomic(out, text);
  }
  write_file_atomic(path, save_state(state));
  print_stats(stats);
  return 0;
}

int cmd_grant(const Globals& g, const std::string& offer_path, const std::string& start,
              const std::string& out) {
  auto cfg = Config::load(g.config);
  auto path = state_path(g, cfg);
  auto state = load_state(read_file(path));
  auto identity = load_identity(g, cfg);
  if (identity.device_id != state.device_id || attestation_digest(identity) != state.attest_digest) {
    throw Error(ErrorCode::ContextMismatch, "identity file does not match the state file");
  }
  auto offer = Offer::parse(read_file(offer_path));
  if (auto pinned = cfg.get("server_id"); pinned && *pinned != offer.server_id) {
    throw Error(ErrorCode::ContextMismatch,
                "offer is from '" + offer.server_id + "', configured server is '" + *pinned + "'");
  }
  const auto today = today_or(g.today);
  GrantRequest req{offer.server_eph_pub, parse_date_arg(start, "--start"), offer.server_id,
                   offer.grant_id};
  auto outcome = create_grant(state, req, identity, today);

  // The rotated state must be durable before the grant exists anywhere,
  // otherwise a crash could leave a state able to export this epoch again.
  crash_point("grant-before-state");
  write_file_atomic(path, save_state(outcome.state));
  crash_point("grant-after-state");
  write_file_atomic(out, outcome.grant.serialize());
  std::cout << "grant " << offer.grant_id << " window " << req.start_date.iso() << ".."
            << today.iso() << " new epoch " << outcome.state.epoch_date.iso() << '\n';
  return 0;
}

int cmd_state(const Globals& g) {
  auto cfg = Config::load(g.config);
  auto state = load_state(read_file(state_path(g, cfg)));
  KvDocument doc;
  doc.set("device_id", state.device_id);
  doc.set("attest_digest", to_base64(state.attest_digest));
  doc.set("epoch_date", state.epoch_date.iso());
  doc.set("chain_date", state.chain_date.iso());
  doc.set("dh_public", to_base64(state.dh_pair.public_key));
  std::cout << doc.serialize();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privlog-client: protect device logs and grant time-bounded access"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key=value config file");
  app.add_option("--identity", g.identity, "device identity file (env PRIVLOG_IDENTITY_FILE)");
  app.add_option("--state", g.state, "client state file (env PRIVLOG_STATE_FILE)");
  app.add_option("--today", g.today, "override the current date (YYYY-MM-DD)");
  app.add_option("--assumed-year", g.assumed_year, "year for logcat timestamps");

  std::string server_pub, seed_hex;
  bool force = false;
  auto* init = app.add_subcommand("init", "create a fresh state from the device identity");
  init->add_option("--server-pub", server_pub, "server long-term public key (base64)");
  init->add_option("--test-seed", seed_hex, "hex seed for deterministic test runs");
  init->add_flag("--force", force, "overwrite an existing state file");

  std::string in, out, mode, line;
  std::vector<std::string> spans;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  auto* protect = app.add_subcommand("protect", "protect a raw log");
  protect->add_option("--in", in, "raw log");
  protect->add_option("--out", out, "protected log");
  protect->add_option("--mode", mode, "stream (default) or batch");
  protect->add_option("--workers", workers, "worker threads (batch mode)")->check(CLI::Range(1u, 256u));
  protect->add_option("--line", line, "protect one line and print it");
  protect->add_option("--span", spans, "developer-tagged span START:END:TYPE for --line");

  std::string offer, start, grant_out;
  auto* grant = app.add_subcommand("grant", "export a window to a server and rotate");
  grant->add_option("--server-offer", offer, "offer file from privlog-server")->required();
  grant->add_option("--start", start, "first granted day (YYYY-MM-DD)")->required();
  grant->add_option("--out", grant_out, "grant file to write")->required();

  auto* state = app.add_subcommand("state", "print non-secret state fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  return guarded([&] {
    if (*init) return cmd_init(g, server_pub, seed_hex, force);
    if (*protect) return cmd_protect(g, in, out, mode, workers, line, spans);
    if (*grant) return cmd_grant(g, offer, start, grant_out);
    if (*state) return cmd_state(g);
    return 1;
  });
}
