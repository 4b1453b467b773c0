// privlog-server: forensic-side CLI (keygen, offer, accept, recover, report).

#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cli_common.hpp"
#include "privlog/error.hpp"
#include "privlog/server.hpp"

namespace fs = std::filesystem;
using namespace privlog;
using namespace privlog::cli;

namespace {

struct Globals {
  std::string config, store, today, assumed_year;
};

std::string store_path(const Globals& g, const Config& cfg) {
  return require(g.store, "PRIVLOG_SERVER_STORE", cfg, "store_file", "--store");
}

ServerKeys load_store(const std::string& path) { return ServerKeys::parse(read_file(path)); }

int cmd_keygen(const Globals& g, const std::string& id_flag, bool force) {
  auto cfg = Config::load(g.config);
  auto path = store_path(g, cfg);
  if (fs::exists(path) && !force) {
    throw Error(ErrorCode::InvalidArgument, path + " exists; pass --force to replace it");
  }
  auto keys = ServerKeys::generate(require(id_flag, nullptr, cfg, "server_id", "--server-id"));
  write_file_atomic(path, keys.serialize());
  std::cout << to_base64(keys.longterm().public_key) << '\n';
  return 0;
}

int cmd_offer(const Globals& g, const std::string& grant_id, const std::string& out) {
  auto cfg = Config::load(g.config);
  auto path = store_path(g, cfg);
  auto keys = load_store(path);
  Offer offer{grant_id, keys.server_id(), keys.create_offer(grant_id)};
  write_file_atomic(path, keys.serialize());
  write_file_atomic(out, offer.serialize());
  std::cout << to_base64(offer.server_eph_pub) << '\n';
  return 0;
}

int cmd_accept(const Globals& g, const std::string& grant_path, const std::string& device,
               const std::string& attest, const std::string& out) {
  auto cfg = Config::load(g.config);
  auto path = store_path(g, cfg);
  auto keys = load_store(path);
  auto grant = Grant::parse(read_file(grant_path));

  ExpectedContext expected;
  expected.server_id = keys.server_id();
  expected.device_id = require(device, nullptr, cfg, "expect_device", "--expect-device");
  auto attest_b64 = require(attest, nullptr, cfg, "expect_attest", "--expect-attest");
  auto raw = from_base64(attest_b64);
  if (!raw || raw->size() != expected.attest_digest.size()) {
    throw Error(ErrorCode::InvalidArgument, "--expect-attest must be a base64 32-byte digest");
  }
  std::copy(raw->begin(), raw->end(), expected.attest_digest.begin());

  auto window = accept_grant(keys, grant, expected);
  // Window keys first: losing them after the offer is gone would strand the grant.
  write_file_atomic(out, window.serialize());
  write_file_atomic(path, keys.serialize());
  std::cout << "window " << window.grant_id << " " << window.days.begin()->first.iso() << ".."
            << window.days.rbegin()->first.iso() << " (" << window.days.size() << " days)\n";
  return 0;
}

int cmd_recover(const Globals& g, const std::string& keys_path, const std::string& in,
                const std::string& out, unsigned workers) {
  auto cfg = Config::load(g.config);
  auto window = WindowKeys::parse(read_file(keys_path));
  const int year = assumed_year_or(g.assumed_year, cfg, today_or(g.today));
  auto res = recover_tokens(window, read_lines(in), year, workers);
  write_file_atomic(out, events_to_csv(res.events));
  const auto& t = res.tally;
  std::cout << "lines=" << t.lines << " lines_with_fields=" << t.lines_with_fields
            << " fields=" << t.fields << " recovered=" << t.recovered
            << " skipped_out_of_window=" << t.skipped_out_of_window
            << " skipped_auth=" << t.skipped_auth << " malformed=" << t.malformed << '\n';
  return 0;
}

int cmd_report(const std::string& events_path, const std::string& out, const std::string& token) {
  auto events = events_from_csv(read_file(events_path));
  std::string text;
  if (token.empty()) {
    text = linkage_to_csv(linkage_report(events));
  } else {
    auto raw = from_base64(token);
    if (!raw || raw->size() != kTokenSize) {
      throw Error(ErrorCode::InvalidArgument, "--timeline expects a base64 16-byte token");
    }
    PseudonymToken t;
    std::copy(raw->begin(), raw->end(), t.bytes.begin());
    text = timeline_to_csv(timeline(events, t));
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privlog-server: accept grants and recover correlation tokens"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key=value config file");
  app.add_option("--store", g.store, "server key store (env PRIVLOG_SERVER_STORE)");
  app.add_option("--today", g.today, "override the current date (YYYY-MM-DD)");
  app.add_option("--assumed-year", g.assumed_year, "year for logcat timestamps");

  std::string server_id;
  bool force = false;
  auto* keygen = app.add_subcommand("keygen", "create the long-term key pair");
  keygen->add_option("--server-id", server_id, "identifier bound into grants");
  keygen->add_flag("--force", force, "overwrite an existing store");

  std::string grant_id, offer_out;
  auto* offer = app.add_subcommand("offer", "create a single-use ephemeral key for one grant");
  offer->add_option("--grant-id", grant_id, "grant identifier")->required();
  offer->add_option("--out", offer_out, "offer file to hand to the device")->required();

  std::string grant, device, attest, window_out;
  auto* accept = app.add_subcommand("accept", "verify a grant and derive its window keys");
  accept->add_option("--grant", grant, "grant file")->required();
  accept->add_option("--expect-device", device, "expected device_id");
  accept->add_option("--expect-attest", attest, "expected attestation digest (base64)");
  accept->add_option("--out", window_out, "window keys file")->required();

  std::string keys, in, events_out;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  auto* recover = app.add_subcommand("recover", "recover tokens from a protected log");
  recover->add_option("--keys", keys, "window keys file")->required();
  recover->add_option("--in", in, "protected log")->required();
  recover->add_option("--out", events_out, "events CSV")->required();
  recover->add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 256u));

  std::string events, report_out, token;
  auto* report = app.add_subcommand("report", "linkage report or one token's timeline");
  report->add_option("--events", events, "events CSV from recover")->required();
  report->add_option("--out", report_out, "output CSV (default stdout)");
  report->add_option("--timeline", token, "token (base64) to build a timeline for");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  return guarded([&] {
    if (*keygen) return cmd_keygen(g, server_id, force);
    if (*offer) return cmd_offer(g, grant_id, offer_out);
    if (*accept) return cmd_accept(g, grant, device, attest, window_out);
    if (*recover) return cmd_recover(g, keys, in, events_out, workers);
    if (*report) return cmd_report(events, report_out, token);
    return 1;
  });
}
