#include "test_support.hpp"

#include <algorithm>
#include <set>

#include "privlog/corpus.hpp"
#include "privlog/csv.hpp"

using namespace privlog;
using testing::Deployment;
using testing::Gen;
using testing::kPropertyCases;
using testing::to_bytes;

namespace {

const LogDate kDay1{2024, 10, 1};

std::string line_on(const LogDate& d, std::string_view body, std::uint32_t ms = 36'000'000) {
  return logcat_prefix(d, ms, 1200, 'I', "Auth") + std::string(body);
}

std::vector<std::string> protect_all(LogProtector& p, const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (auto& l : lines) {
    auto r = p.protect_line(l, 2024);
    if (r.text) out.push_back(*r.text);
  }
  return out;
}

// An honest grant plus the server state needed to accept it.
struct PendingGrant {
  Deployment dep;
  ClientState state;
  Grant grant;
  LogDate today = kDay1.plus_days(6);

  PendingGrant() : state(dep.init(kDay1)) {
    state = advance_to(state, today, RetentionMode::Streaming).state;
    auto offer = dep.server.create_offer("case-1");
    grant = create_grant(state, {offer, kDay1.plus_days(2), "forensics-1", "case-1"},
                         dep.identity, today)
                .grant;
  }
};

}  // namespace

TEST_CASE("replayed window keys equal the client's day keys", "[server][replay]") {
  Deployment dep;
  auto state = dep.init(kDay1);
  const auto today = kDay1.plus_days(6);
  auto client = advance_to(state, today, RetentionMode::Batch);
  REQUIRE(client.day_keys.size() == 7);

  auto [window, rotated] = dep.share(client.state, kDay1, today, "w7");
  REQUIRE(window.days.size() == 7);
  for (auto& [d, k] : client.day_keys) {
    INFO(d.iso());
    REQUIRE(window.find(d) != nullptr);
    CHECK(*window.find(d) == k);
  }
  CHECK(window.find(kDay1.plus_days(-1)) == nullptr);
  CHECK(window.find(today.next()) == nullptr);
  CHECK_FALSE(dep.server.has_offer("w7"));
}

TEST_CASE("accept_grant rejects replays and unknown grants", "[server][grant]") {
  PendingGrant g;
  CHECK_NOTHROW(accept_grant(g.dep.server, g.grant, g.dep.expected()));
  CHECK_ERROR(accept_grant(g.dep.server, g.grant, g.dep.expected()), ErrorCode::InvalidArgument);
}

TEST_CASE("window start after grant date is InvalidWindow", "[server][grant]") {
  // Hand-built grant through the raw primitives, with t* > d.
  Deployment dep;
  auto offer = dep.server.create_offer("bad-window");
  Gen g(61);
  auto eph = dh_derive_keypair(g.bytes(32), "export-keygen");
  auto k_exp = kdf32({}, dh_shared(eph.private_key, offer).view(), "export-kdf");
  Grant grant;
  grant.client_eph_pub = eph.public_key;
  grant.context = {"forensics-1", dep.identity.device_id, attestation_digest(dep.identity),
                   "bad-window", kDay1};
  grant.box = aead_seal(k_exp, serialize_grant_payload(g.key(), kDay1.next()),
                        grant.context.canonical_aad());
  CHECK_ERROR(accept_grant(dep.server, grant, dep.expected()), ErrorCode::InvalidWindow);

  grant.box = aead_seal(k_exp, serialize_grant_payload(g.key(), kDay1),
                        grant.context.canonical_aad());
  auto w = accept_grant(dep.server, grant, dep.expected());
  CHECK(w.days.size() == 1);
}

TEST_CASE("any tampering with grant AAD or box is AuthFailure", "[server][grant][property]") {
  PendingGrant g;
  Gen gen(62);
  for (int i = 0; i < kPropertyCases; ++i) {
    Grant t = g.grant;
    auto flip = [&](std::string& s) {
      if (gen.below(4) == 0) {
        s += static_cast<char>('a' + gen.below(26));
      } else {
        s[gen.below(s.size())] ^= static_cast<char>(1 + gen.below(0x3f));
      }
    };
    std::string redirected;
    switch (gen.below(8)) {
      case 0: flip(t.context.server_id); break;
      case 1: flip(t.context.device_id); break;
      case 2: t.context.attest_digest[gen.below(32)] ^= static_cast<std::uint8_t>(1 + gen.below(255)); break;
      case 3:
        t.context.grant_date = t.context.grant_date.plus_days(1 + static_cast<int>(gen.below(30)));
        break;
      case 4:
        // Re-addressed to another outstanding offer.
        redirected = "other-" + std::to_string(i);
        g.dep.server.create_offer(redirected);
        t.context.grant_id = redirected;
        break;
      case 5: t.box.nonce[gen.below(kNonceSize)] ^= static_cast<std::uint8_t>(1 + gen.below(255)); break;
      case 6: t.box.ct[gen.below(t.box.ct.size())] ^= static_cast<std::uint8_t>(1 + gen.below(255)); break;
      default:
        // The top bit of the last u-coordinate byte is ignored by X25519.
        t.client_eph_pub[gen.below(31)] ^= static_cast<std::uint8_t>(1 + gen.below(255));
    }
    auto code = testing::error_of([&] { accept_grant(g.dep.server, t, g.dep.expected()); });
    REQUIRE(code.has_value());
    REQUIRE((*code == ErrorCode::AuthFailure || *code == ErrorCode::WeakKey));
    if (!redirected.empty()) g.dep.server.consume_offer(redirected);
  }
  CHECK(g.dep.server.has_offer("case-1"));
  CHECK_NOTHROW(accept_grant(g.dep.server, g.grant, g.dep.expected()));
}

TEST_CASE("unexpected context is ContextMismatch", "[server][grant][property]") {
  PendingGrant g;
  Gen gen(63);
  const auto good = g.dep.expected();
  for (int i = 0; i < kPropertyCases; ++i) {
    auto exp = good;
    switch (gen.below(3)) {
      case 0: exp.server_id = "srv-" + std::to_string(gen.below(1'000'000)); break;
      case 1: exp.device_id = "dev-" + std::to_string(gen.below(1'000'000)); break;
      default: exp.attest_digest[gen.below(32)] ^= static_cast<std::uint8_t>(1 + gen.below(255));
    }
    REQUIRE_ERROR(accept_grant(g.dep.server, g.grant, exp), ErrorCode::ContextMismatch);
  }
  CHECK(g.dep.server.has_offer("case-1"));
}

TEST_CASE("recover_tokens tallies window, auth and malformed outcomes", "[server][recover]") {
  Deployment dep;
  auto state = dep.init(kDay1);
  LogProtector p(state, RetentionMode::Streaming);
  const std::string body = "login alice@example.com imei 352099001761481";
  std::vector<std::string> raw;
  for (int d = 0; d < 7; ++d) raw.push_back(line_on(kDay1.plus_days(d), body));
  raw.push_back(line_on(kDay1.plus_days(6), "no pii here"));
  auto protected_lines = protect_all(p, raw);

  auto [window, rotated] = dep.share(state, kDay1.plus_days(2), kDay1.plus_days(6), "rec");
  LogProtector after(rotated, RetentionMode::Streaming);
  protected_lines.push_back(*after.protect_line(line_on(kDay1.plus_days(7), body), 2024).text);
  protected_lines.push_back(line_on(kDay1.plus_days(3), "<PII type=\"EMAIL\">AAAA</PII>"));

  auto res = recover_tokens(window, protected_lines, 2024);
  const auto& t = res.tally;
  CHECK(t.lines == 10);
  CHECK(t.lines_with_fields == 8);
  CHECK(t.fields == 16);
  CHECK(t.recovered == 10);              // days 3..7, two fields each
  CHECK(t.skipped_out_of_window == 3);   // days 1, 2 and post-rotation day 8
  CHECK(t.skipped_auth == 0);
  CHECK(t.malformed == 1);
  REQUIRE(res.events.size() == 10);

  auto email = pseudonymize(state.hash_key, as_bytes("alice@example.com"));
  std::set<LogDate> days;
  for (auto& e : res.events) {
    days.insert(e.date);
    if (e.type == PiiType::Email) CHECK(e.token == email);
    CHECK(e.template_text.find("alice@example.com") == std::string::npos);
    CHECK(e.template_text.find("<PII type=\"EMAIL\">" + to_base64(email.view()) + "</PII>") !=
          std::string::npos);
  }
  CHECK(days == std::set<LogDate>{kDay1.plus_days(2), kDay1.plus_days(3), kDay1.plus_days(4),
                                  kDay1.plus_days(5), kDay1.plus_days(6)});
}

TEST_CASE("post-rotation lines dated inside the window are skipped-auth", "[server][recover]") {
  // A line claiming an in-window date but sealed under the new epoch.
  Deployment dep;
  auto state = dep.init(kDay1);
  auto [window, rotated] = dep.share(state, kDay1, kDay1, "pcs");
  auto line = line_on(kDay1.next(), "user bob@example.com");
  auto sealed = LogProtector(rotated, RetentionMode::Streaming).protect_line(line, 2024);
  auto forged = line_on(kDay1, sealed.text->substr(sealed.text->find("user")));
  auto res = recover_tokens(window, {forged}, 2024);
  CHECK(res.tally.skipped_auth == 1);
  CHECK(res.events.empty());
}

TEST_CASE("date-less lines are tried against every window key", "[server][recover]") {
  Deployment dep;
  auto state = dep.init(kDay1);
  auto day3 = advance_to(state, kDay1.plus_days(2), RetentionMode::Streaming);
  auto line = protect_spans(state.hash_key, day3.day_keys.begin()->second, "mail a@b.co",
                            detect_pii("mail a@b.co"));
  auto [window, rotated] = dep.share(day3.state, kDay1, kDay1.plus_days(2), "nodate");
  auto res = recover_tokens(window, {line}, 2024);
  REQUIRE(res.events.size() == 1);
  CHECK(res.events[0].date == kDay1.plus_days(2));
  CHECK(recover_tokens(WindowKeys{}, {line}, 2024).tally.skipped_out_of_window == 1);
}

TEST_CASE("recovery results are independent of worker count", "[server][recover]") {
  Deployment dep;
  BenchConfig cfg;
  cfg.line_count = 900;
  cfg.day_span = 4;
  cfg.start_date = kDay1;
  cfg.seed = 99;
  auto corpus = generate_corpus(cfg);
  auto state = dep.init(kDay1);
  LogProtector p(state, RetentionMode::Batch);
  std::vector<std::string> lines;
  for (auto& r : p.protect_lines(corpus.lines, 2024, 2)) lines.push_back(*r.text);
  auto [window, rotated] = dep.share(state, kDay1.plus_days(1), kDay1.plus_days(3), "par");

  auto one = recover_tokens(window, lines, 2024, 1);
  for (unsigned w : {2u, 3u, 8u}) {
    auto many = recover_tokens(window, lines, 2024, w);
    CHECK(many.tally == one.tally);
    CHECK(events_to_csv(many.events) == events_to_csv(one.events));
  }
  CHECK(one.tally.recovered > 0);
  CHECK(one.tally.recovered + one.tally.skipped_auth < one.tally.fields);
}

TEST_CASE("linkage groups tokens deterministically", "[server][report]") {
  Gen g(64);
  auto key = g.key();
  auto tok = [&](std::string_view s) { return pseudonymize(key, as_bytes(s)); };
  std::vector<RecoveredEvent> events;
  std::size_t line = 0;
  for (int d : {0, 1, 2}) events.push_back({++line, kDay1.plus_days(d), PiiType::Email, tok("a@x.io"), "t"});
  events.push_back({++line, kDay1.plus_days(4), PiiType::Email, tok("b@x.io"), "t"});
  events.push_back({++line, kDay1.plus_days(1), PiiType::Imei, tok("352099001761481"), "t"});

  auto groups = linkage_report(events);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].token == tok("a@x.io"));
  CHECK(groups[0].count == 3);
  CHECK(groups[0].first == kDay1);
  CHECK(groups[0].last == kDay1.plus_days(2));
  CHECK(groups[0].per_day.size() == 3);
  CHECK(groups[1].token < groups[2].token);
  std::size_t total = 0;
  for (auto& gr : groups) total += gr.count;
  CHECK(total == events.size());

  auto csv_text = linkage_to_csv(groups);
  auto rows = csv::parse(csv_text);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"token_b64", "pii_type", "count", "first_date",
                                            "last_date"});
  CHECK(rows[1] == std::vector<std::string>{to_base64(tok("a@x.io").view()), "EMAIL", "3",
                                            "2024-10-01", "2024-10-03"});
}

TEST_CASE("timeline filters and orders one token", "[server][report]") {
  Gen g(65);
  auto key = g.key();
  auto a = pseudonymize(key, as_bytes("a@x.io"));
  std::vector<RecoveredEvent> events = {
      {9, kDay1.plus_days(4), PiiType::Email, a, "late"},
      {3, kDay1.plus_days(1), PiiType::Email, a, "early"},
      {4, kDay1.plus_days(1), PiiType::Email, pseudonymize(key, as_bytes("b@x.io")), "other"},
  };
  auto tl = timeline(events, a);
  REQUIRE(tl.size() == 2);
  CHECK(tl[0].date == kDay1.plus_days(1));
  CHECK(tl[0].template_text == "early");
  CHECK(tl[1].line_no == 9);
  CHECK(timeline(events, pseudonymize(key, as_bytes("nobody"))).empty());
  CHECK(csv::parse(timeline_to_csv(tl))[0] ==
        std::vector<std::string>{"date", "line_no", "template"});
}

TEST_CASE("events CSV round trips, including awkward templates", "[server][report]") {
  Gen g(66);
  auto key = g.key();
  std::vector<RecoveredEvent> events = {
      {1, kDay1, PiiType::Url, pseudonymize(key, as_bytes("u")), "a, \"quoted\" line"},
      {2, kDay1.next(), PiiType::CreditCard, pseudonymize(key, as_bytes("c")), "plain"},
  };
  auto back = events_from_csv(events_to_csv(events));
  REQUIRE(back.size() == 2);
  CHECK(back[0].template_text == events[0].template_text);
  CHECK(back[1].type == PiiType::CreditCard);
  CHECK(back[1].token == events[1].token);
  CHECK(back[1].date == kDay1.next());
  CHECK_ERROR(events_from_csv("line_no,date\n1\n"), ErrorCode::CorruptState);
}

TEST_CASE("server key store and window files round trip", "[server][files]") {
  auto keys = ServerKeys::generate("forensics-1");
  auto b1 = keys.create_offer("g.1");
  keys.create_offer("g-2");
  CHECK_ERROR(keys.create_offer("g.1"), ErrorCode::InvalidArgument);
  CHECK_ERROR(keys.create_offer("has space"), ErrorCode::InvalidArgument);
  CHECK_ERROR(keys.create_offer(""), ErrorCode::InvalidArgument);

  auto back = ServerKeys::parse(keys.serialize());
  CHECK(back.server_id() == "forensics-1");
  CHECK(back.longterm().public_key == keys.longterm().public_key);
  CHECK(back.outstanding_offers() == 2);
  CHECK(back.offer("g.1").public_key == b1);

  Offer o{"g.1", "forensics-1", b1};
  auto o2 = Offer::parse(o.serialize());
  CHECK(o2.grant_id == "g.1");
  CHECK(o2.server_eph_pub == b1);

  Deployment dep;
  auto [window, rotated] = dep.share(dep.init(kDay1), kDay1, kDay1.plus_days(2), "wk");
  auto wback = WindowKeys::parse(window.serialize());
  CHECK(wback.grant_id == "wk");
  REQUIRE(wback.days.size() == 3);
  for (auto& [d, k] : window.days) CHECK(*wback.find(d) == k);
  CHECK(WindowKeys::parse("").empty());
  CHECK_ERROR(WindowKeys::parse("v=1\nday.2024-02-30=AAAA\n"), ErrorCode::CorruptState);
}

TEST_CASE("forward secrecy and post-compromise windows at desk scale", "[server][security]") {
  // Ten days, grant [day 3, day 7], then three more days in the new epoch.
  Deployment dep;
  auto state = dep.init(kDay1);
  LogProtector before(state, RetentionMode::Streaming);
  std::vector<std::string> early, granted, late;
  for (int d = 0; d < 7; ++d) {
    auto l = *before.protect_line(line_on(kDay1.plus_days(d), "a@x.io 10.0.0.1"), 2024).text;
    (d < 2 ? early : granted).push_back(l);
  }
  auto offer = dep.server.create_offer("fs");
  auto out = create_grant(state, {offer, kDay1.plus_days(2), "forensics-1", "fs"}, dep.identity,
                          kDay1.plus_days(6));
  auto window = accept_grant(dep.server, out.grant, dep.expected());
  LogProtector after(out.state, RetentionMode::Streaming);
  for (int d = 7; d < 10; ++d)
    late.push_back(*after.protect_line(line_on(kDay1.plus_days(d), "a@x.io 10.0.0.1"), 2024).text);

  // Every key the grant yields: the window plus 1000 further ratchet steps.
  std::vector<SecretKey32> derivable;
  for (auto& [d, k] : window.days) derivable.push_back(k);
  auto ck = chain_key_for(state, kDay1.plus_days(2));
  for (int i = 0; i < 1005; ++i) {
    auto s = ratchet_step(ck);
    derivable.push_back(s.message_key);
    derivable.push_back(s.next_chain_key);
    ck = s.next_chain_key;
  }
  auto successes = [&](const std::vector<std::string>& lines) {
    std::size_t ok = 0;
    for (auto& l : lines)
      for (auto& f : parse_protected_line(l).fields)
        ok += std::any_of(derivable.begin(), derivable.end(),
                          [&](const SecretKey32& k) { return aead_try_open(k, f.box, {}).has_value(); });
    return ok;
  };
  CHECK(successes(early) == 0);
  CHECK(successes(late) == 0);
  CHECK(successes(granted) == 2 * granted.size());
}
