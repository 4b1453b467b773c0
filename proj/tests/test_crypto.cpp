#include "test_support.hpp"

#include "oracle/golden_vectors.hpp"
#include "privlog/error.hpp"

using namespace privlog;
using testing::Gen;
using testing::kPropertyCases;
using testing::to_bytes;
using testing::unhex;

namespace {

struct OracleInit {
  OracleInit() { oracle::init(); }
} const oracle_init;

}  // namespace

TEST_CASE("kdf matches the RFC 5869 SHA-256 vectors", "[crypto][kdf]") {
  const Bytes ikm(22, 0x0b);
  SECTION("case 1") {
    auto salt = unhex("000102030405060708090a0b0c");
    auto info = unhex("f0f1f2f3f4f5f6f7f8f9");
    auto okm = kdf(salt, ikm, as_chars(info), 42);
    CHECK(to_hex(okm) ==
          "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
  }
  SECTION("case 3: empty salt and info") {
    auto okm = kdf({}, ikm, "", 42);
    CHECK(to_hex(okm) ==
          "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d9d201395faa4b61a96c8");
  }
}

TEST_CASE("kdf 64-byte ratchet expansion of a zero key", "[crypto][kdf]") {
  auto out = kdf({}, Bytes(32, 0), "ratchet", 64);
  REQUIRE(out.size() == 64);
  CHECK(to_hex(out) == golden::kKdfRatchetZero64);
  CHECK(Bytes(out.begin(), out.begin() + 32) != Bytes(out.begin() + 32, out.end()));
}

TEST_CASE("kdf labels separate domains", "[crypto][kdf]") {
  Gen g(11);
  for (int i = 0; i < 100; ++i) {
    auto k = g.bytes(32);
    CHECK(kdf({}, k, "a", 32) != kdf({}, k, "b", 32));
  }
}

TEST_CASE("kdf rejects output lengths outside [16, 64]", "[crypto][kdf]") {
  const Bytes k(32, 7);
  CHECK_NOTHROW(kdf({}, k, "x", 16));
  CHECK_NOTHROW(kdf({}, k, "x", 64));
  for (std::size_t bad : {0u, 15u, 65u, 128u}) {
    try {
      kdf({}, k, "x", bad);
      FAIL("expected InvalidLength");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidLength);
    }
  }
}

TEST_CASE("kdf agrees with the libsodium HKDF oracle", "[crypto][kdf][property]") {
  Gen g(12);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto salt = g.below(3) == 0 ? Bytes{} : g.bytes(1 + g.below(64));
    auto ikm = g.bytes(1 + g.below(80));
    auto info = g.ascii(g.below(40));
    auto len = 16 + g.below(49);
    REQUIRE(kdf(salt, ikm, info, len) == oracle::hkdf_sha256(salt, ikm, oracle::str(info), len));
  }
}

TEST_CASE("ratchet_step is deterministic and splits the 64-byte output", "[crypto][ratchet]") {
  Gen g(13);
  auto ck = g.key();
  auto a = ratchet_step(ck);
  auto b = ratchet_step(ck);
  CHECK(a.next_chain_key == b.next_chain_key);
  CHECK(a.message_key == b.message_key);
  auto x = oracle::hkdf_sha256({}, ck.view(), oracle::str("ratchet"), 64);
  CHECK(to_bytes(a.next_chain_key.view()) == Bytes(x.begin(), x.begin() + 32));
  CHECK(to_bytes(a.message_key.view()) == Bytes(x.begin() + 32, x.end()));
}

TEST_CASE("ratchet_step outputs never equal the input", "[crypto][ratchet][property]") {
  Gen g(14);
  for (int i = 0; i < 10'000; ++i) {
    auto ck = g.key();
    auto out = ratchet_step(ck);
    REQUIRE_FALSE(out.next_chain_key == ck);
    REQUIRE_FALSE(out.message_key == ck);
    REQUIRE_FALSE(out.message_key == out.next_chain_key);
  }
}

TEST_CASE("30-step ratchet chain matches the frozen golden vectors", "[crypto][ratchet]") {
  auto ck = SecretKey32::from(unhex(golden::kRatchetSeed));
  for (std::size_t i = 0; i < golden::kRatchetChain.size(); ++i) {
    auto out = ratchet_step(ck);
    INFO("step " << i);
    REQUIRE(to_hex(out.next_chain_key.view()) == golden::kRatchetChain[i].first);
    REQUIRE(to_hex(out.message_key.view()) == golden::kRatchetChain[i].second);
    ck = out.next_chain_key;
  }
}

TEST_CASE("pseudonymize is HMAC-SHA256 truncated to 16 bytes", "[crypto][hmac]") {
  auto key = SecretKey32::from(unhex(golden::kHashKey));
  auto alice = pseudonymize(key, as_bytes("alice@example.com"));
  auto full = oracle::hmac_sha256(key.view(), oracle::str("alice@example.com"));
  CHECK(to_bytes(alice.view()) == Bytes(full.begin(), full.begin() + 16));
  CHECK(to_hex(alice.view()) == golden::kTokenAlice);
  CHECK(alice == pseudonymize(key, as_bytes("alice@example.com")));
  CHECK_FALSE(alice == pseudonymize(key, as_bytes("bob@example.com")));
}

TEST_CASE("pseudonymize rejects empty input", "[crypto][hmac]") {
  Gen g(15);
  try {
    pseudonymize(g.key(), {});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("pseudonym tokens equal the oracle's truncated HMAC", "[crypto][hmac][property]") {
  Gen g(16);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto key = g.key();
    auto msg = g.bytes(1 + g.below(200));
    auto full = oracle::hmac_sha256(key.view(), msg);
    REQUIRE(to_bytes(pseudonymize(key, msg).view()) == Bytes(full.begin(), full.begin() + 16));
  }
}

TEST_CASE("AEAD matches the RFC 8439 ChaCha20-Poly1305 vector", "[crypto][aead]") {
  Bytes key_raw(32);
  for (int i = 0; i < 32; ++i) key_raw[i] = static_cast<std::uint8_t>(0x80 + i);
  auto key = SecretKey32::from(key_raw);
  std::array<std::uint8_t, 12> nonce{};
  auto n = unhex("070000004041424344454647");
  std::copy(n.begin(), n.end(), nonce.begin());
  auto aad = unhex("50515253c0c1c2c3c4c5c6c7");
  std::string_view pt =
      "Ladies and Gentlemen of the class of '99: If I could offer you only one tip for the "
      "future, sunscreen would be it.";
  auto box = aead_seal_with_nonce(key, nonce, as_bytes(pt), aad);
  CHECK(to_hex(ByteView(box.ct).first(16)) == "d31a8d34648e60db7b86afbc53ef7ec2");
  CHECK(to_hex(ByteView(box.ct).last(16)) == "1ae10b594f09e26a7e902ecbd0600691");
  CHECK(box.ct == oracle::chacha20poly1305_seal(key.view(), nonce, as_bytes(pt), aad));
  CHECK(as_chars(aead_open(key, box, aad)) == pt);
}

TEST_CASE("AEAD seal/open basics", "[crypto][aead]") {
  Gen g(17);
  auto key = g.key();
  auto token = g.bytes(16);

  auto box = aead_seal(key, token, {});
  CHECK(box.ct.size() == 32);
  CHECK(box.serialize().size() == 44);
  CHECK(aead_open(key, box, {}) == token);

  SECTION("fresh nonce per seal") {
    auto again = aead_seal(key, token, {});
    CHECK(again.nonce != box.nonce);
    CHECK(again.ct != box.ct);
  }
  SECTION("wrong key") {
    CHECK_THROWS_MATCHES(aead_open(g.key(), box, {}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == ErrorCode::AuthFailure; }));
  }
  SECTION("AAD flip") {
    Bytes aad = {1, 2, 3};
    auto boxed = aead_seal(key, token, aad);
    aad[1] ^= 1;
    CHECK_FALSE(aead_try_open(key, boxed, aad).has_value());
  }
  SECTION("truncated ciphertext") {
    auto cut = box;
    cut.ct.resize(20);
    CHECK_FALSE(aead_try_open(key, cut, {}).has_value());
    cut.ct.resize(10);
    try {
      aead_open(key, cut, {});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::MalformedBox || e.code() == ErrorCode::AuthFailure));
    }
    CHECK_THROWS_AS(AeadBox::parse(Bytes(27)), Error);
  }
}

TEST_CASE("AEAD round trip and single-byte mutation", "[crypto][aead][property]") {
  Gen g(18);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto key = g.key();
    auto pt = g.bytes(g.below(4097));
    auto aad = g.bytes(g.below(1025));
    auto box = aead_seal(key, pt, aad);
    REQUIRE(aead_open(key, box, aad) == pt);
    // Independent route opens it too.
    REQUIRE(oracle::chacha20poly1305_open(key.view(), box.nonce, box.ct, aad) == std::optional(pt));

    switch (g.below(3)) {
      case 0: box.nonce[g.below(kNonceSize)] ^= static_cast<std::uint8_t>(1 + g.below(255)); break;
      case 1: box.ct[g.below(box.ct.size())] ^= static_cast<std::uint8_t>(1 + g.below(255)); break;
      default:
        if (aad.empty()) aad.push_back(0);
        else aad[g.below(aad.size())] ^= static_cast<std::uint8_t>(1 + g.below(255));
    }
    REQUIRE_FALSE(aead_try_open(key, box, aad).has_value());
  }
}

TEST_CASE("X25519 matches RFC 7748", "[crypto][dh]") {
  auto alice = DhKeyPair::from_private(Secret<32>::from(
      unhex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a")));
  auto bob = DhKeyPair::from_private(Secret<32>::from(
      unhex("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb")));
  CHECK(to_hex(alice.public_key) ==
        "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a");
  CHECK(to_hex(bob.public_key) ==
        "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
  const char* shared = "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742";
  CHECK(to_hex(dh_shared(alice.private_key, bob.public_key).view()) == shared);
  CHECK(to_hex(dh_shared(bob.private_key, alice.public_key).view()) == shared);

  DhPublicKey u;
  auto u_raw = unhex("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c");
  std::copy(u_raw.begin(), u_raw.end(), u.begin());
  auto scalar = Secret<32>::from(
      unhex("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4"));
  CHECK(to_hex(dh_shared(scalar, u).view()) ==
        "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552");
}

TEST_CASE("dh_derive_keypair is deterministic, clamped and label-separated", "[crypto][dh]") {
  Gen g(19);
  auto seed = g.bytes(32);
  auto a = dh_derive_keypair(seed, "dh-init");
  auto b = dh_derive_keypair(seed, "dh-init");
  auto c = dh_derive_keypair(seed, "export-keygen");
  CHECK(a.private_key == b.private_key);
  CHECK(a.public_key == b.public_key);
  CHECK_FALSE(a.private_key == c.private_key);
  CHECK(a.public_key != c.public_key);

  auto raw = a.private_key.view();
  CHECK((raw[0] & 7) == 0);
  CHECK((raw[31] & 0x80) == 0);
  CHECK((raw[31] & 0x40) == 0x40);
  CHECK(to_bytes(a.public_key) == oracle::x25519_base(raw));

  CHECK_THROWS_AS(dh_derive_keypair(g.bytes(31), "dh-init"), Error);
}

TEST_CASE("dh_shared rejects low-order peers", "[crypto][dh]") {
  Gen g(20);
  auto pair = dh_derive_keypair(g.bytes(32), "x");
  DhPublicKey zero{};
  try {
    dh_shared(pair.private_key, zero);
    FAIL("expected WeakKey");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WeakKey);
  }
  DhPublicKey one{};
  one[0] = 1;
  CHECK_THROWS_AS(dh_shared(pair.private_key, one), Error);
}

TEST_CASE("ECDH agreement for random keypairs", "[crypto][dh][property]") {
  Gen g(21);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto p1 = dh_derive_keypair(g.bytes(32), "dh-init");
    auto p2 = dh_derive_keypair(g.bytes(32), "export-keygen");
    auto s12 = dh_shared(p1.private_key, p2.public_key);
    auto s21 = dh_shared(p2.private_key, p1.public_key);
    REQUIRE(s12 == s21);
    REQUIRE(oracle::x25519(p1.private_key.view(), p2.public_key) == std::optional(to_bytes(s12.view())));
  }
}

TEST_CASE("base64 is strict and canonical", "[bytes]") {
  CHECK(to_base64(as_bytes("")) == "");
  CHECK(to_base64(as_bytes("f")) == "Zg==");
  CHECK(to_base64(as_bytes("foob")) == "Zm9vYg==");
  CHECK(from_base64("Zm9vYg==") == Bytes{'f', 'o', 'o', 'b'});
  CHECK_FALSE(from_base64("Zm9vYg=").has_value());
  CHECK_FALSE(from_base64("Zm9v Yg=").has_value());
  CHECK_FALSE(from_base64("Zm9vYh==").has_value());  // non-canonical tail bits
  CHECK_FALSE(from_base64("Zm=vYg==").has_value());
  Gen g(22);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto data = g.bytes(g.below(100));
    REQUIRE(from_base64(to_base64(data)) == data);
  }
}
