#include "privlog/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <memory>

#include "privlog/error.hpp"

namespace privlog {

namespace {

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const noexcept { Free(p); }
};

using KdfPtr = std::unique_ptr<EVP_KDF, Deleter<EVP_KDF, EVP_KDF_free>>;
using KdfCtxPtr = std::unique_ptr<EVP_KDF_CTX, Deleter<EVP_KDF_CTX, EVP_KDF_CTX_free>>;
using CipherCtxPtr =
    std::unique_ptr<EVP_CIPHER_CTX, Deleter<EVP_CIPHER_CTX, EVP_CIPHER_CTX_free>>;
using PkeyPtr = std::unique_ptr<EVP_PKEY, Deleter<EVP_PKEY, EVP_PKEY_free>>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, Deleter<EVP_PKEY_CTX, EVP_PKEY_CTX_free>>;

[[noreturn]] void crypto_fail(const char* what) {
  throw Error(ErrorCode::Crypto, std::string("openssl: ") + what);
}

// Fetched once; EVP_KDF objects are immutable and shareable across threads.
const EVP_KDF* hkdf_algorithm() {
  static const KdfPtr kdf{EVP_KDF_fetch(nullptr, "HKDF", nullptr)};
  if (!kdf) crypto_fail("HKDF unavailable");
  return kdf.get();
}

const EVP_CIPHER* chacha() {
  const EVP_CIPHER* c = EVP_chacha20_poly1305();
  if (c == nullptr) crypto_fail("chacha20-poly1305 unavailable");
  return c;
}

void clamp(std::span<std::uint8_t, 32> k) noexcept {
  k[0] &= 248;
  k[31] &= 127;
  k[31] |= 64;
}

PkeyPtr x25519_private(const Secret<kDhKeySize>& scalar) {
  PkeyPtr key{EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr,
                                           scalar.view().data(), kDhKeySize)};
  if (!key) crypto_fail("X25519 private key");
  return key;
}

}  // namespace

Bytes AeadBox::serialize() const {
  Bytes out(nonce.begin(), nonce.end());
  append(out, ct);
  return out;
}

AeadBox AeadBox::parse(ByteView wire) {
  if (wire.size() < kNonceSize + kTagSize) {
    throw Error(ErrorCode::MalformedBox, "sealed box shorter than nonce + tag");
  }
  AeadBox box;
  std::copy_n(wire.begin(), kNonceSize, box.nonce.begin());
  box.ct.assign(wire.begin() + kNonceSize, wire.end());
  return box;
}

Bytes kdf(ByteView salt, ByteView ikm, std::string_view info, std::size_t out_len) {
  if (out_len < 16 || out_len > 64) {
    throw Error(ErrorCode::InvalidLength,
                "kdf output length must be in [16, 64], got " + std::to_string(out_len));
  }
  KdfCtxPtr ctx{EVP_KDF_CTX_new(const_cast<EVP_KDF*>(hkdf_algorithm()))};
  if (!ctx) crypto_fail("HKDF context");

  // OpenSSL refuses a zero-length key param, so an empty IKM gets a dummy
  // pointer with length 0 via the octet-string constructor.
  static const unsigned char kEmpty = 0;
  auto octets = [](ByteView v) {
    return const_cast<unsigned char*>(v.empty() ? &kEmpty : v.data());
  };
  char digest[] = "SHA256";
  OSSL_PARAM params[5];
  std::size_t n = 0;
  params[n++] = OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0);
  params[n++] = OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, octets(ikm), ikm.size());
  if (!salt.empty()) {
    params[n++] =
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, octets(salt), salt.size());
  }
  params[n++] = OSSL_PARAM_construct_octet_string(
      OSSL_KDF_PARAM_INFO, const_cast<char*>(info.empty() ? "" : info.data()), info.size());
  params[n] = OSSL_PARAM_construct_end();

  Bytes out(out_len);
  if (EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) != 1) {
    crypto_fail("HKDF derive");
  }
  return out;
}

SecretKey32 kdf32(ByteView salt, ByteView ikm, std::string_view info) {
  Bytes raw = kdf(salt, ikm, info, 32);
  auto key = SecretKey32::from(raw);
  secure_zero(raw.data(), raw.size());
  return key;
}

RatchetOutput ratchet_step(const SecretKey32& chain_key) {
  Bytes x = kdf({}, chain_key.view(), "ratchet", 64);
  RatchetOutput out{SecretKey32::from(ByteView(x).first(32)),
                    SecretKey32::from(ByteView(x).subspan(32, 32))};
  secure_zero(x.data(), x.size());
  return out;
}

PseudonymToken pseudonymize(const SecretKey32& hash_key, ByteView plaintext) {
  if (plaintext.empty()) throw Error(ErrorCode::EmptyInput, "cannot pseudonymize empty input");
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int mac_len = 0;
  if (HMAC(EVP_sha256(), hash_key.view().data(), static_cast<int>(hash_key.kSize),
           plaintext.data(), plaintext.size(), mac, &mac_len) == nullptr) {
    crypto_fail("HMAC");
  }
  PseudonymToken token;
  std::copy_n(mac, kTokenSize, token.bytes.begin());
  secure_zero(mac, sizeof mac);
  return token;
}

AeadBox aead_seal(const SecretKey32& key, ByteView plaintext, ByteView aad) {
  std::array<std::uint8_t, kNonceSize> nonce;
  random_bytes(nonce);
  return aead_seal_with_nonce(key, nonce, plaintext, aad);
}

AeadBox aead_seal_with_nonce(const SecretKey32& key,
                             const std::array<std::uint8_t, kNonceSize>& nonce,
                             ByteView plaintext, ByteView aad) {
  CipherCtxPtr ctx{EVP_CIPHER_CTX_new()};
  if (!ctx) crypto_fail("cipher context");
  if (EVP_EncryptInit_ex(ctx.get(), chacha(), nullptr, key.view().data(), nonce.data()) != 1) {
    crypto_fail("seal init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    crypto_fail("seal aad");
  }
  AeadBox box;
  box.nonce = nonce;
  box.ct.resize(plaintext.size() + kTagSize);
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), box.ct.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    crypto_fail("seal update");
  }
  if (EVP_EncryptFinal_ex(ctx.get(), box.ct.data() + plaintext.size(), &len) != 1) {
    crypto_fail("seal final");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kTagSize,
                          box.ct.data() + plaintext.size()) != 1) {
    crypto_fail("seal tag");
  }
  return box;
}

std::optional<Bytes> aead_try_open(const SecretKey32& key, const AeadBox& box, ByteView aad) {
  if (box.ct.size() < kTagSize) return std::nullopt;
  const std::size_t pt_len = box.ct.size() - kTagSize;
  CipherCtxPtr ctx{EVP_CIPHER_CTX_new()};
  if (!ctx) crypto_fail("cipher context");
  if (EVP_DecryptInit_ex(ctx.get(), chacha(), nullptr, key.view().data(), box.nonce.data()) != 1) {
    crypto_fail("open init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    return std::nullopt;
  }
  Bytes pt(pt_len);
  if (pt_len > 0 &&
      EVP_DecryptUpdate(ctx.get(), pt.data(), &len, box.ct.data(), static_cast<int>(pt_len)) != 1) {
    return std::nullopt;
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kTagSize,
                          const_cast<std::uint8_t*>(box.ct.data() + pt_len)) != 1) {
    return std::nullopt;
  }
  if (EVP_DecryptFinal_ex(ctx.get(), pt.data() + pt_len, &len) != 1) {
    secure_zero(pt.data(), pt.size());
    return std::nullopt;
  }
  return pt;
}

Bytes aead_open(const SecretKey32& key, const AeadBox& box, ByteView aad) {
  if (box.ct.size() < kTagSize) {
    throw Error(ErrorCode::MalformedBox, "ciphertext shorter than tag");
  }
  auto pt = aead_try_open(key, box, aad);
  if (!pt) throw Error(ErrorCode::AuthFailure, "AEAD authentication failed");
  return std::move(*pt);
}

DhKeyPair DhKeyPair::from_private(const Secret<kDhKeySize>& scalar) {
  PkeyPtr key = x25519_private(scalar);
  DhKeyPair pair;
  pair.private_key = scalar;
  std::size_t len = kDhKeySize;
  if (EVP_PKEY_get_raw_public_key(key.get(), pair.public_key.data(), &len) != 1 ||
      len != kDhKeySize) {
    crypto_fail("X25519 public key");
  }
  return pair;
}

DhKeyPair dh_derive_keypair(ByteView seed, std::string_view label) {
  if (seed.size() != 32) {
    throw Error(ErrorCode::InvalidLength, "keypair seed must be 32 bytes");
  }
  SecretKey32 scalar = kdf32({}, seed, label);
  clamp(scalar.mutable_view());
  return DhKeyPair::from_private(scalar);
}

SecretKey32 dh_shared(const Secret<kDhKeySize>& private_key, const DhPublicKey& peer_public) {
  PkeyPtr own = x25519_private(private_key);
  PkeyPtr peer{EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                           peer_public.size())};
  if (!peer) crypto_fail("X25519 peer key");
  PkeyCtxPtr ctx{EVP_PKEY_CTX_new(own.get(), nullptr)};
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1) crypto_fail("derive init");
  if (EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1) crypto_fail("derive peer");

  std::array<std::uint8_t, 32> shared{};
  std::size_t len = shared.size();
  // OpenSSL itself fails the derive on an all-zero result (low-order peer).
  const bool ok = EVP_PKEY_derive(ctx.get(), shared.data(), &len) == 1 && len == 32;
  std::uint8_t acc = 0;
  for (auto b : shared) acc |= b;
  if (!ok || acc == 0) {
    secure_zero(shared.data(), shared.size());
    throw Error(ErrorCode::WeakKey, "X25519 produced an all-zero shared secret");
  }
  SecretKey32 out{shared};
  secure_zero(shared.data(), shared.size());
  return out;
}

std::array<std::uint8_t, 32> sha256(ByteView data) {
  std::array<std::uint8_t, 32> out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

void random_bytes(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) crypto_fail("RAND_bytes");
}

}  // namespace privlog
