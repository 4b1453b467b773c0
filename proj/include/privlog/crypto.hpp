#pragma once

// Primitives and key schedule shared by the device and the forensic server.
//
//   kdf            HKDF-SHA256, first secret = salt, second = IKM
//   ratchet_step   ck -> (ck', mk) via kdf(ck, "ratchet", 64)
//   pseudonymize   HMAC-SHA256 truncated to 16 bytes
//   aead_seal/open ChaCha20-Poly1305 (IETF), 12-byte random nonce
//   dh_*           X25519
//
// Everything here is stateless and thread-safe.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "privlog/bytes.hpp"

namespace privlog {

inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kTokenSize = 16;
inline constexpr std::size_t kDhKeySize = 32;

struct PseudonymToken {
  std::array<std::uint8_t, kTokenSize> bytes{};

  ByteView view() const noexcept { return bytes; }
  friend auto operator<=>(const PseudonymToken&, const PseudonymToken&) = default;
};

struct AeadBox {
  std::array<std::uint8_t, kNonceSize> nonce{};
  Bytes ct;  // ciphertext followed by the 16-byte tag

  // nonce || ct, the layout embedded in protected log lines.
  Bytes serialize() const;
  // Throws MalformedBox if shorter than nonce + tag.
  static AeadBox parse(ByteView wire);

  friend bool operator==(const AeadBox&, const AeadBox&) = default;
};

using DhPublicKey = std::array<std::uint8_t, kDhKeySize>;

struct DhKeyPair {
  Secret<kDhKeySize> private_key;  // clamped scalar
  DhPublicKey public_key{};

  // Recomputes the public point from a stored scalar.
  static DhKeyPair from_private(const Secret<kDhKeySize>& scalar);
};

/// HKDF-SHA256. `salt` empty means the RFC 5869 default (zeros).
/// Throws InvalidLength unless 16 <= out_len <= 64.
Bytes kdf(ByteView salt, ByteView ikm, std::string_view info, std::size_t out_len);

// Common form: 32-byte output wrapped as a key.
SecretKey32 kdf32(ByteView salt, ByteView ikm, std::string_view info);

struct RatchetOutput {
  SecretKey32 next_chain_key;
  SecretKey32 message_key;
};

RatchetOutput ratchet_step(const SecretKey32& chain_key);

/// Throws EmptyInput for an empty plaintext.
PseudonymToken pseudonymize(const SecretKey32& hash_key, ByteView plaintext);

AeadBox aead_seal(const SecretKey32& key, ByteView plaintext, ByteView aad);
// Same as aead_seal with a caller-chosen nonce. Test vectors only.
AeadBox aead_seal_with_nonce(const SecretKey32& key,
                             const std::array<std::uint8_t, kNonceSize>& nonce,
                             ByteView plaintext, ByteView aad);

/// Throws AuthFailure when key, nonce, ciphertext or AAD do not match.
Bytes aead_open(const SecretKey32& key, const AeadBox& box, ByteView aad);

// nullopt instead of throwing; for bulk trial decryption.
std::optional<Bytes> aead_try_open(const SecretKey32& key, const AeadBox& box,
                                   ByteView aad);

DhKeyPair dh_derive_keypair(ByteView seed, std::string_view label);

/// Raw X25519. Throws WeakKey when the result is all zeros.
SecretKey32 dh_shared(const Secret<kDhKeySize>& private_key,
                      const DhPublicKey& peer_public);

std::array<std::uint8_t, 32> sha256(ByteView data);

void random_bytes(std::span<std::uint8_t> out);

}  // namespace privlog
