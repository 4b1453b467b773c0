#pragma once

// Independent reference implementations for tests, built on libsodium
// rather than OpenSSL so the two routes share no code.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace oracle {

using Bytes = std::vector<std::uint8_t>;
using View = std::span<const std::uint8_t>;

void init();

Bytes hex(std::string_view h);
View str(std::string_view s);

Bytes hmac_sha256(View key, View msg);
Bytes sha256(View msg);
// RFC 5869 on top of hmac_sha256.
Bytes hkdf_sha256(View salt, View ikm, View info, std::size_t len);
// Returns nullopt for an all-zero result.
std::optional<Bytes> x25519(View scalar, View point);
Bytes x25519_base(View scalar);
std::optional<Bytes> chacha20poly1305_open(View key, View nonce, View ct_and_tag, View aad);
Bytes chacha20poly1305_seal(View key, View nonce, View pt, View aad);

}  // namespace oracle
