#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace privlog {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_chars(ByteView b) noexcept {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

// Overwrites memory in a way the optimizer may not elide.
void secure_zero(void* p, std::size_t n) noexcept;

/// Fixed-size secret byte string. Wiped on destruction and on move-from.
/// Deliberately has no stream operator so it cannot end up in logs.
template <std::size_t N>
class Secret {
 public:
  static constexpr std::size_t kSize = N;

  Secret() noexcept { bytes_.fill(0); }
  explicit Secret(const std::array<std::uint8_t, N>& raw) noexcept : bytes_(raw) {}
  Secret(const Secret&) = default;
  Secret& operator=(const Secret&) = default;
  Secret(Secret&& other) noexcept : bytes_(other.bytes_) { other.wipe(); }
  Secret& operator=(Secret&& other) noexcept {
    if (this != &other) {
      bytes_ = other.bytes_;
      other.wipe();
    }
    return *this;
  }
  ~Secret() { wipe(); }

  // Throws InvalidLength unless raw.size() == N.
  static Secret from(ByteView raw);

  ByteView view() const noexcept { return bytes_; }
  std::span<std::uint8_t, N> mutable_view() noexcept { return bytes_; }
  const std::array<std::uint8_t, N>& raw() const noexcept { return bytes_; }

  friend bool operator==(const Secret& a, const Secret& b) noexcept {
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < N; ++i) diff |= a.bytes_[i] ^ b.bytes_[i];
    return diff == 0;
  }

 private:
  void wipe() noexcept { secure_zero(bytes_.data(), N); }
  std::array<std::uint8_t, N> bytes_;
};

using SecretKey32 = Secret<32>;

std::string to_base64(ByteView data);
// Strict standard-alphabet, padded decoding. nullopt on any defect.
std::optional<Bytes> from_base64(std::string_view text);

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view text);

void append(Bytes& out, ByteView more);
void append_u16be(Bytes& out, std::uint16_t v);

}  // namespace privlog

#include "privlog/detail/secret_impl.hpp"
