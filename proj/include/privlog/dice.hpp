#pragma once

// Simulated DICE provider. The CDI compounds the unique device secret with
// the boot measurement, so re-measuring the device implicitly rotates every
// key derived from it.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "privlog/bytes.hpp"

namespace privlog {

struct DeviceIdentity {
  Secret<32> uds;
  std::array<std::uint8_t, 32> measurement{};
  std::string device_id;

  // Printable ASCII, 1..64 chars.
  static bool valid_device_id(std::string_view id) noexcept;

  // Parses `uds=<b64>`, `measurement=<b64>`, `device_id=<string>` lines.
  // Throws CorruptState on a missing or malformed field.
  static DeviceIdentity parse(std::string_view text);
  std::string serialize() const;
};

using CdiSecret = Secret<32>;
using AttestationDigest = std::array<std::uint8_t, 32>;

CdiSecret derive_cdi(const DeviceIdentity& identity);

// SHA-256 over u16be-length-prefixed device_id and measurement.
AttestationDigest attestation_digest(const DeviceIdentity& identity);
AttestationDigest attestation_digest(std::string_view device_id,
                                     ByteView measurement);

}  // namespace privlog
