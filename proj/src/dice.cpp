#include "privlog/dice.hpp"

#include <algorithm>

#include "privlog/crypto.hpp"
#include "privlog/kv.hpp"

namespace privlog {

bool DeviceIdentity::valid_device_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) { return c >= 0x20 && c < 0x7f; });
}

DeviceIdentity DeviceIdentity::parse(std::string_view text) {
  auto doc = KvDocument::parse(text);
  DeviceIdentity id;
  auto uds = from_base64(doc.get("uds"));
  auto meas = from_base64(doc.get("measurement"));
  if (!uds || uds->size() != 32) throw Error(ErrorCode::CorruptState, "identity: bad uds");
  if (!meas || meas->size() != 32) {
    throw Error(ErrorCode::CorruptState, "identity: bad measurement");
  }
  id.uds = Secret<32>::from(*uds);
  secure_zero(uds->data(), uds->size());
  std::copy(meas->begin(), meas->end(), id.measurement.begin());
  id.device_id = doc.get("device_id");
  if (!valid_device_id(id.device_id)) {
    throw Error(ErrorCode::CorruptState, "identity: device_id must be 1-64 printable chars");
  }
  return id;
}

std::string DeviceIdentity::serialize() const {
  KvDocument doc;
  doc.set("uds", to_base64(uds.view()));
  doc.set("measurement", to_base64(measurement));
  doc.set("device_id", device_id);
  return doc.serialize();
}

CdiSecret derive_cdi(const DeviceIdentity& identity) {
  return kdf32(identity.uds.view(), identity.measurement, "dice-cdi");
}

AttestationDigest attestation_digest(std::string_view device_id, ByteView measurement) {
  Bytes msg;
  append_u16be(msg, static_cast<std::uint16_t>(device_id.size()));
  append(msg, as_bytes(device_id));
  append_u16be(msg, static_cast<std::uint16_t>(measurement.size()));
  append(msg, measurement);
  return sha256(msg);
}

AttestationDigest attestation_digest(const DeviceIdentity& identity) {
  return attestation_digest(identity.device_id, identity.measurement);
}

}  // namespace privlog
