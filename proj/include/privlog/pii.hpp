#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privlog/crypto.hpp"
#include "privlog/date.hpp"

namespace privlog {

enum class PiiType {
  Email,
  Phone,
  Imei,
  Mac,
  Ipv4,
  Ipv6,
  Url,
  Ssn,
  CreditCard,
  DeviceSerial,
};

inline constexpr std::size_t kPiiTypeCount = 10;
inline constexpr std::array<PiiType, kPiiTypeCount> kAllPiiTypes = {
    PiiType::Email, PiiType::Phone,      PiiType::Imei, PiiType::Mac,
    PiiType::Ipv4,  PiiType::Ipv6,       PiiType::Url,  PiiType::Ssn,
    PiiType::CreditCard, PiiType::DeviceSerial};

// Wire label, e.g. "EMAIL", "CREDIT_CARD".
std::string_view label(PiiType type) noexcept;
std::optional<PiiType> parse_label(std::string_view text) noexcept;

// Regex source for a type, as documented in docs/PII_PATTERNS.md.
std::string_view pattern_source(PiiType type) noexcept;

// Tie-break rank for equal-length overlapping matches; lower wins.
int priority(PiiType type) noexcept;

struct PiiSpan {
  PiiType type;
  std::size_t start;  // byte offset
  std::size_t end;    // exclusive
  std::string text;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const PiiSpan&, const PiiSpan&) = default;
};

/// Runs all ten patterns over `line` and resolves overlaps: the longest
/// match wins, then the earliest start, then priority(). Result is sorted
/// by start offset with no two spans overlapping.
std::vector<PiiSpan> detect_pii(std::string_view line);

// Leading logcat `MM-DD HH:MM:SS.mmm` (year = assumed_year) or ISO
// `YYYY-MM-DD`. Anything else yields nullopt.
std::optional<LogDate> extract_date(std::string_view line, int assumed_year);

struct ProtectedField {
  PiiType type;
  AeadBox box;
  friend bool operator==(const ProtectedField&, const ProtectedField&) = default;
};

// `<PII type="LABEL">BASE64</PII>` for one field.
std::string encode_element(const ProtectedField& field);

// Byte length of a protected element for a sealed 16-byte token.
std::size_t protected_element_length(PiiType type) noexcept;

/// Replaces each span with its element. Spans must be sorted-able,
/// non-overlapping and aligned with `fields`; otherwise InvalidSpans.
std::string encode_protected_line(std::string_view line, const std::vector<PiiSpan>& spans,
                                  const std::vector<ProtectedField>& fields);

struct ParseWarning {
  std::size_t offset;  // byte offset of the element in the input line
  std::string reason;
};

/// A protected line split into literal text and fields. `slots[i]` is the
/// byte offset in `template_text` where field i was cut out, so
/// render(encode_element) reproduces the encoded line exactly.
struct ParsedLine {
  std::string template_text;
  std::vector<ProtectedField> fields;
  std::vector<std::size_t> slots;
  std::vector<ParseWarning> warnings;

  template <typename F>
  std::string render(F&& element_for) const {
    std::string out;
    std::size_t prev = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      out.append(template_text, prev, slots[i] - prev);
      out += element_for(i, fields[i]);
      prev = slots[i];
    }
    out.append(template_text, prev, std::string::npos);
    return out;
  }
};

// Malformed elements stay in the template verbatim and are reported as
// warnings; this never throws.
ParsedLine parse_protected_line(std::string_view line);

}  // namespace privlog
