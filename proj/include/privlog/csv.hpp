#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace privlog::csv {

// RFC 4180 quoting when the field contains a comma, quote or line break.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Splits text into records of fields. Throws CorruptState on an
// unterminated quote.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace privlog::csv
