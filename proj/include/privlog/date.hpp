#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace privlog {

/// Calendar day used to index daily keys. Always a valid Gregorian date.
class LogDate {
 public:
  // Throws InvalidArgument for impossible dates (e.g. 2023-02-30).
  LogDate(int year, unsigned month, unsigned day);

  static LogDate from_days(std::chrono::sys_days d);
  static std::optional<LogDate> parse_iso(std::string_view text);
  static LogDate today_utc();

  int year() const noexcept { return year_; }
  unsigned month() const noexcept { return month_; }
  unsigned day() const noexcept { return day_; }

  std::chrono::sys_days as_days() const noexcept;
  LogDate plus_days(int n) const;
  LogDate next() const { return plus_days(1); }

  // "YYYY-MM-DD", always 10 characters for years 1000..9999.
  std::string iso() const;

  friend auto operator<=>(const LogDate&, const LogDate&) = default;

 private:
  int year_;
  unsigned month_;
  unsigned day_;
};

// Signed number of days from `from` to `to`.
int days_between(const LogDate& from, const LogDate& to) noexcept;

}  // namespace privlog
