#include "privlog/date.hpp"

#include <cstdio>

#include "privlog/error.hpp"

namespace privlog {

namespace chr = std::chrono;

LogDate::LogDate(int y, unsigned m, unsigned d) : year_(y), month_(m), day_(d) {
  chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (y < 1 || y > 9999 || !ymd.ok()) {
    throw Error(ErrorCode::InvalidArgument,
                "invalid calendar date " + std::to_string(y) + "-" +
                    std::to_string(m) + "-" + std::to_string(d));
  }
}

LogDate LogDate::from_days(chr::sys_days d) {
  chr::year_month_day ymd{d};
  return LogDate(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                 static_cast<unsigned>(ymd.day()));
}

std::optional<LogDate> LogDate::parse_iso(std::string_view t) {
  if (t.size() != 10 || t[4] != '-' || t[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    out = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (t[i] < '0' || t[i] > '9') return false;
      out = out * 10 + (t[i] - '0');
    }
    return true;
  };
  int y, m, d;
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
  chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                     chr::day{static_cast<unsigned>(d)}};
  if (y < 1 || !ymd.ok()) return std::nullopt;
  return LogDate(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

LogDate LogDate::today_utc() {
  return from_days(chr::floor<chr::days>(chr::system_clock::now()));
}

chr::sys_days LogDate::as_days() const noexcept {
  return chr::sys_days{chr::year_month_day{chr::year{year_}, chr::month{month_}, chr::day{day_}}};
}

LogDate LogDate::plus_days(int n) const { return from_days(as_days() + chr::days{n}); }

std::string LogDate::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
  return buf;
}

int days_between(const LogDate& from, const LogDate& to) noexcept {
  return static_cast<int>((to.as_days() - from.as_days()).count());
}

}  // namespace privlog
