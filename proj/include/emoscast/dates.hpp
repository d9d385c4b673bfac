#ifndef EMOSCAST_DATES_HPP
#define EMOSCAST_DATES_HPP

// Calendar dates as std::chrono::sys_days with ISO-8601 text I/O.

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace emoscast {

using Date = std::chrono::sys_days;

inline Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok())
    throw std::invalid_argument("invalid calendar date");
  return Date{ymd};
}

inline Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = '\0';
  if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw std::invalid_argument("invalid date '" + text +
                                "' (expected YYYY-MM-DD)");
  return make_date(y, m, d);
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

} // namespace emoscast

#endif
