#include "geoevents/types.hpp"

#include <chrono>
#include <cstdio>

namespace geoevents {
namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      throw ParseError("expected digit in '" + std::string(text) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char expected) {
  if (text[pos] != expected) {
    throw ParseError("expected '" + std::string(1, expected) + "' at offset " +
                     std::to_string(pos) + " in '" + std::string(text) + "'");
  }
}

std::chrono::sys_days checked_date(std::string_view text, int y, int m, int d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(m),
                                        std::chrono::day(d)};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return std::chrono::sys_days{ymd};
}

}  // namespace

Day parse_day(std::string_view text) {
  if (text.size() != 10) throw ParseError("expected YYYY-MM-DD, got '" + std::string(text) + "'");
  expect_char(text, 4, '-');
  expect_char(text, 7, '-');
  const auto days = checked_date(text, parse_digits(text, 0, 4), parse_digits(text, 5, 2),
                                 parse_digits(text, 8, 2));
  return Day{static_cast<std::int32_t>(days.time_since_epoch().count())};
}

std::string format_day(Day day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day.value}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::int64_t parse_timestamp(std::string_view text) {
  if (text.size() != 20) {
    throw ParseError("expected YYYY-MM-DDThh:mm:ssZ, got '" + std::string(text) + "'");
  }
  expect_char(text, 4, '-');
  expect_char(text, 7, '-');
  expect_char(text, 10, 'T');
  expect_char(text, 13, ':');
  expect_char(text, 16, ':');
  expect_char(text, 19, 'Z');
  const auto days = checked_date(text, parse_digits(text, 0, 4), parse_digits(text, 5, 2),
                                 parse_digits(text, 8, 2));
  const int hh = parse_digits(text, 11, 2);
  const int mm = parse_digits(text, 14, 2);
  const int ss = parse_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 59) {
    throw ParseError("time of day out of range in '" + std::string(text) + "'");
  }
  return static_cast<std::int64_t>(days.time_since_epoch().count()) * 86400 + hh * 3600 +
         mm * 60 + ss;
}

std::string format_timestamp(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const std::string date = format_day(Day{static_cast<std::int32_t>(days)});
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", date.c_str(), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace geoevents
