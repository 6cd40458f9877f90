#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geoevents {

/// Dense, corpus-local index for an interned entity. The tag keeps user,
/// venue and category indices from being mixed up.
template <typename Tag>
struct Index {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const Index&) const = default;
  constexpr std::size_t get() const noexcept { return value; }
};

using UserIx = Index<struct UserTag>;
using VenueIx = Index<struct VenueTag>;
using CategoryIx = Index<struct CategoryTag>;

/// Calendar day as a count of days since 1970-01-01.
struct Day {
  std::int32_t value = 0;

  constexpr auto operator<=>(const Day&) const = default;
  constexpr Day operator+(std::int32_t n) const noexcept { return Day{value + n}; }
  constexpr Day operator-(std::int32_t n) const noexcept { return Day{value - n}; }
};

/// Parses `YYYY-MM-DD`. Throws ParseError on malformed input.
Day parse_day(std::string_view text);
std::string format_day(Day day);

/// Parses `YYYY-MM-DDThh:mm:ssZ` into seconds since the Unix epoch.
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds);

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Raised when user-supplied parameters violate a documented precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoevents

template <typename Tag>
struct std::hash<geoevents::Index<Tag>> {
  std::size_t operator()(geoevents::Index<Tag> ix) const noexcept {
    return std::hash<std::uint32_t>{}(ix.value);
  }
};

template <>
struct std::hash<geoevents::Day> {
  std::size_t operator()(geoevents::Day d) const noexcept {
    return std::hash<std::int32_t>{}(d.value);
  }
};
