#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoevents/types.hpp"

namespace geoevents {

struct Venue {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  CategoryIx category;
};

struct CheckIn {
  UserIx user;
  VenueIx venue;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  Day day;                     // local calendar day
  int hour = 0;                // local hour, 0..23

  friend bool operator==(const CheckIn&, const CheckIn&) = default;
};

// Unvalidated records as they appear in the input files.
struct RawVenue {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::string category;
};

struct RawCheckIn {
  std::string user;
  std::string venue;
  std::int64_t timestamp = 0;
};

struct RawEdge {
  std::string a;
  std::string b;
};

class UnknownVenueError : public Error {
 public:
  UnknownVenueError(const std::string& venue_id, const std::string& where);
  const std::string& venue_id() const noexcept { return venue_id_; }

 private:
  std::string venue_id_;
};

class CoordinateRangeError : public Error {
 public:
  using Error::Error;
};

/// Local calendar day of a UTC instant under a fixed offset.
Day local_day(std::int64_t timestamp, int timezone_offset_minutes);
/// Local hour of day (0..23) of a UTC instant under a fixed offset.
int local_hour(std::int64_t timestamp, int timezone_offset_minutes);

/// Immutable, validated check-in corpus.
///
/// Users, venues and categories are interned into dense indices ordered by
/// their string ids, so index order equals lexicographic id order. Check-ins
/// are held twice: globally sorted by (timestamp, user, venue) and grouped per
/// user in timestamp order.
class Corpus {
 public:
  /// Validates and indexes raw records. Duplicate (user, venue, timestamp)
  /// triples are collapsed, social edges symmetrized and self-loops dropped.
  static Corpus from_records(std::vector<RawVenue> venues,
                             std::vector<RawCheckIn> checkins,
                             std::vector<RawEdge> edges,
                             int timezone_offset_minutes);

  std::span<const Venue> venues() const noexcept { return venues_; }
  std::span<const CheckIn> checkins() const noexcept { return checkins_; }
  std::span<const std::string> users() const noexcept { return users_; }
  std::span<const std::string> categories() const noexcept { return categories_; }

  std::size_t num_users() const noexcept { return users_.size(); }
  std::size_t num_venues() const noexcept { return venues_.size(); }
  std::size_t num_categories() const noexcept { return categories_.size(); }
  int timezone_offset_minutes() const noexcept { return timezone_offset_minutes_; }

  const Venue& venue(VenueIx v) const { return venues_.at(v.get()); }
  const std::string& user_id(UserIx u) const { return users_.at(u.get()); }
  const std::string& category_name(CategoryIx c) const { return categories_.at(c.get()); }

  std::optional<UserIx> find_user(std::string_view id) const;
  std::optional<VenueIx> find_venue(std::string_view id) const;
  std::optional<CategoryIx> find_category(std::string_view name) const;

  /// All check-ins of a user in timestamp order.
  std::span<const CheckIn> user_checkins(UserIx u) const { return by_user_.at(u.get()); }
  /// Sorted friend list (symmetric, no self-loops).
  std::span<const UserIx> friends(UserIx u) const { return friends_.at(u.get()); }
  bool are_friends(UserIx a, UserIx b) const;
  std::size_t num_edges() const noexcept;

  friend bool operator==(const Corpus&, const Corpus&);

 private:
  std::vector<Venue> venues_;
  std::vector<CheckIn> checkins_;
  std::vector<std::string> users_;
  std::vector<std::string> categories_;
  std::vector<std::vector<CheckIn>> by_user_;
  std::vector<std::vector<UserIx>> friends_;
  std::unordered_map<std::string, UserIx> user_lookup_;
  std::unordered_map<std::string, VenueIx> venue_lookup_;
  int timezone_offset_minutes_ = 0;
};

/// Reads the three CSV files. Errors carry the file name and line number.
Corpus load_corpus(const std::filesystem::path& checkins_path,
                   const std::filesystem::path& venues_path,
                   const std::filesystem::path& social_path,
                   int timezone_offset_minutes);

/// Writes the corpus back in the input formats; reloading yields an equal
/// corpus.
void write_corpus(const Corpus& corpus,
                  const std::filesystem::path& checkins_path,
                  const std::filesystem::path& venues_path,
                  const std::filesystem::path& social_path);

/// The user's check-ins with local_day < cutoff, in timestamp order. An
/// unknown user yields an empty span.
std::span<const CheckIn> checkins_before(const Corpus& corpus, UserIx user, Day cutoff);
std::span<const CheckIn> checkins_before(const Corpus& corpus, std::string_view user, Day cutoff);

}  // namespace geoevents
