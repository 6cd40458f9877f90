#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/types.hpp"

namespace testutil {

using namespace geoevents;

inline std::int64_t ts(const char* day, int hour, int minute = 0, int second = 0) {
  return static_cast<std::int64_t>(parse_day(day).value) * 86400 + hour * 3600 + minute * 60 + second;
}

// Offset in degrees of latitude for a northward distance on the sphere.
inline double north_deg(double meters) { return meters / kEarthRadiusM * 180.0 / std::acos(-1.0); }

inline Corpus make_corpus(std::vector<RawVenue> venues, std::vector<RawCheckIn> checkins,
                          std::vector<RawEdge> edges = {}, int tz = 0) {
  return Corpus::from_records(std::move(venues), std::move(checkins), std::move(edges), tz);
}

inline UserIx user(const Corpus& c, const char* id) { return *c.find_user(id); }
inline VenueIx venue(const Corpus& c, const char* id) { return *c.find_venue(id); }
inline CategoryIx category(const Corpus& c, const char* id) { return *c.find_category(id); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& name) {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() /
           ("geoevents_" + name + "_" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

// Event record over the given attendees without going through mining.
inline EventRecord make_event(const Corpus& c, const char* day, const char* anchor,
                              std::vector<UserIx> attendees, int peak = 12, int popularity = 0) {
  EventRecord e;
  e.day = parse_day(day);
  e.anchor = venue(c, anchor);
  e.id = EventRecord::make_id(c, e.day, e.anchor);
  e.places = {e.anchor};
  std::sort(attendees.begin(), attendees.end());
  e.attendees = std::move(attendees);
  e.peak_hour = peak;
  e.popularity = popularity ? popularity : static_cast<int>(e.attendees.size());
  return e;
}

}  // namespace testutil
