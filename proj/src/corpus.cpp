#include "geoevents/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "geoevents/csv.hpp"

namespace geoevents {

UnknownVenueError::UnknownVenueError(const std::string& venue_id, const std::string& where)
    : Error(where + "unknown venue '" + venue_id + "'"), venue_id_(venue_id) {}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_coordinates(double lat, double lon, const std::string& where) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw CoordinateRangeError(where + "coordinates out of range (" + csv::format_double(lat) +
                               ", " + csv::format_double(lon) + ")");
  }
}

template <typename Ix>
std::unordered_map<std::string, Ix> make_lookup(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, Ix> lookup;
  lookup.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    lookup.emplace(ids[i], Ix{static_cast<std::uint32_t>(i)});
  }
  return lookup;
}

}  // namespace

Day local_day(std::int64_t timestamp, int timezone_offset_minutes) {
  return Day{static_cast<std::int32_t>(
      floor_div(timestamp + std::int64_t{timezone_offset_minutes} * 60, 86400))};
}

int local_hour(std::int64_t timestamp, int timezone_offset_minutes) {
  const std::int64_t local = timestamp + std::int64_t{timezone_offset_minutes} * 60;
  return static_cast<int>((local - floor_div(local, 86400) * 86400) / 3600);
}

Corpus Corpus::from_records(std::vector<RawVenue> venues, std::vector<RawCheckIn> checkins,
                            std::vector<RawEdge> edges, int timezone_offset_minutes) {
  Corpus corpus;
  corpus.timezone_offset_minutes_ = timezone_offset_minutes;

  std::sort(venues.begin(), venues.end(),
            [](const RawVenue& a, const RawVenue& b) { return a.id < b.id; });
  std::set<std::string> category_set;
  for (std::size_t i = 0; i < venues.size(); ++i) {
    const RawVenue& v = venues[i];
    if (v.id.empty()) throw Error("venue with empty id");
    if (i > 0 && venues[i - 1].id == v.id) throw Error("duplicate venue id '" + v.id + "'");
    if (v.category.empty()) throw Error("venue '" + v.id + "' has an empty category");
    check_coordinates(v.lat, v.lon, "venue '" + v.id + "': ");
    category_set.insert(v.category);
  }
  corpus.categories_.assign(category_set.begin(), category_set.end());
  const auto category_lookup = make_lookup<CategoryIx>(corpus.categories_);

  std::vector<std::string> venue_ids;
  venue_ids.reserve(venues.size());
  corpus.venues_.reserve(venues.size());
  for (RawVenue& v : venues) {
    venue_ids.push_back(v.id);
    corpus.venues_.push_back(Venue{std::move(v.id), v.lat, v.lon, category_lookup.at(v.category)});
  }
  corpus.venue_lookup_ = make_lookup<VenueIx>(venue_ids);

  std::set<std::string> user_set;
  for (const RawCheckIn& c : checkins) {
    if (c.user.empty()) throw Error("check-in with empty user id");
    if (!corpus.venue_lookup_.contains(c.venue)) throw UnknownVenueError(c.venue, "");
    user_set.insert(c.user);
  }
  for (const RawEdge& e : edges) {
    if (e.a.empty() || e.b.empty()) throw Error("social edge with empty user id");
    user_set.insert(e.a);
    user_set.insert(e.b);
  }
  corpus.users_.assign(user_set.begin(), user_set.end());
  corpus.user_lookup_ = make_lookup<UserIx>(corpus.users_);

  corpus.checkins_.reserve(checkins.size());
  for (const RawCheckIn& c : checkins) {
    corpus.checkins_.push_back(CheckIn{corpus.user_lookup_.at(c.user),
                                       corpus.venue_lookup_.at(c.venue), c.timestamp,
                                       local_day(c.timestamp, timezone_offset_minutes),
                                       local_hour(c.timestamp, timezone_offset_minutes)});
  }
  const auto key = [](const CheckIn& c) { return std::tuple(c.timestamp, c.user, c.venue); };
  std::sort(corpus.checkins_.begin(), corpus.checkins_.end(),
            [&](const CheckIn& a, const CheckIn& b) { return key(a) < key(b); });
  corpus.checkins_.erase(
      std::unique(corpus.checkins_.begin(), corpus.checkins_.end(),
                  [&](const CheckIn& a, const CheckIn& b) { return key(a) == key(b); }),
      corpus.checkins_.end());

  corpus.by_user_.resize(corpus.users_.size());
  for (const CheckIn& c : corpus.checkins_) corpus.by_user_[c.user.get()].push_back(c);

  corpus.friends_.resize(corpus.users_.size());
  for (const RawEdge& e : edges) {
    const UserIx a = corpus.user_lookup_.at(e.a);
    const UserIx b = corpus.user_lookup_.at(e.b);
    if (a == b) continue;
    corpus.friends_[a.get()].push_back(b);
    corpus.friends_[b.get()].push_back(a);
  }
  for (auto& adj : corpus.friends_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  return corpus;
}

std::optional<UserIx> Corpus::find_user(std::string_view id) const {
  const auto it = user_lookup_.find(std::string(id));
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<VenueIx> Corpus::find_venue(std::string_view id) const {
  const auto it = venue_lookup_.find(std::string(id));
  if (it == venue_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<CategoryIx> Corpus::find_category(std::string_view name) const {
  const auto it = std::lower_bound(categories_.begin(), categories_.end(), name);
  if (it == categories_.end() || *it != name) return std::nullopt;
  return CategoryIx{static_cast<std::uint32_t>(it - categories_.begin())};
}

bool Corpus::are_friends(UserIx a, UserIx b) const {
  const auto& adj = friends_.at(a.get());
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::size_t Corpus::num_edges() const noexcept {
  std::size_t total = 0;
  for (const auto& adj : friends_) total += adj.size();
  return total / 2;
}

bool operator==(const Corpus& a, const Corpus& b) {
  const auto venue_eq = [](const Venue& x, const Venue& y) {
    return x.id == y.id && x.lat == y.lat && x.lon == y.lon && x.category == y.category;
  };
  return a.timezone_offset_minutes_ == b.timezone_offset_minutes_ && a.users_ == b.users_ &&
         a.categories_ == b.categories_ &&
         std::equal(a.venues_.begin(), a.venues_.end(), b.venues_.begin(), b.venues_.end(),
                    venue_eq) &&
         a.checkins_ == b.checkins_ && a.friends_ == b.friends_;
}

namespace {

struct CsvFile {
  std::ifstream in;
  std::string name;
  std::size_t line_no = 0;

  explicit CsvFile(const std::filesystem::path& path) : in(path), name(path.filename().string()) {
    if (!in) throw Error("cannot open " + path.string());
  }

  std::string where() const { return name + ":" + std::to_string(line_no) + ": "; }

  void expect_header(const std::vector<std::string>& expected) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(name + ": missing header");
    line_no = 1;
    if (csv::split_line(line) != expected) {
      std::string joined;
      for (const auto& f : expected) joined += (joined.empty() ? "" : ",") + f;
      throw ParseError(where() + "expected header '" + joined + "'");
    }
  }

  // Next non-empty record, or false at end of file.
  bool next(std::vector<std::string>& fields, std::size_t expected_fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      try {
        fields = csv::split_line(line);
      } catch (const ParseError& e) {
        throw ParseError(where() + e.what());
      }
      if (fields.size() != expected_fields) {
        throw ParseError(where() + "expected " + std::to_string(expected_fields) +
                         " fields, got " + std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }
};

}  // namespace

Corpus load_corpus(const std::filesystem::path& checkins_path,
                   const std::filesystem::path& venues_path,
                   const std::filesystem::path& social_path, int timezone_offset_minutes) {
  std::vector<RawVenue> venues;
  std::unordered_set<std::string> venue_ids;
  {
    CsvFile file(venues_path);
    file.expect_header({"venue_id", "lat", "lon", "category"});
    std::vector<std::string> f;
    while (file.next(f, 4)) {
      RawVenue v;
      v.id = f[0];
      try {
        v.lat = csv::parse_double(f[1]);
        v.lon = csv::parse_double(f[2]);
      } catch (const ParseError& e) {
        throw ParseError(file.where() + e.what());
      }
      check_coordinates(v.lat, v.lon, file.where());
      v.category = f[3];
      if (v.id.empty() || v.category.empty()) throw ParseError(file.where() + "empty field");
      if (!venue_ids.insert(v.id).second) {
        throw ParseError(file.where() + "duplicate venue id '" + v.id + "'");
      }
      venues.push_back(std::move(v));
    }
  }

  std::vector<RawCheckIn> checkins;
  {
    CsvFile file(checkins_path);
    file.expect_header({"user_id", "venue_id", "timestamp"});
    std::vector<std::string> f;
    while (file.next(f, 3)) {
      if (!venue_ids.contains(f[1])) throw UnknownVenueError(f[1], file.where());
      if (f[0].empty()) throw ParseError(file.where() + "empty user id");
      RawCheckIn c{f[0], f[1], 0};
      try {
        c.timestamp = parse_timestamp(f[2]);
      } catch (const ParseError& e) {
        throw ParseError(file.where() + e.what());
      }
      checkins.push_back(std::move(c));
    }
  }

  std::vector<RawEdge> edges;
  {
    CsvFile file(social_path);
    file.expect_header({"user_a", "user_b"});
    std::vector<std::string> f;
    while (file.next(f, 2)) {
      if (f[0].empty() || f[1].empty()) throw ParseError(file.where() + "empty user id");
      edges.push_back(RawEdge{f[0], f[1]});
    }
  }

  return Corpus::from_records(std::move(venues), std::move(checkins), std::move(edges),
                              timezone_offset_minutes);
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& checkins_path,
                  const std::filesystem::path& venues_path,
                  const std::filesystem::path& social_path) {
  {
    std::ofstream out(venues_path);
    if (!out) throw Error("cannot write " + venues_path.string());
    csv::write_row(out, {"venue_id", "lat", "lon", "category"});
    for (const Venue& v : corpus.venues()) {
      csv::write_row(out, {v.id, csv::format_double(v.lat), csv::format_double(v.lon),
                           corpus.category_name(v.category)});
    }
  }
  {
    std::ofstream out(checkins_path);
    if (!out) throw Error("cannot write " + checkins_path.string());
    csv::write_row(out, {"user_id", "venue_id", "timestamp"});
    for (const CheckIn& c : corpus.checkins()) {
      csv::write_row(out, {corpus.user_id(c.user), corpus.venue(c.venue).id,
                           format_timestamp(c.timestamp)});
    }
  }
  {
    std::ofstream out(social_path);
    if (!out) throw Error("cannot write " + social_path.string());
    csv::write_row(out, {"user_a", "user_b"});
    for (std::size_t u = 0; u < corpus.num_users(); ++u) {
      const UserIx a{static_cast<std::uint32_t>(u)};
      for (UserIx b : corpus.friends(a)) {
        if (a < b) csv::write_row(out, {corpus.user_id(a), corpus.user_id(b)});
      }
    }
  }
}

std::span<const CheckIn> checkins_before(const Corpus& corpus, UserIx user, Day cutoff) {
  if (user.get() >= corpus.num_users()) return {};
  const auto all = corpus.user_checkins(user);
  const auto end = std::partition_point(all.begin(), all.end(),
                                        [cutoff](const CheckIn& c) { return c.day < cutoff; });
  return all.first(static_cast<std::size_t>(end - all.begin()));
}

std::span<const CheckIn> checkins_before(const Corpus& corpus, std::string_view user,
                                         Day cutoff) {
  const auto ix = corpus.find_user(user);
  if (!ix) return {};
  return checkins_before(corpus, *ix, cutoff);
}

}  // namespace geoevents
