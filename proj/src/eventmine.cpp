#include "geoevents/eventmine.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include <json.hpp>

namespace geoevents {
namespace {

struct VenueHistory {
  long total = 0;
  int active_days = 0;

  double average() const { return active_days ? static_cast<double>(total) / active_days : 0.0; }
  // count > factor * average, evaluated without dividing.
  bool exceeds(int count, double factor) const {
    return static_cast<double>(count) * active_days > factor * static_cast<double>(total);
  }
};

std::vector<VenueHistory> venue_histories(const Corpus& corpus,
                                          const std::map<VenueDay, int>& counts) {
  std::vector<VenueHistory> history(corpus.num_venues());
  for (const auto& [key, count] : counts) {
    history[key.venue.get()].total += count;
    ++history[key.venue.get()].active_days;
  }
  return history;
}

std::span<const CheckIn> checkins_on(const Corpus& corpus, Day day) {
  const auto all = corpus.checkins();
  const auto lo = std::partition_point(all.begin(), all.end(),
                                       [day](const CheckIn& c) { return c.day < day; });
  const auto hi =
      std::partition_point(lo, all.end(), [day](const CheckIn& c) { return c.day <= day; });
  return {lo, hi};
}

}  // namespace

std::map<VenueDay, int> venue_day_counts(const Corpus& corpus) {
  std::map<VenueDay, int> counts;
  for (const CheckIn& c : corpus.checkins()) ++counts[VenueDay{c.venue, c.day}];
  return counts;
}

std::vector<Anomaly> detect_anomalies(const Corpus& corpus, double threshold_factor) {
  if (!(threshold_factor > 0.0)) throw ConfigError("threshold_factor must be > 0");
  const auto counts = venue_day_counts(corpus);
  const auto history = venue_histories(corpus, counts);

  std::vector<Anomaly> out;
  for (const auto& [key, count] : counts) {
    const VenueHistory& h = history[key.venue.get()];
    if (h.exceeds(count, threshold_factor)) {
      const double avg = h.average();
      out.push_back(Anomaly{key.venue, key.day, count, avg, count - avg});
    }
  }
  std::sort(out.begin(), out.end(), [](const Anomaly& a, const Anomaly& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    if (a.day != b.day) return a.day < b.day;
    return a.venue < b.venue;
  });
  return out;
}

std::string EventRecord::make_id(const Corpus& corpus, Day day, VenueIx anchor) {
  return format_day(day) + "@" + corpus.venue(anchor).id;
}

bool EventRecord::has_attendee(UserIx u) const {
  return std::binary_search(attendees.begin(), attendees.end(), u);
}

std::vector<EventRecord> mine_events(const Corpus& corpus, const MiningParams& params) {
  if (params.top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(params.radius_m >= 0.0)) throw ConfigError("radius_m must be >= 0");

  const auto counts = venue_day_counts(corpus);
  const auto history = venue_histories(corpus, counts);
  const auto count_of = [&](VenueIx v, Day d) {
    const auto it = counts.find(VenueDay{v, d});
    return it == counts.end() ? 0 : it->second;
  };

  std::set<VenueDay> claimed;
  std::vector<EventRecord> events;
  for (const Anomaly& cand : detect_anomalies(corpus, params.threshold_factor)) {
    if (static_cast<int>(events.size()) >= params.top_k) break;
    if (claimed.contains(VenueDay{cand.venue, cand.day})) continue;

    const Venue& anchor = corpus.venue(cand.venue);
    std::vector<VenueIx> places{cand.venue};
    for (std::size_t i = 0; i < corpus.num_venues(); ++i) {
      const VenueIx v{static_cast<std::uint32_t>(i)};
      if (v == cand.venue || claimed.contains(VenueDay{v, cand.day})) continue;
      const Venue& other = corpus.venue(v);
      if (haversine_m({anchor.lat, anchor.lon}, {other.lat, other.lon}) > params.radius_m) {
        continue;
      }
      if (history[i].exceeds(count_of(v, cand.day), 1.0)) places.push_back(v);
    }
    std::sort(places.begin(), places.end());
    for (VenueIx v : places) claimed.insert(VenueDay{v, cand.day});

    EventRecord ev;
    ev.id = EventRecord::make_id(corpus, cand.day, cand.venue);
    ev.day = cand.day;
    ev.anchor = cand.venue;
    ev.anomaly_magnitude = cand.magnitude;
    std::array<int, 24> hours{};
    for (const CheckIn& c : checkins_on(corpus, cand.day)) {
      if (!std::binary_search(places.begin(), places.end(), c.venue)) continue;
      ++ev.popularity;
      ++hours[static_cast<std::size_t>(c.hour)];
      ev.attendees.push_back(c.user);
    }
    std::sort(ev.attendees.begin(), ev.attendees.end());
    ev.attendees.erase(std::unique(ev.attendees.begin(), ev.attendees.end()),
                       ev.attendees.end());
    ev.peak_hour = static_cast<int>(std::max_element(hours.begin(), hours.end()) - hours.begin());
    ev.places = std::move(places);
    events.push_back(std::move(ev));
  }
  return events;
}

void write_events_jsonl(const Corpus& corpus, std::span<const EventRecord> events,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const EventRecord& ev : events) {
    nlohmann::ordered_json j;
    j["event_id"] = ev.id;
    j["day"] = format_day(ev.day);
    j["anchor_venue"] = corpus.venue(ev.anchor).id;
    auto& places = j["places"] = nlohmann::ordered_json::array();
    for (VenueIx v : ev.places) places.push_back(corpus.venue(v).id);
    auto& attendees = j["attendees"] = nlohmann::ordered_json::array();
    for (UserIx u : ev.attendees) attendees.push_back(corpus.user_id(u));
    j["peak_hour"] = ev.peak_hour;
    j["popularity"] = ev.popularity;
    j["anomaly_magnitude"] = ev.anomaly_magnitude;
    out << j.dump() << '\n';
  }
}

std::vector<EventRecord> read_events_jsonl(const Corpus& corpus,
                                           const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<EventRecord> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      EventRecord ev;
      ev.id = j.at("event_id").get<std::string>();
      ev.day = parse_day(j.at("day").get<std::string>());
      const auto venue = [&](const std::string& id) {
        const auto v = corpus.find_venue(id);
        if (!v) throw UnknownVenueError(id, where);
        return *v;
      };
      ev.anchor = venue(j.at("anchor_venue").get<std::string>());
      for (const auto& p : j.at("places")) ev.places.push_back(venue(p.get<std::string>()));
      for (const auto& a : j.at("attendees")) {
        const auto u = corpus.find_user(a.get<std::string>());
        if (!u) throw ParseError(where + "unknown user '" + a.get<std::string>() + "'");
        ev.attendees.push_back(*u);
      }
      std::sort(ev.places.begin(), ev.places.end());
      std::sort(ev.attendees.begin(), ev.attendees.end());
      ev.attendees.erase(std::unique(ev.attendees.begin(), ev.attendees.end()),
                         ev.attendees.end());
      ev.peak_hour = j.at("peak_hour").get<int>();
      ev.popularity = j.at("popularity").get<int>();
      ev.anomaly_magnitude = j.at("anomaly_magnitude").get<double>();
      if (ev.peak_hour < 0 || ev.peak_hour > 23) throw ParseError(where + "peak_hour out of range");
      if (ev.attendees.empty()) throw ParseError(where + "event without attendees");
      events.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
  }
  return events;
}

}  // namespace geoevents
