#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/geo.hpp"

namespace geoevents {

struct VenueDay {
  VenueIx venue;
  Day day;

  auto operator<=>(const VenueDay&) const = default;
};

/// Check-in count per (venue, local day). Absent pairs mean zero.
std::map<VenueDay, int> venue_day_counts(const Corpus& corpus);

struct Anomaly {
  VenueIx venue;
  Day day;
  int observed = 0;
  double average = 0.0;    // mean over the venue's active days
  double magnitude = 0.0;  // observed - average
};

/// Venue-days whose count strictly exceeds threshold_factor times the venue's
/// active-day average, by descending magnitude; ties by (day, venue id).
std::vector<Anomaly> detect_anomalies(const Corpus& corpus, double threshold_factor = 2.0);

/// A mined organized event.
struct EventRecord {
  std::string id;
  Day day;
  VenueIx anchor;
  std::vector<VenueIx> places;     // sorted, contains anchor
  std::vector<UserIx> attendees;   // sorted, unique
  int peak_hour = 0;
  int popularity = 0;              // scope check-ins on the day
  double anomaly_magnitude = 0.0;

  /// Deterministic id, `YYYY-MM-DD@<anchor venue id>`.
  static std::string make_id(const Corpus& corpus, Day day, VenueIx anchor);
  bool has_attendee(UserIx u) const;
};

struct MiningParams {
  int top_k = 60;
  double radius_m = 300.0;
  double threshold_factor = 2.0;
};

/// Greedy top-k event extraction. Each candidate's scope is the anchor plus
/// every venue within radius_m whose same-day count strictly exceeds its own
/// active-day average; venue-days already claimed by a selected event are
/// neither re-anchored nor re-attached.
std::vector<EventRecord> mine_events(const Corpus& corpus, const MiningParams& params = {});

/// Writes one JSON object per line.
void write_events_jsonl(const Corpus& corpus, std::span<const EventRecord> events,
                        const std::filesystem::path& path);
std::vector<EventRecord> read_events_jsonl(const Corpus& corpus,
                                           const std::filesystem::path& path);

}  // namespace geoevents
