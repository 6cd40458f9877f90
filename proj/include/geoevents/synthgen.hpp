#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"

namespace geoevents {

enum class Factor { Distance, Category, Temporal, Social, Popularity, Niche };
inline constexpr std::size_t kNumFactors = 6;

std::string_view factor_name(Factor f);
Factor parse_factor(std::string_view name);  // throws ConfigError

/// Attendance weights per factor, indexed by Factor.
struct FactorMix {
  std::array<double, kNumFactors> weights{0.2, 0.2, 0.1, 0.3, 0.2, 0.0};

  double operator[](Factor f) const { return weights[static_cast<std::size_t>(f)]; }
  double& operator[](Factor f) { return weights[static_cast<std::size_t>(f)]; }
  static FactorMix only(Factor f);
  Factor dominant() const;  // largest weight, earliest factor on ties
};

struct EventGroup {
  FactorMix mix;
  int count = 0;
};

struct SynthConfig {
  int n_users = 2000;
  int n_venues = 300;
  int n_categories = 40;
  int n_days = 90;
  int n_events = 20;
  int warmup_days = 30;  // no planted event before this day
  double grid_extent_km = 10.0;
  FactorMix factor_mix;
  std::vector<EventGroup> event_groups;  // overrides factor_mix and n_events when set
  double background_rate = 0.5;          // mean check-ins per user per day
  double friendship_degree = 8.0;
  double event_size = 80.0;
  int min_event_size = 25;
  double attendance_strength = 3.0;  // logit scale of the mixed factor score
  double centrality_weight = 0.0;    // social pull of well-connected attending friends
  double category_zipf = 1.0;
  double popularity_zipf = 1.0;
  double preference_concentration = 8.0;  // Dirichlet total mass
  double niche_fraction = 0.15;           // users whose tastes favour rare categories
  double venue_decay_km = 1.5;
  std::string start_date = "2024-01-01";
  std::uint64_t seed = 0;

  /// Throws ConfigError on negative or unnormalized weights, counts < 1 or
  /// more events than (venue, day) slots after the warm-up.
  void validate() const;
  int total_events() const;
  std::vector<FactorMix> event_mixes() const;  // one per planted event

  static SynthConfig from_json(const nlohmann::json& j);  // unknown keys are ConfigErrors
  nlohmann::ordered_json to_json() const;
};

struct PlantedEvent {
  std::string venue;
  std::string date;  // YYYY-MM-DD
  int peak_hour = 0;
  std::string theme_category;
  Factor dominant = Factor::Distance;
  FactorMix mix;
  std::vector<std::string> attendees;  // sorted
};

struct SynthUser {
  std::string id;
  double home_x_km = 0.0, home_y_km = 0.0;
  int archetype = 0;  // 0 morning, 1 midday, 2 evening
  double peak_hour = 0.0;
  bool niche_taste = false;
};

struct GroundTruthEvent {
  std::string venue;
  Day day;
  Factor dominant = Factor::Distance;
  std::string theme_category;
};

struct SynthResult {
  std::vector<RawVenue> venues;
  std::vector<RawCheckIn> checkins;
  std::vector<RawEdge> edges;
  std::vector<PlantedEvent> events;
  std::vector<SynthUser> users;

  Corpus corpus() const;  // UTC
  nlohmann::ordered_json ground_truth() const;
  std::vector<GroundTruthEvent> truth() const;
};

SynthResult generate(const SynthConfig& config);

/// checkins.csv, venues.csv, social.csv and ground_truth.json.
void write_synth(const SynthResult& result, const std::filesystem::path& dir);

std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path);

/// Mined events whose (anchor, day) is a planted event, in mined order.
std::vector<EventRecord> planted_events(const Corpus& corpus, std::span<const EventRecord> mined,
                                        std::span<const GroundTruthEvent> truth);

}  // namespace geoevents
