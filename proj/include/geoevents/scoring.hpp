#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/profiles.hpp"
#include "geoevents/rwrgraph.hpp"
#include "geoevents/scorers.hpp"

namespace geoevents {

struct ScoringOptions {
  int rwr_k = 10;
  RwrParams rwr;
  PopularityMode popularity_mode = PopularityMode::CheckIns;
  bool social_centrality = true;
  std::uint64_t random_seed = 0;  // seeds the Random baseline feature
};

/// Feature scores for a set of users against every event, laid out as
/// [user row][event][feature column].
class ScoreMatrix {
 public:
  ScoreMatrix(std::vector<UserIx> users, std::vector<Feature> features, std::size_t num_events);

  std::span<const UserIx> users() const noexcept { return users_; }
  std::span<const Feature> features() const noexcept { return features_; }
  std::size_t num_events() const noexcept { return num_events_; }

  FeatureScore& at(std::size_t row, std::size_t event, std::size_t column);
  const FeatureScore& at(std::size_t row, std::size_t event, std::size_t column) const;
  /// Column of a feature, or throws Error if the matrix lacks it.
  std::size_t column(Feature f) const;
  /// All event scores of one user for one feature, in event order.
  std::vector<FeatureScore> row(std::size_t row, std::size_t column) const;

 private:
  std::vector<UserIx> users_;
  std::vector<Feature> features_;
  std::size_t num_events_;
  std::vector<FeatureScore> cells_;
};

/// Scores users against events when event-side inputs (event profiles,
/// social counts, random-walk graphs) come only from `profile_attendees`.
/// User-side inputs always use history before each event's day.
class ScoringContext {
 public:
  /// `profile_attendees[i]` must be a sorted subset of events[i].attendees.
  /// Event profiles and random walks are prepared for the requested features.
  ScoringContext(const Corpus& corpus, std::span<const EventRecord> events,
                 std::vector<std::vector<UserIx>> profile_attendees, ProfileCache& cache,
                 std::span<const Feature> features, const ScoringOptions& options);

  ScoreMatrix score(std::span<const UserIx> users) const;
  FeatureScore score(Feature f, UserIx user, std::size_t event) const;

  std::span<const Feature> features() const noexcept { return features_; }
  const EventProfile& event_profile(std::size_t event) const { return event_profiles_.at(event); }

 private:
  const Corpus* corpus_;
  std::span<const EventRecord> events_;
  std::vector<std::vector<UserIx>> profile_attendees_;
  ProfileCache* cache_;
  std::vector<Feature> features_;
  ScoringOptions options_;
  std::vector<EventProfile> event_profiles_;
  std::vector<std::vector<double>> walk_scores_;  // [event][user]
};

/// Deterministic uniform value in [0, 1) from a seed and a key triple.
double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace geoevents
