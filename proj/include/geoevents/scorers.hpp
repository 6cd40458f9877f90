#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/profiles.hpp"

namespace geoevents {

/// Participation features. `Random` is the seeded baseline used for
/// comparison; it is never part of a fusion feature set.
enum class Feature {
  HomeDistance,
  CategoryScore,
  TemporalDistance,
  Popularity,
  SocialInfluence,
  RandomWalk,
  Random,
};

std::string_view feature_name(Feature f);
/// Accepts the snake_case names produced by feature_name. Throws ConfigError.
Feature parse_feature(std::string_view name);

/// One user/event score. `oriented` is higher-is-better; ranking compares
/// (oriented, tie_break) lexicographically.
struct FeatureScore {
  Feature feature = Feature::Random;
  UserIx user;
  std::string event_id;
  double raw = 0.0;
  double oriented = 0.0;
  double tie_break = 0.0;
  bool missing = false;  // raw undefined for this user (no home, empty histogram)
};

/// raw = meters from the user's home to the anchor, oriented = 1 / (1 + km).
/// A user without home gets oriented 0 and is flagged missing.
FeatureScore home_distance(const Corpus& corpus, const UserProfile& user,
                           const EventRecord& event);

/// Cosine of the two category vectors; 0 if either is all-zero.
FeatureScore category_score(const UserProfile& user, const EventProfile& event);

/// Max-normalized hourly activity weighted by circular hour distance to the
/// event peak; oriented = -raw. An empty histogram is missing with
/// oriented = -infinity.
FeatureScore temporal_distance(const UserProfile& user, const EventRecord& event);

enum class PopularityMode { CheckIns, Attendees };

FeatureScore popularity(const EventRecord& event, UserIx user,
                        PopularityMode mode = PopularityMode::CheckIns);

/// raw = number of the user's friends among the training attendees;
/// tie_break = the largest attendee-degree among those friends.
/// `training_attendees` must be sorted.
FeatureScore social_influence(const Corpus& corpus, UserIx user, const EventRecord& event,
                              std::span<const UserIx> training_attendees,
                              bool with_centrality = true);

/// One user's ranked candidate list.
struct PredictionList {
  UserIx user;
  std::vector<std::string> event_ids;  // rank i+1 at position i
  std::vector<int> relevance;          // 1 iff the user attended

  std::size_t size() const noexcept { return event_ids.size(); }
};

/// Sorts by (oriented, tie_break) descending, then event id ascending.
/// Throws Error on a duplicate event id.
PredictionList rank_events(std::span<const FeatureScore> scores,
                           std::span<const std::string> attended = {});

}  // namespace geoevents
