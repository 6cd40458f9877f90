#include "geoevents/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "geoevents/geo.hpp"

namespace geoevents {

namespace {
constexpr std::pair<Feature, std::string_view> kFeatureNames[] = {
    {Feature::HomeDistance, "home_distance"},
    {Feature::CategoryScore, "category_score"},
    {Feature::TemporalDistance, "temporal_distance"},
    {Feature::Popularity, "popularity"},
    {Feature::SocialInfluence, "social_influence"},
    {Feature::RandomWalk, "random_walk"},
    {Feature::Random, "random"},
};
}  // namespace

std::string_view feature_name(Feature f) {
  for (const auto& [feature, name] : kFeatureNames) {
    if (feature == f) return name;
  }
  return "unknown";
}

Feature parse_feature(std::string_view name) {
  for (const auto& [feature, n] : kFeatureNames) {
    if (n == name) return feature;
  }
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

FeatureScore home_distance(const Corpus& corpus, const UserProfile& user,
                           const EventRecord& event) {
  FeatureScore s{Feature::HomeDistance, user.user, event.id};
  if (!user.home_venue) {
    s.raw = std::numeric_limits<double>::quiet_NaN();
    s.oriented = 0.0;
    s.missing = true;
    return s;
  }
  const Venue& home = corpus.venue(*user.home_venue);
  const Venue& anchor = corpus.venue(event.anchor);
  s.raw = haversine_m({home.lat, home.lon}, {anchor.lat, anchor.lon});
  s.oriented = 1.0 / (1.0 + s.raw / 1000.0);
  return s;
}

FeatureScore category_score(const UserProfile& user, const EventProfile& event) {
  FeatureScore s{Feature::CategoryScore, user.user, event.event_id};
  const auto& a = user.category_vector;
  const auto& b = event.category_vector;
  if (a.size() != b.size()) throw Error("category vectors over different vocabularies");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double cosine = (na > 0.0 && nb > 0.0) ? dot / (std::sqrt(na) * std::sqrt(nb)) : 0.0;
  s.raw = s.oriented = std::clamp(cosine, 0.0, 1.0);
  return s;
}

FeatureScore temporal_distance(const UserProfile& user, const EventRecord& event) {
  if (event.peak_hour < 0 || event.peak_hour > 23) throw Error("peak hour out of range");
  FeatureScore s{Feature::TemporalDistance, user.user, event.id};
  const auto peak = *std::max_element(user.hourly_counts.begin(), user.hourly_counts.end());
  if (peak == 0) {
    s.raw = std::numeric_limits<double>::quiet_NaN();
    s.oriented = -std::numeric_limits<double>::infinity();
    s.missing = true;
    return s;
  }
  double d = 0.0;
  for (int h = 0; h < 24; ++h) {
    const int gap = std::abs(h - event.peak_hour);
    d += static_cast<double>(user.hourly_counts[static_cast<std::size_t>(h)]) /
         static_cast<double>(peak) * std::min(gap, 24 - gap);
  }
  s.raw = d;
  s.oriented = -d;
  return s;
}

FeatureScore popularity(const EventRecord& event, UserIx user, PopularityMode mode) {
  FeatureScore s{Feature::Popularity, user, event.id};
  s.raw = mode == PopularityMode::CheckIns ? event.popularity
                                           : static_cast<double>(event.attendees.size());
  s.oriented = s.raw;
  return s;
}

FeatureScore social_influence(const Corpus& corpus, UserIx user, const EventRecord& event,
                              std::span<const UserIx> training_attendees, bool with_centrality) {
  FeatureScore s{Feature::SocialInfluence, user, event.id};
  const auto attends = [&](UserIx u) {
    return std::binary_search(training_attendees.begin(), training_attendees.end(), u);
  };
  int count = 0;
  int best_degree = 0;
  for (UserIx f : corpus.friends(user)) {
    if (f == user || !attends(f)) continue;
    ++count;
    if (with_centrality) {
      const auto fof = corpus.friends(f);
      const int degree = static_cast<int>(std::count_if(fof.begin(), fof.end(), attends));
      best_degree = std::max(best_degree, degree);
    }
  }
  s.raw = s.oriented = count;
  s.tie_break = best_degree;
  return s;
}

PredictionList rank_events(std::span<const FeatureScore> scores,
                           std::span<const std::string> attended) {
  PredictionList list;
  if (!scores.empty()) list.user = scores.front().user;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const FeatureScore& a = scores[i];
    const FeatureScore& b = scores[j];
    if (a.oriented != b.oriented) return a.oriented > b.oriented;
    if (a.tie_break != b.tie_break) return a.tie_break > b.tie_break;
    return a.event_id < b.event_id;
  });
  std::set<std::string_view> seen;
  for (const FeatureScore& s : scores) {
    if (!seen.insert(s.event_id).second) {
      throw Error("duplicate event id '" + s.event_id + "' in ranking input");
    }
  }
  const std::set<std::string_view> relevant(attended.begin(), attended.end());
  list.event_ids.reserve(order.size());
  list.relevance.reserve(order.size());
  for (std::size_t i : order) {
    list.event_ids.push_back(scores[i].event_id);
    list.relevance.push_back(relevant.contains(scores[i].event_id) ? 1 : 0);
  }
  return list;
}

}  // namespace geoevents
