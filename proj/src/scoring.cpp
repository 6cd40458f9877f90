#include "geoevents/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geoevents/rng.hpp"

namespace geoevents {

double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(a));
  h = splitmix64(h ^ splitmix64(b + 0x632BE59BD9B4E019ull));
  h = splitmix64(h ^ splitmix64(c + 0x8CB92BA72F3D8DD7ull));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ScoreMatrix::ScoreMatrix(std::vector<UserIx> users, std::vector<Feature> features,
                         std::size_t num_events)
    : users_(std::move(users)),
      features_(std::move(features)),
      num_events_(num_events),
      cells_(users_.size() * num_events_ * features_.size()) {}

FeatureScore& ScoreMatrix::at(std::size_t row, std::size_t event, std::size_t column) {
  return cells_.at((row * num_events_ + event) * features_.size() + column);
}

const FeatureScore& ScoreMatrix::at(std::size_t row, std::size_t event, std::size_t column) const {
  return cells_.at((row * num_events_ + event) * features_.size() + column);
}

std::size_t ScoreMatrix::column(Feature f) const {
  const auto it = std::find(features_.begin(), features_.end(), f);
  if (it == features_.end()) {
    throw Error("score matrix has no column for " + std::string(feature_name(f)));
  }
  return static_cast<std::size_t>(it - features_.begin());
}

std::vector<FeatureScore> ScoreMatrix::row(std::size_t row, std::size_t column) const {
  std::vector<FeatureScore> out;
  out.reserve(num_events_);
  for (std::size_t e = 0; e < num_events_; ++e) out.push_back(at(row, e, column));
  return out;
}

ScoringContext::ScoringContext(const Corpus& corpus, std::span<const EventRecord> events,
                               std::vector<std::vector<UserIx>> profile_attendees,
                               ProfileCache& cache, std::span<const Feature> features,
                               const ScoringOptions& options)
    : corpus_(&corpus),
      events_(events),
      profile_attendees_(std::move(profile_attendees)),
      cache_(&cache),
      features_(features.begin(), features.end()),
      options_(options) {
  if (profile_attendees_.size() != events_.size()) {
    throw Error("one profile attendee set per event required");
  }
  const auto wants = [&](Feature f) {
    return std::find(features_.begin(), features_.end(), f) != features_.end();
  };
  const bool need_profiles = wants(Feature::CategoryScore) || wants(Feature::RandomWalk);
  if (!need_profiles) return;

  event_profiles_.reserve(events_.size());
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const EventRecord& ev = events_[e];
    if (profile_attendees_[e].empty()) {
      // Every attendee is held out: nothing is known about the event.
      EventProfile empty;
      empty.event_id = ev.id;
      empty.category_vector.assign(corpus.num_categories(), 0.0);
      event_profiles_.push_back(std::move(empty));
    } else {
      event_profiles_.push_back(build_event_profile(corpus, ev, profile_attendees_[e],
                                                    cache.city_totals_at(ev.day)));
    }
  }

  if (!wants(Feature::RandomWalk)) return;
  walk_scores_.reserve(events_.size());
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const EventRecord& ev = events_[e];
    const auto graph = build_graph(corpus, events_.subspan(e, 1), std::span(&event_profiles_[e], 1),
                                   cache.users_at(ev.day), options_.rwr_k);
    walk_scores_.push_back(rwr(graph, 0, options_.rwr).user_scores);
  }
}

FeatureScore ScoringContext::score(Feature f, UserIx user, std::size_t e) const {
  const EventRecord& ev = events_[e];
  switch (f) {
    case Feature::HomeDistance:
      return home_distance(*corpus_, cache_->users_at(ev.day)[user.get()], ev);
    case Feature::CategoryScore: {
      FeatureScore s = category_score(cache_->users_at(ev.day)[user.get()], event_profiles_.at(e));
      return s;
    }
    case Feature::TemporalDistance:
      return temporal_distance(cache_->users_at(ev.day)[user.get()], ev);
    case Feature::Popularity:
      return popularity(ev, user, options_.popularity_mode);
    case Feature::SocialInfluence:
      return social_influence(*corpus_, user, ev, profile_attendees_[e], options_.social_centrality);
    case Feature::RandomWalk: {
      FeatureScore s{Feature::RandomWalk, user, ev.id};
      s.raw = s.oriented = walk_scores_.at(e)[user.get()];
      return s;
    }
    case Feature::Random: {
      FeatureScore s{Feature::Random, user, ev.id};
      s.raw = s.oriented = keyed_uniform(options_.random_seed, user.value, e, 0);
      return s;
    }
  }
  throw Error("unknown feature");
}

ScoreMatrix ScoringContext::score(std::span<const UserIx> users) const {
  ScoreMatrix m({users.begin(), users.end()}, features_, events_.size());
  for (std::size_t r = 0; r < users.size(); ++r) {
    for (std::size_t e = 0; e < events_.size(); ++e) {
      for (std::size_t c = 0; c < features_.size(); ++c) {
        m.at(r, e, c) = score(features_[c], users[r], e);
      }
    }
  }
  return m;
}

}  // namespace geoevents
