#include "geoevents/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace geoevents {

std::int64_t UserProfile::total_checkins() const {
  std::int64_t total = 0;
  for (auto n : hourly_counts) total += n;
  return total;
}

std::size_t UserProfile::distinct_categories() const {
  return static_cast<std::size_t>(
      std::count_if(category_counts.begin(), category_counts.end(), [](auto n) { return n > 0; }));
}

IdfTable compute_idf(const Corpus& corpus, Day cutoff) {
  if (corpus.num_users() == 0) throw Error("cannot compute idf over an empty user set");
  const std::size_t n_cat = corpus.num_categories();
  std::vector<std::int64_t> visitors(n_cat, 0);
  std::vector<char> seen(n_cat);
  for (std::size_t u = 0; u < corpus.num_users(); ++u) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const CheckIn& c : checkins_before(corpus, UserIx{static_cast<std::uint32_t>(u)}, cutoff)) {
      const std::size_t cat = corpus.venue(c.venue).category.get();
      if (!seen[cat]) {
        seen[cat] = 1;
        ++visitors[cat];
      }
    }
  }
  IdfTable idf;
  idf.values.resize(n_cat);
  const double n_users = static_cast<double>(corpus.num_users());
  for (std::size_t c = 0; c < n_cat; ++c) {
    if (visitors[c] > 0) idf.values[c] = std::log(n_users / static_cast<double>(visitors[c]));
  }
  return idf;
}

std::vector<std::int64_t> category_totals_before(const Corpus& corpus, Day cutoff) {
  std::vector<std::int64_t> totals(corpus.num_categories(), 0);
  for (const CheckIn& c : corpus.checkins()) {
    if (c.day >= cutoff) break;  // globally sorted by timestamp
    ++totals[corpus.venue(c.venue).category.get()];
  }
  return totals;
}

UserProfile build_user_profile(const Corpus& corpus, UserIx user, Day cutoff,
                               const IdfTable& idf) {
  UserProfile p;
  p.user = user;
  p.cutoff = cutoff;
  p.category_counts.assign(corpus.num_categories(), 0);
  p.category_vector.assign(corpus.num_categories(), 0.0);

  std::map<VenueIx, std::int64_t> venue_counts;
  for (const CheckIn& c : checkins_before(corpus, user, cutoff)) {
    ++p.category_counts[corpus.venue(c.venue).category.get()];
    ++p.hourly_counts[static_cast<std::size_t>(c.hour)];
    ++venue_counts[c.venue];
  }

  // std::map iterates by ascending venue index, i.e. ascending venue id, so
  // the first maximum is the lexicographically smallest.
  std::int64_t best = 0;
  for (const auto& [v, n] : venue_counts) {
    if (n > best) {
      best = n;
      p.home_venue = v;
    }
  }

  const std::int64_t max_count =
      *std::max_element(p.category_counts.begin(), p.category_counts.end());
  if (max_count > 0) {
    for (std::size_t c = 0; c < p.category_counts.size(); ++c) {
      if (p.category_counts[c] == 0) continue;
      const auto w = idf.values.at(c);
      if (!w) throw Error("idf table lacks a category the user visited");
      p.category_vector[c] =
          static_cast<double>(p.category_counts[c]) / static_cast<double>(max_count) * *w;
    }
  }
  return p;
}

std::vector<UserProfile> build_all_user_profiles(const Corpus& corpus, Day cutoff) {
  const IdfTable idf = compute_idf(corpus, cutoff);
  std::vector<UserProfile> out;
  out.reserve(corpus.num_users());
  for (std::size_t u = 0; u < corpus.num_users(); ++u) {
    out.push_back(build_user_profile(corpus, UserIx{static_cast<std::uint32_t>(u)}, cutoff, idf));
  }
  return out;
}

EventProfile build_event_profile(const Corpus& corpus, const EventRecord& event,
                                 std::span<const UserIx> training_attendees) {
  const auto totals = category_totals_before(corpus, event.day);
  return build_event_profile(corpus, event, training_attendees, totals);
}

EventProfile build_event_profile(const Corpus& corpus, const EventRecord& event,
                                 std::span<const UserIx> training_attendees,
                                 std::span<const std::int64_t> city_totals) {
  if (training_attendees.empty()) throw Error("cannot build event profile from zero users");
  const std::size_t n_cat = corpus.num_categories();
  if (city_totals.size() != n_cat) throw Error("city totals do not match the category count");

  EventProfile p;
  p.event_id = event.id;
  p.built_from.assign(training_attendees.begin(), training_attendees.end());
  std::sort(p.built_from.begin(), p.built_from.end());
  p.built_from.erase(std::unique(p.built_from.begin(), p.built_from.end()), p.built_from.end());
  for (UserIx u : p.built_from) {
    if (!event.has_attendee(u)) {
      throw Error("training user '" + corpus.user_id(u) + "' did not attend " + event.id);
    }
  }

  std::vector<std::int64_t> visitors(n_cat, 0);
  std::vector<std::int64_t> group_counts(n_cat, 0);
  std::vector<std::int64_t> mine(n_cat);
  for (UserIx u : p.built_from) {
    std::fill(mine.begin(), mine.end(), 0);
    for (const CheckIn& c : checkins_before(corpus, u, event.day)) {
      ++mine[corpus.venue(c.venue).category.get()];
    }
    for (std::size_t c = 0; c < n_cat; ++c) {
      if (mine[c] > 0) {
        ++visitors[c];
        group_counts[c] += mine[c];
      }
    }
  }

  p.category_vector.assign(n_cat, 0.0);
  const double group_size = static_cast<double>(p.built_from.size());
  for (std::size_t c = 0; c < n_cat; ++c) {
    if (city_totals[c] == 0) continue;
    const double share = static_cast<double>(visitors[c]) / group_size;
    const double contribution =
        static_cast<double>(group_counts[c]) / static_cast<double>(city_totals[c]);
    p.category_vector[c] = share * contribution;
  }
  return p;
}

std::vector<std::pair<CategoryIx, double>> top_k_categories(const EventProfile& profile, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<std::pair<CategoryIx, double>> entries;
  for (std::size_t c = 0; c < profile.category_vector.size(); ++c) {
    if (profile.category_vector[c] > 0.0) {
      entries.emplace_back(CategoryIx{static_cast<std::uint32_t>(c)}, profile.category_vector[c]);
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > static_cast<std::size_t>(k)) entries.resize(static_cast<std::size_t>(k));
  return entries;
}

const ProfileCache::Entry& ProfileCache::entry(Day cutoff) {
  std::lock_guard lock(mutex_);
  auto& slot = entries_[cutoff];
  if (!slot) {
    slot = std::make_unique<Entry>();
    slot->users = build_all_user_profiles(*corpus_, cutoff);
    slot->totals = category_totals_before(*corpus_, cutoff);
  }
  return *slot;
}

const std::vector<UserProfile>& ProfileCache::users_at(Day cutoff) { return entry(cutoff).users; }

const std::vector<std::int64_t>& ProfileCache::city_totals_at(Day cutoff) {
  return entry(cutoff).totals;
}

}  // namespace geoevents
