#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"

namespace geoevents {

/// Dense vector over the corpus category vocabulary, indexed by CategoryIx.
using CategoryVector = std::vector<double>;

/// Inverse document frequency per category; categories without a visitor
/// before the cutoff are absent.
struct IdfTable {
  std::vector<std::optional<double>> values;

  std::optional<double> at(CategoryIx c) const { return values.at(c.get()); }
};

struct UserProfile {
  UserIx user;
  std::vector<std::int64_t> category_counts;  // N^c_u, indexed by CategoryIx
  CategoryVector category_vector;             // TF-IDF weights
  std::array<std::int64_t, 24> hourly_counts{};
  std::optional<VenueIx> home_venue;
  Day cutoff;

  std::int64_t total_checkins() const;
  /// Number of categories with a non-zero count.
  std::size_t distinct_categories() const;
};

struct EventProfile {
  std::string event_id;
  CategoryVector category_vector;  // herding score per category, each in [0, 1]
  std::vector<UserIx> built_from;  // sorted
};

/// idf[c] = ln(|U| / #users with a pre-cutoff check-in in c), |U| being the
/// whole corpus user set.
IdfTable compute_idf(const Corpus& corpus, Day cutoff);

/// Category counts summed over every user, check-ins before the cutoff.
std::vector<std::int64_t> category_totals_before(const Corpus& corpus, Day cutoff);

/// Profile from the user's check-ins strictly before the cutoff. The vector
/// entry for c is (N^c_u / max_j N^j_u) * idf[c]. Home is the most visited
/// venue, ties to the smallest venue id.
UserProfile build_user_profile(const Corpus& corpus, UserIx user, Day cutoff,
                               const IdfTable& idf);

/// Profiles of every corpus user at one cutoff, indexed by UserIx.
std::vector<UserProfile> build_all_user_profiles(const Corpus& corpus, Day cutoff);

/// Event category vector from the training attendees' pre-event history:
/// (share of attendees who visited c) * (attendees' check-ins at c / all
/// city check-ins at c). Categories with no city-wide pre-event check-in stay
/// zero. Throws Error on an empty training set.
EventProfile build_event_profile(const Corpus& corpus, const EventRecord& event,
                                 std::span<const UserIx> training_attendees);
/// Same, with precomputed city-wide totals for the event's cutoff day.
EventProfile build_event_profile(const Corpus& corpus, const EventRecord& event,
                                 std::span<const UserIx> training_attendees,
                                 std::span<const std::int64_t> city_totals);

/// The k highest positive entries, descending; ties by category name.
std::vector<std::pair<CategoryIx, double>> top_k_categories(const EventProfile& profile,
                                                            int k = 10);

/// Lazily built, thread-safe store of all-user profiles and city-wide
/// category totals per cutoff day. Returned references stay valid for the
/// cache's lifetime.
class ProfileCache {
 public:
  explicit ProfileCache(const Corpus& corpus) : corpus_(&corpus) {}

  const std::vector<UserProfile>& users_at(Day cutoff);
  const std::vector<std::int64_t>& city_totals_at(Day cutoff);

 private:
  struct Entry {
    std::vector<UserProfile> users;
    std::vector<std::int64_t> totals;
  };
  const Entry& entry(Day cutoff);

  const Corpus* corpus_;
  std::mutex mutex_;
  std::map<Day, std::unique_ptr<Entry>> entries_;
};

}  // namespace geoevents
