#include <doctest.h>

#include <cmath>
#include <random>

#include "geoevents/profiles.hpp"
#include "geoevents/scorers.hpp"
#include "helpers.hpp"

using namespace geoevents;
using namespace testutil;

namespace {

UserProfile hourly_profile(std::initializer_list<std::pair<int, std::int64_t>> counts) {
  UserProfile p;
  for (auto [h, n] : counts) p.hourly_counts[static_cast<std::size_t>(h)] = n;
  return p;
}

EventRecord peak_event(int peak) {
  EventRecord e;
  e.id = "e";
  e.peak_hour = peak;
  return e;
}

// Circular-distance oracle written out independently.
double temporal_oracle(const std::array<std::int64_t, 24>& h, int peak) {
  double mx = 0;
  for (auto x : h) mx = std::max(mx, static_cast<double>(x));
  double sum = 0;
  for (int i = 0; i < 24; ++i) {
    int d = std::abs(i - peak);
    if (24 - d < d) d = 24 - d;
    sum += static_cast<double>(h[static_cast<std::size_t>(i)]) / mx * d;
  }
  return sum;
}

}  // namespace

TEST_SUITE("scorers") {

TEST_CASE("home distance") {
  const Corpus c = make_corpus({{"home", 40, 10, "x"}, {"km", 40 + north_deg(1000), 10, "x"}},
                               {{"u", "home", ts("2024-01-01", 9)}});
  const Day cut = parse_day("2024-01-05");
  const UserProfile u = build_user_profile(c, user(c, "u"), cut, compute_idf(c, cut));
  const auto at_home = home_distance(c, u, make_event(c, "2024-01-05", "home", {}));
  CHECK(at_home.raw == 0.0);
  CHECK(at_home.oriented == 1.0);
  const auto away = home_distance(c, u, make_event(c, "2024-01-05", "km", {}));
  CHECK(away.raw == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(away.oriented == doctest::Approx(0.5).epsilon(1e-9));
  UserProfile nohome;
  const auto none = home_distance(c, nohome, make_event(c, "2024-01-05", "km", {}));
  CHECK(none.missing);
  CHECK(none.oriented == 0.0);
}

TEST_CASE("category cosine") {
  UserProfile u;
  EventProfile e;
  u.category_vector = {1, 1, 0};
  e.category_vector = {1, 1, 0};
  CHECK(category_score(u, e).oriented == doctest::Approx(1.0));
  e.category_vector = {0, 0, 3};
  CHECK(category_score(u, e).oriented == 0.0);
  e.category_vector = {1, 0, 0};
  CHECK(std::abs(category_score(u, e).raw - 1.0 / std::sqrt(2.0)) < 1e-12);
  e.category_vector = {0, 0, 0};
  CHECK(category_score(u, e).oriented == 0.0);
}

TEST_CASE("temporal distance examples") {
  CHECK(temporal_distance(hourly_profile({{14, 9}}), peak_event(14)).raw == 0.0);
  CHECK(temporal_distance(hourly_profile({{23, 4}}), peak_event(1)).raw == 2.0);
  const auto s = temporal_distance(hourly_profile({{13, 2}, {10, 1}}), peak_event(10));
  CHECK(s.raw == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.oriented == -s.raw);
  const auto empty = temporal_distance(UserProfile{}, peak_event(5));
  CHECK(empty.missing);
  CHECK(std::isinf(empty.oriented));
  CHECK(empty.oriented < 0);
}

TEST_CASE("property: temporal distance matches the oracle and ignores scaling") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    UserProfile p;
    for (auto& h : p.hourly_counts) h = static_cast<std::int64_t>(rng() % 4 == 0 ? rng() % 20 : 0);
    p.hourly_counts[rng() % 24] += 1;
    const int peak = static_cast<int>(rng() % 24);
    const double raw = temporal_distance(p, peak_event(peak)).raw;
    CHECK(std::abs(raw - temporal_oracle(p.hourly_counts, peak)) < 1e-9);
    UserProfile scaled = p;
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 7);
    for (auto& h : scaled.hourly_counts) h *= k;
    CHECK(std::abs(temporal_distance(scaled, peak_event(peak)).raw - raw) < 1e-12);
  }
}

TEST_CASE("popularity is shared by every user") {
  EventRecord a = peak_event(1), b = peak_event(1);
  a.popularity = 120;
  b.popularity = 80;
  a.attendees = {UserIx{0}, UserIx{1}};
  for (std::uint32_t u = 0; u < 5; ++u) {
    CHECK(popularity(a, UserIx{u}).oriented == 120.0);
    CHECK(popularity(a, UserIx{u}).oriented > popularity(b, UserIx{u}).oriented);
  }
  CHECK(popularity(a, UserIx{0}, PopularityMode::Attendees).raw == 2.0);
}

TEST_CASE("social influence with centrality") {
  // u - f1, u - f2, f1 - f2, f1 - x1..x4; x5 knows nobody
  std::vector<RawEdge> edges{{"u", "f1"}, {"u", "f2"}, {"f1", "f2"}};
  for (int i = 1; i <= 4; ++i) edges.push_back({"f1", "x" + std::to_string(i)});
  const Corpus c = make_corpus({{"v", 0, 0, "x"}}, {{"x5", "v", 0}}, edges);
  const auto U = [&](const char* id) { return user(c, id); };
  auto A = make_event(c, "2024-01-05", "v", {U("f1"), U("f2"), U("x1"), U("x2"), U("x3"), U("x4")});
  auto B = make_event(c, "2024-01-06", "v", {U("f1"), U("f2"), U("x5")});
  const auto sa = social_influence(c, U("u"), A, A.attendees);
  const auto sb = social_influence(c, U("u"), B, B.attendees);
  CHECK(sa.raw == 2.0);
  CHECK(sb.raw == 2.0);
  CHECK(sa.tie_break == 5.0);
  CHECK(sb.tie_break == 1.0);
  const std::vector<FeatureScore> scores{sb, sa};
  CHECK(rank_events(scores).event_ids.front() == A.id);

  const auto lone = social_influence(c, U("x5"), A, A.attendees);
  CHECK(lone.raw == 0.0);
  CHECK(lone.tie_break == 0.0);

  // f2 held out: only f1 counts
  std::vector<UserIx> training{U("f1"), U("x1"), U("x2"), U("x3"), U("x4")};
  std::sort(training.begin(), training.end());
  CHECK(social_influence(c, U("u"), A, training).raw == 1.0);
  CHECK(social_influence(c, U("u"), A, A.attendees, false).tie_break == 0.0);
  // a user is never their own friend
  CHECK(social_influence(c, U("f1"), A, A.attendees).raw == 5.0);
}

TEST_CASE("property: social influence is monotone in the attendee set") {
  std::mt19937_64 rng(31);
  std::vector<RawEdge> edges;
  for (int i = 0; i < 120; ++i) edges.push_back({"p" + std::to_string(rng() % 30), "p" + std::to_string(rng() % 30)});
  const Corpus c = make_corpus({{"v", 0, 0, "x"}}, {}, edges);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<UserIx> small, big;
    for (std::uint32_t u = 0; u < c.num_users(); ++u) {
      const auto r = rng() % 3;
      if (r == 0) small.push_back(UserIx{u});
      if (r != 2) big.push_back(UserIx{u});
    }
    EventRecord e;
    e.id = "e";
    e.attendees = big;
    for (std::uint32_t u = 0; u < c.num_users(); ++u) {
      CHECK(social_influence(c, UserIx{u}, e, small).raw <= social_influence(c, UserIx{u}, e, big).raw);
    }
  }
}

TEST_CASE("rank_events ordering rules") {
  const auto fs = [](const char* id, double o, double t = 0) {
    FeatureScore s;
    s.event_id = id;
    s.oriented = o;
    s.tie_break = t;
    return s;
  };
  std::vector<FeatureScore> a{fs("e2", 0.1), fs("e1", 0.9)};
  CHECK(rank_events(a).event_ids == std::vector<std::string>{"e1", "e2"});
  std::vector<FeatureScore> b{fs("e1", 1, 1), fs("e2", 1, 3)};
  CHECK(rank_events(b).event_ids == std::vector<std::string>{"e2", "e1"});
  std::vector<FeatureScore> c{fs("e3", 0), fs("e1", 0), fs("e2", 0)};
  const std::vector<std::string> attended{"e2"};
  const auto list = rank_events(c, attended);
  CHECK(list.event_ids == std::vector<std::string>{"e1", "e2", "e3"});
  CHECK(list.relevance == std::vector<int>{0, 1, 0});
  std::vector<FeatureScore> dup{fs("e1", 0), fs("e1", 1)};
  CHECK_THROWS_AS(rank_events(dup), Error);
  std::vector<FeatureScore> miss{fs("e1", -std::numeric_limits<double>::infinity()), fs("e2", -50)};
  CHECK(rank_events(miss).event_ids.front() == "e2");
}

TEST_CASE("property: strictly increasing transforms keep the ranking") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> x(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FeatureScore> s(15);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i].event_id = "e" + std::to_string(i);
      s[i].oriented = std::round(x(rng) * 2) / 2;  // plenty of ties
    }
    auto t = s;
    for (auto& f : t) f.oriented = std::exp(f.oriented) * 3 + 7;
    CHECK(rank_events(s).event_ids == rank_events(t).event_ids);
  }
}

TEST_CASE("feature names") {
  for (Feature f : {Feature::HomeDistance, Feature::CategoryScore, Feature::TemporalDistance, Feature::Popularity,
                    Feature::SocialInfluence, Feature::RandomWalk, Feature::Random}) {
    CHECK(parse_feature(feature_name(f)) == f);
  }
  CHECK_THROWS_AS(parse_feature("distance"), ConfigError);
}

}  // TEST_SUITE
