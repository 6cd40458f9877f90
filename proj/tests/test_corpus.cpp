#include <doctest.h>

#include <random>

#include "geoevents/corpus.hpp"
#include "geoevents/geo.hpp"
#include "helpers.hpp"

using namespace geoevents;
using namespace testutil;

namespace {

void write_small_files(const TempDir& dir) {
  spit(dir / "venues.csv", "venue_id,lat,lon,category\nv1,51.5,-0.1,Bar\nv2,51.51,-0.12,Gym\n");
  spit(dir / "checkins.csv",
       "user_id,venue_id,timestamp\n"
       "a,v1,2024-01-01T10:00:00Z\n"
       "b,v2,2024-01-01T11:30:00Z\n"
       "a,v2,2024-01-02T09:15:00Z\n");
  spit(dir / "social.csv", "user_a,user_b\na,b\n");
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("loads well-formed files") {
  TempDir dir("corpus_load");
  write_small_files(dir);
  const Corpus c = load_corpus(dir / "checkins.csv", dir / "venues.csv", dir / "social.csv", 0);
  CHECK(c.num_users() == 2);
  CHECK(c.num_venues() == 2);
  CHECK(c.checkins().size() == 3);
  CHECK(c.num_categories() == 2);
}

TEST_CASE("single edge is stored in both directions") {
  TempDir dir("corpus_sym");
  write_small_files(dir);
  const Corpus c = load_corpus(dir / "checkins.csv", dir / "venues.csv", dir / "social.csv", 0);
  const UserIx a = user(c, "a"), b = user(c, "b");
  CHECK(c.are_friends(a, b));
  CHECK(c.are_friends(b, a));
  REQUIRE(c.friends(a).size() == 1);
  CHECK(c.friends(a)[0] == b);
  CHECK(c.num_edges() == 1);
}

TEST_CASE("self loops dropped, duplicates collapsed") {
  const Corpus c = make_corpus({{"v1", 0, 0, "Bar"}},
                               {{"a", "v1", 100}, {"a", "v1", 100}, {"a", "v1", 101}},
                               {{"a", "a"}, {"a", "b"}, {"b", "a"}});
  CHECK(c.checkins().size() == 2);
  CHECK(c.friends(user(c, "a")).size() == 1);
  CHECK(c.num_users() == 2);  // b appears only in the social file
}

TEST_CASE("unknown venue names the venue") {
  TempDir dir("corpus_unknown");
  write_small_files(dir);
  spit(dir / "checkins.csv", "user_id,venue_id,timestamp\na,vX,2024-01-01T10:00:00Z\n");
  try {
    load_corpus(dir / "checkins.csv", dir / "venues.csv", dir / "social.csv", 0);
    FAIL("expected UnknownVenueError");
  } catch (const UnknownVenueError& e) {
    CHECK(e.venue_id() == "vX");
    CHECK(std::string(e.what()).find("vX") != std::string::npos);
  }
}

TEST_CASE("parse errors carry the line number") {
  TempDir dir("corpus_parse");
  write_small_files(dir);
  spit(dir / "checkins.csv", "user_id,venue_id,timestamp\na,v1,2024-01-01T10:00:00Z\nb,v1,yesterday\n");
  try {
    load_corpus(dir / "checkins.csv", dir / "venues.csv", dir / "social.csv", 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  spit(dir / "checkins.csv", "user,venue,time\n");
  CHECK_THROWS_AS(load_corpus(dir / "checkins.csv", dir / "venues.csv", dir / "social.csv", 0), ParseError);
}

TEST_CASE("coordinates out of range") {
  CHECK_THROWS_AS(make_corpus({{"v1", 91.0, 0, "Bar"}}, {}), CoordinateRangeError);
  CHECK_THROWS_AS(make_corpus({{"v1", 0, -180.5, "Bar"}}, {}), CoordinateRangeError);
  CHECK_NOTHROW(make_corpus({{"v1", -90, 180, "Bar"}}, {}));
}

TEST_CASE("checkins_before uses a strict cutoff") {
  const Corpus c = make_corpus({{"v1", 0, 0, "Bar"}},
                               {{"a", "v1", ts("2024-03-08", 9)},
                                {"a", "v1", ts("2024-03-09", 23, 59, 59)},
                                {"a", "v1", ts("2024-03-10", 0)},
                                {"b", "v1", ts("2024-03-10", 5)}},
                               {{"c", "b"}});
  const Day d = parse_day("2024-03-10");
  const auto before = checkins_before(c, "a", d);
  REQUIRE(before.size() == 2);
  CHECK(before[0].timestamp < before[1].timestamp);
  CHECK(checkins_before(c, "c", d).empty());
  CHECK(checkins_before(c, "b", d).empty());
  CHECK(checkins_before(c, "nobody", d).empty());
}

TEST_CASE("local day and hour follow the offset") {
  CHECK(local_hour(ts("2024-01-01", 23, 30), 60) == 0);
  CHECK(local_day(ts("2024-01-01", 23, 30), 60) == parse_day("2024-01-02"));
  CHECK(local_day(ts("2024-01-01", 0, 30), -60) == parse_day("2023-12-31"));
  CHECK(local_hour(ts("2024-01-01", 0, 30), -60) == 23);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> t(-2'000'000'000, 4'000'000'000);
  std::uniform_int_distribution<int> off(-12 * 60, 14 * 60);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t x = t(rng);
    const int o = off(rng);
    std::int64_t m = (x + o * 60) % 86400;
    if (m < 0) m += 86400;
    CHECK(local_hour(x, o) == m / 3600);
    const std::int64_t shifted = x + o * 60;
    const std::int64_t day = shifted >= 0 ? shifted / 86400 : -((-shifted + 86399) / 86400);
    CHECK(local_day(x, o).value == day);
  }
}

TEST_CASE("timestamp parsing round trips") {
  CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_timestamp("2000-03-01T00:00:00Z") == 951868800);
  CHECK(format_timestamp(951868800) == "2000-03-01T00:00:00Z");
  CHECK(format_day(parse_day("2024-02-29")) == "2024-02-29");
  CHECK_THROWS_AS(parse_day("2023-02-29"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2024-01-01 10:00:00"), ParseError);
}

TEST_CASE("property: write then reload gives an identical corpus") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<RawVenue> venues;
    for (int v = 0; v < 12; ++v) {
      std::uniform_real_distribution<double> lat(-89, 89), lon(-179, 179);
      venues.push_back({"v" + std::to_string(v), lat(rng), lon(rng), "cat, \"" + std::to_string(v % 4) + "\""});
    }
    std::vector<RawCheckIn> checkins;
    std::vector<RawEdge> edges;
    std::uniform_int_distribution<int> u(0, 19), v(0, 11);
    std::uniform_int_distribution<std::int64_t> t(1'600'000'000, 1'610'000'000);
    for (int i = 0; i < 200; ++i) checkins.push_back({"u" + std::to_string(u(rng)), "v" + std::to_string(v(rng)), t(rng)});
    for (int i = 0; i < 30; ++i) edges.push_back({"u" + std::to_string(u(rng)), "w" + std::to_string(u(rng))});
    const int tz = static_cast<int>(rng() % 600) - 300;
    const Corpus c = make_corpus(venues, checkins, edges, tz);
    TempDir dir("roundtrip");
    write_corpus(c, dir / "c.csv", dir / "v.csv", dir / "s.csv");
    const Corpus back = load_corpus(dir / "c.csv", dir / "v.csv", dir / "s.csv", tz);
    CHECK(back == c);
  }
}

TEST_CASE("property: checkins_before partitions each history") {
  std::mt19937_64 rng(9);
  std::vector<RawCheckIn> checkins;
  std::uniform_int_distribution<std::int64_t> t(ts("2024-01-01", 0), ts("2024-02-01", 0));
  for (int i = 0; i < 500; ++i) checkins.push_back({"u" + std::to_string(i % 7), "v", t(rng)});
  const Corpus c = make_corpus({{"v", 1, 1, "x"}}, checkins, {}, 90);
  for (std::size_t u = 0; u < c.num_users(); ++u) {
    const UserIx ux{static_cast<std::uint32_t>(u)};
    const auto all = c.user_checkins(ux);
    for (int d = 0; d < 40; ++d) {
      const Day cut = parse_day("2023-12-30") + d;
      const auto before = checkins_before(c, ux, cut);
      std::size_t after = 0;
      for (const auto& ci : all) after += ci.day >= cut;
      CHECK(before.size() + after == all.size());
      for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i] == all[i]);
        CHECK(before[i].day < cut);
      }
    }
  }
}

TEST_CASE("haversine examples") {
  CHECK(haversine_m({51.5, -0.1}, {51.5, -0.1}) == 0.0);
  CHECK(std::abs(haversine_m({0, 0}, {0, 180}) - std::acos(-1.0) * 6371000.0) < 1e-6);
  CHECK(std::abs(haversine_m({0, 0}, {0, 180}) - 20015086.8) < 1.0);
  CHECK(std::abs(haversine_m({51.5074, -0.1278}, {40.7128, -74.0060}) - 5570000.0) < 5000.0);
}

TEST_CASE("property: haversine agrees with the chord-angle formula") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-89.9, 89.9), lon(-180, 180);
  const double rad = std::acos(-1.0) / 180.0;
  for (int i = 0; i < 1000; ++i) {
    const LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    const auto xyz = [&](LatLon p) {
      return std::array<double, 3>{std::cos(p.lat * rad) * std::cos(p.lon * rad),
                                   std::cos(p.lat * rad) * std::sin(p.lon * rad), std::sin(p.lat * rad)};
    };
    const auto pa = xyz(a), pb = xyz(b);
    const double chord = std::sqrt((pa[0] - pb[0]) * (pa[0] - pb[0]) + (pa[1] - pb[1]) * (pa[1] - pb[1]) +
                                   (pa[2] - pb[2]) * (pa[2] - pb[2]));
    const double oracle = 2.0 * std::asin(std::min(1.0, chord / 2.0)) * kEarthRadiusM;
    CHECK(haversine_m(a, b) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(haversine_m(a, b) == haversine_m(b, a));
  }
}

}  // TEST_SUITE
