#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "geoevents/evalharness.hpp"
#include "geoevents/rng.hpp"
#include "geoevents/synthgen.hpp"
#include "helpers.hpp"

using namespace geoevents;
using namespace testutil;

namespace {

PredictionList list_with(std::vector<int> relevance) {
  PredictionList l;
  l.relevance = std::move(relevance);
  for (std::size_t i = 0; i < l.relevance.size(); ++i) l.event_ids.push_back("e" + std::to_string(i));
  return l;
}

double tau_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  // positions of each item
  std::map<int, int> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) pa[a[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < b.size(); ++i) pb[b[i]] = static_cast<int>(i);
  int conc = 0, disc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int x = a[i], y = a[j];
      ((pa[x] - pa[y]) * (pb[x] - pb[y]) > 0 ? conc : disc)++;
    }
  }
  const double m = static_cast<double>(a.size());
  return (conc - disc) / (m * (m - 1) / 2);
}

std::vector<std::string> names(const std::vector<int>& v) {
  std::vector<std::string> out;
  for (int x : v) out.push_back("c" + std::to_string(x));
  return out;
}

std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<EventRecord> synthetic_events(std::mt19937_64& rng, std::size_t n_events, std::uint32_t n_users) {
  std::vector<EventRecord> events(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    events[e].id = "e" + std::to_string(e);
    const auto size = rng() % 40;
    std::set<UserIx> s;
    for (std::size_t i = 0; i < size; ++i) s.insert(UserIx{static_cast<std::uint32_t>(rng() % n_users)});
    events[e].attendees.assign(s.begin(), s.end());
  }
  return events;
}

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_users = 300;
  cfg.n_venues = 60;
  cfg.n_categories = 12;
  cfg.n_days = 40;
  cfg.warmup_days = 10;
  cfg.n_events = 8;
  cfg.event_size = 40;
  cfg.min_event_size = 15;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("evalharness") {

TEST_CASE("fold sizes") {
  std::vector<EventRecord> events(2);
  for (std::uint32_t u = 0; u < 20; ++u) events[0].attendees.push_back(UserIx{u});
  for (std::uint32_t u = 0; u < 7; ++u) events[1].attendees.push_back(UserIx{u * 3});
  const auto folds = make_folds(events, 10, 42);
  REQUIRE(folds.size() == 10);
  int ones = 0, zeros = 0;
  for (const auto& f : folds) {
    CHECK(f.events[0].test.size() == 2);
    (f.events[1].test.size() == 1 ? ones : zeros)++;
    CHECK(f.events[1].test.size() <= 1);
  }
  CHECK(ones == 7);
  CHECK(zeros == 3);
  const auto again = make_folds(events, 10, 42);
  for (std::size_t f = 0; f < 10; ++f) {
    CHECK(again[f].events[1].test == folds[f].events[1].test);
    CHECK(again[f].test_users == folds[f].test_users);
  }
  CHECK_THROWS_AS(make_folds(events, 1, 0), ConfigError);
}

TEST_CASE("property: folds are exhaustive and disjoint on 100 configurations") {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const auto events = synthetic_events(rng, 1 + rng() % 12, 60);
    const int n = 2 + static_cast<int>(rng() % 10);
    const auto folds = make_folds(events, n, rng());
    for (std::size_t e = 0; e < events.size(); ++e) {
      std::multiset<UserIx> tested;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& f : folds) {
        const auto& s = f.events[e];
        tested.insert(s.test.begin(), s.test.end());
        lo = std::min(lo, s.test.size());
        hi = std::max(hi, s.test.size());
        std::vector<UserIx> both;
        std::set_intersection(s.test.begin(), s.test.end(), s.training.begin(), s.training.end(), std::back_inserter(both));
        CHECK(both.empty());
        std::vector<UserIx> all;
        std::set_union(s.test.begin(), s.test.end(), s.training.begin(), s.training.end(), std::back_inserter(all));
        CHECK(all == events[e].attendees);
        for (UserIx u : s.test) CHECK(std::binary_search(f.test_users.begin(), f.test_users.end(), u));
      }
      CHECK(std::vector<UserIx>(tested.begin(), tested.end()) == events[e].attendees);
      CHECK(hi - lo <= 1);
    }
    for (const auto& f : folds) {
      // profile attendees never include a test user of the fold
      const auto pa = f.profile_attendees();
      for (const auto& group : pa) {
        for (UserIx u : group) CHECK(!std::binary_search(f.test_users.begin(), f.test_users.end(), u));
      }
    }
  }
}

TEST_CASE("ndcg examples") {
  CHECK(ndcg_at(list_with({1, 0, 0})) == 1.0);
  CHECK(std::abs(ndcg_at(list_with({0, 1, 0})) - 1.0 / std::log2(3.0)) < 1e-12);
  CHECK(std::abs(ndcg_at(list_with({0, 1, 0})) - 0.6309297535714575) < 1e-12);
  std::vector<int> late(12, 0);
  late[11] = 1;
  CHECK(ndcg_at(list_with(late), 10) == 0.0);
  CHECK(ndcg_at(list_with({0, 0, 0})) == 0.0);
  // two relevant: ranks 1 and 3 -> (1 + 1/2) / (1 + 1/log2 3)
  CHECK(std::abs(ndcg_at(list_with({1, 0, 1})) - 1.5 / (1 + 1 / std::log2(3.0))) < 1e-12);
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy_at(list_with({0, 0, 1, 0, 0, 0, 0}), 5) == 1);
  CHECK(accuracy_at(list_with({0, 0, 0, 0, 0, 0, 1}), 5) == 0);
  BlockAccumulator acc("x", 3, 10, {}, 5);
  acc.add(list_with({1, 0, 0}), {});
  acc.add(list_with({0, 1, 0}), {});
  CHECK(acc.finish().accuracy_at_n[0] == 0.5);
  CHECK(pct_cutoff(5, 60) == 3);
  CHECK(pct_cutoff(5, 41) == 3);
  CHECK(pct_cutoff(10, 30) == 3);
  CHECK(pct_cutoff(1, 20) == 1);
  CHECK(pct_cutoff(100, 17) == 17);
  std::vector<int> last(17, 0);
  last[16] = 1;
  CHECK(accuracy_at_pct(list_with(last), 100) == 1);
  CHECK_THROWS_AS(accuracy_at_pct(list_with(last), 0), ConfigError);
}

TEST_CASE("property: metrics bounded, curves monotone") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<int> rel(n);
    for (auto& r : rel) r = rng() % 4 == 0;
    const auto l = list_with(rel);
    for (int k = 1; k <= 15; ++k) {
      const double v = ndcg_at(l, k);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    int prev = 0;
    for (int k = 1; k <= static_cast<int>(n); ++k) {
      CHECK(accuracy_at(l, k) >= prev);
      prev = accuracy_at(l, k);
    }
    // with one relevant item ndcg cannot drop as the cut-off grows
    std::vector<int> one(n, 0);
    one[rng() % n] = 1;
    double last = 0;
    for (int k = 1; k <= static_cast<int>(n) + 2; ++k) {
      CHECK(ndcg_at(list_with(one), k) >= last);
      last = ndcg_at(list_with(one), k);
    }
  }
  BlockAccumulator acc("x", 20, 10, {1, 5, 50, 100}, 5);
  for (int i = 0; i < 50; ++i) {
    std::vector<int> rel(20);
    for (auto& r : rel) r = rng() % 5 == 0;
    acc.add(list_with(rel), {});
  }
  const auto b = acc.finish();
  for (std::size_t i = 1; i < b.accuracy_at_n.size(); ++i) CHECK(b.accuracy_at_n[i] >= b.accuracy_at_n[i - 1]);
  for (std::size_t i = 1; i < b.accuracy_at_pct.size(); ++i) CHECK(b.accuracy_at_pct[i].second >= b.accuracy_at_pct[i - 1].second);
  CHECK(b.mean_ndcg >= 0.0);
  CHECK(b.mean_ndcg <= 1.0);
}

TEST_CASE("kendall tau examples") {
  const std::vector<std::string> a{"1", "2", "3"}, b{"1", "3", "2"}, r{"3", "2", "1"};
  CHECK(kendall_tau(a, a) == 1.0);
  CHECK(kendall_tau(a, r) == -1.0);
  CHECK(std::abs(kendall_tau(a, b) - 1.0 / 3.0) < 1e-12);
  const std::vector<std::string> other{"1", "2", "4"};
  CHECK_THROWS_AS(kendall_tau(a, other), Error);
  const std::vector<std::string> shorter{"1", "2"};
  CHECK_THROWS_AS(kendall_tau(a, shorter), Error);
}

TEST_CASE("exhaustive: kendall tau against pair enumeration, n <= 8") {
  for (int n = 2; n <= 8; ++n) {
    std::vector<int> ref(static_cast<std::size_t>(n));
    std::iota(ref.begin(), ref.end(), 0);
    std::vector<int> p = ref;
    do {
      const double got = kendall_tau(names(ref), names(p));
      REQUIRE(std::abs(got - tau_oracle(ref, p)) < 1e-12);
    } while (std::next_permutation(p.begin(), p.end()));
  }
}

TEST_CASE("exhaustive: spearman against the rank-difference formula, n <= 8") {
  for (int n = 2; n <= 8; ++n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    std::iota(x.begin(), x.end(), 0.0);
    std::vector<double> y = x;
    const double nn = n;
    do {
      double d2 = 0;
      for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
      REQUIRE(std::abs(spearman(x, y) - (1 - 6 * d2 / (nn * (nn * nn - 1)))) < 1e-12);
    } while (std::next_permutation(y.begin(), y.end()));
  }
}

TEST_CASE("property: spearman with ties matches Pearson of average ranks") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng() % 20;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 5);
    for (auto& v : y) v = static_cast<double>(rng() % 7) * 0.5;
    CHECK(average_ranks(x) == naive_ranks(x));
    const auto rx = naive_ranks(x), ry = naive_ranks(y);
    const bool flat = std::all_of(rx.begin(), rx.end(), [&](double r) { return r == rx[0]; }) ||
                      std::all_of(ry.begin(), ry.end(), [&](double r) { return r == ry[0]; });
    CHECK(std::abs(spearman(x, y) - (flat ? 0.0 : pearson(rx, ry))) < 1e-12);
  }
}

TEST_CASE("permutation test") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i);
    y.push_back(-i + (i % 3));
  }
  const auto t = spearman_test(x, y, 2000, 9);
  CHECK(t.rho < -0.9);
  CHECK(t.p_value < 0.01);
  CHECK(t.p_value >= 1.0 / 2001);
  const auto same = spearman_test(x, y, 2000, 9);
  CHECK(same.p_value == t.p_value);
  std::mt19937_64 rng(2);
  std::vector<double> noise(30);
  for (auto& v : noise) v = static_cast<double>(rng() % 1000);
  CHECK(spearman_test(x, noise, 2000, 9).p_value > 0.01);
}

TEST_CASE("niche analysis") {
  // global volume: A 30, B 20, C 10, D 5
  std::vector<RawCheckIn> ci;
  std::int64_t t = ts("2024-01-01", 9);
  for (auto [v, n] : std::vector<std::pair<const char*, int>>{{"a", 30}, {"b", 20}, {"c", 10}, {"d", 5}}) {
    for (int i = 0; i < n; ++i) ci.push_back({"u" + std::to_string(i), v, t++});
  }
  const Corpus c = make_corpus({{"a", 0, 0, "A"}, {"b", 0, 0, "B"}, {"c", 0, 0, "C"}, {"d", 0, 0, "D"}}, ci);
  std::vector<EventRecord> events;
  std::vector<EventProfile> profiles;
  const std::vector<std::vector<double>> vectors{{0.9, 0.5, 0.1, 0.05}, {0.1, 0.2, 0.3, 0.4}, {0.5, 0.0, 0.1, 0.4}, {0.9, 0.8, 0, 0}};
  std::map<std::string, double> acc;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    events.push_back(make_event(c, ("2024-02-0" + std::to_string(i + 1)).c_str(), "a", {UserIx{0}}));
    EventProfile p;
    p.event_id = events.back().id;
    p.category_vector = vectors[i];
    profiles.push_back(p);
    acc[p.event_id] = 0.1 * static_cast<double>(i);
  }
  const auto report = niche_analysis(c, events, profiles, acc, 500, 1);
  REQUIRE(report.events.size() == 4);
  CHECK(report.events[0].tau == 1.0);
  CHECK(report.events[1].tau == -1.0);
  CHECK(report.events[2].num_categories == 3);
  CHECK(std::abs(report.events[2].tau - 1.0 / 3.0) < 1e-12);  // A, D, C against A, C, D
  CHECK(report.events[3].num_categories == 2);
  CHECK(report.correlation.permutations == 500);

  acc.erase(events[1].id);
  acc.erase(events[2].id);
  CHECK_THROWS_WITH_AS(niche_analysis(c, events, profiles, acc, 100, 1), "insufficient data for correlation", Error);
}

TEST_CASE("random baseline matches a Monte-Carlo oracle") {
  const SynthResult synth = generate(small_config(5));
  const Corpus c = synth.corpus();
  const auto events = mine_events(c);
  REQUIRE(events.size() >= 8);
  ExperimentConfig cfg;
  cfg.features = {Feature::Random};
  cfg.seed = 13;
  const auto report = run_experiment(c, events, cfg);

  // same relevance structure, shuffled orderings
  const auto folds = make_folds(events, cfg.n_folds, substream_seed(cfg.seed, "folds"));
  std::map<std::size_t, std::size_t> lists_by_relevant;
  for (const auto& f : folds) {
    for (UserIx u : f.test_users) ++lists_by_relevant[attended_event_ids(events, u).size()];
  }
  std::mt19937_64 rng(99);
  double expected = 0;
  std::size_t total = 0;
  for (auto [k, count] : lists_by_relevant) {
    std::vector<int> rel(events.size(), 0);
    std::fill(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(k), 1);
    double sum = 0;
    const int shuffles = 100000;
    for (int s = 0; s < shuffles; ++s) {
      std::shuffle(rel.begin(), rel.end(), rng);
      sum += ndcg_at(list_with(rel), 10);
    }
    expected += sum / shuffles * static_cast<double>(count);
    total += count;
  }
  expected /= static_cast<double>(total);
  CHECK(report.block("random").num_lists == total);
  CHECK(std::abs(report.block("random").mean_ndcg - expected) < 0.05);
}

TEST_CASE("property: leakage, post-cutoff check-ins change nothing") {
  const SynthResult synth = generate(small_config(6));
  const Corpus base = synth.corpus();
  const auto mined = mine_events(base);
  REQUIRE(mined.size() >= 6);
  std::mt19937_64 rng(606);
  ExperimentConfig cfg;
  cfg.features = {Feature::HomeDistance, Feature::CategoryScore, Feature::TemporalDistance,
                  Feature::Popularity,   Feature::SocialInfluence, Feature::RandomWalk, Feature::Random};
  cfg.n_folds = 3;
  cfg.seed = 4;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Day> days;
    for (const auto& e : mined) days.push_back(e.day);
    std::sort(days.begin(), days.end());
    const Day cut = days[days.size() / 2 + rng() % (days.size() / 2)];
    std::vector<EventRecord> events;
    for (const auto& e : mined) {
      if (e.day <= cut) events.push_back(e);
    }
    auto checkins = synth.checkins;
    std::uniform_int_distribution<std::size_t> pick(0, synth.venues.size() - 1);
    for (auto& ci : checkins) {
      if (local_day(ci.timestamp, 0) < cut || rng() % 2) continue;
      ci.venue = synth.venues[pick(rng)].id;
      ci.timestamp += static_cast<std::int64_t>(rng() % 7200);
    }
    for (int i = 0; i < 300; ++i) {
      checkins.push_back({synth.users[rng() % synth.users.size()].id, synth.venues[pick(rng)].id,
                          static_cast<std::int64_t>(cut.value) * 86400 + static_cast<std::int64_t>(rng() % (86400 * 10))});
    }
    const Corpus moved = Corpus::from_records(synth.venues, checkins, synth.edges, 0);
    REQUIRE(moved.num_users() == base.num_users());
    REQUIRE(!(moved == base));

    ProfileCache ca(base), cb(moved);
    ScoringOptions opt;
    const auto attendees = make_folds(events, 3, 1)[0].profile_attendees();
    const ScoringContext sa(base, events, attendees, ca, cfg.features, opt);
    const ScoringContext sb(moved, events, attendees, cb, cfg.features, opt);
    std::vector<UserIx> everyone;
    for (std::uint32_t u = 0; u < base.num_users(); ++u) everyone.push_back(UserIx{u});
    const auto ma = sa.score(everyone), mb = sb.score(everyone);
    for (std::size_t r = 0; r < everyone.size(); r += 7) {
      for (std::size_t e = 0; e < events.size(); ++e) {
        for (std::size_t f = 0; f < cfg.features.size(); ++f) {
          const auto& x = ma.at(r, e, f);
          const auto& y = mb.at(r, e, f);
          CHECK((x.oriented == y.oriented || (std::isnan(x.oriented) && std::isnan(y.oriented))));
          CHECK(x.tie_break == y.tie_break);
        }
      }
    }
    if (trial < 5) {
      CHECK(to_json(run_experiment(base, events, cfg)).dump() == to_json(run_experiment(moved, events, cfg)).dump());
    }
  }
}

TEST_CASE("run_experiment outputs") {
  const SynthResult synth = generate(small_config(7));
  const Corpus c = synth.corpus();
  const auto events = mine_events(c);
  ExperimentConfig cfg;
  cfg.features = {Feature::Popularity, Feature::SocialInfluence};
  cfg.seed = 7;
  cfg.tie_break_ablation = true;
  const auto a = run_experiment(c, events, cfg);
  cfg.threads = 3;
  const auto b = run_experiment(c, events, cfg);
  CHECK(to_json(a).dump() == to_json(b).dump());
  REQUIRE(a.ablation.has_value());
  for (const auto& block : a.blocks) {
    CHECK(block.accuracy_at_n.size() == events.size());
    CHECK(block.accuracy_at_n.back() == 1.0);
    CHECK(block.mean_ndcg > 0.0);
    for (const auto& [id, v] : block.per_event_accuracy) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // each attendee is tested once per event across the folds
  std::size_t held = 0, attendees = 0;
  for (const auto& [id, n] : a.block("popularity").per_event_test_users) held += static_cast<std::size_t>(n);
  for (const auto& e : events) attendees += e.attendees.size();
  CHECK(held == attendees);

  TempDir dir("metrics");
  write_metrics_json(a, dir / "m.json");
  write_accuracy_curves_csv(a, dir / "c.csv");
  write_accuracy_pct_csv(a, dir / "p.csv");
  const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
  CHECK(j["blocks"].size() == 2);
  CHECK(slurp(dir / "c.csv").rfind("feature,n,accuracy\n", 0) == 0);
  CHECK(slurp(dir / "p.csv").rfind("feature,pct,accuracy\n", 0) == 0);
  cfg.seed = 8;
  const auto other = run_experiment(c, events, cfg);
  CHECK(to_json(other).dump() != to_json(a).dump());
}

}  // TEST_SUITE
