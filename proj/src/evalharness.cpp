#include "geoevents/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "geoevents/csv.hpp"
#include "geoevents/rng.hpp"

namespace geoevents {

namespace {

std::vector<UserIx> set_difference(std::span<const UserIx> a, std::span<const UserIx> b) {
  std::vector<UserIx> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

int first_relevant_rank(const PredictionList& list) {
  for (std::size_t i = 0; i < list.relevance.size(); ++i) {
    if (list.relevance[i] != 0) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace

std::vector<std::vector<UserIx>> FoldPlan::profile_attendees() const {
  std::vector<std::vector<UserIx>> out;
  out.reserve(events.size());
  for (const EventSplit& s : events) out.push_back(set_difference(s.training, test_users));
  return out;
}

std::vector<std::size_t> FoldPlan::test_events_of(UserIx u) const {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (std::binary_search(events[e].test.begin(), events[e].test.end(), u)) out.push_back(e);
  }
  return out;
}

std::vector<FoldPlan> make_folds(std::span<const EventRecord> events, int n_folds,
                                 std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  std::vector<FoldPlan> folds(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    folds[static_cast<std::size_t>(f)].fold_index = f;
    folds[static_cast<std::size_t>(f)].events.resize(events.size());
  }
  Rng rng(seed);
  for (std::size_t e = 0; e < events.size(); ++e) {
    std::vector<UserIx> shuffled = events[e].attendees;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    // A random starting block keeps the remainder from always landing in fold 0.
    const auto offset = std::uniform_int_distribution<int>(0, n_folds - 1)(rng);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      const auto f = (static_cast<int>(i % static_cast<std::size_t>(n_folds)) + offset) % n_folds;
      folds[static_cast<std::size_t>(f)].events[e].test.push_back(shuffled[i]);
    }
    for (FoldPlan& fold : folds) {
      EventSplit& split = fold.events[e];
      std::sort(split.test.begin(), split.test.end());
      split.training = set_difference(events[e].attendees, split.test);
    }
  }
  for (FoldPlan& fold : folds) {
    for (const EventSplit& s : fold.events) {
      fold.test_users.insert(fold.test_users.end(), s.test.begin(), s.test.end());
    }
    std::sort(fold.test_users.begin(), fold.test_users.end());
    fold.test_users.erase(std::unique(fold.test_users.begin(), fold.test_users.end()),
                          fold.test_users.end());
  }
  return folds;
}

double ndcg_at(const PredictionList& list, int n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  const std::size_t limit = std::min(list.relevance.size(), static_cast<std::size_t>(n));
  double dcg = 0.0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (list.relevance[i] != 0) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  const auto relevant = static_cast<std::size_t>(
      std::count_if(list.relevance.begin(), list.relevance.end(), [](int r) { return r != 0; }));
  if (relevant == 0) return 0.0;
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(relevant, static_cast<std::size_t>(n)); ++i) {
    ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

int accuracy_at(const PredictionList& list, int n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  const int r = first_relevant_rank(list);
  return r != 0 && r <= n ? 1 : 0;
}

int pct_cutoff(double pct, std::size_t num_events) {
  if (!(pct > 0.0 && pct <= 100.0)) throw ConfigError("pct must be in (0, 100]");
  const double exact = pct * static_cast<double>(num_events) / 100.0;
  const double n = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::max(1, static_cast<int>(n));
}

int accuracy_at_pct(const PredictionList& list, double pct) {
  return accuracy_at(list, pct_cutoff(pct, list.size()));
}

double kendall_tau(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) throw Error("rankings cover different item sets");
  std::unordered_map<std::string_view, std::size_t> pos_b;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!pos_b.emplace(b[i], i).second) throw Error("duplicate item '" + b[i] + "' in ranking");
  }
  std::vector<std::size_t> seq;
  seq.reserve(a.size());
  std::vector<char> used(b.size(), 0);
  for (const std::string& item : a) {
    const auto it = pos_b.find(item);
    if (it == pos_b.end()) throw Error("rankings cover different item sets");
    if (used[it->second]++) throw Error("duplicate item '" + item + "' in ranking");
    seq.push_back(it->second);
  }
  const std::size_t m = seq.size();
  if (m < 2) return 1.0;

  // Inversions by merge sort.
  std::uint64_t inversions = 0;
  std::vector<std::size_t> buf(m);
  for (std::size_t width = 1; width < m; width *= 2) {
    for (std::size_t lo = 0; lo < m; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, m), hi = std::min(lo + 2 * width, m);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (seq[i] <= seq[j]) {
          buf[k++] = seq[i++];
        } else {
          inversions += mid - i;
          buf[k++] = seq[j++];
        }
      }
      while (i < mid) buf[k++] = seq[i++];
      while (j < hi) buf[k++] = seq[j++];
    }
    seq.swap(buf);
  }
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  return (pairs - 2.0 * static_cast<double>(inversions)) / pairs;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman needs equally long samples");
  if (x.empty()) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

SpearmanTest spearman_test(std::span<const double> x, std::span<const double> y,
                           int permutations, std::uint64_t seed) {
  if (permutations < 0) throw ConfigError("permutations must be >= 0");
  SpearmanTest t;
  t.rho = spearman(x, y);
  t.permutations = permutations;
  if (x.empty()) return t;
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  Rng rng(seed);
  int extreme = 0;
  const double observed = std::abs(t.rho) - 1e-12;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(ry.begin(), ry.end(), rng);
    if (std::abs(pearson(rx, ry)) >= observed) ++extreme;
  }
  t.p_value = (1.0 + extreme) / (1.0 + permutations);
  return t;
}

BlockAccumulator::BlockAccumulator(std::string name, std::size_t num_events, int ndcg_n,
                                   std::vector<double> accuracy_pcts, double niche_pct)
    : name_(std::move(name)),
      num_events_(num_events),
      ndcg_n_(ndcg_n),
      pcts_(std::move(accuracy_pcts)),
      niche_pct_(niche_pct),
      hits_at_n_(num_events, 0.0),
      hits_at_pct_(pcts_.size(), 0.0) {
  if (ndcg_n < 1) throw ConfigError("ndcg_n must be >= 1");
  for (double p : pcts_) pct_cutoff(p, 1);
  pct_cutoff(niche_pct, 1);
}

void BlockAccumulator::add(const PredictionList& list, std::span<const std::string> held_out_for) {
  if (list.size() != num_events_) throw Error("prediction list does not cover every event");
  ++lists_;
  ndcg_sum_ += ndcg_at(list, ndcg_n_);
  const int r = first_relevant_rank(list);
  if (r != 0) hits_at_n_[static_cast<std::size_t>(r - 1)] += 1.0;  // prefix-summed in finish()
  for (std::size_t i = 0; i < pcts_.size(); ++i) hits_at_pct_[i] += accuracy_at_pct(list, pcts_[i]);

  const auto cutoff = static_cast<std::size_t>(pct_cutoff(niche_pct_, num_events_));
  for (const std::string& id : held_out_for) {
    auto& [hits, users] = event_hits_[id];
    ++users;
    const auto it = std::find(list.event_ids.begin(), list.event_ids.end(), id);
    if (it != list.event_ids.end() && static_cast<std::size_t>(it - list.event_ids.begin()) < cutoff) {
      ++hits;
    }
  }
}

void BlockAccumulator::merge(const BlockAccumulator& other) {
  if (other.num_events_ != num_events_ || other.pcts_ != pcts_) {
    throw Error("cannot merge accumulators with different parameters");
  }
  lists_ += other.lists_;
  ndcg_sum_ += other.ndcg_sum_;
  for (std::size_t i = 0; i < hits_at_n_.size(); ++i) hits_at_n_[i] += other.hits_at_n_[i];
  for (std::size_t i = 0; i < hits_at_pct_.size(); ++i) hits_at_pct_[i] += other.hits_at_pct_[i];
  for (const auto& [id, hu] : other.event_hits_) {
    auto& mine = event_hits_[id];
    mine.first += hu.first;
    mine.second += hu.second;
  }
}

MetricsBlock BlockAccumulator::finish() const {
  MetricsBlock b;
  b.name = name_;
  b.num_lists = lists_;
  const double denom = lists_ == 0 ? 1.0 : static_cast<double>(lists_);
  b.mean_ndcg = ndcg_sum_ / denom;
  double running = 0.0;
  for (double h : hits_at_n_) {
    running += h;
    b.accuracy_at_n.push_back(running / denom);
  }
  for (std::size_t i = 0; i < pcts_.size(); ++i) {
    b.accuracy_at_pct.emplace_back(pcts_[i], hits_at_pct_[i] / denom);
  }
  for (const auto& [id, hu] : event_hits_) {
    if (hu.second == 0) continue;
    b.per_event_accuracy[id] = static_cast<double>(hu.first) / hu.second;
    b.per_event_test_users[id] = hu.second;
  }
  return b;
}

const MetricsBlock& MetricsReport::block(std::string_view name) const {
  for (const MetricsBlock& b : blocks) {
    if (b.name == name) return b;
  }
  throw Error("metrics report has no block '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["n_folds"] = report.n_folds;
  j["seed"] = report.seed;
  j["num_events"] = report.num_events;
  j["ndcg_n"] = report.ndcg_n;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const MetricsBlock& b : report.blocks) {
    nlohmann::ordered_json jb;
    jb["name"] = b.name;
    jb["num_lists"] = b.num_lists;
    jb["mean_ndcg"] = b.mean_ndcg;
    jb["accuracy_at_n"] = b.accuracy_at_n;
    auto pct = nlohmann::ordered_json::array();
    for (const auto& [p, acc] : b.accuracy_at_pct) pct.push_back({{"pct", p}, {"accuracy", acc}});
    jb["accuracy_at_pct"] = std::move(pct);
    auto per_event = nlohmann::ordered_json::object();
    for (const auto& [id, acc] : b.per_event_accuracy) {
      per_event[id] = {{"accuracy", acc}, {"test_users", b.per_event_test_users.at(id)}};
    }
    jb["per_event_accuracy"] = std::move(per_event);
    j["blocks"].push_back(std::move(jb));
  }
  if (report.ablation) {
    const auto& a = *report.ablation;
    j["tie_break_ablation"] = {{"num_users", a.num_users},
                               {"ndcg_base", a.ndcg_base},
                               {"ndcg_centrality", a.ndcg_centrality},
                               {"accuracy1_base", a.accuracy1_base},
                               {"accuracy1_centrality", a.accuracy1_centrality}};
  }
  return j;
}

void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

void write_accuracy_curves_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  csv::write_row(out, {"feature", "n", "accuracy"});
  for (const MetricsBlock& b : report.blocks) {
    for (std::size_t i = 0; i < b.accuracy_at_n.size(); ++i) {
      csv::write_row(out, {b.name, std::to_string(i + 1), csv::format_double(b.accuracy_at_n[i])});
    }
  }
}

void write_accuracy_pct_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  csv::write_row(out, {"feature", "pct", "accuracy"});
  for (const MetricsBlock& b : report.blocks) {
    for (const auto& [p, acc] : b.accuracy_at_pct) {
      csv::write_row(out, {b.name, csv::format_double(p), csv::format_double(acc)});
    }
  }
}

std::vector<std::string> attended_event_ids(std::span<const EventRecord> events, UserIx u) {
  std::vector<std::string> out;
  for (const EventRecord& e : events) {
    if (e.has_attendee(u)) out.push_back(e.id);
  }
  return out;
}

namespace {

struct AblationSums {
  std::size_t users = 0;
  double ndcg_base = 0, ndcg_centrality = 0, acc_base = 0, acc_centrality = 0;
};

struct FoldOutcome {
  std::vector<BlockAccumulator> blocks;
  AblationSums ablation;
};

}  // namespace

MetricsReport run_experiment(const Corpus& corpus, std::span<const EventRecord> events,
                             const ExperimentConfig& config) {
  if (config.features.empty()) throw ConfigError("at least one feature is required");
  if (events.empty()) throw Error("no events to evaluate");
  const auto folds = make_folds(events, config.n_folds, substream_seed(config.seed, "folds"));
  ProfileCache cache(corpus);

  const auto run_fold = [&](int f) {
    const FoldPlan& fold = folds[static_cast<std::size_t>(f)];
    ScoringOptions options;
    options.rwr_k = config.rwr_k;
    options.rwr = config.rwr;
    options.popularity_mode = config.popularity_mode;
    options.social_centrality = config.social_centrality;
    options.random_seed = substream_seed(config.seed, "random_baseline", static_cast<std::uint64_t>(f));
    const auto profile_attendees = fold.profile_attendees();
    const ScoringContext ctx(corpus, events, profile_attendees, cache, config.features, options);

    FoldOutcome out;
    for (Feature feat : config.features) {
      out.blocks.emplace_back(std::string(feature_name(feat)), events.size(), config.ndcg_n,
                              config.accuracy_pcts, config.niche_pct);
    }
    for (UserIx u : fold.test_users) {
      const auto attended = attended_event_ids(events, u);
      std::vector<std::string> held_out;
      for (std::size_t e : fold.test_events_of(u)) held_out.push_back(events[e].id);
      for (std::size_t c = 0; c < config.features.size(); ++c) {
        std::vector<FeatureScore> row;
        row.reserve(events.size());
        for (std::size_t e = 0; e < events.size(); ++e) row.push_back(ctx.score(config.features[c], u, e));
        out.blocks[c].add(rank_events(row, attended), held_out);
      }

      if (config.tie_break_ablation) {
        std::vector<FeatureScore> base, central;
        for (std::size_t e = 0; e < events.size(); ++e) {
          base.push_back(social_influence(corpus, u, events[e], profile_attendees[e], false));
          central.push_back(social_influence(corpus, u, events[e], profile_attendees[e], true));
        }
        std::map<double, int> by_count;
        for (const FeatureScore& s : base) {
          if (s.raw >= 1.0) ++by_count[s.raw];
        }
        const bool tied = std::any_of(by_count.begin(), by_count.end(),
                                      [](const auto& kv) { return kv.second >= 2; });
        if (tied) {
          const auto lb = rank_events(base, attended);
          const auto lc = rank_events(central, attended);
          ++out.ablation.users;
          out.ablation.ndcg_base += ndcg_at(lb, config.ndcg_n);
          out.ablation.ndcg_centrality += ndcg_at(lc, config.ndcg_n);
          out.ablation.acc_base += accuracy_at(lb, 1);
          out.ablation.acc_centrality += accuracy_at(lc, 1);
        }
      }
    }
    return out;
  };

  auto outcomes = run_folds<FoldOutcome>(config.n_folds, config.threads, run_fold);

  MetricsReport report;
  report.n_folds = config.n_folds;
  report.seed = config.seed;
  report.num_events = events.size();
  report.ndcg_n = config.ndcg_n;
  AblationSums total;
  for (std::size_t c = 0; c < config.features.size(); ++c) {
    BlockAccumulator acc = outcomes.front().blocks[c];
    for (std::size_t f = 1; f < outcomes.size(); ++f) acc.merge(outcomes[f].blocks[c]);
    report.blocks.push_back(acc.finish());
  }
  for (const FoldOutcome& o : outcomes) {
    total.users += o.ablation.users;
    total.ndcg_base += o.ablation.ndcg_base;
    total.ndcg_centrality += o.ablation.ndcg_centrality;
    total.acc_base += o.ablation.acc_base;
    total.acc_centrality += o.ablation.acc_centrality;
  }
  if (config.tie_break_ablation) {
    TieBreakAblation a;
    a.num_users = total.users;
    const double d = total.users == 0 ? 1.0 : static_cast<double>(total.users);
    a.ndcg_base = total.ndcg_base / d;
    a.ndcg_centrality = total.ndcg_centrality / d;
    a.accuracy1_base = total.acc_base / d;
    a.accuracy1_centrality = total.acc_centrality / d;
    report.ablation = a;
  }
  return report;
}

NicheReport niche_analysis(const Corpus& corpus, std::span<const EventRecord> events,
                           std::span<const EventProfile> event_profiles,
                           const std::map<std::string, double>& per_event_accuracy,
                           int permutations, std::uint64_t seed) {
  if (events.size() != event_profiles.size()) throw Error("one event profile per event required");
  std::vector<std::int64_t> volume(corpus.num_categories(), 0);
  for (const CheckIn& c : corpus.checkins()) ++volume[corpus.venue(c.venue).category.get()];

  NicheReport report;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto acc = per_event_accuracy.find(events[e].id);
    if (acc == per_event_accuracy.end()) continue;
    const EventProfile& p = event_profiles[e];
    std::vector<std::uint32_t> present;
    for (std::size_t c = 0; c < p.category_vector.size(); ++c) {
      if (p.category_vector[c] > 0.0) present.push_back(static_cast<std::uint32_t>(c));
    }
    // Category indices follow name order, so index ties are name ties.
    auto by_score = present;
    std::sort(by_score.begin(), by_score.end(), [&](auto a, auto b) {
      return p.category_vector[a] != p.category_vector[b] ? p.category_vector[a] > p.category_vector[b]
                                                          : a < b;
    });
    auto by_volume = present;
    std::sort(by_volume.begin(), by_volume.end(), [&](auto a, auto b) {
      return volume[a] != volume[b] ? volume[a] > volume[b] : a < b;
    });
    const auto names = [&](const std::vector<std::uint32_t>& ix) {
      std::vector<std::string> out;
      for (auto c : ix) out.push_back(corpus.category_name(CategoryIx{c}));
      return out;
    };
    NicheEventStat s;
    s.event_id = events[e].id;
    s.num_categories = present.size();
    s.tau = kendall_tau(names(by_score), names(by_volume));
    s.accuracy = acc->second;
    report.events.push_back(std::move(s));
  }
  if (report.events.size() < 3) throw Error("insufficient data for correlation");
  std::vector<double> taus, accs;
  for (const auto& s : report.events) {
    taus.push_back(s.tau);
    accs.push_back(s.accuracy);
  }
  report.correlation = spearman_test(taus, accs, permutations, seed);
  return report;
}

nlohmann::ordered_json to_json(const NicheReport& report) {
  nlohmann::ordered_json j;
  j["spearman_rho"] = report.correlation.rho;
  j["p_value"] = report.correlation.p_value;
  j["permutations"] = report.correlation.permutations;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& s : report.events) {
    j["events"].push_back({{"event_id", s.event_id},
                           {"num_categories", s.num_categories},
                           {"kendall_tau", s.tau},
                           {"accuracy", s.accuracy}});
  }
  return j;
}

}  // namespace geoevents
