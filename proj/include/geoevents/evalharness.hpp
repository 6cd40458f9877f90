#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/profiles.hpp"
#include "geoevents/scorers.hpp"
#include "geoevents/scoring.hpp"

namespace geoevents {

struct EventSplit {
  std::vector<UserIx> test;      // sorted
  std::vector<UserIx> training;  // sorted
};

struct FoldPlan {
  int fold_index = 0;
  std::vector<EventSplit> events;  // aligned with the event list
  std::vector<UserIx> test_users;  // union of per-event test sets, sorted

  /// Attendees usable for event-side inputs: training attendees that are not
  /// test users of this fold for any event.
  std::vector<std::vector<UserIx>> profile_attendees() const;
  /// Events this user is held out for, by event position.
  std::vector<std::size_t> test_events_of(UserIx u) const;
};

/// Shuffles each event's attendees and deals them round-robin, from a
/// per-event random offset, into n_folds blocks. Throws ConfigError if
/// n_folds < 2.
std::vector<FoldPlan> make_folds(std::span<const EventRecord> events, int n_folds,
                                 std::uint64_t seed);

double ndcg_at(const PredictionList& list, int n = 10);
int accuracy_at(const PredictionList& list, int n);
/// Cut-off ceil(pct * |E| / 100), computed so that exact products are not
/// pushed up by rounding error.
int pct_cutoff(double pct, std::size_t num_events);
int accuracy_at_pct(const PredictionList& list, double pct);

/// Kendall tau-a between two orderings of the same distinct items. A single
/// item counts as perfect agreement. Throws Error on an item-set mismatch.
double kendall_tau(std::span<const std::string> a, std::span<const std::string> b);
/// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);
/// Pearson correlation of average ranks; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SpearmanTest {
  double rho = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};
/// Two-sided permutation test: p = (1 + #{|rho_perm| >= |rho|}) / (1 + permutations).
SpearmanTest spearman_test(std::span<const double> x, std::span<const double> y,
                           int permutations, std::uint64_t seed);

/// Metrics of one feature or model.
struct MetricsBlock {
  std::string name;
  std::size_t num_lists = 0;
  double mean_ndcg = 0.0;
  std::vector<double> accuracy_at_n;  // position n-1 holds Accuracy@n, n = 1..|E|
  std::vector<std::pair<double, double>> accuracy_at_pct;  // (pct, accuracy)
  // Mean over each event's test users of "this event is within the niche cut-off".
  std::map<std::string, double> per_event_accuracy;
  std::map<std::string, int> per_event_test_users;
};

/// Accumulates ranked lists into a MetricsBlock.
class BlockAccumulator {
 public:
  BlockAccumulator(std::string name, std::size_t num_events, int ndcg_n,
                   std::vector<double> accuracy_pcts, double niche_pct);
  /// `held_out_for` lists the ids of events the user is a test user of.
  void add(const PredictionList& list, std::span<const std::string> held_out_for);
  /// Merges another accumulator built with the same parameters.
  void merge(const BlockAccumulator& other);
  MetricsBlock finish() const;

 private:
  std::string name_;
  std::size_t num_events_;
  int ndcg_n_;
  std::vector<double> pcts_;
  double niche_pct_;
  std::size_t lists_ = 0;
  double ndcg_sum_ = 0.0;
  std::vector<double> hits_at_n_;
  std::vector<double> hits_at_pct_;
  std::map<std::string, std::pair<int, int>> event_hits_;  // id -> (hits, users)
};

struct TieBreakAblation {
  std::size_t num_users = 0;  // (fold, user) lists with a tie to break
  double ndcg_base = 0.0;
  double ndcg_centrality = 0.0;
  double accuracy1_base = 0.0;
  double accuracy1_centrality = 0.0;
};

struct MetricsReport {
  int n_folds = 0;
  std::uint64_t seed = 0;
  std::size_t num_events = 0;
  int ndcg_n = 10;
  std::vector<MetricsBlock> blocks;
  std::optional<TieBreakAblation> ablation;

  const MetricsBlock& block(std::string_view name) const;
};

nlohmann::ordered_json to_json(const MetricsReport& report);
void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path);
/// `feature,n,accuracy` rows.
void write_accuracy_curves_csv(const MetricsReport& report, const std::filesystem::path& path);
/// `feature,pct,accuracy` rows.
void write_accuracy_pct_csv(const MetricsReport& report, const std::filesystem::path& path);

struct ExperimentConfig {
  std::vector<Feature> features;
  int n_folds = 10;
  std::uint64_t seed = 0;
  int ndcg_n = 10;
  std::vector<double> accuracy_pcts{1, 2, 5, 10, 20, 30, 40, 50};
  double niche_pct = 5.0;
  int rwr_k = 10;
  RwrParams rwr;
  PopularityMode popularity_mode = PopularityMode::CheckIns;
  bool social_centrality = true;
  bool tie_break_ablation = false;
  int threads = 1;
};

/// Relevant event ids of a user: every event they attended.
std::vector<std::string> attended_event_ids(std::span<const EventRecord> events, UserIx u);

/// Runs `fn(fold)` for every fold on up to `threads` workers; the results
/// are returned in fold order.
template <class T, class Fn>
std::vector<T> run_folds(int n_folds, int threads, Fn fn);

/// Per fold: event-side inputs from profile attendees, user-side inputs
/// from pre-event history, every fold test user ranks all events.
MetricsReport run_experiment(const Corpus& corpus, std::span<const EventRecord> events,
                             const ExperimentConfig& config);

struct NicheEventStat {
  std::string event_id;
  std::size_t num_categories = 0;
  double tau = 0.0;
  double accuracy = 0.0;
};

struct NicheReport {
  std::vector<NicheEventStat> events;
  SpearmanTest correlation;
};

/// Per event: Kendall tau between the event profile's category order and
/// the same categories ordered by corpus-wide check-in volume (ties by name),
/// then Spearman between tau and per-event accuracy. Events without an
/// accuracy entry are skipped. Throws Error "insufficient data for
/// correlation" with fewer than 3 usable events.
NicheReport niche_analysis(const Corpus& corpus, std::span<const EventRecord> events,
                           std::span<const EventProfile> event_profiles,
                           const std::map<std::string, double>& per_event_accuracy,
                           int permutations = 10000, std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const NicheReport& report);

}  // namespace geoevents

#include "geoevents/detail/run_folds.hpp"
