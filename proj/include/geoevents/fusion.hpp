#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoevents/evalharness.hpp"
#include "geoevents/scoring.hpp"

namespace geoevents {

struct TrainingInstance {
  UserIx user;
  std::string event_id;
  std::vector<double> features;  // order given by the model's feature_order
  double label = 0.0;            // +1 attended, -1 not
};

/// Scored features feeding the learners.
std::vector<Feature> fusion_features(bool with_rwr);
/// Input column names: the oriented value of each fusion feature plus the
/// social-influence tie-break.
std::vector<std::string> fusion_columns(bool with_rwr);
/// One input row from a score matrix cell group, in fusion_columns order.
std::vector<double> fusion_row(const ScoreMatrix& scores, std::size_t row, std::size_t event,
                               bool with_rwr);

/// Column statistics from training data. Non-finite inputs (a missing
/// temporal score) are replaced by one below the smallest finite training
/// value of that column before z-scoring; constant columns keep scale 1.
struct Standardizer {
  std::vector<double> fill, mean, scale;

  static Standardizer fit(std::span<const std::vector<double>> rows);
  std::vector<double> apply(std::span<const double> x) const;
};

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;

  double predict(std::span<const double> z) const;
};

/// Ridge on centered data with an unpenalized intercept:
/// (Xc'Xc + lambda I) w = Xc'yc, intercept = mean(y) - mean(x).w.
LinearModel solve_ridge(std::span<const std::vector<double>> rows, std::span<const double> y,
                        double lambda);

enum class ModelKind { Ridge, ModelTree };

struct TreeParams {
  int min_leaf = 8;
  double sd_threshold = 0.05;
  double lambda = 1e-8;
  int max_depth = -1;  // negative: unlimited
};

class RegressionModel {
 public:
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;  // x <= threshold goes left
    std::size_t left = 0, right = 0;
    std::size_t samples = 0;
    LinearModel model;
  };

  ModelKind kind = ModelKind::Ridge;
  std::vector<std::string> feature_order;
  Standardizer standardizer;
  LinearModel linear;       // Ridge
  std::vector<Node> nodes;  // ModelTree, root at 0

  /// Throws Error if the row length differs from feature_order.
  double predict(std::span<const double> raw) const;
  std::size_t depth() const;
  std::size_t num_leaves() const;
};

RegressionModel fit_ridge(std::span<const TrainingInstance> instances,
                          std::vector<std::string> feature_order, double lambda = 1e-8);

/// Binary threshold splits chosen by standard-deviation reduction, ridge
/// models at the leaves, no pruning or smoothing.
RegressionModel fit_model_tree(std::span<const TrainingInstance> instances,
                               std::vector<std::string> feature_order,
                               const TreeParams& params = {});

nlohmann::ordered_json to_json(const RegressionModel& model);
RegressionModel model_from_json(const nlohmann::ordered_json& j);

/// Ranks events by descending prediction, ties by event id. `rows[i]` is the
/// input for event_ids[i] in `feature_order`. Throws Error if it differs
/// from the model's.
PredictionList predict_and_rank(const RegressionModel& model,
                                std::span<const std::string> feature_order,
                                std::span<const std::vector<double>> rows,
                                std::span<const std::string> event_ids,
                                std::span<const std::string> attended = {});

/// Positives for every attended event, up to n_negatives non-attended events
/// drawn without replacement. Users are processed in the given order.
std::vector<TrainingInstance> build_training_set(std::span<const EventRecord> events,
                                                 const ScoreMatrix& scores, bool with_rwr,
                                                 int n_negatives, std::uint64_t seed);

struct FusionVariant {
  ModelKind kind = ModelKind::ModelTree;
  bool with_rwr = true;

  std::string name() const;  // LR, M5, LR+RWR, M5+RWR
};

struct FusionConfig {
  ExperimentConfig experiment;  // folds, seed, metrics, RWR and threads
  std::vector<FusionVariant> variants{{ModelKind::ModelTree, true}};
  double lambda = 1e-8;
  int n_negatives = 15;
  int inner_folds = -1;  // other folds supplying learners; negative: all of them
  TreeParams tree;
  bool single_feature_blocks = false;  // also report each input feature alone
};

struct FusionOutcome {
  MetricsReport report;
  std::vector<std::vector<RegressionModel>> models;  // [variant][fold]
};

/// Per outer fold f the learners train on the users held out in the other
/// folds g (but not in f), each group scored with event-side inputs that
/// exclude the test users of both f and g; the fold-f test users are then
/// ranked as in run_experiment.
FusionOutcome run_fusion_experiment(const Corpus& corpus, std::span<const EventRecord> events,
                                    const FusionConfig& config);

}  // namespace geoevents
