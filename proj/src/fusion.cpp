#include "geoevents/fusion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "geoevents/rng.hpp"

namespace geoevents {

std::vector<Feature> fusion_features(bool with_rwr) {
  std::vector<Feature> f{Feature::HomeDistance, Feature::CategoryScore, Feature::TemporalDistance,
                         Feature::Popularity, Feature::SocialInfluence};
  if (with_rwr) f.push_back(Feature::RandomWalk);
  return f;
}

std::vector<std::string> fusion_columns(bool with_rwr) {
  std::vector<std::string> names;
  for (Feature f : fusion_features(with_rwr)) {
    names.emplace_back(feature_name(f));
    if (f == Feature::SocialInfluence) names.emplace_back("social_influence_tie_break");
  }
  return names;
}

std::vector<double> fusion_row(const ScoreMatrix& scores, std::size_t row, std::size_t event,
                               bool with_rwr) {
  std::vector<double> x;
  for (Feature f : fusion_features(with_rwr)) {
    const FeatureScore& s = scores.at(row, event, scores.column(f));
    x.push_back(s.oriented);
    if (f == Feature::SocialInfluence) x.push_back(s.tie_break);
  }
  return x;
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> rows) {
  Standardizer s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front().size();
  s.fill.assign(d, 0.0);
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      if (std::isfinite(r[j])) lo = std::min(lo, r[j]);
    }
    s.fill[j] = std::isfinite(lo) ? lo - 1.0 : 0.0;
  }
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw Error("training rows differ in length");
    for (std::size_t j = 0; j < d; ++j) {
      const double v = std::isfinite(r[j]) ? r[j] : s.fill[j];
      sum[j] += v;
    }
  }
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < d; ++j) s.mean[j] = sum[j] / n;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = (std::isfinite(r[j]) ? r[j] : s.fill[j]) - s.mean[j];
      sq[j] += v * v;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(sq[j] / n);
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw Error("feature vector length does not match the model");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = std::isfinite(x[j]) ? x[j] : fill[j];
    z[j] = (v - mean[j]) / scale[j];
  }
  return z;
}

double LinearModel::predict(std::span<const double> z) const {
  double y = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) y += weights[j] * z[j];
  return y;
}

LinearModel solve_ridge(std::span<const std::vector<double>> rows, std::span<const double> y,
                        double lambda) {
  if (rows.empty()) throw Error("ridge needs at least one instance");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    t(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const double my = t.mean();
  x.rowwise() -= mx;
  t.array() -= my;

  LinearModel m;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  if (d > 0) {
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += lambda;
    const Eigen::VectorXd b = x.transpose() * t;
    w = a.ldlt().solve(b);
    if (!w.allFinite()) w = a.completeOrthogonalDecomposition().solve(b);
  }
  m.weights.assign(w.data(), w.data() + d);
  m.intercept = my - mx.dot(w);
  return m;
}

double RegressionModel::predict(std::span<const double> raw) const {
  if (raw.size() != feature_order.size()) throw Error("feature vector length does not match the model");
  const auto z = standardizer.apply(raw);
  if (kind == ModelKind::Ridge) return linear.predict(z);
  std::size_t at = 0;
  while (!nodes.at(at).leaf) {
    const Node& n = nodes[at];
    at = z[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[at].model.predict(z);
}

std::size_t RegressionModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].leaf) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return best;
}

std::size_t RegressionModel::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf; }));
}

namespace {

void check_instances(std::span<const TrainingInstance> instances,
                     const std::vector<std::string>& feature_order) {
  if (instances.empty()) throw Error("cannot fit a model on zero instances");
  for (const auto& inst : instances) {
    if (inst.features.size() != feature_order.size()) {
      throw Error("instance feature count does not match the feature order");
    }
  }
}

struct TreeBuilder {
  const std::vector<std::vector<double>>& z;
  const std::vector<double>& y;
  const TreeParams& params;
  std::vector<RegressionModel::Node>& nodes;
  double root_sd = 0.0;

  static double sd_of(double sum, double sq, double n) {
    const double var = sq / n - (sum / n) * (sum / n);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }

  double sd(const std::vector<std::size_t>& ix) const {
    double s = 0.0, q = 0.0;
    for (std::size_t i : ix) {
      s += y[i];
      q += y[i] * y[i];
    }
    return sd_of(s, q, static_cast<double>(ix.size()));
  }

  std::size_t build(std::vector<std::size_t> ix, int depth) {
    const std::size_t id = nodes.size();
    nodes.emplace_back();
    nodes[id].samples = ix.size();
    const double node_sd = sd(ix);
    if (depth == 0) root_sd = node_sd;

    const auto min_leaf = static_cast<std::size_t>(std::max(params.min_leaf, 1));
    const bool stop = ix.size() < 2 * min_leaf || node_sd <= 0.0 ||
                      node_sd < params.sd_threshold * root_sd ||
                      (params.max_depth >= 0 && depth >= params.max_depth);
    if (!stop) {
      const auto split = best_split(ix, node_sd, min_leaf);
      if (split) {
        const auto [feature, threshold] = *split;
        std::vector<std::size_t> left, right;
        for (std::size_t i : ix) (z[i][feature] <= threshold ? left : right).push_back(i);
        if (left.empty() || right.empty()) throw Error("model tree split did not partition its node");
        nodes[id].leaf = false;
        nodes[id].feature = feature;
        nodes[id].threshold = threshold;
        const std::size_t l = build(std::move(left), depth + 1);
        const std::size_t r = build(std::move(right), depth + 1);
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
      }
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> t;
    for (std::size_t i : ix) {
      rows.push_back(z[i]);
      t.push_back(y[i]);
    }
    nodes[id].model = solve_ridge(rows, t, params.lambda);
    return id;
  }

  std::optional<std::pair<std::size_t, double>> best_split(const std::vector<std::size_t>& ix,
                                                           double node_sd,
                                                           std::size_t min_leaf) const {
    const std::size_t n = ix.size();
    const std::size_t d = z[ix.front()].size();
    double total = 0.0, total_sq = 0.0;
    for (std::size_t i : ix) {
      total += y[i];
      total_sq += y[i] * y[i];
    }
    double best_sdr = 1e-12 * std::max(1.0, node_sd);
    std::optional<std::pair<std::size_t, double>> best;
    std::vector<std::size_t> order = ix;
    for (std::size_t f = 0; f < d; ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return z[a][f] < z[b][f]; });
      double ls = 0.0, lq = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ls += y[order[k]];
        lq += y[order[k]] * y[order[k]];
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double a = z[order[k]][f], b = z[order[k + 1]][f];
        if (!(a < b)) continue;
        const double sdr = node_sd -
                           (static_cast<double>(nl) * sd_of(ls, lq, static_cast<double>(nl)) +
                            static_cast<double>(nr) *
                                sd_of(total - ls, total_sq - lq, static_cast<double>(nr))) /
                               static_cast<double>(n);
        if (sdr > best_sdr) {
          best_sdr = sdr;
          const double mid = a + (b - a) / 2.0;
          best = std::pair{f, mid < b ? mid : a};  // adjacent doubles round up to b
        }
      }
    }
    return best;
  }
};

}  // namespace

RegressionModel fit_ridge(std::span<const TrainingInstance> instances,
                          std::vector<std::string> feature_order, double lambda) {
  check_instances(instances, feature_order);
  RegressionModel m;
  m.kind = ModelKind::Ridge;
  m.feature_order = std::move(feature_order);
  std::vector<std::vector<double>> raw;
  std::vector<double> y;
  for (const auto& inst : instances) {
    raw.push_back(inst.features);
    y.push_back(inst.label);
  }
  m.standardizer = Standardizer::fit(raw);
  std::vector<std::vector<double>> z;
  for (const auto& r : raw) z.push_back(m.standardizer.apply(r));
  m.linear = solve_ridge(z, y, lambda);
  return m;
}

RegressionModel fit_model_tree(std::span<const TrainingInstance> instances,
                               std::vector<std::string> feature_order, const TreeParams& params) {
  check_instances(instances, feature_order);
  if (params.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(params.sd_threshold >= 0.0)) throw ConfigError("sd_threshold must be >= 0");
  RegressionModel m;
  m.kind = ModelKind::ModelTree;
  m.feature_order = std::move(feature_order);
  std::vector<std::vector<double>> raw;
  std::vector<double> y;
  for (const auto& inst : instances) {
    raw.push_back(inst.features);
    y.push_back(inst.label);
  }
  m.standardizer = Standardizer::fit(raw);
  std::vector<std::vector<double>> z;
  for (const auto& r : raw) z.push_back(m.standardizer.apply(r));
  TreeBuilder builder{z, y, params, m.nodes};
  std::vector<std::size_t> all(instances.size());
  std::iota(all.begin(), all.end(), 0);
  builder.build(std::move(all), 0);
  return m;
}

namespace {

nlohmann::ordered_json linear_json(const LinearModel& m) {
  return {{"weights", m.weights}, {"intercept", m.intercept}};
}

LinearModel linear_from(const nlohmann::ordered_json& j) {
  LinearModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  return m;
}

nlohmann::ordered_json node_json(const RegressionModel& m, std::size_t i) {
  const auto& n = m.nodes[i];
  nlohmann::ordered_json j;
  j["samples"] = n.samples;
  if (n.leaf) {
    j["model"] = linear_json(n.model);
  } else {
    j["feature"] = m.feature_order[n.feature];
    j["threshold"] = n.threshold;
    j["left"] = node_json(m, n.left);
    j["right"] = node_json(m, n.right);
  }
  return j;
}

std::size_t node_from(RegressionModel& m, const nlohmann::ordered_json& j) {
  const std::size_t id = m.nodes.size();
  m.nodes.emplace_back();
  m.nodes[id].samples = j.at("samples").get<std::size_t>();
  if (j.contains("model")) {
    m.nodes[id].model = linear_from(j.at("model"));
    return id;
  }
  const auto name = j.at("feature").get<std::string>();
  const auto it = std::find(m.feature_order.begin(), m.feature_order.end(), name);
  if (it == m.feature_order.end()) throw ParseError("tree splits on unknown feature '" + name + "'");
  m.nodes[id].leaf = false;
  m.nodes[id].feature = static_cast<std::size_t>(it - m.feature_order.begin());
  m.nodes[id].threshold = j.at("threshold").get<double>();
  const std::size_t l = node_from(m, j.at("left"));
  const std::size_t r = node_from(m, j.at("right"));
  m.nodes[id].left = l;
  m.nodes[id].right = r;
  return id;
}

}  // namespace

nlohmann::ordered_json to_json(const RegressionModel& model) {
  nlohmann::ordered_json j;
  j["kind"] = model.kind == ModelKind::Ridge ? "ridge" : "m5";
  j["feature_order"] = model.feature_order;
  j["standardization"] = {{"fill", model.standardizer.fill},
                          {"mean", model.standardizer.mean},
                          {"scale", model.standardizer.scale}};
  if (model.kind == ModelKind::Ridge) {
    j["linear"] = linear_json(model.linear);
  } else {
    j["tree"] = node_json(model, 0);
  }
  return j;
}

RegressionModel model_from_json(const nlohmann::ordered_json& j) {
  try {
    RegressionModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "ridge" && kind != "m5") throw ParseError("unknown model kind '" + kind + "'");
    m.kind = kind == "ridge" ? ModelKind::Ridge : ModelKind::ModelTree;
    m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    const auto& s = j.at("standardization");
    m.standardizer.fill = s.at("fill").get<std::vector<double>>();
    m.standardizer.mean = s.at("mean").get<std::vector<double>>();
    m.standardizer.scale = s.at("scale").get<std::vector<double>>();
    if (m.kind == ModelKind::Ridge) {
      m.linear = linear_from(j.at("linear"));
    } else {
      node_from(m, j.at("tree"));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model: ") + e.what());
  }
}

PredictionList predict_and_rank(const RegressionModel& model,
                                std::span<const std::string> feature_order,
                                std::span<const std::vector<double>> rows,
                                std::span<const std::string> event_ids,
                                std::span<const std::string> attended) {
  if (!std::equal(feature_order.begin(), feature_order.end(), model.feature_order.begin(),
                  model.feature_order.end())) {
    throw Error("feature order does not match the model");
  }
  if (rows.size() != event_ids.size()) throw Error("one feature row per event required");
  std::vector<FeatureScore> scores;
  scores.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    FeatureScore s;
    s.event_id = event_ids[i];
    s.raw = s.oriented = model.predict(rows[i]);
    scores.push_back(std::move(s));
  }
  return rank_events(scores, attended);
}

std::vector<TrainingInstance> build_training_set(std::span<const EventRecord> events,
                                                 const ScoreMatrix& scores, bool with_rwr,
                                                 int n_negatives, std::uint64_t seed) {
  if (n_negatives < 0) throw ConfigError("n_negatives must be >= 0");
  if (scores.num_events() != events.size()) throw Error("score matrix does not cover every event");
  Rng rng(seed);
  std::vector<TrainingInstance> out;
  for (std::size_t r = 0; r < scores.users().size(); ++r) {
    const UserIx u = scores.users()[r];
    std::vector<std::size_t> negatives;
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (events[e].has_attendee(u)) {
        out.push_back({u, events[e].id, fusion_row(scores, r, e, with_rwr), 1.0});
      } else {
        negatives.push_back(e);
      }
    }
    const std::size_t take = std::min(negatives.size(), static_cast<std::size_t>(n_negatives));
    // Partial Fisher-Yates; libstdc++'s std::sample is not portable across vendors.
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, negatives.size() - 1);
      std::swap(negatives[i], negatives[pick(rng)]);
    }
    negatives.resize(take);
    std::sort(negatives.begin(), negatives.end());
    for (std::size_t e : negatives) {
      out.push_back({u, events[e].id, fusion_row(scores, r, e, with_rwr), -1.0});
    }
  }
  return out;
}

std::string FusionVariant::name() const {
  return std::string(kind == ModelKind::Ridge ? "LR" : "M5") + (with_rwr ? "+RWR" : "");
}

namespace {

struct FusionFold {
  std::vector<BlockAccumulator> blocks;
  std::vector<RegressionModel> models;  // per variant
};

std::vector<UserIx> union_sorted(std::span<const UserIx> a, std::span<const UserIx> b) {
  std::vector<UserIx> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

FusionOutcome run_fusion_experiment(const Corpus& corpus, std::span<const EventRecord> events,
                                    const FusionConfig& config) {
  const ExperimentConfig& ex = config.experiment;
  if (config.variants.empty()) throw ConfigError("at least one fusion variant is required");
  if (events.empty()) throw Error("no events to evaluate");
  const bool any_rwr = std::any_of(config.variants.begin(), config.variants.end(),
                                   [](const FusionVariant& v) { return v.with_rwr; });
  const auto features = fusion_features(any_rwr || config.single_feature_blocks);
  const auto folds = make_folds(events, ex.n_folds, substream_seed(ex.seed, "folds"));
  ProfileCache cache(corpus);

  const auto run_fold = [&](int f) {
    const FoldPlan& fold = folds[static_cast<std::size_t>(f)];
    ScoringOptions options;
    options.rwr_k = ex.rwr_k;
    options.rwr = ex.rwr;
    options.popularity_mode = ex.popularity_mode;
    options.social_centrality = ex.social_centrality;

    // Learners are the users held out by other folds, each scored with
    // event-side inputs that exclude both their fold and fold f.
    const int inner_folds = config.inner_folds < 0 ? ex.n_folds - 1 : std::min(config.inner_folds, ex.n_folds - 1);
    std::vector<std::vector<TrainingInstance>> instances(config.variants.size());
    for (int k = 1; k <= inner_folds; ++k) {
      const int g = (f + k) % ex.n_folds;
      const FoldPlan& inner = folds[static_cast<std::size_t>(g)];
      const auto excluded = union_sorted(fold.test_users, inner.test_users);
      std::vector<std::vector<UserIx>> inner_attendees;
      for (const EventRecord& e : events) {
        std::vector<UserIx> keep;
        std::set_difference(e.attendees.begin(), e.attendees.end(), excluded.begin(), excluded.end(),
                            std::back_inserter(keep));
        inner_attendees.push_back(std::move(keep));
      }
      std::vector<UserIx> learners;
      std::set_difference(inner.test_users.begin(), inner.test_users.end(), fold.test_users.begin(),
                          fold.test_users.end(), std::back_inserter(learners));
      const ScoringContext train_ctx(corpus, events, std::move(inner_attendees), cache, features,
                                     options);
      const ScoreMatrix train_scores = train_ctx.score(learners);
      const auto negative_seed = substream_seed(
          ex.seed, "negatives", static_cast<std::uint64_t>(f) * static_cast<std::uint64_t>(ex.n_folds) +
                                    static_cast<std::uint64_t>(g));
      for (std::size_t v = 0; v < config.variants.size(); ++v) {
        auto part = build_training_set(events, train_scores, config.variants[v].with_rwr,
                                       config.n_negatives, negative_seed);
        instances[v].insert(instances[v].end(), std::make_move_iterator(part.begin()),
                            std::make_move_iterator(part.end()));
      }
    }

    const ScoringContext test_ctx(corpus, events, fold.profile_attendees(), cache, features, options);
    const ScoreMatrix test_scores = test_ctx.score(fold.test_users);

    FusionFold out;
    for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
      const FusionVariant& v = config.variants[vi];
      out.models.push_back(v.kind == ModelKind::Ridge
                               ? fit_ridge(instances[vi], fusion_columns(v.with_rwr), config.lambda)
                               : fit_model_tree(instances[vi], fusion_columns(v.with_rwr), config.tree));
      out.blocks.emplace_back(v.name(), events.size(), ex.ndcg_n, ex.accuracy_pcts, ex.niche_pct);
    }
    if (config.single_feature_blocks) {
      for (Feature feat : features) {
        out.blocks.emplace_back(std::string(feature_name(feat)), events.size(), ex.ndcg_n,
                                ex.accuracy_pcts, ex.niche_pct);
      }
    }

    std::vector<std::string> ids;
    for (const EventRecord& e : events) ids.push_back(e.id);
    for (std::size_t r = 0; r < fold.test_users.size(); ++r) {
      const UserIx u = fold.test_users[r];
      const auto attended = attended_event_ids(events, u);
      std::vector<std::string> held_out;
      for (std::size_t e : fold.test_events_of(u)) held_out.push_back(events[e].id);
      for (std::size_t v = 0; v < config.variants.size(); ++v) {
        const bool with_rwr = config.variants[v].with_rwr;
        std::vector<std::vector<double>> rows;
        for (std::size_t e = 0; e < events.size(); ++e) rows.push_back(fusion_row(test_scores, r, e, with_rwr));
        out.blocks[v].add(
            predict_and_rank(out.models[v], fusion_columns(with_rwr), rows, ids, attended), held_out);
      }
      if (config.single_feature_blocks) {
        for (std::size_t c = 0; c < features.size(); ++c) {
          out.blocks[config.variants.size() + c].add(rank_events(test_scores.row(r, c), attended),
                                                     held_out);
        }
      }
    }
    return out;
  };

  auto per_fold = run_folds<FusionFold>(ex.n_folds, ex.threads, run_fold);

  FusionOutcome outcome;
  MetricsReport& report = outcome.report;
  report.n_folds = ex.n_folds;
  report.seed = ex.seed;
  report.num_events = events.size();
  report.ndcg_n = ex.ndcg_n;
  for (std::size_t b = 0; b < per_fold.front().blocks.size(); ++b) {
    BlockAccumulator acc = per_fold.front().blocks[b];
    for (std::size_t f = 1; f < per_fold.size(); ++f) acc.merge(per_fold[f].blocks[b]);
    report.blocks.push_back(acc.finish());
  }
  outcome.models.resize(config.variants.size());
  for (std::size_t v = 0; v < config.variants.size(); ++v) {
    for (auto& fold : per_fold) outcome.models[v].push_back(std::move(fold.models[v]));
  }
  return outcome;
}

}  // namespace geoevents
