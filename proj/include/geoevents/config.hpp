#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geoevents/eventmine.hpp"
#include "geoevents/evalharness.hpp"
#include "geoevents/fusion.hpp"
#include "geoevents/scorers.hpp"

namespace geoevents {

/// Flat key/value document in a TOML subset: `key = value` lines, `#`
/// comments, `[section]` headers prefixing keys with `section.`. Values are
/// numbers, booleans, double-quoted strings or arrays of those. Throws
/// ConfigError with the line number on anything else or a repeated key.
std::map<std::string, nlohmann::json> parse_flat_config(std::string_view text);
std::map<std::string, nlohmann::json> load_flat_config(const std::filesystem::path& path);

/// Dotted keys become nested objects: {"a.b": 1} -> {"a": {"b": 1}}.
nlohmann::json unflatten(const std::map<std::string, nlohmann::json>& flat);

struct RunConfig {
  std::string checkins = "checkins.csv";
  std::string venues = "venues.csv";
  std::string social = "social.csv";
  int tz_offset_minutes = 0;
  std::string events = "events.jsonl";
  std::string ground_truth;  // empty: keep every mined event
  std::string out = "out";

  MiningParams mining;
  std::vector<Feature> features{Feature::HomeDistance,   Feature::CategoryScore,
                                Feature::TemporalDistance, Feature::Popularity,
                                Feature::SocialInfluence, Feature::RandomWalk,
                                Feature::Random};
  RwrParams rwr;
  int rwr_k = 10;

  int n_folds = 10;
  std::uint64_t seed = 0;
  int ndcg_n = 10;
  std::vector<double> accuracy_pcts{1, 2, 5, 10, 20, 30, 40, 50};
  double niche_pct = 5.0;
  int permutations = 10000;
  PopularityMode popularity_mode = PopularityMode::CheckIns;
  bool tie_break_ablation = false;

  ModelKind model = ModelKind::ModelTree;
  bool with_rwr = true;
  bool all_variants = false;
  double lambda = 1e-8;
  int n_negatives = 15;
  int min_leaf = 8;
  double sd_threshold = 0.05;
  int inner_folds = -1;

  int threads = 1;

  /// Sets one key; throws ConfigError on an unknown key or a bad value type.
  void set(const std::string& key, const nlohmann::json& value);
  void apply(const std::map<std::string, nlohmann::json>& values);
  /// Throws ConfigError if a parameter violates its module's preconditions.
  void validate() const;
  nlohmann::ordered_json to_json() const;

  ExperimentConfig experiment() const;
  FusionConfig fusion() const;
};

}  // namespace geoevents
