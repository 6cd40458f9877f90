#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "geoevents/config.hpp"
#include "geoevents/corpus.hpp"
#include "geoevents/csv.hpp"
#include "geoevents/evalharness.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/fusion.hpp"
#include "geoevents/profiles.hpp"
#include "geoevents/rng.hpp"
#include "geoevents/scoring.hpp"
#include "geoevents/synthgen.hpp"

namespace fs = std::filesystem;
using namespace geoevents;

namespace {

enum class Kind { Int, Real, Text, List, Flag };

nlohmann::json convert(Kind kind, const std::string& key, const std::string& text) {
  try {
    switch (kind) {
      case Kind::Int:
        return csv::parse_int(text);
      case Kind::Real:
        return csv::parse_double(text);
      case Kind::Text:
        return text;
      case Kind::Flag:
        return true;
      case Kind::List: {
        auto arr = nlohmann::json::array();
        std::size_t start = 0;
        while (start <= text.size()) {
          const auto comma = text.find(',', start);
          const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
          if (!item.empty()) arr.push_back(item);
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        return arr;
      }
    }
  } catch (const Error&) {
  }
  throw ConfigError("bad value '" + text + "' for " + key);
}

struct Overrides {
  std::map<std::string, nlohmann::json> values;
  std::map<std::string, std::pair<Kind, std::string>> raw;

  void option(CLI::App* app, const std::string& flag, const std::string& key, Kind kind,
              const std::string& help) {
    if (kind == Kind::Flag) {
      app->add_flag_callback(flag, [this, key] { raw[key] = {Kind::Flag, ""}; }, help);
      return;
    }
    app->add_option_function<std::string>(
        flag, [this, key, kind](const std::string& s) { raw[key] = {kind, s}; }, help);
  }

  std::map<std::string, nlohmann::json> resolve() const {
    auto out = values;
    for (const auto& [key, kv] : raw) out[key] = convert(kv.first, key, kv.second);
    return out;
  }
};

void emit_error(const char* kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

RunConfig resolve_config(const std::string& config_path, const Overrides& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg.apply(load_flat_config(config_path));
  cfg.apply(overrides.resolve());
  cfg.validate();
  return cfg;
}

void log_config(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out);
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = cfg.to_json();
  std::cerr << "resolved config: " << j.dump() << '\n';
  std::ofstream out(fs::path(cfg.out) / "run_config.json");
  out << j.dump(2) << '\n';
}

Corpus load(const RunConfig& cfg) {
  return load_corpus(cfg.checkins, cfg.venues, cfg.social, cfg.tz_offset_minutes);
}

std::vector<EventRecord> load_events(const Corpus& corpus, const RunConfig& cfg) {
  return read_events_jsonl(corpus, cfg.events);
}

void write_report(const MetricsReport& report, const fs::path& out) {
  write_metrics_json(report, out / "metrics.json");
  write_accuracy_curves_csv(report, out / "accuracy_curves.csv");
  write_accuracy_pct_csv(report, out / "accuracy_pct.csv");
}

int cmd_synth(const std::string& config_path, const std::string& out, const std::optional<std::uint64_t>& seed) {
  SynthConfig cfg;
  if (!config_path.empty()) {
    nlohmann::json j;
    if (fs::path(config_path).extension() == ".json") {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config " + config_path);
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
    } else {
      j = unflatten(load_flat_config(config_path));
    }
    cfg = SynthConfig::from_json(j);
  }
  if (seed) cfg.seed = *seed;
  cfg.validate();
  fs::create_directories(out);
  nlohmann::ordered_json logged;
  logged["command"] = "synth";
  logged["config"] = cfg.to_json();
  std::cerr << "resolved config: " << logged.dump() << '\n';
  std::ofstream(fs::path(out) / "run_config.json") << logged.dump(2) << '\n';
  write_synth(generate(cfg), out);
  return 0;
}

int cmd_detect(const RunConfig& cfg) {
  const Corpus corpus = load(cfg);
  auto events = mine_events(corpus, cfg.mining);
  if (!cfg.ground_truth.empty()) {
    const auto truth = read_ground_truth(cfg.ground_truth);
    events = planted_events(corpus, events, truth);
  }
  write_events_jsonl(corpus, events, fs::path(cfg.out) / "events.jsonl");
  std::cerr << "events: " << events.size() << '\n';
  return 0;
}

int cmd_score(const RunConfig& cfg) {
  const Corpus corpus = load(cfg);
  const auto events = load_events(corpus, cfg);
  ProfileCache cache(corpus);
  std::vector<std::vector<UserIx>> attendees;
  for (const auto& e : events) attendees.push_back(e.attendees);
  ScoringOptions options;
  options.rwr_k = cfg.rwr_k;
  options.rwr = cfg.rwr;
  options.popularity_mode = cfg.popularity_mode;
  options.random_seed = substream_seed(cfg.seed, "random_baseline");
  const ScoringContext ctx(corpus, events, std::move(attendees), cache, cfg.features, options);

  std::ofstream out(fs::path(cfg.out) / "scores.csv");
  if (!out) throw Error("cannot write scores.csv");
  csv::write_row(out, {"feature", "user_id", "event_id", "raw", "oriented", "tie_break"});
  for (Feature f : cfg.features) {
    for (std::size_t u = 0; u < corpus.num_users(); ++u) {
      for (std::size_t e = 0; e < events.size(); ++e) {
        const FeatureScore s = ctx.score(f, UserIx{static_cast<std::uint32_t>(u)}, e);
        csv::write_row(out, {std::string(feature_name(f)), corpus.user_id(s.user), s.event_id,
                             csv::format_double(s.raw), csv::format_double(s.oriented),
                             csv::format_double(s.tie_break)});
      }
    }
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const Corpus corpus = load(cfg);
  const auto events = load_events(corpus, cfg);
  write_report(run_experiment(corpus, events, cfg.experiment()), cfg.out);
  return 0;
}

int cmd_fuse(const RunConfig& cfg) {
  const Corpus corpus = load(cfg);
  const auto events = load_events(corpus, cfg);
  const FusionConfig fc = cfg.fusion();
  const auto outcome = run_fusion_experiment(corpus, events, fc);
  write_report(outcome.report, cfg.out);
  for (std::size_t v = 0; v < fc.variants.size(); ++v) {
    const fs::path dir = fs::path(cfg.out) / "models" / fc.variants[v].name();
    fs::create_directories(dir);
    for (std::size_t f = 0; f < outcome.models[v].size(); ++f) {
      std::ofstream(dir / ("fold_" + std::to_string(f) + ".json")) << to_json(outcome.models[v][f]).dump(2) << '\n';
    }
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  const Corpus corpus = load(cfg);
  const auto events = load_events(corpus, cfg);
  ExperimentConfig ex = cfg.experiment();
  ex.features = {Feature::RandomWalk};
  const auto report = run_experiment(corpus, events, ex);
  write_report(report, cfg.out);

  ProfileCache cache(corpus);
  std::vector<EventProfile> profiles;
  for (const auto& e : events) {
    profiles.push_back(build_event_profile(corpus, e, e.attendees, cache.city_totals_at(e.day)));
  }
  const auto niche = niche_analysis(corpus, events, profiles, report.block("random_walk").per_event_accuracy,
                                    cfg.permutations, substream_seed(cfg.seed, "niche_permutation"));
  std::ofstream(fs::path(cfg.out) / "niche.json") << to_json(niche).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event participation prediction pipeline over check-in data"};
  app.require_subcommand(1);

  std::string synth_config, synth_out = "out";
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted events");
  synth->add_option("--config", synth_config, "TOML or JSON generator config");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", synth_seed, "root seed");

  struct Run {
    CLI::App* app;
    std::string config;
    Overrides overrides;
    int (*fn)(const RunConfig&);
  };
  std::vector<std::unique_ptr<Run>> runs;
  const auto add_run = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
    auto run = std::make_unique<Run>();
    run->app = app.add_subcommand(name, help);
    run->fn = fn;
    auto* a = run->app;
    auto& o = run->overrides;
    a->add_option("--config", run->config, "flat key = value config file; flags override it");
    o.option(a, "--checkins", "checkins", Kind::Text, "check-ins CSV");
    o.option(a, "--venues", "venues", Kind::Text, "venues CSV");
    o.option(a, "--social", "social", Kind::Text, "social graph CSV");
    o.option(a, "--tz", "tz_offset_minutes", Kind::Int, "local time offset in minutes");
    o.option(a, "--events", "events", Kind::Text, "events JSONL");
    o.option(a, "--ground-truth", "ground_truth", Kind::Text, "keep only planted events from this file");
    o.option(a, "--out", "out", Kind::Text, "output directory");
    o.option(a, "--seed", "seed", Kind::Int, "root seed");
    o.option(a, "--threads", "threads", Kind::Int, "worker threads");
    o.option(a, "--top", "top_k", Kind::Int, "events to keep");
    o.option(a, "--radius", "radius_m", Kind::Real, "scope radius in meters");
    o.option(a, "--threshold", "threshold_factor", Kind::Real, "anomaly factor over the daily average");
    o.option(a, "--features", "features", Kind::List, "comma-separated feature names");
    o.option(a, "--alpha", "alpha", Kind::Real, "random-walk continuation probability");
    o.option(a, "--k", "k", Kind::Int, "event profile categories linked in the graph");
    o.option(a, "--tolerance", "tolerance", Kind::Real, "random-walk L1 tolerance");
    o.option(a, "--folds", "n_folds", Kind::Int, "cross-validation folds");
    o.option(a, "--ndcg-n", "ndcg_n", Kind::Int, "NDCG cut-off");
    o.option(a, "--popularity-mode", "popularity_mode", Kind::Text, "checkins or attendees");
    o.option(a, "--tie-break-ablation", "tie_break_ablation", Kind::Flag, "compare social tie-break variants");
    o.option(a, "--permutations", "permutations", Kind::Int, "permutations for the correlation test");
    o.option(a, "--model", "model", Kind::Text, "ridge or m5");
    o.option(a, "--with-rwr", "with_rwr", Kind::Flag, "include the random-walk feature");
    a->add_flag_callback("--no-rwr", [&o] { o.values["with_rwr"] = false; }, "exclude the random-walk feature");
    o.option(a, "--all-variants", "all_variants", Kind::Flag, "train LR, M5, LR+RWR and M5+RWR");
    o.option(a, "--lambda", "lambda", Kind::Real, "ridge regularization");
    o.option(a, "--negatives", "n_negatives", Kind::Int, "negative samples per training user");
    o.option(a, "--min-leaf", "min_leaf", Kind::Int, "model tree minimum leaf size");
    runs.push_back(std::move(run));
  };
  add_run("detect", "mine events from check-ins", cmd_detect);
  add_run("score", "score every user against every event", cmd_score);
  add_run("evaluate", "cross-validated single-feature evaluation", cmd_evaluate);
  add_run("fuse", "cross-validated supervised fusion", cmd_fuse);
  add_run("analyze", "niche-event correlation analysis", cmd_analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_config, synth_out, synth_seed);
    for (const auto& run : runs) {
      if (!run->app->parsed()) continue;
      const RunConfig cfg = resolve_config(run->config, run->overrides);
      log_config(cfg, run->app->get_name());
      return run->fn(cfg);
    }
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
    return 1;
  }
  return 0;
}
