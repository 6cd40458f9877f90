#include "geoevents/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace geoevents {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment while respecting quoted strings.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

bool scalar_ok(const nlohmann::json& v) { return v.is_number() || v.is_boolean() || v.is_string(); }

}  // namespace

std::map<std::string, nlohmann::json> parse_flat_config(std::string_view text) {
  std::map<std::string, nlohmann::json> out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_key(name)) throw ConfigError(where + "bad section name");
      section = std::string(name) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value_text = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + "bad key '" + std::string(key) + "'");
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(value_text);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where + "cannot parse value for '" + std::string(key) + "'");
    }
    const bool ok = scalar_ok(value) || (value.is_array() && std::all_of(value.begin(), value.end(), scalar_ok));
    if (!ok) throw ConfigError(where + "unsupported value for '" + std::string(key) + "'");
    const std::string full = section + std::string(key);
    if (!out.emplace(full, std::move(value)).second) throw ConfigError(where + "duplicate key '" + full + "'");
  }
  return out;
}

std::map<std::string, nlohmann::json> load_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_flat_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json unflatten(const std::map<std::string, nlohmann::json>& flat) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& [key, value] : flat) {
    nlohmann::json* at = &root;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!at->is_object()) throw ConfigError("key '" + key + "' nests under a value");
      if (dot == std::string::npos) {
        (*at)[part] = value;
        break;
      }
      at = &(*at)[part];
      if (at->is_null()) *at = nlohmann::json::object();
      start = dot + 1;
    }
  }
  return root;
}

void RunConfig::set(const std::string& key, const nlohmann::json& v) {
  try {
    if (key == "checkins") checkins = v.get<std::string>();
    else if (key == "venues") venues = v.get<std::string>();
    else if (key == "social") social = v.get<std::string>();
    else if (key == "tz_offset_minutes") tz_offset_minutes = v.get<int>();
    else if (key == "events") events = v.get<std::string>();
    else if (key == "ground_truth") ground_truth = v.get<std::string>();
    else if (key == "out") out = v.get<std::string>();
    else if (key == "top_k") mining.top_k = v.get<int>();
    else if (key == "radius_m") mining.radius_m = v.get<double>();
    else if (key == "threshold_factor") mining.threshold_factor = v.get<double>();
    else if (key == "features") {
      std::vector<Feature> parsed;
      for (const auto& f : v) parsed.push_back(parse_feature(f.get<std::string>()));
      features = std::move(parsed);
    }
    else if (key == "alpha") rwr.alpha = v.get<double>();
    else if (key == "tolerance") rwr.tolerance = v.get<double>();
    else if (key == "max_iterations") rwr.max_iterations = v.get<int>();
    else if (key == "k") rwr_k = v.get<int>();
    else if (key == "n_folds") n_folds = v.get<int>();
    else if (key == "seed") seed = v.get<std::uint64_t>();
    else if (key == "ndcg_n") ndcg_n = v.get<int>();
    else if (key == "accuracy_pcts") accuracy_pcts = v.get<std::vector<double>>();
    else if (key == "niche_pct") niche_pct = v.get<double>();
    else if (key == "permutations") permutations = v.get<int>();
    else if (key == "popularity_mode") {
      const auto m = v.get<std::string>();
      if (m == "checkins") popularity_mode = PopularityMode::CheckIns;
      else if (m == "attendees") popularity_mode = PopularityMode::Attendees;
      else throw ConfigError("popularity_mode must be checkins or attendees");
    }
    else if (key == "tie_break_ablation") tie_break_ablation = v.get<bool>();
    else if (key == "model") {
      const auto m = v.get<std::string>();
      if (m == "ridge") model = ModelKind::Ridge;
      else if (m == "m5") model = ModelKind::ModelTree;
      else throw ConfigError("model must be ridge or m5");
    }
    else if (key == "with_rwr") with_rwr = v.get<bool>();
    else if (key == "all_variants") all_variants = v.get<bool>();
    else if (key == "lambda") lambda = v.get<double>();
    else if (key == "n_negatives") n_negatives = v.get<int>();
    else if (key == "min_leaf") min_leaf = v.get<int>();
    else if (key == "sd_threshold") sd_threshold = v.get<double>();
    else if (key == "inner_folds") inner_folds = v.get<int>();
    else if (key == "threads") threads = v.get<int>();
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong value type for '" + key + "'");
  }
}

void RunConfig::apply(const std::map<std::string, nlohmann::json>& values) {
  for (const auto& [k, v] : values) set(k, v);
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(tz_offset_minutes > -24 * 60 && tz_offset_minutes < 24 * 60, "tz_offset_minutes out of range");
  require(mining.top_k >= 1, "top_k must be >= 1");
  require(mining.radius_m >= 0.0, "radius_m must be >= 0");
  require(mining.threshold_factor > 0.0, "threshold_factor must be > 0");
  require(!features.empty(), "features must not be empty");
  require(rwr.alpha >= 0.0 && rwr.alpha < 1.0, "alpha must be in [0, 1)");
  require(rwr.tolerance > 0.0, "tolerance must be > 0");
  require(rwr.max_iterations >= 1, "max_iterations must be >= 1");
  require(rwr_k >= 1, "k must be >= 1");
  require(n_folds >= 2, "n_folds must be >= 2");
  require(ndcg_n >= 1, "ndcg_n must be >= 1");
  for (double p : accuracy_pcts) require(p > 0.0 && p <= 100.0, "accuracy_pcts must lie in (0, 100]");
  require(niche_pct > 0.0 && niche_pct <= 100.0, "niche_pct must lie in (0, 100]");
  require(permutations >= 0, "permutations must be >= 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(n_negatives >= 0, "n_negatives must be >= 0");
  require(min_leaf >= 1, "min_leaf must be >= 1");
  require(sd_threshold >= 0.0, "sd_threshold must be >= 0");
  require(threads >= 1, "threads must be >= 1");
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["checkins"] = checkins;
  j["venues"] = venues;
  j["social"] = social;
  j["tz_offset_minutes"] = tz_offset_minutes;
  j["events"] = events;
  j["ground_truth"] = ground_truth;
  j["out"] = out;
  j["top_k"] = mining.top_k;
  j["radius_m"] = mining.radius_m;
  j["threshold_factor"] = mining.threshold_factor;
  auto names = nlohmann::ordered_json::array();
  for (Feature f : features) names.push_back(std::string(feature_name(f)));
  j["features"] = std::move(names);
  j["alpha"] = rwr.alpha;
  j["tolerance"] = rwr.tolerance;
  j["max_iterations"] = rwr.max_iterations;
  j["k"] = rwr_k;
  j["n_folds"] = n_folds;
  j["seed"] = seed;
  j["ndcg_n"] = ndcg_n;
  j["accuracy_pcts"] = accuracy_pcts;
  j["niche_pct"] = niche_pct;
  j["permutations"] = permutations;
  j["popularity_mode"] = popularity_mode == PopularityMode::CheckIns ? "checkins" : "attendees";
  j["tie_break_ablation"] = tie_break_ablation;
  j["model"] = model == ModelKind::Ridge ? "ridge" : "m5";
  j["with_rwr"] = with_rwr;
  j["all_variants"] = all_variants;
  j["lambda"] = lambda;
  j["n_negatives"] = n_negatives;
  j["min_leaf"] = min_leaf;
  j["sd_threshold"] = sd_threshold;
  j["inner_folds"] = inner_folds;
  j["threads"] = threads;
  return j;
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.features = features;
  e.n_folds = n_folds;
  e.seed = seed;
  e.ndcg_n = ndcg_n;
  e.accuracy_pcts = accuracy_pcts;
  e.niche_pct = niche_pct;
  e.rwr_k = rwr_k;
  e.rwr = rwr;
  e.popularity_mode = popularity_mode;
  e.tie_break_ablation = tie_break_ablation;
  e.threads = threads;
  return e;
}

FusionConfig RunConfig::fusion() const {
  FusionConfig f;
  f.experiment = experiment();
  f.lambda = lambda;
  f.n_negatives = n_negatives;
  f.inner_folds = inner_folds;
  f.tree.min_leaf = min_leaf;
  f.tree.sd_threshold = sd_threshold;
  f.tree.lambda = lambda;
  if (all_variants) {
    f.variants = {{ModelKind::Ridge, false}, {ModelKind::ModelTree, false},
                  {ModelKind::Ridge, true}, {ModelKind::ModelTree, true}};
  } else {
    f.variants = {{model, with_rwr}};
  }
  return f;
}

}  // namespace geoevents
