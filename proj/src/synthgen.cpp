#include "geoevents/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "geoevents/rng.hpp"

namespace geoevents {

namespace {

constexpr std::array<std::string_view, kNumFactors> kFactorNames{
    "distance", "category", "temporal", "social", "popularity", "niche"};
constexpr double kLat0 = 51.5;
constexpr double kLon0 = -0.12;
constexpr double kKmPerDegLat = 111.32;
constexpr std::array<double, 3> kArchetypePeaks{8.0, 13.0, 20.0};

double circular_hours(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 24.0);
  return std::min(d, 24.0 - d);
}

std::string padded(std::string_view prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::size_t digits_for(std::size_t n) { return std::to_string(n > 0 ? n - 1 : 0).size(); }

void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  const double sd = std::sqrt(sq / n);
  for (double& x : v) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
}

}  // namespace

std::string_view factor_name(Factor f) { return kFactorNames[static_cast<std::size_t>(f)]; }

Factor parse_factor(std::string_view name) {
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    if (kFactorNames[i] == name) return static_cast<Factor>(i);
  }
  throw ConfigError("unknown factor '" + std::string(name) + "'");
}

FactorMix FactorMix::only(Factor f) {
  FactorMix m;
  m.weights.fill(0.0);
  m[f] = 1.0;
  return m;
}

Factor FactorMix::dominant() const {
  return static_cast<Factor>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

namespace {

void validate_mix(const FactorMix& m, const std::string& where) {
  double sum = 0.0;
  for (double w : m.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(where + " weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(where + " weights must sum to 1");
}

}  // namespace

int SynthConfig::total_events() const {
  if (event_groups.empty()) return n_events;
  int total = 0;
  for (const auto& g : event_groups) total += g.count;
  return total;
}

std::vector<FactorMix> SynthConfig::event_mixes() const {
  if (event_groups.empty()) return std::vector<FactorMix>(static_cast<std::size_t>(n_events), factor_mix);
  std::vector<FactorMix> out;
  for (const auto& g : event_groups) out.insert(out.end(), static_cast<std::size_t>(g.count), g.mix);
  return out;
}

void SynthConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(n_users, "n_users");
  positive(n_venues, "n_venues");
  positive(n_categories, "n_categories");
  positive(n_days, "n_days");
  positive(min_event_size, "min_event_size");
  if (event_groups.empty()) {
    positive(n_events, "n_events");
    validate_mix(factor_mix, "factor_mix");
  } else {
    for (const auto& g : event_groups) {
      positive(g.count, "event group count");
      validate_mix(g.mix, "event group mix");
    }
  }
  if (n_categories > n_venues) throw ConfigError("n_categories must not exceed n_venues");
  if (warmup_days < 0 || warmup_days >= n_days) throw ConfigError("warmup_days must be in [0, n_days)");
  const auto slots = static_cast<std::int64_t>(n_days - warmup_days) * n_venues;
  if (total_events() > slots) {
    throw ConfigError("infeasible config: " + std::to_string(total_events()) +
                      " events exceed " + std::to_string(slots) + " venue-day slots");
  }
  if (!(grid_extent_km > 0.0)) throw ConfigError("grid_extent_km must be > 0");
  if (!(background_rate >= 0.0)) throw ConfigError("background_rate must be >= 0");
  if (!(friendship_degree >= 0.0) || friendship_degree >= n_users) {
    throw ConfigError("friendship_degree must be in [0, n_users)");
  }
  if (!(event_size >= 1.0)) throw ConfigError("event_size must be >= 1");
  if (!(attendance_strength >= 0.0)) throw ConfigError("attendance_strength must be >= 0");
  if (!(centrality_weight >= 0.0)) throw ConfigError("centrality_weight must be >= 0");
  if (!(category_zipf >= 0.0) || !(popularity_zipf >= 0.0)) throw ConfigError("zipf exponents must be >= 0");
  if (!(preference_concentration > 0.0)) throw ConfigError("preference_concentration must be > 0");
  if (!(niche_fraction >= 0.0 && niche_fraction <= 1.0)) throw ConfigError("niche_fraction must be in [0, 1]");
  if (!(venue_decay_km > 0.0)) throw ConfigError("venue_decay_km must be > 0");
  parse_day(start_date);
}

namespace {

FactorMix mix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("factor mix must be an object");
  FactorMix m;
  m.weights.fill(0.0);
  for (const auto& [key, value] : j.items()) m[parse_factor(key)] = value.get<double>();
  return m;
}

nlohmann::ordered_json mix_to_json(const FactorMix& m) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kNumFactors; ++i) j[std::string(kFactorNames[i])] = m.weights[i];
  return j;
}

}  // namespace

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be an object");
  SynthConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_users") c.n_users = v.get<int>();
      else if (key == "n_venues") c.n_venues = v.get<int>();
      else if (key == "n_categories") c.n_categories = v.get<int>();
      else if (key == "n_days") c.n_days = v.get<int>();
      else if (key == "n_events") c.n_events = v.get<int>();
      else if (key == "warmup_days") c.warmup_days = v.get<int>();
      else if (key == "grid_extent_km") c.grid_extent_km = v.get<double>();
      else if (key == "factor_mix") c.factor_mix = mix_from_json(v);
      else if (key == "event_groups") {
        for (const auto& g : v) {
          for (const auto& [gk, _] : g.items()) {
            if (gk != "mix" && gk != "count") throw ConfigError("unknown event group key '" + gk + "'");
          }
          c.event_groups.push_back({mix_from_json(g.at("mix")), g.at("count").get<int>()});
        }
      }
      else if (key == "background_rate") c.background_rate = v.get<double>();
      else if (key == "friendship_degree") c.friendship_degree = v.get<double>();
      else if (key == "event_size") c.event_size = v.get<double>();
      else if (key == "min_event_size") c.min_event_size = v.get<int>();
      else if (key == "attendance_strength") c.attendance_strength = v.get<double>();
      else if (key == "centrality_weight") c.centrality_weight = v.get<double>();
      else if (key == "category_zipf") c.category_zipf = v.get<double>();
      else if (key == "popularity_zipf") c.popularity_zipf = v.get<double>();
      else if (key == "preference_concentration") c.preference_concentration = v.get<double>();
      else if (key == "niche_fraction") c.niche_fraction = v.get<double>();
      else if (key == "venue_decay_km") c.venue_decay_km = v.get<double>();
      else if (key == "start_date") c.start_date = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown synth config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad synth config value: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json SynthConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n_users"] = n_users;
  j["n_venues"] = n_venues;
  j["n_categories"] = n_categories;
  j["n_days"] = n_days;
  j["n_events"] = n_events;
  j["warmup_days"] = warmup_days;
  j["grid_extent_km"] = grid_extent_km;
  j["factor_mix"] = mix_to_json(factor_mix);
  if (!event_groups.empty()) {
    auto groups = nlohmann::ordered_json::array();
    for (const auto& g : event_groups) groups.push_back({{"mix", mix_to_json(g.mix)}, {"count", g.count}});
    j["event_groups"] = std::move(groups);
  }
  j["background_rate"] = background_rate;
  j["friendship_degree"] = friendship_degree;
  j["event_size"] = event_size;
  j["min_event_size"] = min_event_size;
  j["attendance_strength"] = attendance_strength;
  j["centrality_weight"] = centrality_weight;
  j["category_zipf"] = category_zipf;
  j["popularity_zipf"] = popularity_zipf;
  j["preference_concentration"] = preference_concentration;
  j["niche_fraction"] = niche_fraction;
  j["venue_decay_km"] = venue_decay_km;
  j["start_date"] = start_date;
  j["seed"] = seed;
  return j;
}

namespace {

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : c_(c), rng_(substream_seed(c.seed, "synth")) {}

  SynthResult run() {
    place_venues();
    make_users();
    make_social_graph();
    background();
    plant_events();
    return std::move(out_);
  }

 private:
  struct Point {
    double x, y;
  };

  const SynthConfig& c_;
  Rng rng_;
  SynthResult out_;
  std::vector<Point> venue_pos_;
  std::vector<int> venue_cat_;
  std::vector<std::vector<int>> cat_venues_;
  std::vector<double> cat_pop_;
  std::vector<std::vector<double>> prefs_;
  std::vector<Point> home_;
  std::vector<std::vector<int>> friends_;
  std::map<std::pair<int, int>, int> venue_day_;  // (venue, day) -> check-ins
  std::int32_t day0_ = 0;

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }

  static double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

  std::string venue_id(std::size_t v) const {
    return padded("v", v, digits_for(static_cast<std::size_t>(c_.n_venues)));
  }
  std::string user_id(std::size_t u) const {
    return padded("u", u, digits_for(static_cast<std::size_t>(c_.n_users)));
  }
  std::string category_name(std::size_t k) const {
    return padded("category_", k, digits_for(static_cast<std::size_t>(c_.n_categories)));
  }

  void place_venues() {
    const auto n_cat = static_cast<std::size_t>(c_.n_categories);
    // Category popularity follows a Zipf law in index order.
    cat_pop_.resize(n_cat);
    for (std::size_t k = 0; k < n_cat; ++k) cat_pop_[k] = std::pow(static_cast<double>(k + 1), -c_.category_zipf);
    const double total = std::accumulate(cat_pop_.begin(), cat_pop_.end(), 0.0);
    for (double& p : cat_pop_) p /= total;

    std::discrete_distribution<int> pick_cat(cat_pop_.begin(), cat_pop_.end());
    cat_venues_.assign(n_cat, {});
    for (int v = 0; v < c_.n_venues; ++v) {
      const int cat = v < c_.n_categories ? v : pick_cat(rng_);
      const Point p{uniform() * c_.grid_extent_km, uniform() * c_.grid_extent_km};
      venue_pos_.push_back(p);
      venue_cat_.push_back(cat);
      cat_venues_[static_cast<std::size_t>(cat)].push_back(v);
      const double lon_scale = kKmPerDegLat * std::cos(kLat0 * std::acos(-1.0) / 180.0);
      out_.venues.push_back({venue_id(static_cast<std::size_t>(v)), kLat0 + p.y / kKmPerDegLat,
                             kLon0 + p.x / lon_scale, category_name(static_cast<std::size_t>(cat))});
    }
  }

  void make_users() {
    const auto n_cat = static_cast<std::size_t>(c_.n_categories);
    for (int u = 0; u < c_.n_users; ++u) {
      SynthUser s;
      s.id = user_id(static_cast<std::size_t>(u));
      s.home_x_km = uniform() * c_.grid_extent_km;
      s.home_y_km = uniform() * c_.grid_extent_km;
      s.archetype = std::uniform_int_distribution<int>(0, 2)(rng_);
      s.peak_hour = kArchetypePeaks[static_cast<std::size_t>(s.archetype)] + normal(0.0, 1.0);
      home_.push_back({s.home_x_km, s.home_y_km});

      // Niche-taste users mirror the popularity law onto the rarest categories.
      s.niche_taste = uniform() < c_.niche_fraction;
      std::vector<double> pref(n_cat);
      double sum = 0.0;
      for (std::size_t k = 0; k < n_cat; ++k) {
        const double base = s.niche_taste ? cat_pop_[n_cat - 1 - k] : cat_pop_[k];
        pref[k] = std::gamma_distribution<double>(c_.preference_concentration * base, 1.0)(rng_);
        sum += pref[k];
      }
      if (!(sum > 0.0)) {
        pref = cat_pop_;
        if (s.niche_taste) std::reverse(pref.begin(), pref.end());
        sum = 1.0;
      }
      for (double& p : pref) p /= sum;
      prefs_.push_back(std::move(pref));
      out_.users.push_back(std::move(s));
    }
  }

  void make_social_graph() {
    const auto n = static_cast<std::size_t>(c_.n_users);
    std::vector<std::set<int>> adj(n);
    const auto target = static_cast<std::size_t>(std::llround(c_.friendship_degree * static_cast<double>(n) / 2.0));
    std::size_t edges = 0;
    const auto add = [&](int a, int b) {
      if (a == b || adj[static_cast<std::size_t>(a)].contains(b)) return false;
      adj[static_cast<std::size_t>(a)].insert(b);
      adj[static_cast<std::size_t>(b)].insert(a);
      ++edges;
      return true;
    };

    // Spatial phase: partners drawn with exponentially decaying distance.
    const double per_user = 0.7 * c_.friendship_degree / 2.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n && edges < target; ++i) {
      for (std::size_t j = 0; j < n; ++j) w[j] = j == i ? 0.0 : std::exp(-dist(home_[i], home_[j]) / 1.0);
      std::discrete_distribution<int> pick(w.begin(), w.end());
      const int m = static_cast<int>(per_user) + (uniform() < per_user - std::floor(per_user) ? 1 : 0);
      for (int k = 0; k < m && edges < target; ++k) add(static_cast<int>(i), pick(rng_));
    }
    // Triadic closure up to the target mean degree.
    std::uniform_int_distribution<int> any(0, c_.n_users - 1);
    for (std::size_t attempts = 0; edges < target && attempts < 50 * target + 1000; ++attempts) {
      const int a = any(rng_);
      const auto& fa = adj[static_cast<std::size_t>(a)];
      if (fa.empty()) {
        add(a, any(rng_));
        continue;
      }
      const int b = *std::next(fa.begin(), std::uniform_int_distribution<long>(0, static_cast<long>(fa.size()) - 1)(rng_));
      const auto& fb = adj[static_cast<std::size_t>(b)];
      const int cc = *std::next(fb.begin(), std::uniform_int_distribution<long>(0, static_cast<long>(fb.size()) - 1)(rng_));
      add(a, cc);
    }
    friends_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      friends_[i].assign(adj[i].begin(), adj[i].end());
      for (int j : adj[i]) {
        if (static_cast<std::size_t>(j) > i) out_.edges.push_back({user_id(i), user_id(static_cast<std::size_t>(j))});
      }
    }
  }

  void add_checkin(int u, int v, int day, double hour) {
    int h = static_cast<int>(std::lround(hour));
    h = ((h % 24) + 24) % 24;
    const int minute = std::uniform_int_distribution<int>(0, 59)(rng_);
    const int second = std::uniform_int_distribution<int>(0, 59)(rng_);
    const std::int64_t ts = (static_cast<std::int64_t>(day0_) + day) * 86400 + h * 3600 + minute * 60 + second;
    out_.checkins.push_back({out_.users[static_cast<std::size_t>(u)].id, venue_id(static_cast<std::size_t>(v)), ts});
    ++venue_day_[{v, day}];
  }

  void background() {
    day0_ = parse_day(c_.start_date).value;
    const auto n_cat = static_cast<std::size_t>(c_.n_categories);
    // Per user and category, venues weighted by distance from home.
    std::vector<std::discrete_distribution<int>> pick_cat;
    std::vector<std::vector<std::discrete_distribution<int>>> pick_venue(static_cast<std::size_t>(c_.n_users));
    for (int u = 0; u < c_.n_users; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      pick_cat.emplace_back(prefs_[uu].begin(), prefs_[uu].end());
      for (std::size_t k = 0; k < n_cat; ++k) {
        std::vector<double> w;
        for (int v : cat_venues_[k]) {
          w.push_back(std::exp(-dist(home_[uu], venue_pos_[static_cast<std::size_t>(v)]) / c_.venue_decay_km) + 1e-12);
        }
        pick_venue[uu].emplace_back(w.begin(), w.end());
      }
    }
    std::poisson_distribution<int> count(c_.background_rate);
    for (int day = 0; day < c_.n_days; ++day) {
      for (int u = 0; u < c_.n_users; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        const int k = c_.background_rate > 0.0 ? count(rng_) : 0;
        for (int i = 0; i < k; ++i) {
          const auto cat = static_cast<std::size_t>(pick_cat[uu](rng_));
          const int v = cat_venues_[cat][static_cast<std::size_t>(pick_venue[uu][cat](rng_))];
          add_checkin(u, v, day, normal(out_.users[uu].peak_hour, 2.5));
        }
      }
    }
  }

  bool meets_baseline(int v, int day) const {
    int total = 0, active = 0, observed = 0;
    for (auto it = venue_day_.lower_bound({v, 0}); it != venue_day_.end() && it->first.first == v; ++it) {
      total += it->second;
      ++active;
      if (it->first.second == day) observed = it->second;
    }
    return active > 0 && static_cast<double>(observed) * active >= 3.0 * total;
  }

  void plant_events() {
    const auto mixes = c_.event_mixes();
    const std::size_t n_events = mixes.size();
    const int span = c_.n_days - c_.warmup_days;
    const auto n_cat = static_cast<std::size_t>(c_.n_categories);

    std::vector<int> days;
    {
      std::vector<int> pool(static_cast<std::size_t>(span));
      std::iota(pool.begin(), pool.end(), c_.warmup_days);
      std::shuffle(pool.begin(), pool.end(), rng_);
      for (std::size_t i = 0; i < n_events; ++i) days.push_back(pool[i % pool.size()]);
    }
    std::vector<double> multiplier(n_events, 1.0);
    {
      std::vector<std::size_t> rank(n_events);
      std::iota(rank.begin(), rank.end(), 1);
      std::shuffle(rank.begin(), rank.end(), rng_);
      double mean = 0.0;
      for (std::size_t i = 0; i < n_events; ++i) {
        multiplier[i] = std::pow(static_cast<double>(rank[i]), -c_.popularity_zipf);
        mean += multiplier[i] / static_cast<double>(n_events);
      }
      for (double& m : multiplier) m /= mean;
    }

    std::set<int> used_venues;
    std::set<std::pair<int, int>> used_slots;
    const std::size_t mid_lo = n_cat / 4, mid_hi = std::max(mid_lo + 1, n_cat / 2);
    const std::size_t rare_lo = std::min(n_cat - 1, (3 * n_cat) / 4);

    for (std::size_t e = 0; e < n_events; ++e) {
      const FactorMix& mix = mixes[e];
      const int day = days[e];

      std::size_t theme;
      if (mix[Factor::Niche] > 0.0 && mix[Factor::Niche] >= mix[Factor::Category]) {
        theme = std::uniform_int_distribution<std::size_t>(rare_lo, n_cat - 1)(rng_);
      } else if (mix[Factor::Category] > 0.0) {
        theme = std::uniform_int_distribution<std::size_t>(mid_lo, std::min(mid_hi, n_cat) - 1)(rng_);
      } else {
        theme = static_cast<std::size_t>(std::discrete_distribution<int>(cat_pop_.begin(), cat_pop_.end())(rng_));
      }
      const int venue = choose_venue(theme, day, mix, used_venues, used_slots);
      used_venues.insert(venue);
      used_slots.insert({venue, day});
      const int peak = std::uniform_int_distribution<int>(7, 22)(rng_);

      const double wp = mix[Factor::Popularity];
      const double size_f = c_.event_size * ((1.0 - wp) + wp * multiplier[e]);
      const int size = std::clamp(static_cast<int>(std::lround(size_f)), c_.min_event_size,
                                  std::max(c_.min_event_size, c_.n_users / 2));

      const auto attendees = sample_attendees(mix, venue, theme, peak, day, size);

      PlantedEvent pe;
      pe.venue = venue_id(static_cast<std::size_t>(venue));
      pe.date = format_day(Day{day0_ + day});
      pe.peak_hour = peak;
      pe.theme_category = category_name(theme);
      pe.dominant = mix.dominant();
      pe.mix = mix;
      for (int u : attendees) pe.attendees.push_back(out_.users[static_cast<std::size_t>(u)].id);
      std::sort(pe.attendees.begin(), pe.attendees.end());
      out_.events.push_back(std::move(pe));
    }
  }

  int choose_venue(std::size_t theme, int day, const FactorMix& mix, const std::set<int>& used,
                   const std::set<std::pair<int, int>>& slots) {
    const bool themed = mix[Factor::Niche] > 0.0 || mix[Factor::Category] > 0.0;
    const auto free = [&](int v) { return !used.contains(v) && !slots.contains({v, day}); };
    std::vector<int> candidates;
    if (themed) {
      for (int v : cat_venues_[theme]) {
        if (free(v)) candidates.push_back(v);
      }
    }
    if (candidates.empty()) {
      for (int v = 0; v < c_.n_venues; ++v) {
        if (free(v)) candidates.push_back(v);
      }
    }
    if (candidates.empty()) {
      for (int v = 0; v < c_.n_venues; ++v) {
        if (!slots.contains({v, day})) candidates.push_back(v);
      }
    }
    return candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng_)];
  }

  std::vector<int> sample_attendees(const FactorMix& mix, int venue, std::size_t theme, int peak, int day,
                                    int size) {
    const auto n = static_cast<std::size_t>(c_.n_users);
    std::vector<double> zd(n), zt(n), zc(n);
    for (std::size_t u = 0; u < n; ++u) {
      zd[u] = -dist(home_[u], venue_pos_[static_cast<std::size_t>(venue)]);
      zt[u] = -circular_hours(out_.users[u].peak_hour, peak);
      zc[u] = prefs_[u][theme];
    }
    standardize(zd);
    standardize(zt);
    standardize(zc);
    const double s = c_.attendance_strength;
    std::vector<double> fixed(n);
    for (std::size_t u = 0; u < n; ++u) {
      fixed[u] = s * (mix[Factor::Distance] * zd[u] + mix[Factor::Temporal] * zt[u] +
                      (mix[Factor::Category] + mix[Factor::Niche]) * zc[u]);
    }

    std::vector<char> in(n, 0);
    std::vector<int> friends_in(n, 0);  // attending friends
    std::vector<int> degree_in(n, 0);   // attending friends of an attendee
    std::vector<int> chosen;
    std::vector<double> logit(n), w(n);
    const auto draw_one = [&] {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < n; ++u) {
        if (in[u]) continue;
        double social = friends_in[u];
        if (c_.centrality_weight > 0.0 && friends_in[u] > 0) {
          int best = 0;
          for (int f : friends_[u]) {
            if (in[static_cast<std::size_t>(f)]) best = std::max(best, degree_in[static_cast<std::size_t>(f)]);
          }
          social += c_.centrality_weight * best;
        }
        logit[u] = fixed[u] + s * mix[Factor::Social] * social;
        top = std::max(top, logit[u]);
      }
      if (!std::isfinite(top)) return false;
      for (std::size_t u = 0; u < n; ++u) w[u] = in[u] ? 0.0 : std::exp(logit[u] - top);
      const auto u = static_cast<std::size_t>(std::discrete_distribution<int>(w.begin(), w.end())(rng_));
      in[u] = 1;
      chosen.push_back(static_cast<int>(u));
      for (int f : friends_[u]) {
        ++friends_in[static_cast<std::size_t>(f)];
        if (in[static_cast<std::size_t>(f)]) {
          ++degree_in[static_cast<std::size_t>(f)];
          ++degree_in[u];
        }
      }
      add_checkin(static_cast<int>(u), venue, day, normal(peak, 1.0));
      return true;
    };
    for (int i = 0; i < size; ++i) {
      if (!draw_one()) break;
    }
    while (!meets_baseline(venue, day)) {
      if (!draw_one()) throw Error("cannot plant an event above three times its venue baseline");
    }
    return chosen;
  }
};

}  // namespace

SynthResult generate(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

Corpus SynthResult::corpus() const { return Corpus::from_records(venues, checkins, edges, 0); }

nlohmann::ordered_json SynthResult::ground_truth() const {
  nlohmann::ordered_json j;
  auto evs = nlohmann::ordered_json::array();
  for (const auto& e : events) {
    evs.push_back({{"venue", e.venue},
                   {"date", e.date},
                   {"peak_hour", e.peak_hour},
                   {"theme_category", e.theme_category},
                   {"dominant_factor", std::string(factor_name(e.dominant))},
                   {"mix", mix_to_json(e.mix)},
                   {"attendees", e.attendees}});
  }
  j["events"] = std::move(evs);
  auto us = nlohmann::ordered_json::array();
  for (const auto& u : users) {
    us.push_back({{"id", u.id},
                  {"home_x_km", u.home_x_km},
                  {"home_y_km", u.home_y_km},
                  {"archetype", u.archetype},
                  {"niche_taste", u.niche_taste},
                  {"peak_hour", u.peak_hour}});
  }
  j["users"] = std::move(us);
  return j;
}

void write_synth(const SynthResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_corpus(result.corpus(), dir / "checkins.csv", dir / "venues.csv", dir / "social.csv");
  std::ofstream out(dir / "ground_truth.json");
  if (!out) throw Error("cannot write " + (dir / "ground_truth.json").string());
  out << result.ground_truth().dump(2) << '\n';
}

std::vector<GroundTruthEvent> SynthResult::truth() const {
  std::vector<GroundTruthEvent> out;
  for (const auto& e : events) out.push_back({e.venue, parse_day(e.date), e.dominant, e.theme_category});
  return out;
}

std::vector<EventRecord> planted_events(const Corpus& corpus, std::span<const EventRecord> mined,
                                        std::span<const GroundTruthEvent> truth) {
  std::vector<EventRecord> out;
  for (const EventRecord& e : mined) {
    const bool planted = std::any_of(truth.begin(), truth.end(), [&](const GroundTruthEvent& t) {
      return t.day == e.day && t.venue == corpus.venue(e.anchor).id;
    });
    if (planted) out.push_back(e);
  }
  return out;
}

std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    std::vector<GroundTruthEvent> out;
    for (const auto& e : j.at("events")) {
      out.push_back({e.at("venue").get<std::string>(), parse_day(e.at("date").get<std::string>()),
                     parse_factor(e.at("dominant_factor").get<std::string>()),
                     e.at("theme_category").get<std::string>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace geoevents
