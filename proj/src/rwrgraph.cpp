#include "geoevents/rwrgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace geoevents {

RwrConvergenceError::RwrConvergenceError(int iterations, double residual)
    : Error("random walk did not converge after " + std::to_string(iterations) +
            " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

namespace {

bool arc_allowed(NodeKind src, NodeKind dst) {
  switch (src) {
    case NodeKind::User:
      return dst == NodeKind::User || dst == NodeKind::Category;
    case NodeKind::Category:
      return dst == NodeKind::User;
    case NodeKind::Event:
      return dst == NodeKind::Category;
  }
  return false;
}

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::User:
      return "user";
    case NodeKind::Category:
      return "category";
    case NodeKind::Event:
      return "event";
  }
  return "?";
}

}  // namespace

SocioSpatialGraph SocioSpatialGraph::from_arcs(std::size_t num_users, std::size_t num_categories,
                                               std::vector<std::string> event_ids,
                                               std::span<const RawArc> arcs) {
  SocioSpatialGraph g;
  g.num_users_ = num_users;
  g.num_categories_ = num_categories;
  g.event_ids_ = std::move(event_ids);
  const std::size_t n = num_users + num_categories + g.event_ids_.size();

  const auto node_of = [&](NodeKind kind, std::uint32_t ix) -> std::uint32_t {
    const std::size_t limit = kind == NodeKind::User       ? num_users
                              : kind == NodeKind::Category ? num_categories
                                                           : g.event_ids_.size();
    if (ix >= limit) throw Error(std::string("arc endpoint out of range for ") + kind_name(kind));
    switch (kind) {
      case NodeKind::User:
        return ix;
      case NodeKind::Category:
        return static_cast<std::uint32_t>(num_users + ix);
      case NodeKind::Event:
        break;
    }
    return static_cast<std::uint32_t>(num_users + num_categories + ix);
  };

  struct Entry {
    std::uint32_t src, dst;
    double weight;
  };
  std::vector<Entry> entries;
  entries.reserve(arcs.size());
  for (const RawArc& a : arcs) {
    if (!arc_allowed(a.src_kind, a.dst_kind)) {
      throw Error(std::string("arc type ") + kind_name(a.src_kind) + "->" +
                  kind_name(a.dst_kind) + " is not allowed");
    }
    if (!std::isfinite(a.weight) || a.weight < 0.0) throw Error("arc weight must be finite and >= 0");
    if (a.weight == 0.0) continue;
    entries.push_back({node_of(a.src_kind, a.src), node_of(a.dst_kind, a.dst), a.weight});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  g.offsets_.assign(n + 1, 0);
  std::size_t i = 0;
  for (std::uint32_t node = 0; node < n; ++node) {
    const std::size_t row_begin = g.arcs_.size();
    double sum = 0.0;
    for (; i < entries.size() && entries[i].src == node; ++i) {
      if (g.arcs_.size() > row_begin && g.arcs_.back().target == entries[i].dst) {
        g.arcs_.back().weight += entries[i].weight;
      } else {
        g.arcs_.push_back(Arc{entries[i].dst, entries[i].weight});
      }
      sum += entries[i].weight;
    }
    for (std::size_t a = row_begin; a < g.arcs_.size(); ++a) g.arcs_[a].weight /= sum;
    g.offsets_[node + 1] = g.arcs_.size();
  }
  return g;
}

NodeKind SocioSpatialGraph::kind(std::size_t node) const {
  if (node < num_users_) return NodeKind::User;
  if (node < num_users_ + num_categories_) return NodeKind::Category;
  return NodeKind::Event;
}

std::optional<std::size_t> SocioSpatialGraph::find_event(std::string_view id) const {
  for (std::size_t i = 0; i < event_ids_.size(); ++i) {
    if (event_ids_[i] == id) return i;
  }
  return std::nullopt;
}

SocioSpatialGraph build_graph(const Corpus& corpus, std::span<const EventRecord> events,
                              std::span<const EventProfile> event_profiles,
                              std::span<const UserProfile> user_profiles, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (events.size() != event_profiles.size()) throw Error("one event profile per event required");
  if (user_profiles.size() != corpus.num_users()) throw Error("one user profile per user required");

  const std::size_t n_users = corpus.num_users();
  const std::size_t n_cat = corpus.num_categories();
  std::vector<SocioSpatialGraph::RawArc> arcs;

  for (std::size_t u = 0; u < n_users; ++u) {
    const UserIx ux{static_cast<std::uint32_t>(u)};
    const auto friends = corpus.friends(ux);
    for (UserIx f : friends) {
      arcs.push_back({NodeKind::User, ux.value, NodeKind::User, f.value,
                      1.0 / static_cast<double>(friends.size())});
    }
    const UserProfile& p = user_profiles[u];
    for (std::size_t c = 0; c < n_cat; ++c) {
      if (p.category_vector[c] > 0.0) {
        arcs.push_back({NodeKind::User, ux.value, NodeKind::Category,
                        static_cast<std::uint32_t>(c), p.category_vector[c]});
      }
    }
  }

  // Category as document, its visitors as terms.
  std::vector<std::int64_t> max_visits(n_cat, 0);
  for (const UserProfile& p : user_profiles) {
    for (std::size_t c = 0; c < n_cat; ++c) max_visits[c] = std::max(max_visits[c], p.category_counts[c]);
  }
  const double vocabulary = static_cast<double>(n_cat);
  for (std::size_t u = 0; u < n_users; ++u) {
    const UserProfile& p = user_profiles[u];
    const std::size_t visited = p.distinct_categories();
    if (visited == 0) continue;
    const double idf = std::log(vocabulary / static_cast<double>(visited));
    for (std::size_t c = 0; c < n_cat; ++c) {
      if (p.category_counts[c] == 0) continue;
      const double w = static_cast<double>(p.category_counts[c]) /
                       static_cast<double>(max_visits[c]) * idf;
      if (w > 0.0) {
        arcs.push_back({NodeKind::Category, static_cast<std::uint32_t>(c), NodeKind::User,
                        static_cast<std::uint32_t>(u), w});
      }
    }
  }

  std::vector<std::string> event_ids;
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (event_profiles[e].event_id != events[e].id) throw Error("event profile order mismatch");
    event_ids.push_back(events[e].id);
    for (const auto& [c, score] : top_k_categories(event_profiles[e], k)) {
      arcs.push_back({NodeKind::Event, static_cast<std::uint32_t>(e), NodeKind::Category, c.value,
                      score});
    }
  }
  return SocioSpatialGraph::from_arcs(n_users, n_cat, std::move(event_ids), arcs);
}

RwrResult rwr(const SocioSpatialGraph& graph, std::size_t event_slot, const RwrParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha < 1.0)) throw ConfigError("alpha must be in [0, 1)");
  if (!(params.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
  if (event_slot >= graph.num_events()) throw Error("event slot out of range");

  const std::size_t n = graph.num_nodes();
  const std::uint32_t source = graph.event_node(event_slot);
  std::vector<double> x(n, 0.0), next(n, 0.0);
  x[source] = 1.0;

  RwrResult result;
  result.event_id = graph.event_id(event_slot);
  result.alpha = params.alpha;
  bool converged = false;
  for (int it = 1; it <= params.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = x[i];
      if (mass == 0.0) continue;
      if (graph.dangling(i)) {
        dangling_mass += mass;
        continue;
      }
      for (const auto& arc : graph.out_arcs(i)) next[arc.target] += params.alpha * mass * arc.weight;
    }
    next[source] += params.alpha * dangling_mass + (1.0 - params.alpha);

    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - x[i]);
    x.swap(next);
    result.iterations = it;
    result.residual = residual;
    result.residual_history.push_back(residual);
    if (residual < params.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw RwrConvergenceError(result.iterations, result.residual);

  result.user_scores.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(graph.num_users()));
  result.node_scores = std::move(x);
  return result;
}

std::vector<std::vector<FeatureScore>> rwr_feature(
    const Corpus& corpus, std::span<const EventRecord> events,
    std::span<const std::vector<UserIx>> training_attendees, int k, const RwrParams& params) {
  if (training_attendees.size() != events.size()) throw Error("one attendee set per event required");
  ProfileCache cache(corpus);
  std::vector<std::vector<FeatureScore>> out;
  out.reserve(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) {
    const EventRecord& ev = events[e];
    const EventProfile profile = build_event_profile(corpus, ev, training_attendees[e],
                                                     cache.city_totals_at(ev.day));
    const auto graph = build_graph(corpus, std::span(&ev, 1), std::span(&profile, 1),
                                   cache.users_at(ev.day), k);
    const RwrResult res = rwr(graph, 0, params);
    std::vector<FeatureScore> row;
    row.reserve(corpus.num_users());
    for (std::size_t u = 0; u < corpus.num_users(); ++u) {
      FeatureScore s{Feature::RandomWalk, UserIx{static_cast<std::uint32_t>(u)}, ev.id};
      s.raw = s.oriented = res.user_scores[u];
      row.push_back(std::move(s));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<FeatureScore>> rwr_feature(const Corpus& corpus,
                                                   std::span<const EventRecord> events, int k,
                                                   const RwrParams& params) {
  std::vector<std::vector<UserIx>> all;
  all.reserve(events.size());
  for (const EventRecord& ev : events) all.push_back(ev.attendees);
  return rwr_feature(corpus, events, all, k, params);
}

void write_graph_jsonl(const Corpus& corpus, const SocioSpatialGraph& graph,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto id_of = [&](std::size_t node) -> std::string {
    switch (graph.kind(node)) {
      case NodeKind::User:
        return corpus.user_id(UserIx{static_cast<std::uint32_t>(node)});
      case NodeKind::Category:
        return corpus.category_name(
            CategoryIx{static_cast<std::uint32_t>(node - graph.num_users())});
      case NodeKind::Event:
        break;
    }
    return graph.event_id(node - graph.num_users() - graph.num_categories());
  };
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    for (const auto& arc : graph.out_arcs(i)) {
      nlohmann::ordered_json j;
      j["src_type"] = kind_name(graph.kind(i));
      j["src_id"] = id_of(i);
      j["dst_type"] = kind_name(graph.kind(arc.target));
      j["dst_id"] = id_of(arc.target);
      j["weight"] = arc.weight;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace geoevents
