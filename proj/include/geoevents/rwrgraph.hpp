#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoevents/corpus.hpp"
#include "geoevents/eventmine.hpp"
#include "geoevents/profiles.hpp"
#include "geoevents/scorers.hpp"

namespace geoevents {

enum class NodeKind : std::uint8_t { User, Category, Event };

/// Directed weighted graph over users, categories and events with
/// row-normalized transition probabilities.
///
/// Node numbering: users [0, U), categories [U, U + C), events after that.
/// Permitted arcs: user->user, user->category, category->user,
/// event->category. Nodes without outgoing weight are dangling.
class SocioSpatialGraph {
 public:
  struct Arc {
    std::uint32_t target = 0;
    double weight = 0.0;
  };

  /// Unnormalized arc between typed endpoints (indices local to the kind).
  struct RawArc {
    NodeKind src_kind;
    std::uint32_t src;
    NodeKind dst_kind;
    std::uint32_t dst;
    double weight;
  };

  /// Merges parallel arcs, drops zero weights and divides each node's arcs
  /// by their sum. Throws Error on a disallowed arc type, an out-of-range
  /// endpoint or a negative/non-finite weight.
  static SocioSpatialGraph from_arcs(std::size_t num_users, std::size_t num_categories,
                                     std::vector<std::string> event_ids,
                                     std::span<const RawArc> arcs);

  std::size_t num_nodes() const noexcept { return offsets_.size() - 1; }
  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_categories() const noexcept { return num_categories_; }
  std::size_t num_events() const noexcept { return event_ids_.size(); }

  std::uint32_t user_node(UserIx u) const { return u.value; }
  std::uint32_t category_node(CategoryIx c) const {
    return static_cast<std::uint32_t>(num_users_ + c.get());
  }
  std::uint32_t event_node(std::size_t slot) const {
    return static_cast<std::uint32_t>(num_users_ + num_categories_ + slot);
  }
  NodeKind kind(std::size_t node) const;

  const std::string& event_id(std::size_t slot) const { return event_ids_.at(slot); }
  std::optional<std::size_t> find_event(std::string_view id) const;

  std::span<const Arc> out_arcs(std::size_t node) const {
    return {arcs_.data() + offsets_[node], arcs_.data() + offsets_[node + 1]};
  }
  bool dangling(std::size_t node) const { return offsets_[node] == offsets_[node + 1]; }
  std::size_t num_arcs() const noexcept { return arcs_.size(); }

 private:
  std::size_t num_users_ = 0;
  std::size_t num_categories_ = 0;
  std::vector<std::string> event_ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Arc> arcs_;
};

/// Builds the graph from profiles taken at the appropriate pre-event cutoff.
///
/// Raw weights: user i -> friend j is 1/|friends(i)|; user u -> category c is
/// the user's TF-IDF entry; category c -> user u is
/// (N^c_u / max_v N^c_v) * ln(|C| / #categories u visited); event -> category
/// is the event score for the event's top-k categories. `user_profiles` is
/// indexed by UserIx; `event_profiles` aligns with `events`.
SocioSpatialGraph build_graph(const Corpus& corpus, std::span<const EventRecord> events,
                              std::span<const EventProfile> event_profiles,
                              std::span<const UserProfile> user_profiles, int k = 10);

struct RwrParams {
  double alpha = 0.85;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct RwrResult {
  std::string event_id;
  double alpha = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> user_scores;  // indexed by UserIx
  std::vector<double> node_scores;  // every node, sums to 1
  std::vector<double> residual_history;
};

class RwrConvergenceError : public Error {
 public:
  RwrConvergenceError(int iterations, double residual);
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Power iteration for x = alpha * P^T x + (1 - alpha) * e_event, starting
/// from e_event; the mass on dangling nodes is sent back to the event node.
/// Stops when the L1 change drops below the tolerance.
RwrResult rwr(const SocioSpatialGraph& graph, std::size_t event_slot,
              const RwrParams& params = {});

/// Random-walk scores of every user for every event, one graph per event
/// built at the event's cutoff day. `training_attendees[i]` (sorted) feeds
/// the profile of events[i]. Result is indexed [event][user].
std::vector<std::vector<FeatureScore>> rwr_feature(
    const Corpus& corpus, std::span<const EventRecord> events,
    std::span<const std::vector<UserIx>> training_attendees, int k = 10,
    const RwrParams& params = {});

/// Same with every attendee as training attendee.
std::vector<std::vector<FeatureScore>> rwr_feature(const Corpus& corpus,
                                                   std::span<const EventRecord> events,
                                                   int k = 10, const RwrParams& params = {});

/// JSON-lines dump, one `{src_type, src_id, dst_type, dst_id, weight}` per arc.
void write_graph_jsonl(const Corpus& corpus, const SocioSpatialGraph& graph,
                       const std::filesystem::path& path);

}  // namespace geoevents
