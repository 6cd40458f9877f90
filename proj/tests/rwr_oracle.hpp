#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "geoevents/rwrgraph.hpp"

namespace testutil {

// Solves (I - alpha P'^T) x = (1 - alpha) e where P' sends dangling rows to the event.
inline Eigen::VectorXd rwr_dense(const geoevents::SocioSpatialGraph& g, std::size_t slot, double alpha) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const auto ev = static_cast<Eigen::Index>(g.event_node(slot));
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g.dangling(static_cast<std::size_t>(i))) {
      P(i, ev) = 1.0;
      continue;
    }
    for (const auto& a : g.out_arcs(static_cast<std::size_t>(i))) P(i, a.target) += a.weight;
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(ev) = 1.0 - alpha;
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - alpha * P.transpose();
  return A.partialPivLu().solve(e);
}

// Random typed graph with up to `max_nodes` nodes in total.
inline geoevents::SocioSpatialGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes) {
  using geoevents::NodeKind;
  using RawArc = geoevents::SocioSpatialGraph::RawArc;
  std::uniform_int_distribution<std::size_t> events_d(1, 3);
  const std::size_t ne = events_d(rng);
  std::uniform_int_distribution<std::size_t> users_d(1, max_nodes - ne - 1);
  const std::size_t nu = users_d(rng);
  std::uniform_int_distribution<std::size_t> cats_d(1, max_nodes - ne - nu);
  const std::size_t nc = cats_d(rng);
  std::uniform_real_distribution<double> w(0.01, 3.0);
  std::bernoulli_distribution p_uu(0.15), p_uc(0.25), p_cu(0.3), p_ec(0.5);
  std::vector<RawArc> arcs;
  for (std::uint32_t i = 0; i < nu; ++i) {
    for (std::uint32_t j = 0; j < nu; ++j) {
      if (i != j && p_uu(rng)) arcs.push_back({NodeKind::User, i, NodeKind::User, j, w(rng)});
    }
    for (std::uint32_t c = 0; c < nc; ++c) {
      if (p_uc(rng)) arcs.push_back({NodeKind::User, i, NodeKind::Category, c, w(rng)});
      if (p_cu(rng)) arcs.push_back({NodeKind::Category, c, NodeKind::User, i, w(rng)});
    }
  }
  std::vector<std::string> ids;
  for (std::uint32_t e = 0; e < ne; ++e) {
    ids.push_back("e" + std::to_string(e));
    bool any = false;
    for (std::uint32_t c = 0; c < nc; ++c) {
      if (p_ec(rng)) {
        arcs.push_back({NodeKind::Event, e, NodeKind::Category, c, w(rng)});
        any = true;
      }
    }
    if (!any) arcs.push_back({NodeKind::Event, e, NodeKind::Category, 0, 1.0});
  }
  return geoevents::SocioSpatialGraph::from_arcs(nu, nc, ids, arcs);
}

}  // namespace testutil
