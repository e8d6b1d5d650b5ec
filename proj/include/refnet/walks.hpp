#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "refnet/graph.hpp"
#include "refnet/rng.hpp"

namespace refnet {

struct WalkConfig {
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 80;
  double return_p = 1.0;
  double inout_q = 1.0;
  std::size_t window = 5;
  std::size_t negatives_per_positive = 5;
  // Not fixed by the walk procedure itself but carried with it: skip-gram
  // output dimension and training schedule.
  std::size_t embedding_dim = 128;
  std::size_t epochs = 1;
  double learning_rate = 1e-2;

  void validate() const {
    if (walks_per_node == 0 || walk_length == 0 || window == 0 || embedding_dim == 0 ||
        return_p <= 0 || inout_q <= 0 || negatives_per_positive == 0)
      throw std::invalid_argument("walk config values must be positive");
    if (window >= walk_length) throw std::invalid_argument("window must be < walk_length");
  }
};

// Undirected weighted view used for walking and neighborhood aggregation.
// Referral edges keep their direction in the data model; traversal merges
// both directions (a bipartite digraph has no directed 2-paths to walk).
class WalkView {
 public:
  explicit WalkView(const Network& net) : adj_(net.node_count()) {
    for (NodeId u = 0; u < net.node_count(); ++u)
      for (const auto& [v, w] : net.neighbors(u)) {
        insert(u, v, w);
        if (net.directed()) insert(v, u, w);
      }
  }

  std::size_t node_count() const { return adj_.size(); }
  const std::vector<std::pair<NodeId, double>>& neighbors(NodeId u) const { return adj_[u]; }

  bool has_edge(NodeId u, NodeId v) const {
    const auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    return it != row.end() && it->first == v;
  }

 private:
  void insert(NodeId u, NodeId v, double w) {
    auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    if (it != row.end() && it->first == v)
      it->second += w;
    else
      row.insert(it, {v, w});
  }

  std::vector<std::vector<std::pair<NodeId, double>>> adj_;
};

namespace detail {
inline NodeId weighted_choice(const std::vector<std::pair<NodeId, double>>& options,
                              const std::vector<double>& weights, Rng& rng) {
  double total = 0;
  for (double w : weights) total += w;
  double r = rng.next_double() * total;
  double acc = 0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    acc += weights[i];
    if (r < acc) return options[i].first;
  }
  return options.back().first;
}
}  // namespace detail

// Second-order (p,q)-biased walk from one start node. Walk seeds derive from
// (node, walk index), so generation order never matters.
inline std::vector<NodeId> biased_walk(const WalkView& view, NodeId start, const WalkConfig& cfg,
                                       Rng rng) {
  std::vector<NodeId> walk{start};
  if (view.neighbors(start).empty()) return walk;  // dead end: length-1 walk

  std::vector<double> weights;
  while (walk.size() < cfg.walk_length) {
    NodeId cur = walk.back();
    const auto& nbrs = view.neighbors(cur);
    if (nbrs.empty()) break;
    if (walk.size() == 1) {
      weights.resize(nbrs.size());
      for (std::size_t i = 0; i < nbrs.size(); ++i) weights[i] = nbrs[i].second;
      walk.push_back(detail::weighted_choice(nbrs, weights, rng));
      continue;
    }
    NodeId prev = walk[walk.size() - 2];
    weights.resize(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      auto [nxt, w] = nbrs[i];
      double bias;
      if (nxt == prev)
        bias = 1.0 / cfg.return_p;
      else if (view.has_edge(nxt, prev))
        bias = 1.0;
      else
        bias = 1.0 / cfg.inout_q;
      weights[i] = w * bias;
    }
    walk.push_back(detail::weighted_choice(nbrs, weights, rng));
  }
  return walk;
}

inline std::vector<std::vector<NodeId>> biased_walks(const Network& net, const WalkConfig& cfg,
                                                     std::uint64_t seed) {
  cfg.validate();
  WalkView view(net);
  Rng root(seed);
  std::vector<std::vector<NodeId>> walks;
  walks.reserve(net.node_count() * cfg.walks_per_node);
  for (std::size_t k = 0; k < cfg.walks_per_node; ++k)
    for (NodeId u = 0; u < net.node_count(); ++u)
      walks.push_back(biased_walk(view, u, cfg, root.derive("walk", u, k)));
  return walks;
}

// Visits every in-window (center, context) co-occurrence once.
template <typename Fn>
inline void for_each_skipgram_pair(const std::vector<std::vector<NodeId>>& walks,
                                   std::size_t window, Fn&& fn) {
  for (const auto& walk : walks)
    for (std::size_t i = 0; i < walk.size(); ++i) {
      std::size_t lo = i > window ? i - window : 0;
      std::size_t hi = std::min(walk.size(), i + window + 1);
      for (std::size_t j = lo; j < hi; ++j)
        if (j != i) fn(walk[i], walk[j]);
    }
}

}  // namespace refnet
