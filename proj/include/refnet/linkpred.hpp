#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/dense.hpp"
#include "refnet/embedding.hpp"
#include "refnet/graph.hpp"
#include "refnet/nn.hpp"
#include "refnet/rng.hpp"

namespace refnet {

struct LinkPredError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using EdgePair = std::pair<NodeId, NodeId>;

struct EdgeSplit {
  Network train_graph;  // original graph minus test positives
  std::vector<EdgePair> train_positives;
  std::vector<EdgePair> train_negatives;
  std::vector<EdgePair> test_positives;
  std::vector<EdgePair> test_negatives;
  double test_fraction = 0;
  std::uint64_t seed = 0;
};

// Removes a uniform sample of edges as test positives, re-sampling any edge
// whose removal would isolate an endpoint, and draws an equal number of
// verified non-edges per side. Negatives respect the bipartite role
// constraint when roles are present.
inline EdgeSplit split_edges(const Network& net, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 0.5))
    throw LinkPredError("test_fraction must be in (0, 0.5)");
  auto all_edges = net.edges();
  const std::size_t m = all_edges.size();
  const auto want = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  if (want == 0 || m < 4) throw LinkPredError("graph too small to split");

  Rng rng(seed);
  rng = rng.derive("edge_split");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  // total degree (in+out for directed graphs): a node may not drop to zero
  std::vector<std::size_t> remaining_degree(net.node_count(), 0);
  for (const auto& [u, v, w] : all_edges) {
    ++remaining_degree[u];
    ++remaining_degree[v];
  }

  std::vector<bool> removed(m, false);
  std::vector<EdgePair> test_pos;
  for (std::size_t idx : order) {
    if (test_pos.size() == want) break;
    auto [u, v, w] = all_edges[idx];
    if (remaining_degree[u] <= 1 || remaining_degree[v] <= 1) continue;  // would isolate
    removed[idx] = true;
    --remaining_degree[u];
    --remaining_degree[v];
    test_pos.emplace_back(u, v);
  }
  if (test_pos.size() < want)
    throw LinkPredError("cannot remove " + std::to_string(want) +
                        " edges without isolating nodes");
  std::sort(test_pos.begin(), test_pos.end());

  EdgeSplit split;
  split.test_fraction = test_fraction;
  split.seed = seed;
  split.test_positives = test_pos;
  split.train_graph = Network(net.node_count(), net.directed());
  if (net.has_roles()) {
    std::vector<Role> roles(net.node_count());
    for (NodeId u = 0; u < net.node_count(); ++u) roles[u] = net.role(u);
    split.train_graph.set_roles(std::move(roles));
  }
  {
    std::vector<std::string> labels(net.node_count());
    for (NodeId u = 0; u < net.node_count(); ++u) labels[u] = net.label(u);
    split.train_graph.set_labels(std::move(labels));
  }
  for (std::size_t idx = 0; idx < m; ++idx) {
    if (removed[idx]) continue;
    auto [u, v, w] = all_edges[idx];
    split.train_graph.add_edge(u, v, w);
    split.train_positives.emplace_back(u, v);
  }

  // candidate endpoints for negatives: PC x SC when roles exist, else any pair
  std::vector<NodeId> sources, targets;
  for (NodeId u = 0; u < net.node_count(); ++u) {
    if (!net.has_roles()) {
      sources.push_back(u);
      targets.push_back(u);
    } else if (net.role(u) == Role::PC) {
      sources.push_back(u);
    } else if (net.role(u) == Role::SC) {
      targets.push_back(u);
    }
  }
  const double possible = static_cast<double>(sources.size()) * static_cast<double>(targets.size());
  if (possible < 2.0 * static_cast<double>(m) + 4)
    throw LinkPredError("not enough non-edges to sample negatives");

  std::set<EdgePair> used;
  auto draw_negatives = [&](std::size_t count) {
    std::vector<EdgePair> out;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * count + 10000;
    while (out.size() < count) {
      if (++attempts > max_attempts) throw LinkPredError("negative sampling did not terminate");
      NodeId u = sources[rng.index(sources.size())];
      NodeId v = targets[rng.index(targets.size())];
      if (u == v || net.has_edge(u, v)) continue;
      if (!net.directed() && net.has_edge(v, u)) continue;
      if (!used.insert({u, v}).second) continue;
      out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  split.test_negatives = draw_negatives(split.test_positives.size());
  split.train_negatives = draw_negatives(split.train_positives.size());
  return split;
}

enum class PairOperator { Hadamard, L1, L2, Average };

inline PairOperator pair_operator_from_name(const std::string& name) {
  if (name == "hadamard") return PairOperator::Hadamard;
  if (name == "l1") return PairOperator::L1;
  if (name == "l2") return PairOperator::L2;
  if (name == "average") return PairOperator::Average;
  throw LinkPredError("unknown pair operator: " + name);
}

// Binary operator over endpoint embeddings, one feature row per pair.
inline Dense pair_features(const EmbeddingMatrix& emb, const std::vector<EdgePair>& pairs,
                           PairOperator op = PairOperator::Hadamard) {
  const std::size_t d = emb.dim();
  Dense rows(pairs.size(), d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [u, v] = pairs[i];
    if (u >= emb.node_count() || v >= emb.node_count())
      throw LinkPredError("pair references nodes missing from the embedding: " +
                          std::to_string(u) + "," + std::to_string(v));
    const double* a = emb.vectors.row(u);
    const double* b = emb.vectors.row(v);
    double* out = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      switch (op) {
        case PairOperator::Hadamard: out[j] = a[j] * b[j]; break;
        case PairOperator::L1: out[j] = std::abs(a[j] - b[j]); break;
        case PairOperator::L2: out[j] = (a[j] - b[j]) * (a[j] - b[j]); break;
        case PairOperator::Average: out[j] = 0.5 * (a[j] + b[j]); break;
      }
    }
  }
  return rows;
}

enum class LinkClassifier { Logistic, MlpHidden20 };

struct TrainedClassifier {
  Mlp model;

  std::vector<double> predict(const Dense& rows) const {
    Dense out = model.forward(rows);
    std::vector<double> p(out.values());
    for (double& x : p) x = clamp_prob(x);
    return p;
  }
};

struct ClassifierConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 50;
  double learning_rate = 1e-3;
  // The reference logistic-regression path is L2-regularized (it would
  // otherwise overfit memorized embedding coordinates); the MLP path is not.
  double logistic_weight_decay = 1e-2;
  double mlp_weight_decay = 0.0;
};

// logistic = single sigmoid layer; mlp = one hidden layer of 20 relu units.
inline TrainedClassifier train_link_classifier(const Dense& rows,
                                               const std::vector<double>& labels,
                                               LinkClassifier kind, std::uint64_t seed,
                                               const ClassifierConfig& cfg = {}) {
  if (rows.rows() != labels.size()) throw LinkPredError("rows/labels length mismatch");
  if (rows.rows() == 0) throw LinkPredError("no training rows");
  bool has_pos = false, has_neg = false;
  for (double y : labels) (y > 0.5 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw LinkPredError("degenerate single-class training input");

  Mlp model = kind == LinkClassifier::Logistic
                  ? Mlp({rows.cols(), 1}, {Activation::Sigmoid})
                  : Mlp({rows.cols(), 20, 1}, {Activation::Relu, Activation::Sigmoid});
  double decay = kind == LinkClassifier::Logistic ? cfg.logistic_weight_decay
                                                  : cfg.mlp_weight_decay;
  train_binary_classifier(model, rows, labels,
                          {cfg.epochs, cfg.batch_size, cfg.learning_rate, decay}, seed);
  return {std::move(model)};
}

struct LinkMetrics {
  double loss = 0;      // out-of-sample BCE
  double accuracy = 0;  // threshold 0.5
  double auc = 0;       // rank-based ROC AUC
};

inline double roc_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // average ranks over ties
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double pos_ranks = 0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] > 0.5) {
      pos_ranks += rank[k];
      ++n_pos;
    }
  std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw LinkPredError("auc undefined on single-class labels");
  return (pos_ranks - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline LinkMetrics evaluate_predictions(const std::vector<double>& probs,
                                        const std::vector<double>& labels) {
  LinkMetrics m;
  m.loss = bce_loss(probs, labels).loss;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if ((probs[i] >= 0.5) == (labels[i] > 0.5)) ++correct;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(probs.size());
  m.auc = roc_auc(probs, labels);
  return m;
}

}  // namespace refnet
