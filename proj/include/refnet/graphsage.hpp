#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "refnet/embedding.hpp"
#include "refnet/features.hpp"
#include "refnet/nn.hpp"
#include "refnet/rng.hpp"
#include "refnet/skipgram.hpp"
#include "refnet/walks.hpp"

namespace refnet {

struct SageConfig {
  std::array<std::size_t, 2> layer_sizes = {20, 20};
  std::size_t epochs = 20;
  double dropout = 0.3;
  double learning_rate = 1e-3;
  std::array<std::size_t, 2> neighbor_samples = {10, 5};
  std::size_t walk_length = 5;
  std::size_t walks_per_node = 1;
  std::size_t negatives_per_positive = 1;
  std::size_t batch_size = 50;

  void validate() const {
    if (layer_sizes[0] == 0 || layer_sizes[1] == 0 || epochs == 0 || batch_size == 0 ||
        walk_length < 2 || walks_per_node == 0 || learning_rate <= 0)
      throw std::invalid_argument("graphsage config values must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
      throw std::invalid_argument("graphsage dropout must be in [0,1)");
  }
};

// Two-layer mean-aggregator parameters in one flat vector:
// W1 (h1 x 2f), b1, W2 (h2 x 2h1), b2. Layer 1 is relu, layer 2 identity,
// final output L2-normalized.
struct SageParams {
  std::size_t f = 0, h1 = 0, h2 = 0;
  std::vector<double> theta;

  SageParams() = default;
  SageParams(std::size_t feat_dim, std::size_t hidden1, std::size_t hidden2)
      : f(feat_dim), h1(hidden1), h2(hidden2), theta(size_needed(), 0.0) {}

  std::size_t size_needed() const { return h1 * 2 * f + h1 + h2 * 2 * h1 + h2; }
  double* w1() { return theta.data(); }
  const double* w1() const { return theta.data(); }
  double* b1() { return theta.data() + h1 * 2 * f; }
  const double* b1() const { return theta.data() + h1 * 2 * f; }
  double* w2() { return theta.data() + h1 * 2 * f + h1; }
  const double* w2() const { return theta.data() + h1 * 2 * f + h1; }
  double* b2() { return theta.data() + h1 * 2 * f + h1 + h2 * 2 * h1; }
  const double* b2() const { return theta.data() + h1 * 2 * f + h1 + h2 * 2 * h1; }

  void init_xavier(Rng rng) {
    double bound1 = std::sqrt(6.0 / static_cast<double>(2 * f + h1));
    for (std::size_t i = 0; i < h1 * 2 * f; ++i) w1()[i] = rng.uniform(-bound1, bound1);
    double bound2 = std::sqrt(6.0 / static_cast<double>(2 * h1 + h2));
    for (std::size_t i = 0; i < h2 * 2 * h1; ++i) w2()[i] = rng.uniform(-bound2, bound2);
  }
};

// Sampled 2-hop computation tree for one node occurrence.
struct SageTree {
  NodeId root;
  std::vector<NodeId> level1;               // sampled neighbors of root
  std::vector<std::vector<NodeId>> level2;  // sampled neighbors per level-1 node
};

inline SageTree sample_tree(const WalkView& view, NodeId root,
                            const std::array<std::size_t, 2>& fanout, Rng& rng) {
  SageTree t;
  t.root = root;
  const auto& nbrs = view.neighbors(root);
  if (!nbrs.empty())
    for (std::size_t i = 0; i < fanout[0]; ++i)
      t.level1.push_back(nbrs[rng.index(nbrs.size())].first);
  t.level2.resize(t.level1.size());
  for (std::size_t i = 0; i < t.level1.size(); ++i) {
    const auto& nb2 = view.neighbors(t.level1[i]);
    if (nb2.empty()) continue;
    for (std::size_t j = 0; j < fanout[1]; ++j)
      t.level2[i].push_back(nb2[rng.index(nb2.size())].first);
  }
  return t;
}

// Full-neighborhood tree, used at inference time: deterministic, no sampling.
inline SageTree full_tree(const WalkView& view, NodeId root) {
  SageTree t;
  t.root = root;
  for (const auto& [v, w] : view.neighbors(root)) t.level1.push_back(v);
  t.level2.resize(t.level1.size());
  for (std::size_t i = 0; i < t.level1.size(); ++i)
    for (const auto& [v, w] : view.neighbors(t.level1[i])) t.level2[i].push_back(v);
  return t;
}

namespace sage_detail {

// Inverted-dropout masks for one tree evaluation: one mask per layer input
// vector. Instances: index 0 = root, 1..k = level-1 nodes.
struct TreeDropout {
  std::vector<std::vector<double>> layer1;  // masks over feature vectors (root, l1, l2 flat)
  std::vector<std::vector<double>> layer2;  // masks over h1 vectors (root, l1)
};

struct TreeCache {
  std::vector<std::vector<double>> x0;    // dropped features per position
  std::vector<std::vector<double>> cat1;  // [x0 ; mean x0(children)] per h1 instance
  std::vector<std::vector<double>> pre1;  // pre-relu
  std::vector<std::vector<double>> h1d;   // post-relu, post layer-2 dropout
  std::vector<double> cat2;               // [h1d(root) ; mean h1d(l1)]
  std::vector<double> y;                  // pre-normalization output
  std::vector<double> z;                  // normalized output
  double norm = 0;
};

// positions: 0 = root; 1..L = level1; then level2 flattened per parent.
inline std::size_t tree_positions(const SageTree& t) {
  std::size_t n = 1 + t.level1.size();
  for (const auto& l2 : t.level2) n += l2.size();
  return n;
}

inline NodeId node_at(const SageTree& t, std::size_t pos) {
  if (pos == 0) return t.root;
  if (pos <= t.level1.size()) return t.level1[pos - 1];
  std::size_t idx = pos - 1 - t.level1.size();
  for (std::size_t i = 0; i < t.level2.size(); ++i) {
    if (idx < t.level2[i].size()) return t.level2[i][idx];
    idx -= t.level2[i].size();
  }
  throw NumericError("sage tree position out of range");
}

inline void forward_tree(const SageParams& p, const SageTree& t, const FeatureTable& feats,
                         const TreeDropout* drop, TreeCache& c) {
  const std::size_t f = p.f, h1 = p.h1, h2 = p.h2;
  const std::size_t n_pos = tree_positions(t);
  const std::size_t n_h1 = 1 + t.level1.size();

  c.x0.assign(n_pos, std::vector<double>(f));
  for (std::size_t pos = 0; pos < n_pos; ++pos) {
    const double* x = feats.rows.row(node_at(t, pos));
    for (std::size_t j = 0; j < f; ++j)
      c.x0[pos][j] = x[j] * (drop ? drop->layer1[pos][j] : 1.0);
  }

  c.cat1.assign(n_h1, std::vector<double>(2 * f, 0.0));
  c.pre1.assign(n_h1, std::vector<double>(h1));
  c.h1d.assign(n_h1, std::vector<double>(h1));
  std::size_t l2_base = 1 + t.level1.size();
  std::size_t l2_off = 0;
  for (std::size_t inst = 0; inst < n_h1; ++inst) {
    auto& cat = c.cat1[inst];
    const auto& self = c.x0[inst];  // positions 0..L are root then level-1 nodes
    for (std::size_t j = 0; j < f; ++j) cat[j] = self[j];
    if (inst == 0) {
      if (!t.level1.empty()) {
        for (std::size_t i = 0; i < t.level1.size(); ++i)
          for (std::size_t j = 0; j < f; ++j) cat[f + j] += c.x0[1 + i][j];
        for (std::size_t j = 0; j < f; ++j) cat[f + j] /= static_cast<double>(t.level1.size());
      }
    } else {
      const auto& kids = t.level2[inst - 1];
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t j = 0; j < f; ++j) cat[f + j] += c.x0[l2_base + l2_off + i][j];
      if (!kids.empty())
        for (std::size_t j = 0; j < f; ++j) cat[f + j] /= static_cast<double>(kids.size());
      l2_off += kids.size();
    }
    for (std::size_t o = 0; o < h1; ++o) {
      double z = p.b1()[o] + dot(p.w1() + o * 2 * f, cat.data(), 2 * f);
      c.pre1[inst][o] = z;
      double a = z > 0 ? z : 0.0;
      c.h1d[inst][o] = a * (drop ? drop->layer2[inst][o] : 1.0);
    }
  }

  c.cat2.assign(2 * h1, 0.0);
  for (std::size_t o = 0; o < h1; ++o) c.cat2[o] = c.h1d[0][o];
  if (!t.level1.empty()) {
    for (std::size_t i = 1; i < n_h1; ++i)
      for (std::size_t o = 0; o < h1; ++o) c.cat2[h1 + o] += c.h1d[i][o];
    for (std::size_t o = 0; o < h1; ++o) c.cat2[h1 + o] /= static_cast<double>(t.level1.size());
  }

  c.y.assign(h2, 0.0);
  for (std::size_t o = 0; o < h2; ++o)
    c.y[o] = p.b2()[o] + dot(p.w2() + o * 2 * h1, c.cat2.data(), 2 * h1);

  c.norm = std::sqrt(dot(c.y.data(), c.y.data(), h2));
  c.z.assign(h2, 0.0);
  if (c.norm > 1e-12)
    for (std::size_t o = 0; o < h2; ++o) c.z[o] = c.y[o] / c.norm;
}

// Accumulates d(loss)/d(theta) given d(loss)/d(z).
inline void backward_tree(const SageParams& p, const SageTree& t, const TreeCache& c,
                          const TreeDropout* drop, const std::vector<double>& dz,
                          std::vector<double>& grad) {
  const std::size_t f = p.f, h1 = p.h1, h2 = p.h2;
  const std::size_t n_h1 = 1 + t.level1.size();

  // through normalization: dy = (dz - z (z . dz)) / norm
  std::vector<double> dy(h2, 0.0);
  if (c.norm > 1e-12) {
    double zdz = dot(c.z.data(), dz.data(), h2);
    for (std::size_t o = 0; o < h2; ++o) dy[o] = (dz[o] - c.z[o] * zdz) / c.norm;
  }

  double* gw2 = grad.data() + h1 * 2 * f + h1;
  double* gb2 = grad.data() + h1 * 2 * f + h1 + h2 * 2 * h1;
  std::vector<double> dcat2(2 * h1, 0.0);
  for (std::size_t o = 0; o < h2; ++o) {
    double d = dy[o];
    if (d == 0.0) continue;
    axpy(d, c.cat2.data(), gw2 + o * 2 * h1, 2 * h1);
    gb2[o] += d;
    axpy(d, p.w2() + o * 2 * h1, dcat2.data(), 2 * h1);
  }

  double* gw1 = grad.data();
  double* gb1 = grad.data() + h1 * 2 * f;
  const double inv_l1 =
      t.level1.empty() ? 0.0 : 1.0 / static_cast<double>(t.level1.size());
  for (std::size_t inst = 0; inst < n_h1; ++inst) {
    for (std::size_t o = 0; o < h1; ++o) {
      double dh1d = inst == 0 ? dcat2[o] : dcat2[h1 + o] * inv_l1;
      if (drop) dh1d *= drop->layer2[inst][o];
      if (c.pre1[inst][o] <= 0) continue;  // relu gate
      if (dh1d == 0.0) continue;
      axpy(dh1d, c.cat1[inst].data(), gw1 + o * 2 * f, 2 * f);
      gb1[o] += dh1d;
    }
  }
}

}  // namespace sage_detail

struct SageResult {
  EmbeddingMatrix embedding;
  SageParams params;
  std::vector<double> epoch_mean_losses;
};

struct SagePair {
  SageTree a, b;
  double label;
};

// Unsupervised GraphSAGE: positives are (start, later-node) pairs from short
// uniform walks, negatives draw from the degree^0.75 distribution, loss is
// BCE on sigma(z_u . z_v). Deterministic given (net, features, cfg, seed).
inline SageResult train_graphsage(const Network& net, const FeatureTable& features,
                                  const SageConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (features.rows.rows() != net.node_count())
    throw NumericError("graphsage: feature table does not match node count");
  const std::size_t n = net.node_count();
  WalkView view(net);
  Rng root(seed);

  // positive pairs from uniform random walks
  std::vector<std::pair<NodeId, NodeId>> positives;
  for (std::size_t k = 0; k < cfg.walks_per_node; ++k)
    for (NodeId u = 0; u < n; ++u) {
      Rng wrng = root.derive("walk", u, k);
      NodeId cur = u;
      for (std::size_t step = 1; step < cfg.walk_length; ++step) {
        const auto& nbrs = view.neighbors(cur);
        if (nbrs.empty()) break;
        cur = nbrs[wrng.index(nbrs.size())].first;
        positives.emplace_back(u, cur);
      }
    }
  if (positives.empty()) throw NumericError("graphsage: no positive pairs (empty graph?)");

  // degree^0.75 negative distribution
  std::vector<double> cum(n);
  double acc = 0;
  for (NodeId u = 0; u < n; ++u) {
    acc += std::pow(static_cast<double>(view.neighbors(u).size()), 0.75);
    cum[u] = acc;
  }
  auto sample_negative = [&](Rng& rng) {
    double r = rng.next_double() * cum.back();
    return static_cast<NodeId>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
  };

  SageParams params(features.dim(), cfg.layer_sizes[0], cfg.layer_sizes[1]);
  params.init_xavier(root.derive("init"));
  AdamState adam(params.theta.size(), cfg.learning_rate);

  SageResult res;
  sage_detail::TreeCache cache_a, cache_b;
  std::vector<double> grad(params.theta.size());
  std::vector<double> dza(params.h2), dzb(params.h2);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = root.derive("epoch", epoch);
    double epoch_loss = 0;
    std::size_t pair_index = 0;

    // interleave one negative batch element per positive
    std::vector<SagePair> batch;
    auto flush = [&]() {
      if (batch.empty()) return;
      std::fill(grad.begin(), grad.end(), 0.0);
      Rng drng = erng.derive("dropout", pair_index);
      std::size_t mask_id = 0;
      auto make_drop = [&](const SageTree& t) {
        sage_detail::TreeDropout d;
        if (cfg.dropout <= 0) return d;
        Rng mrng = drng.derive("mask", mask_id++);
        double keep = 1.0 - cfg.dropout;
        std::size_t n_pos = sage_detail::tree_positions(t);
        d.layer1.assign(n_pos, std::vector<double>(params.f));
        for (auto& m : d.layer1)
          for (auto& v : m) v = mrng.bernoulli(keep) ? 1.0 / keep : 0.0;
        d.layer2.assign(1 + t.level1.size(), std::vector<double>(params.h1));
        for (auto& m : d.layer2)
          for (auto& v : m) v = mrng.bernoulli(keep) ? 1.0 / keep : 0.0;
        return d;
      };
      for (const auto& pr : batch) {
        auto da = make_drop(pr.a);
        auto db = make_drop(pr.b);
        const auto* dpa = cfg.dropout > 0 ? &da : nullptr;
        const auto* dpb = cfg.dropout > 0 ? &db : nullptr;
        sage_detail::forward_tree(params, pr.a, features, dpa, cache_a);
        sage_detail::forward_tree(params, pr.b, features, dpb, cache_b);
        double s = dot(cache_a.z.data(), cache_b.z.data(), params.h2);
        double p = detail::sigmoid(s);
        epoch_loss += -std::log(clamp_prob(pr.label > 0.5 ? p : 1.0 - p));
        double g = (p - pr.label) / static_cast<double>(batch.size());
        for (std::size_t o = 0; o < params.h2; ++o) {
          dza[o] = g * cache_b.z[o];
          dzb[o] = g * cache_a.z[o];
        }
        sage_detail::backward_tree(params, pr.a, cache_a, dpa, dza, grad);
        sage_detail::backward_tree(params, pr.b, cache_b, dpb, dzb, grad);
      }
      adam_step(adam, params.theta, grad);
      batch.clear();
    };

    for (std::size_t i = 0; i < positives.size(); ++i) {
      Rng srng = erng.derive("sample", i);
      auto [u, v] = positives[i];
      batch.push_back({sample_tree(view, u, cfg.neighbor_samples, srng),
                       sample_tree(view, v, cfg.neighbor_samples, srng), 1.0});
      for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
        NodeId w = sample_negative(srng);
        batch.push_back({sample_tree(view, u, cfg.neighbor_samples, srng),
                         sample_tree(view, w, cfg.neighbor_samples, srng), 0.0});
      }
      ++pair_index;
      if (batch.size() >= cfg.batch_size) flush();
    }
    flush();
    res.epoch_mean_losses.push_back(
        epoch_loss / static_cast<double>(positives.size() * (1 + cfg.negatives_per_positive)));
  }

  // inference embeddings over full neighborhoods, dropout off
  res.embedding.vectors = Dense(n, params.h2);
  sage_detail::TreeCache cache;
  for (NodeId u = 0; u < n; ++u) {
    sage_detail::forward_tree(params, full_tree(view, u), features, nullptr, cache);
    for (std::size_t o = 0; o < params.h2; ++o) res.embedding.vectors(u, o) = cache.z[o];
  }
  res.embedding.node_labels.resize(n);
  for (NodeId u = 0; u < n; ++u) res.embedding.node_labels[u] = net.label(u);
  res.embedding.model = "graphsage";
  res.params = std::move(params);
  return res;
}

// Loss of one frozen (trees, labels) plan as a function of theta; the unit
// tests difference this against backward_tree.
inline double sage_plan_loss(const SageParams& params, const FeatureTable& features,
                             const std::vector<SagePair>& plan) {
  sage_detail::TreeCache ca, cb;
  double loss = 0;
  for (const auto& pr : plan) {
    sage_detail::forward_tree(params, pr.a, features, nullptr, ca);
    sage_detail::forward_tree(params, pr.b, features, nullptr, cb);
    double p = detail::sigmoid(dot(ca.z.data(), cb.z.data(), params.h2));
    loss += -std::log(clamp_prob(pr.label > 0.5 ? p : 1.0 - p));
  }
  return loss / static_cast<double>(plan.size());
}

inline std::vector<double> sage_plan_gradient(const SageParams& params,
                                              const FeatureTable& features,
                                              const std::vector<SagePair>& plan) {
  sage_detail::TreeCache ca, cb;
  std::vector<double> grad(params.theta.size(), 0.0);
  std::vector<double> dza(params.h2), dzb(params.h2);
  for (const auto& pr : plan) {
    sage_detail::forward_tree(params, pr.a, features, nullptr, ca);
    sage_detail::forward_tree(params, pr.b, features, nullptr, cb);
    double p = detail::sigmoid(dot(ca.z.data(), cb.z.data(), params.h2));
    double g = (p - pr.label) / static_cast<double>(plan.size());
    for (std::size_t o = 0; o < params.h2; ++o) {
      dza[o] = g * cb.z[o];
      dzb[o] = g * ca.z[o];
    }
    sage_detail::backward_tree(params, pr.a, ca, nullptr, dza, grad);
    sage_detail::backward_tree(params, pr.b, cb, nullptr, dzb, grad);
  }
  return grad;
}

}  // namespace refnet
