#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "refnet/embedding.hpp"
#include "refnet/graph.hpp"
#include "refnet/nn.hpp"
#include "refnet/rng.hpp"
#include "refnet/walks.hpp"

namespace refnet {

// Unigram^0.75 negative sampler over walk-corpus frequencies.
class NegativeSampler {
 public:
  NegativeSampler(const std::vector<std::vector<NodeId>>& walks, std::size_t node_count,
                  double power = 0.75) {
    std::vector<double> freq(node_count, 0.0);
    for (const auto& w : walks)
      for (NodeId u : w) freq[u] += 1.0;
    cum_.resize(node_count);
    double acc = 0;
    for (std::size_t u = 0; u < node_count; ++u) {
      acc += freq[u] > 0 ? std::pow(freq[u], power) : 0.0;
      cum_[u] = acc;
    }
    if (acc <= 0) throw std::invalid_argument("negative sampler: empty walk corpus");
  }

  NodeId sample(Rng& rng) const {
    double r = rng.next_double() * cum_.back();
    auto it = std::lower_bound(cum_.begin(), cum_.end(), r);
    return static_cast<NodeId>(it - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

struct SgnsResult {
  EmbeddingMatrix embedding;
  double initial_loss = 0;  // corpus loss before training, fixed negatives
  double final_loss = 0;    // same evaluation after training
  std::vector<double> epoch_mean_losses;
};

namespace detail {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}

// One SGNS term: BCE of sigma(a.b) against the label. Accumulates d/da into
// da_accum, writes d/db into db_out, returns the loss term. Shared by the
// skip-gram and attri2vec trainers and finite-difference checked directly.
inline double sgns_term(const double* a, const double* b, double label, std::size_t d,
                        double* da_accum, double* db_out) {
  double p = detail::sigmoid(dot(a, b, d));
  double g = p - label;
  for (std::size_t j = 0; j < d; ++j) {
    da_accum[j] += g * b[j];
    db_out[j] = g * a[j];
  }
  return -std::log(clamp_prob(label > 0.5 ? p : 1.0 - p));
}

// Skip-gram with negative sampling over walk co-occurrences; both tables
// adapt via lazy Adam. Deterministic given (walks, cfg, seed).
inline SgnsResult train_skipgram(const std::vector<std::vector<NodeId>>& walks,
                                 std::size_t node_count, const WalkConfig& cfg,
                                 std::uint64_t seed) {
  if (walks.empty()) throw std::invalid_argument("train_skipgram: no walks");
  const std::size_t d = cfg.embedding_dim;
  Rng root(seed);

  Dense in(node_count, d), out(node_count, d);
  {
    Rng init = root.derive("init");
    for (std::size_t i = 0; i < in.size(); ++i)
      in.data()[i] = (init.next_double() - 0.5) / static_cast<double>(d);
  }
  NegativeSampler sampler(walks, node_count);

  // Fixed evaluation pass: same pairs and same negatives before and after.
  // Capped; it is a progress measurement, not part of training.
  auto evaluate = [&]() {
    Rng eval = root.derive("eval");
    const std::size_t cap = 300000;
    double loss = 0;
    std::size_t count = 0;
    for_each_skipgram_pair(walks, cfg.window, [&](NodeId target, NodeId context) {
      if (count >= cap) return;
      double s = dot(in.row(target), out.row(context), d);
      loss += -std::log(clamp_prob(detail::sigmoid(s)));
      for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
        NodeId neg = sampler.sample(eval);
        double sn = dot(in.row(target), out.row(neg), d);
        loss += -std::log(clamp_prob(1.0 - detail::sigmoid(sn)));
      }
      ++count;
    });
    return loss / static_cast<double>(std::max<std::size_t>(1, count));
  };

  SgnsResult res;
  res.initial_loss = evaluate();

  LazyAdamRows adam_in(node_count, d, cfg.learning_rate);
  LazyAdamRows adam_out(node_count, d, cfg.learning_rate);
  std::vector<double> grad_target(d);
  std::vector<double> grad_row(d);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng neg_rng = root.derive("negatives", epoch);
    double epoch_loss = 0;
    std::size_t count = 0;
    for_each_skipgram_pair(walks, cfg.window, [&](NodeId target, NodeId context) {
      std::fill(grad_target.begin(), grad_target.end(), 0.0);
      const double* t = in.row(target);

      auto push = [&](NodeId ctx, double label) {
        epoch_loss += sgns_term(t, out.row(ctx), label, d, grad_target.data(), grad_row.data());
        adam_out.update(out, ctx, grad_row.data());
      };

      push(context, 1.0);
      for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k)
        push(sampler.sample(neg_rng), 0.0);
      adam_in.update(in, target, grad_target.data());
      ++count;
    });
    res.epoch_mean_losses.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(1, count)));
  }

  res.final_loss = evaluate();
  res.embedding.vectors = std::move(in);
  res.embedding.model = "node2vec";
  res.embedding.feature_set = "structural";
  return res;
}

// Full Node2Vec path: biased walks then SGNS.
inline SgnsResult train_node2vec(const Network& net, const WalkConfig& cfg, std::uint64_t seed) {
  auto walks = biased_walks(net, cfg, Rng(seed).derive("walks").key());
  auto res = train_skipgram(walks, net.node_count(), cfg, Rng(seed).derive("sgns").key());
  res.embedding.node_labels.resize(net.node_count());
  for (NodeId u = 0; u < net.node_count(); ++u) res.embedding.node_labels[u] = net.label(u);
  return res;
}

}  // namespace refnet
