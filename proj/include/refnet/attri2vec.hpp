#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "refnet/embedding.hpp"
#include "refnet/features.hpp"
#include "refnet/nn.hpp"
#include "refnet/skipgram.hpp"
#include "refnet/walks.hpp"

namespace refnet {

struct Attri2VecConfig {
  std::size_t hidden_dim = 128;
  std::size_t epochs = 10;
  double learning_rate = 1e-2;
  bool sigmoid_mapping = true;  // linear mapping behind this flag
  // Short unsupervised-sampler walks; the 10x80 Node2Vec schedule is not
  // needed to fit a feature mapping and would dominate the run time.
  WalkConfig walks{.walks_per_node = 4,
                   .walk_length = 5,
                   .window = 2,
                   .negatives_per_positive = 5,
                   .embedding_dim = 128};

  void validate() const {
    if (hidden_dim == 0 || epochs == 0 || learning_rate <= 0)
      throw std::invalid_argument("attri2vec config values must be positive");
    walks.validate();
  }
};

struct Attri2VecResult {
  EmbeddingMatrix embedding;
  Dense mapping;  // hidden_dim x feature_dim
  bool sigmoid_mapping = true;
  std::vector<double> epoch_mean_losses;
};

// Attribute-to-vector mapping: embedding(u) = act(W x_u), with free context
// vectors on the other side of an SGNS loss over walk pairs. The mapping is
// inductive: any feature vector embeds without retraining.
inline Attri2VecResult train_attri2vec(const Network& net, const FeatureTable& features,
                                       const Attri2VecConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (features.rows.rows() != net.node_count())
    throw NumericError("attri2vec: feature table does not match node count");
  const std::size_t n = net.node_count();
  const std::size_t d = cfg.hidden_dim;
  const std::size_t f = features.dim();

  Rng root(seed);
  auto walks = biased_walks(net, cfg.walks, root.derive("walks").key());
  NegativeSampler sampler(walks, n);

  Dense w(d, f);
  {
    Rng init = root.derive("init");
    double bound = std::sqrt(6.0 / static_cast<double>(d + f));
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = init.uniform(-bound, bound);
  }
  Dense context(n, d);

  AdamState w_adam(w.size(), cfg.learning_rate);
  LazyAdamRows ctx_adam(n, d, cfg.learning_rate);

  auto embed_one = [&](const double* x, double* z) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = dot(w.row(i), x, f);
      z[i] = cfg.sigmoid_mapping ? detail::sigmoid(s) : s;
    }
  };

  Attri2VecResult res;
  std::vector<double> z(d), dz(d), grad_row(d);
  std::vector<double> w_grad(w.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng neg_rng = root.derive("negatives", epoch);
    double epoch_loss = 0;
    std::size_t count = 0;
    for_each_skipgram_pair(walks, cfg.walks.window, [&](NodeId target, NodeId ctx_node) {
      const double* x = features.rows.row(target);
      embed_one(x, z.data());
      std::fill(dz.begin(), dz.end(), 0.0);

      auto push = [&](NodeId c, double label) {
        epoch_loss += sgns_term(z.data(), context.row(c), label, d, dz.data(), grad_row.data());
        ctx_adam.update(context, c, grad_row.data());
      };
      push(ctx_node, 1.0);
      for (std::size_t k = 0; k < cfg.walks.negatives_per_positive; ++k)
        push(sampler.sample(neg_rng), 0.0);

      std::fill(w_grad.begin(), w_grad.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        double di = dz[i];
        if (cfg.sigmoid_mapping) di *= z[i] * (1.0 - z[i]);
        if (di == 0.0) continue;
        axpy(di, x, w_grad.data() + i * f, f);
      }
      adam_step(w_adam, w.values(), w_grad);
      ++count;
    });
    res.epoch_mean_losses.push_back(epoch_loss /
                                    static_cast<double>(std::max<std::size_t>(1, count)));
  }

  res.embedding.vectors = Dense(n, d);
  for (NodeId u = 0; u < n; ++u)
    embed_one(features.rows.row(u), res.embedding.vectors.row(u));
  res.embedding.node_labels.resize(n);
  for (NodeId u = 0; u < n; ++u) res.embedding.node_labels[u] = net.label(u);
  res.embedding.model = "attri2vec";
  res.mapping = std::move(w);
  res.sigmoid_mapping = cfg.sigmoid_mapping;
  return res;
}

// The inductive map for a node unseen at training time.
inline std::vector<double> attri2vec_embed(const Attri2VecResult& model,
                                           const std::vector<double>& x) {
  const std::size_t d = model.mapping.rows(), f = model.mapping.cols();
  if (x.size() != f) throw NumericError("attri2vec_embed: feature dim mismatch");
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = dot(model.mapping.row(i), x.data(), f);
    z[i] = model.sigmoid_mapping ? detail::sigmoid(s) : s;
  }
  return z;
}

}  // namespace refnet
