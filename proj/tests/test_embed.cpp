#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "refnet/attri2vec.hpp"
#include "refnet/graphsage.hpp"
#include "refnet/skipgram.hpp"
#include "refnet/walks.hpp"

using namespace refnet;

namespace {

Network weighted_star() {
  Network net(4, false);
  net.add_edge(0, 1, 1.0);
  net.add_edge(0, 2, 2.0);
  net.add_edge(0, 3, 3.0);
  return net;
}

Network two_cliques(std::size_t k) {
  Network net(2 * k, false);
  for (NodeId u = 0; u < k; ++u)
    for (NodeId v = u + 1; v < k; ++v) {
      net.add_edge(u, v, 1.0);
      net.add_edge(static_cast<NodeId>(k + u), static_cast<NodeId>(k + v), 1.0);
    }
  net.add_edge(0, static_cast<NodeId>(k), 1.0);  // single bridge
  return net;
}

double cosine(const double* a, const double* b, std::size_t d) {
  double ab = dot(a, b, d), aa = dot(a, a, d), bb = dot(b, b, d);
  return ab / std::sqrt(aa * bb + 1e-30);
}

FeatureTable constant_features(std::size_t n, std::vector<double> row) {
  FeatureTable t;
  t.names.resize(row.size(), "f");
  t.rows = Dense(n, row.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < row.size(); ++j) t.rows(i, j) = row[j];
  return t;
}

}  // namespace

TEST_CASE("first-order reduction: p=q=1 walk steps follow edge weights") {
  auto net = weighted_star();
  WalkConfig cfg;
  cfg.walks_per_node = 1;
  cfg.walk_length = 2;
  cfg.window = 1;
  WalkView view(net);
  std::size_t counts[4] = {0, 0, 0, 0};
  const std::size_t trials = 100000;
  Rng root(99);
  for (std::size_t i = 0; i < trials; ++i) {
    auto walk = biased_walk(view, 0, cfg, root.derive("w", i));
    REQUIRE(walk.size() == 2);
    ++counts[walk[1]];
  }
  // chi-square against weights 1:2:3
  double expected[] = {trials / 6.0, trials / 3.0, trials / 2.0};
  double stat = 0;
  for (int i = 0; i < 3; ++i) {
    double diff = static_cast<double>(counts[i + 1]) - expected[i];
    stat += diff * diff / expected[i];
  }
  CHECK(oracles::chi_square_pvalue(stat, 2) > 0.01);
}

TEST_CASE("walk from an isolated node is just the node") {
  Network net(3, false);
  net.add_edge(0, 1, 1.0);
  WalkConfig cfg;
  cfg.walk_length = 10;
  cfg.window = 2;
  WalkView view(net);
  auto walk = biased_walk(view, 2, cfg, Rng(1));
  REQUIRE(walk.size() == 1);
  CHECK(walk[0] == 2);
}

TEST_CASE("large q forces the walk to return toward the previous node") {
  Network net(3, false);
  net.add_edge(0, 1, 1.0);
  net.add_edge(1, 2, 1.0);
  WalkConfig cfg;
  cfg.walk_length = 3;
  cfg.window = 1;
  cfg.inout_q = 1e6;
  WalkView view(net);
  std::size_t returned = 0;
  Rng root(7);
  for (std::size_t i = 0; i < 300; ++i) {
    auto walk = biased_walk(view, 0, cfg, root.derive("w", i));
    REQUIRE(walk.size() == 3);  // 0 -> 1 -> {0 or 2}
    if (walk[2] == 0) ++returned;
  }
  CHECK(returned >= 299);
}

TEST_CASE("sgns term gradient matches finite differences") {
  Rng rng(5);
  const std::size_t d = 7;
  std::vector<double> a(d), b(d);
  for (auto& x : a) x = rng.normal() * 0.4;
  for (auto& x : b) x = rng.normal() * 0.4;
  for (double label : {1.0, 0.0}) {
    std::vector<double> da(d, 0.0), db(d);
    sgns_term(a.data(), b.data(), label, d, da.data(), db.data());
    const double h = 1e-6;
    std::vector<double> tmp_da(d), tmp_db(d);
    auto loss_with = [&](std::vector<double>& vec, std::size_t j, double delta) {
      std::fill(tmp_da.begin(), tmp_da.end(), 0.0);
      vec[j] += delta;
      double l = sgns_term(a.data(), b.data(), label, d, tmp_da.data(), tmp_db.data());
      vec[j] -= delta;
      return l;
    };
    for (std::size_t j = 0; j < d; ++j) {
      double fd_a = (loss_with(a, j, h) - loss_with(a, j, -h)) / (2 * h);
      double fd_b = (loss_with(b, j, h) - loss_with(b, j, -h)) / (2 * h);
      CHECK(std::abs(fd_a - da[j]) / std::max(1.0, std::abs(fd_a)) < 1e-4);
      CHECK(std::abs(fd_b - db[j]) / std::max(1.0, std::abs(fd_b)) < 1e-4);
    }
  }
}

TEST_CASE("skip-gram loss at near-zero vectors is about (1+k) ln 2 per pair") {
  std::vector<std::vector<NodeId>> walks = {{0, 1}};
  WalkConfig cfg;
  cfg.walk_length = 2;
  cfg.window = 1;
  cfg.embedding_dim = 8;
  cfg.negatives_per_positive = 5;
  cfg.epochs = 1;
  auto res = train_skipgram(walks, 2, cfg, 3);
  CHECK(std::abs(res.initial_loss - 6.0 * std::log(2.0)) < 0.05);
}

TEST_CASE("skip-gram separates two cliques") {
  auto net = two_cliques(5);
  WalkConfig cfg;
  cfg.walks_per_node = 10;
  cfg.walk_length = 20;
  cfg.window = 3;
  cfg.embedding_dim = 8;
  cfg.epochs = 3;
  auto res = train_node2vec(net, cfg, 11);
  const auto& e = res.embedding.vectors;
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (NodeId u = 0; u < 10; ++u)
    for (NodeId v = u + 1; v < 10; ++v) {
      double c = cosine(e.row(u), e.row(v), e.cols());
      if ((u < 5) == (v < 5)) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  CHECK(intra / static_cast<double>(n_intra) > inter / static_cast<double>(n_inter));
}

TEST_CASE("skip-gram training reduces the fixed-evaluation loss") {
  Rng rng(13);
  auto net = oracles::random_connected_graph(12, 0.3, rng);
  WalkConfig cfg;
  cfg.walks_per_node = 5;
  cfg.walk_length = 10;
  cfg.window = 2;
  cfg.embedding_dim = 16;
  cfg.epochs = 2;
  auto res = train_node2vec(net, cfg, 17);
  CHECK(res.final_loss < res.initial_loss);
}

TEST_CASE("embedding trainers are bit-deterministic given seed") {
  auto net = two_cliques(4);
  WalkConfig cfg;
  cfg.walks_per_node = 3;
  cfg.walk_length = 8;
  cfg.window = 2;
  cfg.embedding_dim = 8;
  auto a = train_node2vec(net, cfg, 21);
  auto b = train_node2vec(net, cfg, 21);
  CHECK(a.embedding.vectors == b.embedding.vectors);
  auto c = train_node2vec(net, cfg, 22);
  CHECK_FALSE(c.embedding.vectors == a.embedding.vectors);
}

TEST_CASE("graphsage output is unit-norm rows of the right shape") {
  auto net = two_cliques(4);
  FeatureTable feats = constant_features(net.node_count(), {1.0, 0.5});
  for (NodeId u = 0; u < net.node_count(); ++u) feats.rows(u, 1) = u < 4 ? 1.0 : 0.0;
  SageConfig cfg;
  cfg.epochs = 3;
  cfg.layer_sizes = {6, 6};
  auto res = train_graphsage(net, feats, cfg, 31);
  REQUIRE(res.embedding.vectors.rows() == net.node_count());
  REQUIRE(res.embedding.vectors.cols() == 6);
  for (NodeId u = 0; u < net.node_count(); ++u) {
    double norm = std::sqrt(dot(res.embedding.vectors.row(u), res.embedding.vectors.row(u), 6));
    CHECK(norm == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("zero features and zero parameters give identical embeddings") {
  auto net = two_cliques(3);
  FeatureTable feats = constant_features(net.node_count(), {0.0, 0.0});
  SageParams params(2, 4, 4);  // zero-initialized
  WalkView view(net);
  sage_detail::TreeCache cache;
  std::vector<std::vector<double>> zs;
  for (NodeId u = 0; u < net.node_count(); ++u) {
    sage_detail::forward_tree(params, full_tree(view, u), feats, nullptr, cache);
    zs.push_back(cache.z);
  }
  for (std::size_t u = 1; u < zs.size(); ++u) CHECK(zs[u] == zs[0]);
}

TEST_CASE("graphsage gradient matches finite differences on a 6-node graph") {
  Rng rng(41);
  auto net = oracles::random_connected_graph(6, 0.5, rng);
  FeatureTable feats;
  feats.names = {"a", "b", "c"};
  feats.rows = Dense(6, 3);
  for (std::size_t i = 0; i < feats.rows.size(); ++i) feats.rows.data()[i] = rng.normal();

  SageParams params(3, 4, 4);
  params.init_xavier(Rng(43));
  WalkView view(net);
  Rng srng(47);
  std::vector<SagePair> plan;
  plan.push_back({sample_tree(view, 0, {3, 2}, srng), sample_tree(view, 1, {3, 2}, srng), 1.0});
  plan.push_back({sample_tree(view, 2, {3, 2}, srng), sample_tree(view, 4, {3, 2}, srng), 0.0});
  plan.push_back({sample_tree(view, 5, {3, 2}, srng), sample_tree(view, 3, {3, 2}, srng), 1.0});

  auto grad = sage_plan_gradient(params, feats, plan);
  const double h = 1e-6;
  double max_rel = 0;
  for (std::size_t i = 0; i < params.theta.size(); ++i) {
    double keep = params.theta[i];
    params.theta[i] = keep + h;
    double lp = sage_plan_loss(params, feats, plan);
    params.theta[i] = keep - h;
    double lm = sage_plan_loss(params, feats, plan);
    params.theta[i] = keep;
    double fd = (lp - lm) / (2 * h);
    max_rel = std::max(max_rel, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("graphsage separates cliques given a one-hot clique feature") {
  auto net = two_cliques(5);
  FeatureTable feats;
  feats.names = {"clique_a", "clique_b"};
  feats.rows = Dense(10, 2);
  for (NodeId u = 0; u < 10; ++u) feats.rows(u, u < 5 ? 0 : 1) = 1.0;
  SageConfig cfg;
  cfg.epochs = 10;
  cfg.layer_sizes = {8, 8};
  cfg.dropout = 0.0;
  cfg.walks_per_node = 3;
  auto res = train_graphsage(net, feats, cfg, 53);
  const auto& e = res.embedding.vectors;
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (NodeId u = 0; u < 10; ++u)
    for (NodeId v = u + 1; v < 10; ++v) {
      double c = cosine(e.row(u), e.row(v), e.cols());
      if ((u < 5) == (v < 5)) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  CHECK(intra / static_cast<double>(n_intra) > inter / static_cast<double>(n_inter));
}

TEST_CASE("attri2vec embeddings stay in (0,1) and are a pure feature map") {
  auto net = two_cliques(4);
  FeatureTable feats;
  feats.names = {"x", "y", "z"};
  feats.rows = Dense(8, 3);
  Rng rng(61);
  for (std::size_t i = 0; i < feats.rows.size(); ++i) feats.rows.data()[i] = rng.normal();
  // give two nodes identical features
  for (std::size_t j = 0; j < 3; ++j) feats.rows(3, j) = feats.rows(6, j);

  Attri2VecConfig cfg;
  cfg.hidden_dim = 12;
  cfg.epochs = 4;
  auto res = train_attri2vec(net, feats, cfg, 67);
  for (std::size_t i = 0; i < res.embedding.vectors.size(); ++i) {
    CHECK(res.embedding.vectors.data()[i] > 0.0);
    CHECK(res.embedding.vectors.data()[i] < 1.0);
  }
  for (std::size_t j = 0; j < 12; ++j)
    CHECK(res.embedding.vectors(3, j) == res.embedding.vectors(6, j));
}

TEST_CASE("attri2vec is exactly inductive for unseen feature vectors") {
  auto net = two_cliques(3);
  FeatureTable feats;
  feats.names = {"x", "y"};
  feats.rows = Dense(6, 2);
  Rng rng(71);
  for (std::size_t i = 0; i < feats.rows.size(); ++i) feats.rows.data()[i] = rng.normal();
  Attri2VecConfig cfg;
  cfg.hidden_dim = 5;
  cfg.epochs = 2;
  auto res = train_attri2vec(net, feats, cfg, 73);

  std::vector<double> unseen = {0.3, -1.2};
  auto z = attri2vec_embed(res, unseen);
  REQUIRE(z.size() == 5);
  // sigma(Wx) recomputed by hand
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 2; ++j) s += res.mapping(i, j) * unseen[j];
    CHECK(z[i] == 1.0 / (1.0 + std::exp(-s)));
  }
}

TEST_CASE("pca projection recovers the dominant axis") {
  Dense m(200, 3);
  Rng rng(79);
  for (std::size_t i = 0; i < 200; ++i) {
    double t = rng.normal();
    m(i, 0) = 3.0 * t;
    m(i, 1) = 0.1 * rng.normal();
    m(i, 2) = -3.0 * t + 0.01 * rng.normal();
  }
  auto p = pca_2d(m);
  // first axis variance should dominate the second
  double vx = 0, vy = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    vx += p.x[i] * p.x[i];
    vy += p.y[i] * p.y[i];
  }
  CHECK(vx > 10 * vy);
}
