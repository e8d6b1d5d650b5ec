#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "refnet/centrality.hpp"
#include "refnet/rng.hpp"

using namespace refnet;

namespace {

Network triangle() {
  Network net(3, false);
  net.add_edge(0, 1, 1.0);
  net.add_edge(1, 2, 1.0);
  net.add_edge(0, 2, 1.0);
  return net;
}

Network path(std::size_t n) {
  Network net(n, false);
  for (NodeId u = 0; u + 1 < n; ++u) net.add_edge(u, u + 1, 1.0);
  return net;
}

Network star(std::size_t leaves) {
  Network net(leaves + 1, false);
  for (NodeId l = 1; l <= leaves; ++l) net.add_edge(0, l, 1.0);
  return net;
}

Network permuted(const Network& net, const std::vector<NodeId>& perm) {
  Network out(net.node_count(), false);
  for (auto [u, v, w] : net.edges()) out.add_edge(perm[u], perm[v], w);
  return out;
}

}  // namespace

TEST_CASE("degree centrality on small graphs") {
  auto k3 = degree_centrality(triangle());
  for (double v : k3.values) CHECK(v == 1.0);

  auto p = degree_centrality(path(3));
  CHECK(p.values[0] == 0.5);
  CHECK(p.values[1] == 1.0);
  CHECK(p.values[2] == 0.5);

  auto s = degree_centrality(star(3));
  CHECK(s.values[0] == 1.0);
  CHECK(s.values[1] == Catch::Approx(1.0 / 3.0));

  Network tiny(1, false);
  CHECK_THROWS_AS(degree_centrality(tiny), CentralityError);
}

TEST_CASE("eigenvector centrality matches closed forms and the dense oracle") {
  auto k3 = eigenvector_centrality(triangle());
  for (double v : k3.values) CHECK(v == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-9));

  auto s = eigenvector_centrality(star(3));
  CHECK(s.values[0] == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-7));
  for (int l = 1; l <= 3; ++l) CHECK(s.values[l] == Catch::Approx(0.40824829).margin(1e-7));

  auto oracle = oracles::dense_eigenvector(star(3));
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.values[i] == Catch::Approx(oracle[i]).margin(1e-8));

  Network empty(3, false);
  CHECK_THROWS_AS(eigenvector_centrality(empty), CentralityError);
}

TEST_CASE("eigenvector centrality on symmetric disjoint components stays symmetric") {
  Network two(4, false);
  two.add_edge(0, 1, 1.0);
  two.add_edge(2, 3, 1.0);
  auto v = eigenvector_centrality(two);
  // uniform start preserves the symmetry between the two identical edges
  for (double x : v.values) CHECK(x == Catch::Approx(0.5).margin(1e-9));
  // residual check still holds in the degenerate eigenvalue case
  double lambda = rayleigh_quotient(two, v.values);
  CHECK(lambda == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("eigenvector residual invariant holds on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 3 + rng.index(10);
    auto net = oracles::random_connected_graph(n, 0.4, rng);
    const double tol = 1e-10;
    auto v = eigenvector_centrality(net, tol);
    double lambda = rayleigh_quotient(net, v.values);
    double residual = 0;
    for (NodeId u = 0; u < n; ++u) {
      double av = 0;
      for (const auto& [w, _] : net.neighbors(u)) av += v.values[w];
      residual += (av - lambda * v.values[u]) * (av - lambda * v.values[u]);
    }
    CHECK(std::sqrt(residual) < 10 * tol * (1.0 + lambda));
  }
}

TEST_CASE("betweenness on small graphs matches hand counts") {
  auto p4 = betweenness_centrality(path(4));
  CHECK(p4.values[0] == 0.0);
  CHECK(p4.values[1] == 2.0);
  CHECK(p4.values[2] == 2.0);
  CHECK(p4.values[3] == 0.0);

  auto s4 = betweenness_centrality(star(4));
  CHECK(s4.values[0] == 6.0);  // C(4,2)
  for (int l = 1; l <= 4; ++l) CHECK(s4.values[l] == 0.0);

  auto k3 = betweenness_centrality(triangle());
  for (double v : k3.values) CHECK(v == 0.0);
}

TEST_CASE("betweenness equals the path-enumeration oracle on random graphs") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 3 + rng.index(6);
    auto net = oracles::random_connected_graph(n, 0.5, rng);
    auto ours = betweenness_centrality(net);
    auto oracle = oracles::bruteforce_betweenness(net);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(ours.values[i] == Catch::Approx(oracle[i]).margin(1e-9));
  }
}

TEST_CASE("betweenness handles disconnected graphs and isolated nodes") {
  Network net(5, false);
  net.add_edge(0, 1, 1.0);
  net.add_edge(1, 2, 1.0);
  // nodes 3 and 4 isolated
  auto b = betweenness_centrality(net);
  CHECK(b.values[1] == 1.0);
  CHECK(b.values[3] == 0.0);
  CHECK(b.values[4] == 0.0);

  auto d = degree_centrality(net);
  CHECK(d.values[3] == 0.0);

  net.add_edge(3, 4, 1.0);  // prevent the all-isolated error, then recheck eigen zeros
  Network with_isolated(3, false);
  with_isolated.add_edge(0, 1, 1.0);
  auto ev = eigenvector_centrality(with_isolated);
  CHECK(ev.values[2] == 0.0);
}

TEST_CASE("all three measures are invariant under node relabeling") {
  Rng rng(31);
  auto net = oracles::random_connected_graph(7, 0.45, rng);
  std::vector<NodeId> perm = {3, 0, 6, 2, 5, 1, 4};
  auto pnet = permuted(net, perm);

  auto d0 = degree_centrality(net).values;
  auto d1 = degree_centrality(pnet).values;
  auto e0 = eigenvector_centrality(net).values;
  auto e1 = eigenvector_centrality(pnet).values;
  auto b0 = betweenness_centrality(net).values;
  auto b1 = betweenness_centrality(pnet).values;
  for (NodeId u = 0; u < 7; ++u) {
    CHECK(d0[u] == Catch::Approx(d1[perm[u]]).margin(1e-12));
    CHECK(e0[u] == Catch::Approx(e1[perm[u]]).margin(1e-8));
    CHECK(b0[u] == Catch::Approx(b1[perm[u]]).margin(1e-9));
  }
}

TEST_CASE("parallel betweenness is bit-identical to sequential") {
  Rng rng(41);
  auto net = oracles::random_connected_graph(80, 0.08, rng);
  auto seq = betweenness_centrality(net, 1);
  auto par = betweenness_centrality(net, 4);
  for (std::size_t i = 0; i < seq.values.size(); ++i) CHECK(seq.values[i] == par.values[i]);
}
