#include <catch2/catch_amalgamated.hpp>

#include "refnet/csv.hpp"
#include "refnet/dates.hpp"
#include "refnet/graph.hpp"
#include "refnet/rng.hpp"

using namespace refnet;

TEST_CASE("rng streams are deterministic and splittable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng root(7);
  Rng c1 = root.derive("walk", 3, 1);
  Rng c2 = root.derive("walk", 3, 2);
  Rng c1_again = root.derive("walk", 3, 1);
  REQUIRE(c1.next_u64() == c1_again.next_u64());
  REQUIRE(c1.next_u64() != c2.next_u64());

  // child derivation ignores parent's consumption state
  Rng parent(9);
  Rng before = parent.derive("x", 0, 0);
  parent.next_u64();
  Rng after = parent.derive("x", 0, 0);
  REQUIRE(before.next_u64() == after.next_u64());
}

TEST_CASE("rng uniforms land in range and look uniform") {
  Rng rng(123);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double x = rng.next_double();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
  }
  REQUIRE(std::abs(sum / n - 0.5) < 0.01);

  for (int i = 0; i < 1000; ++i) {
    auto v = rng.next_below(7);
    REQUIRE(v < 7);
  }
}

TEST_CASE("date parsing accepts real dates and rejects impossible ones") {
  auto d = parse_date("2015-03-25");
  REQUIRE(d.has_value());
  CHECK(d->year == 2015);
  CHECK(d->month == 3);
  CHECK(d->day == 25);

  CHECK_FALSE(parse_date("2020-13-40").has_value());
  CHECK_FALSE(parse_date("2019-02-29").has_value());
  CHECK(parse_date("2020-02-29").has_value());  // leap year
  CHECK_FALSE(parse_date("2015-3-25").has_value());
  CHECK_FALSE(parse_date("garbage").has_value());

  CHECK(days_between(*parse_date("2015-04-01"), *parse_date("2015-05-15")) == 44);
  CHECK(days_between(*parse_date("2015-05-20"), *parse_date("2015-06-01")) == 12);
  CHECK(format_date(add_days(*parse_date("2015-12-31"), 1)) == "2016-01-01");
}

TEST_CASE("format_double round-trips and prints integers plainly") {
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  double x = 0.1 + 0.2;
  double back = 0;
  std::sscanf(format_double(x).c_str(), "%lf", &back);
  CHECK(back == x);
}

TEST_CASE("add_edge inserts, accumulates, and rejects self-loops") {
  Network net(2, false);
  net.add_edge(0, 1, 1.0);
  CHECK(net.degree(0) == 1);
  CHECK(net.degree(1) == 1);

  net.add_edge(0, 1, 1.0);
  CHECK(net.edge_count() == 1);
  CHECK(net.edge_weight(0, 1) == 2.0);
  CHECK(net.edge_weight(1, 0) == 2.0);  // undirected mirror

  CHECK_THROWS_AS(net.add_edge(0, 0, 1.0), GraphError);
  CHECK_THROWS_AS(net.add_edge(0, 5, 1.0), GraphError);
  CHECK_THROWS_AS(net.add_edge(0, 1, 0.0), GraphError);
  CHECK_THROWS_AS(net.add_edge(0, 1, -2.0), GraphError);
}

TEST_CASE("neighbors come back sorted by node id") {
  Network star(4, false);
  star.add_edge(0, 2, 1.0);
  star.add_edge(0, 1, 1.0);
  star.add_edge(0, 3, 1.0);
  auto nb = star.neighbors(0);
  REQUIRE(nb.size() == 3);
  CHECK(nb[0].first == 1);
  CHECK(nb[1].first == 2);
  CHECK(nb[2].first == 3);
  CHECK(star.neighbors(1).size() == 1);

  Network lonely(3, false);
  lonely.add_edge(0, 1, 1.0);
  CHECK(lonely.neighbors(2).empty());
  CHECK_THROWS_AS(lonely.neighbors(9), GraphError);
}

TEST_CASE("degree sum equals twice the edge count") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 2 + rng.index(20);
    Network net(n, false);
    for (int e = 0; e < 40; ++e) {
      NodeId u = static_cast<NodeId>(rng.index(n));
      NodeId v = static_cast<NodeId>(rng.index(n));
      if (u == v) continue;
      net.add_edge(u, v, 1.0 + rng.next_double());
    }
    std::size_t degree_sum = 0;
    for (NodeId u = 0; u < n; ++u) degree_sum += net.degree(u);
    CHECK(degree_sum == 2 * net.edge_count());
  }
}

TEST_CASE("networks built from the same edge multiset in any order are equal") {
  std::vector<std::tuple<NodeId, NodeId, double>> edges = {
      {0, 1, 1.0}, {1, 2, 2.5}, {0, 3, 1.0}, {2, 3, 0.5}, {0, 1, 2.0}};
  Rng rng(11);
  Network reference(4, false);
  for (auto [u, v, w] : edges) reference.add_edge(u, v, w);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = edges;
    rng.shuffle(shuffled);
    Network net(4, false);
    for (auto [u, v, w] : shuffled) net.add_edge(u, v, w);
    CHECK(net == reference);
  }
}

TEST_CASE("bipartite role constraint is checked on every insertion") {
  Network net(4, true);
  net.set_roles({Role::PC, Role::PC, Role::SC, Role::SC});
  net.add_edge(0, 2, 1.0);
  net.add_edge(1, 3, 1.0);
  CHECK_THROWS_AS(net.add_edge(0, 1, 1.0), GraphError);  // PC-PC
  CHECK_THROWS_AS(net.add_edge(2, 3, 1.0), GraphError);  // SC-SC
  CHECK(net.edge_count() == 2);
}
