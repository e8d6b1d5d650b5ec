#pragma once

#include <cmath>
#include <deque>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/graph.hpp"

namespace refnet {

struct CentralityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CentralityMeasure { Degree, Eigenvector, Betweenness };

struct CentralityVector {
  CentralityMeasure measure;
  std::vector<double> values;
  std::string normalization;
};

// All three measures run on the unweighted skeleton of an undirected graph.

// value(u) = deg(u) / (n - 1)
inline CentralityVector degree_centrality(const Network& net) {
  if (net.directed()) throw CentralityError("degree centrality expects an undirected network");
  const std::size_t n = net.node_count();
  if (n < 2) throw CentralityError("degree centrality needs at least 2 nodes");
  CentralityVector out{CentralityMeasure::Degree, std::vector<double>(n), "degree_over_n_minus_1"};
  for (NodeId u = 0; u < n; ++u)
    out.values[u] = static_cast<double>(net.degree(u)) / static_cast<double>(n - 1);
  return out;
}

// Power iteration started from the uniform positive vector. Iterates on
// A + I: shifting leaves the dominant eigenvector unchanged but removes the
// sign-flip oscillation bipartite spectra cause, so stars/trees converge.
// Output is L2-normalized and nonnegative; isolated nodes get 0.
inline CentralityVector eigenvector_centrality(const Network& net, double tol = 1e-10,
                                               std::size_t max_iter = 10000) {
  if (net.directed()) throw CentralityError("eigenvector centrality expects undirected network");
  const std::size_t n = net.node_count();
  if (net.edge_count() == 0) throw CentralityError("eigenvector centrality undefined: no edges");

  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> next(n);
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    for (NodeId u = 0; u < n; ++u) {
      double s = v[u];  // the +I term
      for (const auto& [w, _] : net.neighbors(u)) s += v[w];
      next[u] = s;
    }
    double norm = 0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : next) x /= norm;
    double diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = next[i] - v[i];
      diff += d * d;
    }
    v.swap(next);
    if (std::sqrt(diff) < tol) {
      for (NodeId u = 0; u < n; ++u) {
        if (net.degree(u) == 0) v[u] = 0.0;  // isolated nodes get exactly 0
        if (v[u] < 0) v[u] = 0.0;            // nonnegativity guard against roundoff
      }
      double norm2 = 0;
      for (double x : v) norm2 += x * x;
      norm2 = std::sqrt(norm2);
      for (double& x : v) x /= norm2;
      return {CentralityMeasure::Eigenvector, std::move(v), "l2_unit"};
    }
  }
  throw CentralityError("eigenvector centrality did not converge after " +
                        std::to_string(max_iter) + " iterations");
}

namespace detail {
// Brandes dependency accumulation from one source, on the unweighted skeleton.
inline void brandes_from_source(const Network& net, NodeId s, std::vector<double>& delta_out,
                                std::vector<NodeId>& stack, std::vector<std::vector<NodeId>>& pred,
                                std::vector<double>& sigma, std::vector<std::int64_t>& dist,
                                std::vector<double>& delta) {
  const std::size_t n = net.node_count();
  stack.clear();
  sigma.assign(n, 0.0);
  dist.assign(n, -1);
  delta.assign(n, 0.0);
  for (auto& p : pred) p.clear();

  sigma[s] = 1.0;
  dist[s] = 0;
  std::deque<NodeId> queue{s};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    stack.push_back(u);
    for (const auto& [w, _] : net.neighbors(u)) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
      if (dist[w] == dist[u] + 1) {
        sigma[w] += sigma[u];
        pred[w].push_back(u);
      }
    }
  }
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    NodeId w = *it;
    for (NodeId u : pred[w]) delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
    if (w != s) delta_out[w] += delta[w];
  }
}
}  // namespace detail

// Brandes accumulation over all sources; the raw total is halved for the
// undirected unordered-pair convention. Unreachable pairs contribute 0.
// Sources are processed in blocks reduced in fixed order, so the result is
// bit-identical across thread counts.
inline CentralityVector betweenness_centrality(const Network& net, unsigned threads = 1) {
  if (net.directed()) throw CentralityError("betweenness centrality expects undirected network");
  const std::size_t n = net.node_count();

  auto run_block = [&net, n](NodeId begin, NodeId end) {
    std::vector<double> acc(n, 0.0);
    std::vector<NodeId> stack;
    std::vector<std::vector<NodeId>> pred(n);
    std::vector<double> sigma;
    std::vector<std::int64_t> dist;
    std::vector<double> delta;
    for (NodeId s = begin; s < end; ++s)
      detail::brandes_from_source(net, s, acc, stack, pred, sigma, dist, delta);
    return acc;
  };

  // Per-block partial sums are always reduced in block order, so the float
  // addition grouping (and hence the result bits) never depends on the
  // thread count.
  const std::size_t block = 64;
  std::vector<double> total(n, 0.0);
  auto reduce = [&](const std::vector<double>& part) {
    for (std::size_t i = 0; i < n; ++i) total[i] += part[i];
  };
  if (threads <= 1 || n <= block) {
    for (std::size_t b = 0; b < n; b += block)
      reduce(run_block(static_cast<NodeId>(b), static_cast<NodeId>(std::min(n, b + block))));
  } else {
    std::vector<std::future<std::vector<double>>> futures;
    for (std::size_t b = 0; b < n; b += block) {
      NodeId lo = static_cast<NodeId>(b);
      NodeId hi = static_cast<NodeId>(std::min(n, b + block));
      futures.push_back(std::async(std::launch::async, run_block, lo, hi));
      if (futures.size() >= threads) {
        reduce(futures.front().get());  // drain in submission order
        futures.erase(futures.begin());
      }
    }
    for (auto& f : futures) reduce(f.get());
  }
  for (double& x : total) x *= 0.5;
  return {CentralityMeasure::Betweenness, std::move(total), "unordered_pairs_raw"};
}

// Rayleigh quotient v'Av on the unweighted skeleton.
inline double rayleigh_quotient(const Network& net, const std::vector<double>& v) {
  double lambda = 0;
  for (NodeId u = 0; u < net.node_count(); ++u)
    for (const auto& [w, _] : net.neighbors(u)) lambda += v[u] * v[w];
  return lambda;
}

struct CentralityTable {
  std::vector<double> degree;
  std::vector<double> eigenvector;
  std::vector<double> betweenness;

  void write_csv(const Network& net, const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"node_id", "degree", "eigenvector", "betweenness", "in_professional_net"},
                prov);
    for (NodeId u = 0; u < net.node_count(); ++u)
      w.row({std::to_string(u), CsvWriter::num(degree[u]), CsvWriter::num(eigenvector[u]),
             CsvWriter::num(betweenness[u]), "1"});
  }
};

inline CentralityTable compute_centralities(const Network& net, unsigned threads = 1) {
  CentralityTable t;
  t.degree = degree_centrality(net).values;
  t.eigenvector = eigenvector_centrality(net).values;
  t.betweenness = betweenness_centrality(net, threads).values;
  return t;
}

}  // namespace refnet
