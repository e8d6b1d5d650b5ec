#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/centrality.hpp"
#include "refnet/dense.hpp"
#include "refnet/graph.hpp"
#include "refnet/records.hpp"

namespace refnet {

enum class FeatureSet { WithSocial, WithoutSocial };

inline const char* feature_set_name(FeatureSet f) {
  return f == FeatureSet::WithSocial ? "with_social" : "without_social";
}

struct FeatureTable {
  std::vector<std::string> names;
  Dense rows;  // aligned to the referral network's node ids

  std::size_t dim() const { return rows.cols(); }
};

// Node features for embedding models, aligned to `net`'s node ids.
// without_social: z-scored age, gender code. with_social adds the three
// professional-network centralities (min-max scaled) and a membership flag.
// Scalers are fit on the nodes of `net` (the training graph's node set).
inline FeatureTable build_node_features(const Network& net, const PhysicianTable& profiles,
                                        const Network& professional_net,
                                        const CentralityTable* centralities, FeatureSet set) {
  const std::size_t n = net.node_count();

  std::map<std::string, NodeId> prof_index;
  for (NodeId u = 0; u < professional_net.node_count(); ++u)
    prof_index[professional_net.label(u)] = u;

  std::vector<double> age(n, 0.0), gender(n, 0.5);
  for (NodeId u = 0; u < n; ++u) {
    const PhysicianProfile* p = profiles.find(net.label(u));
    if (!p) throw IngestError("no profile for physician " + net.label(u));
    age[u] = p->age;
    gender[u] = gender_code(p->gender);
  }
  double mean = 0;
  for (double a : age) mean += a;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double a : age) var += (a - mean) * (a - mean);
  double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  for (double& a : age) a = sd > 0 ? (a - mean) / sd : 0.0;

  FeatureTable t;
  t.names = {"age_z", "gender"};
  if (set == FeatureSet::WithoutSocial) {
    t.rows = Dense(n, 2);
    for (NodeId u = 0; u < n; ++u) {
      t.rows(u, 0) = age[u];
      t.rows(u, 1) = gender[u];
    }
    return t;
  }

  if (!centralities) throw NumericError("with_social features need centralities");
  std::vector<double> deg(n, 0.0), eig(n, 0.0), betw(n, 0.0), in_net(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    auto it = prof_index.find(net.label(u));
    if (it == prof_index.end()) continue;  // absent: zeros + flag 0
    in_net[u] = 1.0;
    deg[u] = centralities->degree[it->second];
    eig[u] = centralities->eigenvector[it->second];
    betw[u] = centralities->betweenness[it->second];
  }
  auto minmax_scale = [&](std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    for (double& x : v) x = hi > lo ? (x - lo) / (hi - lo) : 0.0;
  };
  minmax_scale(deg);
  minmax_scale(eig);
  minmax_scale(betw);

  t.names = {"age_z", "gender", "degree", "eigenvector", "betweenness", "in_professional_net"};
  t.rows = Dense(n, 6);
  for (NodeId u = 0; u < n; ++u) {
    t.rows(u, 0) = age[u];
    t.rows(u, 1) = gender[u];
    t.rows(u, 2) = deg[u];
    t.rows(u, 3) = eig[u];
    t.rows(u, 4) = betw[u];
    t.rows(u, 5) = in_net[u];
  }
  return t;
}

}  // namespace refnet
