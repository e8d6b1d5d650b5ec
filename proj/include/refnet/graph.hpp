#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "refnet/csv.hpp"

namespace refnet {

// Dense 0-based node index, stable within one Network instance.
using NodeId = std::uint32_t;

enum class Role : std::uint8_t { PC = 0, SC = 1, None = 2 };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::PC: return "PC";
    case Role::SC: return "SC";
    default: return "none";
  }
}

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted sparse graph with typed nodes. Adjacency lists are kept sorted by
// neighbor id so iteration order is deterministic regardless of insertion
// order. Undirected edges are mirrored; parallel observations accumulate
// into the edge weight. Immutable by convention once a builder returns it.
class Network {
 public:
  Network() = default;
  Network(std::size_t node_count, bool directed) : directed_(directed), adj_(node_count) {}

  std::size_t node_count() const { return adj_.size(); }
  bool directed() const { return directed_; }

  bool has_roles() const { return !roles_.empty(); }
  Role role(NodeId u) const { return roles_.empty() ? Role::None : roles_[u]; }
  void set_roles(std::vector<Role> roles) {
    if (roles.size() != adj_.size()) throw GraphError("role vector size mismatch");
    roles_ = std::move(roles);
  }

  const std::string& label(NodeId u) const {
    static const std::string empty;
    return labels_.empty() ? empty : labels_[u];
  }
  void set_labels(std::vector<std::string> labels) {
    if (labels.size() != adj_.size()) throw GraphError("label vector size mismatch");
    labels_ = std::move(labels);
  }

  void add_edge(NodeId u, NodeId v, double w) {
    check_node(u);
    check_node(v);
    if (u == v) throw GraphError("self-loop rejected: node " + std::to_string(u));
    if (!(w > 0.0)) throw GraphError("edge weight must be positive");
    if (has_roles() && role(u) != Role::None && role(v) != Role::None && role(u) == role(v))
      throw GraphError("bipartite violation: edge " + std::to_string(u) + "-" +
                       std::to_string(v) + " joins two " + role_name(role(u)) + " nodes");
    insert_half(u, v, w);
    if (!directed_) insert_half(v, u, w);
  }

  // Neighbors in ascending NodeId order.
  const std::vector<std::pair<NodeId, double>>& neighbors(NodeId u) const {
    check_node(u);
    return adj_[u];
  }

  std::size_t degree(NodeId u) const { return neighbors(u).size(); }

  bool has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    const auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    return it != row.end() && it->first == v;
  }

  double edge_weight(NodeId u, NodeId v) const {
    const auto& row = neighbors(u);
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    if (it == row.end() || it->first != v) throw GraphError("no such edge");
    return it->second;
  }

  // Unique edges: all (u,v) for directed graphs, u < v for undirected.
  std::vector<std::tuple<NodeId, NodeId, double>> edges() const {
    std::vector<std::tuple<NodeId, NodeId, double>> out;
    for (NodeId u = 0; u < adj_.size(); ++u)
      for (const auto& [v, w] : adj_[u])
        if (directed_ || u < v) out.emplace_back(u, v, w);
    return out;
  }

  std::size_t edge_count() const {
    std::size_t half = 0;
    for (const auto& row : adj_) half += row.size();
    return directed_ ? half : half / 2;
  }

  double total_weight() const {
    double s = 0;
    for (const auto& row : adj_)
      for (const auto& [v, w] : row) s += w;
    return directed_ ? s : s / 2;
  }

  // Named per-node attribute columns (categoricals pre-coded as reals).
  void add_attribute(const std::string& name, std::vector<double> values) {
    if (values.size() != adj_.size()) throw GraphError("attribute column size mismatch");
    attr_names_.push_back(name);
    attr_cols_.push_back(std::move(values));
  }
  const std::vector<std::string>& attribute_names() const { return attr_names_; }
  const std::vector<double>& attribute(const std::string& name) const {
    for (std::size_t i = 0; i < attr_names_.size(); ++i)
      if (attr_names_[i] == name) return attr_cols_[i];
    throw GraphError("no such attribute: " + name);
  }

  friend bool operator==(const Network& a, const Network& b) {
    return a.directed_ == b.directed_ && a.adj_ == b.adj_ && a.roles_ == b.roles_;
  }

  void write_edge_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"source_id", "target_id", "weight"}, prov);
    for (const auto& [u, v, wt] : edges())
      w.row({std::to_string(u), std::to_string(v), CsvWriter::num(wt)});
  }

  void write_node_csv(const std::string& path, const Provenance& prov = {}) const {
    std::vector<std::string> header = {"node_id", "external_id", "role"};
    header.insert(header.end(), attr_names_.begin(), attr_names_.end());
    CsvWriter w(path, header, prov);
    for (NodeId u = 0; u < adj_.size(); ++u) {
      std::vector<std::string> row = {std::to_string(u), label(u), role_name(role(u))};
      for (const auto& col : attr_cols_) row.push_back(CsvWriter::num(col[u]));
      w.row(row);
    }
  }

 private:
  void check_node(NodeId u) const {
    if (u >= adj_.size()) throw GraphError("invalid node id: " + std::to_string(u));
  }

  void insert_half(NodeId u, NodeId v, double w) {
    auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    if (it != row.end() && it->first == v)
      it->second += w;
    else
      row.insert(it, {v, w});
  }

  bool directed_ = false;
  std::vector<std::vector<std::pair<NodeId, double>>> adj_;
  std::vector<Role> roles_;
  std::vector<std::string> labels_;
  std::vector<std::string> attr_names_;
  std::vector<std::vector<double>> attr_cols_;
};

}  // namespace refnet
