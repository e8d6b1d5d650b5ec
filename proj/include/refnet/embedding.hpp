#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/dense.hpp"

namespace refnet {

// Per-node dense vectors from any embedding model. Row index = NodeId of the
// network the model was trained on.
struct EmbeddingMatrix {
  Dense vectors;                         // n x dim
  std::vector<std::string> node_labels;  // external ids, aligned to rows
  std::string model;
  std::string feature_set;  // with_social | without_social | structural

  std::size_t dim() const { return vectors.cols(); }
  std::size_t node_count() const { return vectors.rows(); }

  void write_csv(const std::string& path, const Provenance& prov = {}) const {
    std::vector<std::string> header = {"node_id"};
    for (std::size_t j = 0; j < dim(); ++j) header.push_back("e" + std::to_string(j));
    CsvWriter w(path, header, prov);
    for (std::size_t i = 0; i < node_count(); ++i) {
      std::vector<std::string> row = {std::to_string(i)};
      for (std::size_t j = 0; j < dim(); ++j) row.push_back(CsvWriter::num(vectors(i, j)));
      w.row(row);
    }
  }
};

// Top-2 principal components by power iteration with deflation on the
// covariance matrix; enough for the 2D projection export.
struct Pca2d {
  std::vector<double> x, y;
};

inline Pca2d pca_2d(const Dense& m) {
  const std::size_t n = m.rows(), d = m.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += m(i, j);
  for (double& v : mean) v /= static_cast<double>(n);

  Dense cov(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      double xa = m(i, a) - mean[a];
      if (xa == 0.0) continue;
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += xa * (m(i, b) - mean[b]);
    }
  for (std::size_t i = 0; i < cov.size(); ++i) cov.data()[i] /= std::max<std::size_t>(1, n - 1);

  auto top_component = [&](std::vector<double>& out) {
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> next(d);
    double lambda = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
      for (std::size_t a = 0; a < d; ++a) next[a] = dot(cov.row(a), v.data(), d);
      double norm = std::sqrt(dot(next.data(), next.data(), d));
      if (norm == 0.0) break;
      for (double& x : next) x /= norm;
      double diff = 0;
      for (std::size_t a = 0; a < d; ++a) diff += (next[a] - v[a]) * (next[a] - v[a]);
      v = next;
      lambda = norm;
      if (std::sqrt(diff) < 1e-12) break;
    }
    out = v;
    return lambda;
  };

  std::vector<double> pc1, pc2;
  double l1 = top_component(pc1);
  // deflate: cov -= l1 * pc1 pc1'
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) cov(a, b) -= l1 * pc1[a] * pc1[b];
  top_component(pc2);

  Pca2d out;
  out.x.resize(n);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double cx = 0, cy = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double centered = m(i, j) - mean[j];
      cx += centered * pc1[j];
      cy += centered * pc2[j];
    }
    out.x[i] = cx;
    out.y[i] = cy;
  }
  return out;
}

}  // namespace refnet
