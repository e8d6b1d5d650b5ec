#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/centrality.hpp"
#include "refnet/csv.hpp"
#include "refnet/dense.hpp"
#include "refnet/graph.hpp"
#include "refnet/linkpred.hpp"
#include "refnet/nn.hpp"
#include "refnet/records.hpp"

namespace refnet {

struct ExplainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gender-combination code for a referral pair: FF=0, MM=1, MF=2, FM=3
// (source listed first; source is the PC). Unknown genders get code 4 and
// are excluded from paper-faithful runs.
inline double gender_combination(Gender pc, Gender sc) {
  if (pc == Gender::Unknown || sc == Gender::Unknown) return 4.0;
  if (pc == Gender::F && sc == Gender::F) return 0.0;
  if (pc == Gender::M && sc == Gender::M) return 1.0;
  if (pc == Gender::M && sc == Gender::F) return 2.0;
  return 3.0;  // PC female, SC male
}

inline double age_difference(double age_pc, double age_sc) { return std::abs(age_pc - age_sc); }

// Feature rows for the pair classifier. Suffix _sc marks the source (PC)
// physician and _tg the target (SC), matching the referral direction.
struct PairFeatureSpec {
  bool engineered = false;

  std::vector<std::string> names() const {
    if (!engineered)
      return {"age_sc",  "gender_sc", "degree_sc", "eigen_sc", "betw_sc",
              "age_tg",  "gender_tg", "degree_tg", "eigen_tg", "betw_tg"};
    return {"degree_sc", "eigen_sc", "betw_sc", "degree_tg",
            "eigen_tg",  "betw_tg",  "age_diff", "gender_comb"};
  }
};

// Node-level ingredients, scaled once over the referral network's nodes.
struct PairFeatureContext {
  std::vector<double> age_z, age_raw, gender_code_, deg, eig, betw;
  std::vector<Gender> gender;

  static PairFeatureContext build(const Network& referral_net, const PhysicianTable& profiles,
                                  const Network& professional_net,
                                  const CentralityTable& centralities) {
    const std::size_t n = referral_net.node_count();
    PairFeatureContext ctx;
    ctx.age_raw.resize(n);
    ctx.gender_code_.resize(n);
    ctx.gender.resize(n);
    ctx.deg.assign(n, 0.0);
    ctx.eig.assign(n, 0.0);
    ctx.betw.assign(n, 0.0);

    std::map<std::string, NodeId> prof_index;
    for (NodeId u = 0; u < professional_net.node_count(); ++u)
      prof_index[professional_net.label(u)] = u;

    for (NodeId u = 0; u < n; ++u) {
      const PhysicianProfile* p = profiles.find(referral_net.label(u));
      if (!p) throw ExplainError("no profile for physician " + referral_net.label(u));
      ctx.age_raw[u] = p->age;
      ctx.gender[u] = p->gender;
      ctx.gender_code_[u] = gender_code(p->gender);
      auto it = prof_index.find(p->physician_id);
      if (it != prof_index.end()) {
        ctx.deg[u] = centralities.degree[it->second];
        ctx.eig[u] = centralities.eigenvector[it->second];
        ctx.betw[u] = centralities.betweenness[it->second];
      }
    }
    ctx.age_z = ctx.age_raw;
    double mean = 0;
    for (double a : ctx.age_z) mean += a;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double a : ctx.age_z) var += (a - mean) * (a - mean);
    double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    for (double& a : ctx.age_z) a = sd > 0 ? (a - mean) / sd : 0.0;
    auto minmax = [](std::vector<double>& v) {
      auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      double l = *lo, h = *hi;
      for (double& x : v) x = h > l ? (x - l) / (h - l) : 0.0;
    };
    minmax(ctx.deg);
    minmax(ctx.eig);
    minmax(ctx.betw);
    return ctx;
  }

  void fill_row(NodeId pc, NodeId sc, const PairFeatureSpec& spec, double* out) const {
    if (!spec.engineered) {
      out[0] = age_z[pc];
      out[1] = gender_code_[pc];
      out[2] = deg[pc];
      out[3] = eig[pc];
      out[4] = betw[pc];
      out[5] = age_z[sc];
      out[6] = gender_code_[sc];
      out[7] = deg[sc];
      out[8] = eig[sc];
      out[9] = betw[sc];
    } else {
      out[0] = deg[pc];
      out[1] = eig[pc];
      out[2] = betw[pc];
      out[3] = deg[sc];
      out[4] = eig[sc];
      out[5] = betw[sc];
      out[6] = age_difference(age_raw[pc], age_raw[sc]);
      out[7] = gender_combination(gender[pc], gender[sc]);
    }
  }

  Dense rows_for(const std::vector<EdgePair>& pairs, const PairFeatureSpec& spec) const {
    Dense rows(pairs.size(), spec.names().size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      fill_row(pairs[i].first, pairs[i].second, spec, rows.row(i));
    return rows;
  }
};

// MLP 5-relu / 5-relu / 1-sigmoid over pair features.
inline TrainedClassifier train_pair_classifier(const Dense& rows,
                                               const std::vector<double>& labels,
                                               std::uint64_t seed, std::size_t epochs = 30) {
  bool has_pos = false, has_neg = false;
  for (double y : labels) (y > 0.5 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ExplainError("degenerate single-class training input");
  Mlp model({rows.cols(), 5, 5, 1}, {Activation::Relu, Activation::Relu, Activation::Sigmoid});
  train_binary_classifier(model, rows, labels, {epochs, 50, 1e-3}, seed);
  return {std::move(model)};
}

struct ShapleyAttribution {
  std::vector<double> phi;
  double base_value = 0;  // E[f(background)]
  double prediction = 0;  // f(x)
};

// Exact interventional Shapley values by full subset enumeration. For each
// background row, f is evaluated on all 2^n blends of x and the background;
// phi then sums weighted marginals over the averaged value function.
template <typename ModelFn>
inline ShapleyAttribution exact_shapley(ModelFn&& f, const std::vector<double>& x,
                                        const Dense& background) {
  const std::size_t n = x.size();
  if (n > 16)
    throw ExplainError("exact enumeration supports at most 16 features; "
                       "use a sampling approximation for wider rows");
  if (background.rows() == 0) throw ExplainError("background sample must be nonempty");
  if (background.cols() != n) throw ExplainError("background feature dim mismatch");

  const std::size_t masks = std::size_t{1} << n;
  std::vector<double> vbar(masks, 0.0);
  Dense blends(masks, n);
  for (std::size_t b = 0; b < background.rows(); ++b) {
    const double* bg = background.row(b);
    for (std::size_t mask = 0; mask < masks; ++mask) {
      double* row = blends.row(mask);
      for (std::size_t j = 0; j < n; ++j) row[j] = (mask >> j & 1) ? x[j] : bg[j];
    }
    std::vector<double> out = f(blends);
    for (std::size_t mask = 0; mask < masks; ++mask) vbar[mask] += out[mask];
  }
  const double inv_b = 1.0 / static_cast<double>(background.rows());
  for (double& v : vbar) v *= inv_b;

  // factorials up to 16 are exact in doubles
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  ShapleyAttribution out;
  out.phi.assign(n, 0.0);
  out.base_value = vbar[0];
  out.prediction = vbar[masks - 1];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < masks; ++mask) {
      if (mask & bit) continue;  // mask = S without i
      std::size_t s = static_cast<std::size_t>(__builtin_popcountll(mask));
      double weight = fact[s] * fact[n - s - 1] / fact[n];
      out.phi[i] += weight * (vbar[mask | bit] - vbar[mask]);
    }
  }
  return out;
}

inline std::vector<double> mlp_batch_prob(const Mlp& model, const Dense& rows) {
  Dense out = model.forward(rows);
  return out.values();
}

struct AttributionReport {
  std::vector<std::string> feature_names;
  Dense phi;  // row per sample, column per feature
  std::vector<double> base_values;
  std::vector<double> predictions;
  std::vector<double> mean_abs_phi;
  std::vector<std::size_t> ranking;  // feature indices, most important first

  void write_values_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, feature_names, prov);
    for (std::size_t i = 0; i < phi.rows(); ++i) {
      std::vector<std::string> row;
      for (std::size_t j = 0; j < phi.cols(); ++j) row.push_back(CsvWriter::num(phi(i, j)));
      w.row(row);
    }
  }

  void write_ranking_csv(const std::string& path, const Provenance& prov = {}) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ExplainError("cannot write " + path);
    if (prov.present) out << prov.comment_line() << "\n";
    out << "feature,mean_abs_phi,rank\n";
    for (std::size_t r = 0; r < ranking.size(); ++r)
      out << feature_names[ranking[r]] << "," << format_double(mean_abs_phi[ranking[r]]) << ","
          << (r + 1) << "\n";
    out << "# note: samples are correlated observations, not independent draws; "
           "attributions are local approximations of the fitted model, not causal effects\n";
  }
};

// Mean-|phi| ranking over a set of rows. Rows are attributed independently
// and in parallel; the result layout is fixed by row index.
inline AttributionReport attribution_report(const Mlp& model, const Dense& rows,
                                            const Dense& background,
                                            const std::vector<std::string>& feature_names,
                                            unsigned threads = 1) {
  const std::size_t n_rows = rows.rows(), n_feat = rows.cols();
  AttributionReport rep;
  rep.feature_names = feature_names;
  rep.phi = Dense(n_rows, n_feat);
  rep.base_values.resize(n_rows);
  rep.predictions.resize(n_rows);

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    auto f = [&](const Dense& blends) { return mlp_batch_prob(model, blends); };
    for (std::size_t i = lo; i < hi; ++i) {
      std::vector<double> x(rows.row(i), rows.row(i) + n_feat);
      auto attr = exact_shapley(f, x, background);
      std::copy(attr.phi.begin(), attr.phi.end(), rep.phi.row(i));
      rep.base_values[i] = attr.base_value;
      rep.predictions[i] = attr.prediction;
    }
  };
  if (threads <= 1 || n_rows < 8) {
    run_range(0, n_rows);
  } else {
    std::vector<std::future<void>> futures;
    std::size_t chunk = (n_rows + threads - 1) / threads;
    for (std::size_t lo = 0; lo < n_rows; lo += chunk)
      futures.push_back(
          std::async(std::launch::async, run_range, lo, std::min(n_rows, lo + chunk)));
    for (auto& f : futures) f.get();
  }

  rep.mean_abs_phi.assign(n_feat, 0.0);
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_feat; ++j) rep.mean_abs_phi[j] += std::abs(rep.phi(i, j));
  for (double& v : rep.mean_abs_phi) v /= static_cast<double>(n_rows);

  rep.ranking.resize(n_feat);
  std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(), [&](std::size_t a, std::size_t b) {
    return rep.mean_abs_phi[a] > rep.mean_abs_phi[b];
  });
  return rep;
}

}  // namespace refnet
