#pragma once

#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/attri2vec.hpp"
#include "refnet/centrality.hpp"
#include "refnet/embedding.hpp"
#include "refnet/explain.hpp"
#include "refnet/features.hpp"
#include "refnet/graphsage.hpp"
#include "refnet/linkpred.hpp"
#include "refnet/netbuild.hpp"
#include "refnet/skipgram.hpp"
#include "refnet/synth.hpp"

namespace refnet {

enum class EmbedModel { Node2Vec, GraphSage, Attri2Vec };

inline const char* embed_model_name(EmbedModel m) {
  switch (m) {
    case EmbedModel::Node2Vec: return "node2vec";
    case EmbedModel::GraphSage: return "graphsage";
    default: return "attri2vec";
  }
}

inline EmbedModel embed_model_from_name(const std::string& name) {
  if (name == "node2vec") return EmbedModel::Node2Vec;
  if (name == "graphsage") return EmbedModel::GraphSage;
  if (name == "attri2vec") return EmbedModel::Attri2Vec;
  throw std::invalid_argument("unknown embedding model: " + name);
}

struct ExperimentConfig {
  std::int64_t max_gap_days = 30;
  double test_fraction = 0.1;
  PairOperator pair_op = PairOperator::Hadamard;
  WalkConfig walk;  // node2vec walks + skip-gram schedule
  SageConfig sage;
  Attri2VecConfig attri2vec;
  ClassifierConfig classifier;
  unsigned threads = 1;
};

// Everything the stages need, computed once per dataset.
struct PipelineData {
  std::vector<ReferralInteraction> interactions;
  Network referral;
  Network professional;
  CentralityTable centralities;

  static PipelineData build(const ConsultationTable& consultations,
                            const PhysicianTable& profiles, std::int64_t max_gap_days,
                            unsigned threads = 1) {
    PipelineData d;
    d.interactions = extract_interactions(consultations, profiles, max_gap_days);
    d.referral = build_referral_network(d.interactions);
    d.professional = build_professional_network(profiles);
    d.centralities = compute_centralities(d.professional, threads);
    return d;
  }
};

struct ExperimentRun {
  std::uint64_t seed = 0;
  LinkMetrics metrics;
  std::vector<EdgePair> test_pairs;
  std::vector<double> test_labels;
  std::vector<double> test_probs;
};

// Node2Vec embeddings depend only on (seed, split), not the feature set, so
// the two feature arms can share one training run.
class EmbeddingCache {
 public:
  const EmbeddingMatrix* find(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }
  void put(const std::string& key, EmbeddingMatrix emb) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(key, std::move(emb));
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingMatrix> map_;
};

// One (model, feature set, seed) arm: split, embed on the train graph,
// classify pair features, score out of sample. Node2Vec embeddings carry no
// node features, so for that model the endpoint feature vectors are
// concatenated onto the classifier input instead.
inline ExperimentRun run_experiment_once(const PipelineData& data, const PhysicianTable& profiles,
                                         EmbedModel model, FeatureSet feature_set,
                                         std::uint64_t seed, const ExperimentConfig& cfg,
                                         EmbeddingCache* cache = nullptr) {
  Rng root(seed);
  EdgeSplit split = split_edges(data.referral, cfg.test_fraction, root.derive("split").key());

  FeatureTable features = build_node_features(data.referral, profiles, data.professional,
                                              &data.centralities, feature_set);

  EmbeddingMatrix embedding;
  switch (model) {
    case EmbedModel::Node2Vec: {
      std::string key = "node2vec/" + std::to_string(seed);
      if (const EmbeddingMatrix* hit = cache ? cache->find(key) : nullptr) {
        embedding = *hit;
      } else {
        embedding =
            train_node2vec(split.train_graph, cfg.walk, root.derive("embed").key()).embedding;
        if (cache) cache->put(key, embedding);
      }
      break;
    }
    case EmbedModel::GraphSage:
      embedding =
          train_graphsage(split.train_graph, features, cfg.sage, root.derive("embed").key())
              .embedding;
      break;
    case EmbedModel::Attri2Vec:
      embedding =
          train_attri2vec(split.train_graph, features, cfg.attri2vec, root.derive("embed").key())
              .embedding;
      break;
  }
  embedding.feature_set = feature_set_name(feature_set);

  auto make_rows = [&](const std::vector<EdgePair>& pos, const std::vector<EdgePair>& neg,
                       std::vector<double>& labels, std::vector<EdgePair>* pairs_out) {
    std::vector<EdgePair> pairs = pos;
    pairs.insert(pairs.end(), neg.begin(), neg.end());
    labels.assign(pos.size(), 1.0);
    labels.resize(pairs.size(), 0.0);
    Dense base = pair_features(embedding, pairs, cfg.pair_op);
    if (pairs_out) *pairs_out = pairs;
    if (model != EmbedModel::Node2Vec) return base;
    // append endpoint node features on both sides
    const std::size_t f = features.dim();
    Dense rows(base.rows(), base.cols() + 2 * f);
    for (std::size_t i = 0; i < base.rows(); ++i) {
      std::copy_n(base.row(i), base.cols(), rows.row(i));
      auto [u, v] = pairs[i];
      std::copy_n(features.rows.row(u), f, rows.row(i) + base.cols());
      std::copy_n(features.rows.row(v), f, rows.row(i) + base.cols() + f);
    }
    return rows;
  };

  std::vector<double> train_labels, test_labels;
  Dense train_rows = make_rows(split.train_positives, split.train_negatives, train_labels, nullptr);
  ExperimentRun run;
  run.seed = seed;
  Dense test_rows = make_rows(split.test_positives, split.test_negatives, test_labels,
                              &run.test_pairs);

  LinkClassifier kind =
      model == EmbedModel::Node2Vec ? LinkClassifier::Logistic : LinkClassifier::MlpHidden20;
  TrainedClassifier clf = train_link_classifier(train_rows, train_labels, kind,
                                                root.derive("classifier").key(), cfg.classifier);

  run.test_labels = test_labels;
  run.test_probs = clf.predict(test_rows);
  run.metrics = evaluate_predictions(run.test_probs, run.test_labels);
  return run;
}

struct ExperimentReport {
  std::string model;
  std::string feature_set;
  std::vector<ExperimentRun> runs;
  double mean_loss = 0, sd_loss = 0;
  double mean_accuracy = 0, sd_accuracy = 0;
  double mean_auc = 0, sd_auc = 0;

  void finalize() {
    auto stats = [&](auto getter, double& mean, double& sd) {
      mean = 0;
      for (const auto& r : runs) mean += getter(r);
      mean /= static_cast<double>(runs.size());
      double var = 0;
      for (const auto& r : runs) var += (getter(r) - mean) * (getter(r) - mean);
      sd = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
    };
    stats([](const ExperimentRun& r) { return r.metrics.loss; }, mean_loss, sd_loss);
    stats([](const ExperimentRun& r) { return r.metrics.accuracy; }, mean_accuracy, sd_accuracy);
    stats([](const ExperimentRun& r) { return r.metrics.auc; }, mean_auc, sd_auc);
  }
};

// Multi-seed protocol; seeds run in parallel (each run is pure given its
// seed, so the schedule cannot change results).
inline ExperimentReport run_experiment(const PipelineData& data, const PhysicianTable& profiles,
                                       EmbedModel model, FeatureSet feature_set,
                                       const std::vector<std::uint64_t>& seeds,
                                       const ExperimentConfig& cfg,
                                       EmbeddingCache* cache = nullptr) {
  ExperimentReport rep;
  rep.model = embed_model_name(model);
  rep.feature_set = feature_set_name(feature_set);
  rep.runs.resize(seeds.size());
  if (cfg.threads <= 1 || seeds.size() == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      rep.runs[i] = run_experiment_once(data, profiles, model, feature_set, seeds[i], cfg, cache);
  } else {
    std::vector<std::future<ExperimentRun>> futures;
    for (std::size_t i = 0; i < seeds.size(); ++i)
      futures.push_back(std::async(std::launch::async, [&, i] {
        return run_experiment_once(data, profiles, model, feature_set, seeds[i], cfg, cache);
      }));
    for (std::size_t i = 0; i < seeds.size(); ++i) rep.runs[i] = futures[i].get();
  }
  rep.finalize();
  return rep;
}

inline void write_experiment_reports_csv(const std::vector<ExperimentReport>& reports,
                                         const std::string& path, const Provenance& prov = {}) {
  CsvWriter w(path, {"model", "features", "loss", "accuracy", "auc", "seed"}, prov);
  for (const auto& rep : reports) {
    for (const auto& run : rep.runs)
      w.row({rep.model, rep.feature_set, CsvWriter::num(run.metrics.loss),
             CsvWriter::num(run.metrics.accuracy), CsvWriter::num(run.metrics.auc),
             std::to_string(run.seed)});
    w.row({rep.model, rep.feature_set, CsvWriter::num(rep.mean_loss),
           CsvWriter::num(rep.mean_accuracy), CsvWriter::num(rep.mean_auc), "mean"});
    w.row({rep.model, rep.feature_set, CsvWriter::num(rep.sd_loss),
           CsvWriter::num(rep.sd_accuracy), CsvWriter::num(rep.sd_auc), "sd"});
  }
}

inline void write_predictions_csv(const Network& referral, const ExperimentRun& run,
                                  const std::string& path, const Provenance& prov = {}) {
  CsvWriter w(path, {"source", "target", "label", "probability"}, prov);
  for (std::size_t i = 0; i < run.test_pairs.size(); ++i) {
    auto [u, v] = run.test_pairs[i];
    w.row({referral.label(u), referral.label(v), CsvWriter::num(run.test_labels[i]),
           CsvWriter::num(run.test_probs[i])});
  }
}

}  // namespace refnet
