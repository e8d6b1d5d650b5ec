#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "refnet/csv.hpp"
#include "refnet/explain.hpp"
#include "refnet/netbuild.hpp"
#include "refnet/pipeline.hpp"
#include "refnet/synth.hpp"

namespace refnet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExplainStageConfig {
  std::string features = "base";  // base | engineered
  std::size_t background_size = 100;
  std::size_t epochs = 30;
  std::size_t sample_rows = 200;
  std::size_t top_k = 10;
};

// Effective configuration for one CLI invocation. Everything that can alter
// results feeds the digest; thread count deliberately does not.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned threads = 2;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string consultations_path;
  std::string physicians_path;
  IngestConfig ingest;
  std::int64_t max_gap_days = 30;
  InteractionRule rule = InteractionRule::Consecutive;
  SynthConfig synth;
  ExperimentConfig experiment;
  std::string model = "graphsage";
  std::string features = "with_social";
  ExplainStageConfig explain;

  std::uint64_t digest() const;
  Provenance provenance() const { return Provenance(digest(), seed); }
};

namespace config_detail {

inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                       const std::string& scope) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key: " + (scope.empty() ? it.key() : scope + "." + it.key()));
}

template <typename T>
inline void get_if(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline Date parse_date_or_throw(const std::string& s, const std::string& what) {
  auto d = parse_date(s);
  if (!d) throw ConfigError("invalid date for " + what + ": " + s);
  return *d;
}

}  // namespace config_detail

inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j, {"seed", "out_dir", "threads", "seeds", "paths", "window",
                 "primary_care_specialties", "max_gap_days", "interaction_rule", "synth", "walk",
                 "sage", "attri2vec", "linkpred", "explain", "model", "features"},
             "");
  get_if(j, "seed", cfg.seed);
  get_if(j, "out_dir", cfg.out_dir);
  get_if(j, "threads", cfg.threads);
  get_if(j, "seeds", cfg.seeds);
  get_if(j, "model", cfg.model);
  get_if(j, "features", cfg.features);
  get_if(j, "max_gap_days", cfg.max_gap_days);
  if (j.contains("interaction_rule")) {
    std::string rule = j.at("interaction_rule").get<std::string>();
    if (rule == "consecutive")
      cfg.rule = InteractionRule::Consecutive;
    else if (rule == "next_sc")
      cfg.rule = InteractionRule::NextSc;
    else
      throw ConfigError("unknown config value for interaction_rule: " + rule);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, {"consultations", "physicians"}, "paths");
    get_if(p, "consultations", cfg.consultations_path);
    get_if(p, "physicians", cfg.physicians_path);
  }
  if (j.contains("window")) {
    const auto& w = j.at("window");
    check_keys(w, {"start", "end"}, "window");
    if (w.contains("start"))
      cfg.ingest.window.start = parse_date_or_throw(w.at("start").get<std::string>(), "window.start");
    if (w.contains("end"))
      cfg.ingest.window.end = parse_date_or_throw(w.at("end").get<std::string>(), "window.end");
    cfg.ingest.study_end_year = cfg.ingest.window.end.year;
    cfg.synth.window = cfg.ingest.window;
  }
  if (j.contains("primary_care_specialties"))
    cfg.ingest.primary_care_specialties =
        j.at("primary_care_specialties").get<std::vector<std::string>>();
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    check_keys(s,
               {"n_pc", "n_sc", "n_hospitals", "n_schools", "n_residencies", "n_communities",
                "community_skew", "affiliation_loyalty", "alpha", "gamma", "beta", "patients",
                "powerlaw_exponent", "max_episodes_per_patient", "referral_probability",
                "gap_target_within_30", "gap_max_days"},
               "synth");
    get_if(s, "n_pc", cfg.synth.n_pc);
    get_if(s, "n_sc", cfg.synth.n_sc);
    get_if(s, "n_hospitals", cfg.synth.n_hospitals);
    get_if(s, "n_schools", cfg.synth.n_schools);
    get_if(s, "n_residencies", cfg.synth.n_residencies);
    get_if(s, "n_communities", cfg.synth.n_communities);
    get_if(s, "community_skew", cfg.synth.community_skew);
    get_if(s, "affiliation_loyalty", cfg.synth.affiliation_loyalty);
    get_if(s, "alpha", cfg.synth.alpha);
    get_if(s, "gamma", cfg.synth.gamma);
    get_if(s, "beta", cfg.synth.beta);
    get_if(s, "patients", cfg.synth.patients);
    get_if(s, "powerlaw_exponent", cfg.synth.powerlaw_exponent);
    get_if(s, "max_episodes_per_patient", cfg.synth.max_episodes_per_patient);
    get_if(s, "referral_probability", cfg.synth.referral_probability);
    get_if(s, "gap_target_within_30", cfg.synth.gap_target_within_30);
    get_if(s, "gap_max_days", cfg.synth.gap_max_days);
  }
  if (j.contains("walk")) {
    const auto& w = j.at("walk");
    check_keys(w,
               {"walks_per_node", "walk_length", "return_p", "inout_q", "window",
                "negatives_per_positive", "embedding_dim", "epochs", "learning_rate"},
               "walk");
    auto& wc = cfg.experiment.walk;
    get_if(w, "walks_per_node", wc.walks_per_node);
    get_if(w, "walk_length", wc.walk_length);
    get_if(w, "return_p", wc.return_p);
    get_if(w, "inout_q", wc.inout_q);
    get_if(w, "window", wc.window);
    get_if(w, "negatives_per_positive", wc.negatives_per_positive);
    get_if(w, "embedding_dim", wc.embedding_dim);
    get_if(w, "epochs", wc.epochs);
    get_if(w, "learning_rate", wc.learning_rate);
  }
  if (j.contains("sage")) {
    const auto& s = j.at("sage");
    check_keys(s,
               {"layer_sizes", "epochs", "dropout", "learning_rate", "neighbor_samples",
                "walk_length", "walks_per_node", "negatives_per_positive", "batch_size"},
               "sage");
    auto& sc = cfg.experiment.sage;
    if (s.contains("layer_sizes")) {
      auto sizes = s.at("layer_sizes").get<std::vector<std::size_t>>();
      if (sizes.size() != 2) throw ConfigError("sage.layer_sizes must have exactly 2 entries");
      sc.layer_sizes = {sizes[0], sizes[1]};
    }
    if (s.contains("neighbor_samples")) {
      auto ns = s.at("neighbor_samples").get<std::vector<std::size_t>>();
      if (ns.size() != 2) throw ConfigError("sage.neighbor_samples must have exactly 2 entries");
      sc.neighbor_samples = {ns[0], ns[1]};
    }
    get_if(s, "epochs", sc.epochs);
    get_if(s, "dropout", sc.dropout);
    get_if(s, "learning_rate", sc.learning_rate);
    get_if(s, "walk_length", sc.walk_length);
    get_if(s, "walks_per_node", sc.walks_per_node);
    get_if(s, "negatives_per_positive", sc.negatives_per_positive);
    get_if(s, "batch_size", sc.batch_size);
  }
  if (j.contains("attri2vec")) {
    const auto& a = j.at("attri2vec");
    check_keys(a,
               {"hidden_dim", "epochs", "learning_rate", "sigmoid_mapping", "walks_per_node",
                "walk_length", "window", "negatives_per_positive"},
               "attri2vec");
    auto& ac = cfg.experiment.attri2vec;
    get_if(a, "hidden_dim", ac.hidden_dim);
    get_if(a, "epochs", ac.epochs);
    get_if(a, "learning_rate", ac.learning_rate);
    get_if(a, "sigmoid_mapping", ac.sigmoid_mapping);
    get_if(a, "walks_per_node", ac.walks.walks_per_node);
    get_if(a, "walk_length", ac.walks.walk_length);
    get_if(a, "window", ac.walks.window);
    get_if(a, "negatives_per_positive", ac.walks.negatives_per_positive);
  }
  if (j.contains("linkpred")) {
    const auto& l = j.at("linkpred");
    check_keys(l, {"test_fraction", "pair_operator", "classifier_epochs", "classifier_batch_size",
                   "classifier_learning_rate", "classifier_logistic_weight_decay",
                   "classifier_mlp_weight_decay"},
               "linkpred");
    get_if(l, "test_fraction", cfg.experiment.test_fraction);
    if (l.contains("pair_operator"))
      cfg.experiment.pair_op = pair_operator_from_name(l.at("pair_operator").get<std::string>());
    get_if(l, "classifier_epochs", cfg.experiment.classifier.epochs);
    get_if(l, "classifier_batch_size", cfg.experiment.classifier.batch_size);
    get_if(l, "classifier_learning_rate", cfg.experiment.classifier.learning_rate);
    get_if(l, "classifier_logistic_weight_decay",
           cfg.experiment.classifier.logistic_weight_decay);
    get_if(l, "classifier_mlp_weight_decay", cfg.experiment.classifier.mlp_weight_decay);
  }
  if (j.contains("explain")) {
    const auto& e = j.at("explain");
    check_keys(e, {"features", "background_size", "epochs", "sample_rows", "top_k"}, "explain");
    get_if(e, "features", cfg.explain.features);
    get_if(e, "background_size", cfg.explain.background_size);
    get_if(e, "epochs", cfg.explain.epochs);
    get_if(e, "sample_rows", cfg.explain.sample_rows);
    get_if(e, "top_k", cfg.explain.top_k);
    if (cfg.explain.features != "base" && cfg.explain.features != "engineered")
      throw ConfigError("explain.features must be base or engineered");
  }
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  apply_json(cfg, j);
  return cfg;
}

// Canonical JSON of every result-affecting field (nlohmann sorts object
// keys), hashed with FNV-1a.
inline std::uint64_t RunConfig::digest() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["seeds"] = seeds;
  j["paths"] = {{"consultations", consultations_path}, {"physicians", physicians_path}};
  j["window"] = {{"start", format_date(ingest.window.start)},
                 {"end", format_date(ingest.window.end)}};
  j["primary_care_specialties"] = ingest.primary_care_specialties;
  j["max_gap_days"] = max_gap_days;
  j["interaction_rule"] = rule == InteractionRule::Consecutive ? "consecutive" : "next_sc";
  j["model"] = model;
  j["features"] = features;
  j["synth"] = {{"n_pc", synth.n_pc},
                {"n_sc", synth.n_sc},
                {"n_hospitals", synth.n_hospitals},
                {"n_schools", synth.n_schools},
                {"n_residencies", synth.n_residencies},
                {"n_communities", synth.n_communities},
                {"community_skew", synth.community_skew},
                {"affiliation_loyalty", synth.affiliation_loyalty},
                {"alpha", synth.alpha},
                {"gamma", synth.gamma},
                {"beta", synth.beta},
                {"patients", synth.patients},
                {"powerlaw_exponent", synth.powerlaw_exponent},
                {"max_episodes_per_patient", synth.max_episodes_per_patient},
                {"referral_probability", synth.referral_probability},
                {"gap_target_within_30", synth.gap_target_within_30},
                {"gap_max_days", synth.gap_max_days}};
  const auto& w = experiment.walk;
  j["walk"] = {{"walks_per_node", w.walks_per_node},
               {"walk_length", w.walk_length},
               {"return_p", w.return_p},
               {"inout_q", w.inout_q},
               {"window", w.window},
               {"negatives_per_positive", w.negatives_per_positive},
               {"embedding_dim", w.embedding_dim},
               {"epochs", w.epochs},
               {"learning_rate", w.learning_rate}};
  const auto& s = experiment.sage;
  j["sage"] = {{"layer_sizes", {s.layer_sizes[0], s.layer_sizes[1]}},
               {"epochs", s.epochs},
               {"dropout", s.dropout},
               {"learning_rate", s.learning_rate},
               {"neighbor_samples", {s.neighbor_samples[0], s.neighbor_samples[1]}},
               {"walk_length", s.walk_length},
               {"walks_per_node", s.walks_per_node},
               {"negatives_per_positive", s.negatives_per_positive},
               {"batch_size", s.batch_size}};
  const auto& a = experiment.attri2vec;
  j["attri2vec"] = {{"hidden_dim", a.hidden_dim},
                    {"epochs", a.epochs},
                    {"learning_rate", a.learning_rate},
                    {"sigmoid_mapping", a.sigmoid_mapping},
                    {"walks_per_node", a.walks.walks_per_node},
                    {"walk_length", a.walks.walk_length},
                    {"window", a.walks.window},
                    {"negatives_per_positive", a.walks.negatives_per_positive}};
  j["linkpred"] = {{"test_fraction", experiment.test_fraction},
                   {"pair_operator", static_cast<int>(experiment.pair_op)},
                   {"classifier_epochs", experiment.classifier.epochs},
                   {"classifier_batch_size", experiment.classifier.batch_size},
                   {"classifier_learning_rate", experiment.classifier.learning_rate},
                   {"classifier_logistic_weight_decay", experiment.classifier.logistic_weight_decay},
                   {"classifier_mlp_weight_decay", experiment.classifier.mlp_weight_decay}};
  j["explain"] = {{"features", explain.features},
                  {"background_size", explain.background_size},
                  {"epochs", explain.epochs},
                  {"sample_rows", explain.sample_rows},
                  {"top_k", explain.top_k}};
  std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace refnet
