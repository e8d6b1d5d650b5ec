// refnet: referral-network analysis pipeline
//
// Subcommands cover the whole flow: synthetic data generation, record
// ingestion, network construction, EDA statistics, centralities, node
// embeddings, the with/without-social link-prediction experiment, exact
// Shapley attribution, and a cached end-to-end `reproduce`.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "refnet/config.hpp"

namespace fs = std::filesystem;
using namespace refnet;

namespace {

// Tracks files a stage writes so a failed stage leaves no partial outputs.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  std::string track(const std::string& path) {
    paths_.push_back(path);
    return path;
  }
  void commit() { committed_ = true; }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

struct Inputs {
  ConsultationTable consultations;
  PhysicianTable physicians;
};

Inputs load_inputs(const RunConfig& cfg) {
  if (cfg.consultations_path.empty() || cfg.physicians_path.empty())
    throw ConfigError("paths.consultations and paths.physicians are required for this command");
  Inputs in;
  in.consultations = load_consultations(cfg.consultations_path, cfg.ingest);
  in.physicians = load_physicians(cfg.physicians_path, cfg.ingest);
  return in;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

SynthConfig effective_synth(const RunConfig& cfg) {
  SynthConfig s = cfg.synth;
  s.seed = cfg.seed;
  s.window = cfg.ingest.window;
  return s;
}

void cmd_synth(const RunConfig& cfg) {
  OutputGuard guard;
  auto res = generate(effective_synth(cfg));
  auto prov = cfg.provenance();
  res.write_consultations_csv(guard.track(out_path(cfg, "consultations.csv")), prov);
  res.write_physicians_csv(guard.track(out_path(cfg, "physicians.csv")), prov);
  res.write_manifest_csv(guard.track(out_path(cfg, "manifest.csv")), prov);
  guard.commit();
  std::printf("synth: %zu consultations, %zu physicians, %zu planted pairs\n",
              res.consultations.records.size(), res.physicians.profiles.size(),
              res.planted_pairs.size());
}

void cmd_ingest(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto prov = cfg.provenance();
  in.consultations.write_rejections_csv(guard.track(out_path(cfg, "rejections.csv")), prov);
  {
    CsvWriter w(guard.track(out_path(cfg, "census.csv")), {"role", "count"}, prov);
    w.row({"PC", std::to_string(in.physicians.census.pc)});
    w.row({"SC", std::to_string(in.physicians.census.sc)});
    w.row({"unknown", std::to_string(in.physicians.census.unknown)});
  }
  guard.commit();
  std::printf("ingest: %zu accepted, %zu rejected; census PC=%zu SC=%zu unknown=%zu\n",
              in.consultations.records.size(), in.consultations.rejections.size(),
              in.physicians.census.pc, in.physicians.census.sc, in.physicians.census.unknown);
}

void cmd_build_referral(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto interactions =
      extract_interactions(in.consultations, in.physicians, cfg.max_gap_days, cfg.rule);
  auto net = build_referral_network(interactions);
  auto prov = cfg.provenance();
  net.write_edge_csv(guard.track(out_path(cfg, "referral_edges.csv")), prov);
  net.write_node_csv(guard.track(out_path(cfg, "referral_nodes.csv")), prov);
  guard.commit();
  std::printf("referral network: %zu nodes, %zu edges, total weight %s\n", net.node_count(),
              net.edge_count(), format_double(net.total_weight()).c_str());
}

void cmd_build_professional(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto net = build_professional_network(in.physicians);
  auto prov = cfg.provenance();
  net.write_edge_csv(guard.track(out_path(cfg, "professional_edges.csv")), prov);
  net.write_node_csv(guard.track(out_path(cfg, "professional_nodes.csv")), prov);
  guard.commit();
  std::printf("professional network: %zu nodes, %zu edges\n", net.node_count(), net.edge_count());
}

void cmd_eda(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto prov = cfg.provenance();
  auto unbounded = extract_interactions(in.consultations, in.physicians, kUnboundedGap, cfg.rule);
  auto dist = interval_distribution(unbounded);
  dist.write_csv(guard.track(out_path(cfg, "interval_distribution.csv")), prov);
  write_histogram_csv(physicians_per_patient_histogram(in.consultations),
                      guard.track(out_path(cfg, "physicians_per_patient.csv")), prov);
  write_specialty_year_csv(in.consultations, in.physicians,
                           guard.track(out_path(cfg, "specialty_year.csv")), prov);
  write_school_demographics_csv(in.physicians,
                                guard.track(out_path(cfg, "school_demographics.csv")), prov);
  guard.commit();
  std::printf("eda: %zu unbounded interactions, cumulative(<=30d)=%s\n", unbounded.size(),
              format_double(dist.cumulative_at(30)).c_str());
}

void cmd_centrality(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto net = build_professional_network(in.physicians);
  auto table = compute_centralities(net, cfg.threads);
  table.write_csv(net, guard.track(out_path(cfg, "centrality.csv")), cfg.provenance());
  guard.commit();
  std::printf("centrality: %zu nodes scored\n", net.node_count());
}

void write_pca_csv(const EmbeddingMatrix& emb, const Network& referral,
                   const PhysicianTable& physicians, const std::string& path,
                   const Provenance& prov) {
  auto p = pca_2d(emb.vectors);
  CsvWriter w(path, {"node_id", "x", "y", "role", "gender", "birth_year", "hospital"}, prov);
  for (NodeId u = 0; u < referral.node_count(); ++u) {
    const PhysicianProfile* prof = physicians.find(referral.label(u));
    std::string birth = prof && prof->birth_year ? std::to_string(*prof->birth_year) : "";
    std::string hospital = prof && !prof->hospitals.empty() ? prof->hospitals.front() : "";
    w.row({std::to_string(u), CsvWriter::num(p.x[u]), CsvWriter::num(p.y[u]),
           role_name(referral.role(u)), prof ? gender_name(prof->gender) : "unknown", birth,
           hospital});
  }
}

void cmd_embed(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto data = PipelineData::build(in.consultations, in.physicians, cfg.max_gap_days, cfg.threads);
  if (cfg.features != "with_social" && cfg.features != "without_social")
    throw ConfigError("features must be with_social or without_social");
  FeatureSet set =
      cfg.features == "with_social" ? FeatureSet::WithSocial : FeatureSet::WithoutSocial;
  auto features =
      build_node_features(data.referral, in.physicians, data.professional, &data.centralities, set);

  EmbedModel model = embed_model_from_name(cfg.model);
  Rng root(cfg.seed);
  EmbeddingMatrix emb;
  switch (model) {
    case EmbedModel::Node2Vec:
      emb =
          train_node2vec(data.referral, cfg.experiment.walk, root.derive("embed").key()).embedding;
      break;
    case EmbedModel::GraphSage:
      emb = train_graphsage(data.referral, features, cfg.experiment.sage, root.derive("embed").key())
                .embedding;
      break;
    case EmbedModel::Attri2Vec:
      emb = train_attri2vec(data.referral, features, cfg.experiment.attri2vec,
                            root.derive("embed").key())
                .embedding;
      break;
  }
  emb.feature_set = cfg.features;
  auto prov = cfg.provenance();
  emb.write_csv(guard.track(out_path(cfg, "embeddings_" + cfg.model + "_" + cfg.features + ".csv")),
                prov);
  write_pca_csv(emb, data.referral, in.physicians,
                guard.track(out_path(cfg, "pca_" + cfg.model + "_" + cfg.features + ".csv")), prov);
  guard.commit();
  std::printf("embed: %s/%s -> %zu nodes x %zu dims\n", cfg.model.c_str(), cfg.features.c_str(),
              emb.node_count(), emb.dim());
}

std::vector<ExperimentReport> run_table2(const PipelineData& data, const PhysicianTable& physicians,
                                         const std::vector<EmbedModel>& models,
                                         const std::vector<FeatureSet>& feature_sets,
                                         const RunConfig& cfg) {
  ExperimentConfig ecfg = cfg.experiment;
  ecfg.max_gap_days = cfg.max_gap_days;
  ecfg.threads = cfg.threads;
  EmbeddingCache cache;
  std::vector<ExperimentReport> reports;
  for (EmbedModel m : models)
    for (FeatureSet f : feature_sets)
      reports.push_back(run_experiment(data, physicians, m, f, cfg.seeds, ecfg, &cache));
  return reports;
}

void cmd_experiment(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto data = PipelineData::build(in.consultations, in.physicians, cfg.max_gap_days, cfg.threads);
  if (cfg.features != "with_social" && cfg.features != "without_social")
    throw ConfigError("features must be with_social or without_social");
  FeatureSet set =
      cfg.features == "with_social" ? FeatureSet::WithSocial : FeatureSet::WithoutSocial;
  auto reports = run_table2(data, in.physicians, {embed_model_from_name(cfg.model)}, {set}, cfg);
  auto prov = cfg.provenance();
  write_experiment_reports_csv(
      reports, guard.track(out_path(cfg, "experiment_" + cfg.model + "_" + cfg.features + ".csv")),
      prov);
  write_predictions_csv(
      data.referral, reports[0].runs[0],
      guard.track(out_path(cfg, "predictions_" + cfg.model + "_" + cfg.features + ".csv")), prov);
  guard.commit();
  const auto& r = reports[0];
  std::printf("experiment %s/%s: loss %.4f+-%.4f acc %.4f+-%.4f auc %.4f+-%.4f\n", r.model.c_str(),
              r.feature_set.c_str(), r.mean_loss, r.sd_loss, r.mean_accuracy, r.sd_accuracy,
              r.mean_auc, r.sd_auc);
}

struct ExplainOutput {
  AttributionReport report;
  Mlp classifier;
  std::size_t positives = 0;
};

ExplainOutput run_explain(const PipelineData& data, const PhysicianTable& physicians,
                          const RunConfig& cfg) {
  PairFeatureSpec spec{cfg.explain.features == "engineered"};
  auto ctx =
      PairFeatureContext::build(data.referral, physicians, data.professional, data.centralities);

  // balanced rows: every referral edge vs an equal number of non-edges
  std::vector<EdgePair> positives;
  for (auto [u, v, w] : data.referral.edges()) positives.emplace_back(u, v);
  Rng rng(cfg.seed);
  Rng neg_rng = rng.derive("explain_negatives");
  std::vector<NodeId> pcs, scs;
  for (NodeId u = 0; u < data.referral.node_count(); ++u)
    (data.referral.role(u) == Role::PC ? pcs : scs).push_back(u);
  std::vector<EdgePair> negatives;
  std::set<EdgePair> seen;
  std::size_t attempts = 0;
  while (negatives.size() < positives.size() && attempts < 200 * positives.size() + 10000) {
    ++attempts;
    NodeId u = pcs[neg_rng.index(pcs.size())];
    NodeId v = scs[neg_rng.index(scs.size())];
    if (data.referral.has_edge(u, v) || !seen.insert({u, v}).second) continue;
    negatives.push_back({u, v});
  }
  if (negatives.size() < positives.size())
    throw ExplainError("could not sample enough non-edges for the explain stage");

  std::vector<EdgePair> pairs = positives;
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  std::vector<double> labels(positives.size(), 1.0);
  labels.resize(pairs.size(), 0.0);
  Dense rows = ctx.rows_for(pairs, spec);

  auto clf =
      train_pair_classifier(rows, labels, rng.derive("explain_clf").key(), cfg.explain.epochs);

  // background and attribution samples drawn from the training rows
  std::vector<std::size_t> order(rows.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng srng = rng.derive("explain_sample");
  srng.shuffle(order);
  std::size_t n_bg = std::min(cfg.explain.background_size, rows.rows());
  Dense background(n_bg, rows.cols());
  for (std::size_t i = 0; i < n_bg; ++i)
    std::copy_n(rows.row(order[i]), rows.cols(), background.row(i));
  std::size_t n_sample = std::min(cfg.explain.sample_rows, rows.rows());
  Dense sample(n_sample, rows.cols());
  for (std::size_t i = 0; i < n_sample; ++i)
    std::copy_n(rows.row(order[(i + n_bg) % rows.rows()]), rows.cols(), sample.row(i));

  auto report = attribution_report(clf.model, sample, background, spec.names(), cfg.threads);
  return {std::move(report), std::move(clf.model), positives.size()};
}

void cmd_explain(const RunConfig& cfg) {
  OutputGuard guard;
  auto in = load_inputs(cfg);
  auto data = PipelineData::build(in.consultations, in.physicians, cfg.max_gap_days, cfg.threads);
  auto out = run_explain(data, in.physicians, cfg);
  auto prov = cfg.provenance();
  out.report.write_values_csv(guard.track(out_path(cfg, "shap_values.csv")), prov);
  out.report.write_ranking_csv(guard.track(out_path(cfg, "shap_ranking.csv")), prov);
  out.classifier.save(guard.track(out_path(cfg, "pair_classifier.bin")), prov);
  guard.commit();
  std::printf("explain (%s features): top feature by mean |phi| is %s\n",
              cfg.explain.features.c_str(),
              out.report.feature_names[out.report.ranking[0]].c_str());
}

// reproduce: cached stage chain over a synthetic dataset, ending in the
// with/without-social table and the attribution ranking.
bool stage_done(const fs::path& dir, std::uint64_t digest) {
  std::ifstream in(dir / ".done");
  if (!in) return false;
  std::string s;
  in >> s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return s == buf;
}

void mark_stage_done(const fs::path& dir, std::uint64_t digest) {
  std::ofstream out(dir / ".done");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  out << buf << "\n";
}

void cmd_reproduce(const RunConfig& cfg) {
  const auto prov = cfg.provenance();
  const std::uint64_t digest = prov.digest;
  fs::path root(cfg.out_dir);

  auto stage = [&](const std::string& name, auto&& body) {
    fs::path dir = root / name;
    fs::create_directories(dir);
    if (stage_done(dir, digest)) {
      std::printf("reproduce: %s cached\n", name.c_str());
      return;
    }
    try {
      body(dir);
    } catch (...) {
      std::fprintf(stderr, "error in stage %s\n", name.c_str());
      throw;
    }
    mark_stage_done(dir, digest);
    std::printf("reproduce: %s done\n", name.c_str());
  };

  stage("synth", [&](const fs::path& dir) {
    OutputGuard guard;
    auto res = generate(effective_synth(cfg));
    res.write_consultations_csv(guard.track((dir / "consultations.csv").string()), prov);
    res.write_physicians_csv(guard.track((dir / "physicians.csv").string()), prov);
    res.write_manifest_csv(guard.track((dir / "manifest.csv").string()), prov);
    guard.commit();
  });

  // the chain re-enters through the CSV interfaces on purpose
  Inputs in;
  in.consultations =
      load_consultations((root / "synth" / "consultations.csv").string(), cfg.ingest);
  in.physicians = load_physicians((root / "synth" / "physicians.csv").string(), cfg.ingest);

  stage("ingest", [&](const fs::path& dir) {
    OutputGuard guard;
    in.consultations.write_rejections_csv(guard.track((dir / "rejections.csv").string()), prov);
    CsvWriter w(guard.track((dir / "census.csv").string()), {"role", "count"}, prov);
    w.row({"PC", std::to_string(in.physicians.census.pc)});
    w.row({"SC", std::to_string(in.physicians.census.sc)});
    w.row({"unknown", std::to_string(in.physicians.census.unknown)});
    guard.commit();
  });

  auto data = PipelineData::build(in.consultations, in.physicians, cfg.max_gap_days, cfg.threads);

  stage("networks", [&](const fs::path& dir) {
    OutputGuard guard;
    data.referral.write_edge_csv(guard.track((dir / "referral_edges.csv").string()), prov);
    data.referral.write_node_csv(guard.track((dir / "referral_nodes.csv").string()), prov);
    data.professional.write_edge_csv(guard.track((dir / "professional_edges.csv").string()), prov);
    data.professional.write_node_csv(guard.track((dir / "professional_nodes.csv").string()), prov);
    guard.commit();
  });

  stage("eda", [&](const fs::path& dir) {
    OutputGuard guard;
    auto unbounded =
        extract_interactions(in.consultations, in.physicians, kUnboundedGap, cfg.rule);
    interval_distribution(unbounded).write_csv(
        guard.track((dir / "interval_distribution.csv").string()), prov);
    write_histogram_csv(physicians_per_patient_histogram(in.consultations),
                        guard.track((dir / "physicians_per_patient.csv").string()), prov);
    write_specialty_year_csv(in.consultations, in.physicians,
                             guard.track((dir / "specialty_year.csv").string()), prov);
    write_school_demographics_csv(in.physicians,
                                  guard.track((dir / "school_demographics.csv").string()), prov);
    guard.commit();
  });

  stage("centrality", [&](const fs::path& dir) {
    OutputGuard guard;
    data.centralities.write_csv(data.professional, guard.track((dir / "centrality.csv").string()),
                                prov);
    guard.commit();
  });

  stage("experiment", [&](const fs::path& dir) {
    OutputGuard guard;
    auto reports = run_table2(data, in.physicians,
                              {EmbedModel::GraphSage, EmbedModel::Attri2Vec, EmbedModel::Node2Vec},
                              {FeatureSet::WithoutSocial, FeatureSet::WithSocial}, cfg);
    write_experiment_reports_csv(reports, guard.track((dir / "table2_synthetic.csv").string()),
                                 prov);
    for (const auto& rep : reports)
      write_predictions_csv(
          data.referral, rep.runs[0],
          guard.track((dir / ("predictions_" + rep.model + "_" + rep.feature_set + ".csv")).string()),
          prov);
    guard.commit();
  });

  stage("explain", [&](const fs::path& dir) {
    OutputGuard guard;
    auto out = run_explain(data, in.physicians, cfg);
    out.report.write_values_csv(guard.track((dir / "shap_values.csv").string()), prov);
    out.report.write_ranking_csv(guard.track((dir / "shap_ranking.csv").string()), prov);
    out.classifier.save(guard.track((dir / "pair_classifier.bin").string()), prov);
    guard.commit();
  });

  stage("summary", [&](const fs::path& dir) {
    (void)dir;
    OutputGuard guard;
    std::ofstream out(guard.track((root / "summary.txt").string()), std::ios::binary);
    out << prov.comment_line() << "\n";
    out << "census: PC=" << in.physicians.census.pc << " SC=" << in.physicians.census.sc
        << " unknown=" << in.physicians.census.unknown << "\n";
    out << "referral network: " << data.referral.node_count() << " nodes, "
        << data.referral.edge_count() << " edges\n";
    out << "professional network: " << data.professional.node_count() << " nodes, "
        << data.professional.edge_count() << " edges\n";
    auto table = read_csv((root / "experiment" / "table2_synthetic.csv").string());
    out << "link prediction (mean over " << cfg.seeds.size() << " seeds):\n";
    for (const auto& row : table.rows)
      if (row.size() == 6 && row[5] == "mean")
        out << "  " << row[0] << " " << row[1] << ": loss=" << row[2] << " accuracy=" << row[3]
            << " auc=" << row[4] << "\n";
    auto ranking = read_csv((root / "explain" / "shap_ranking.csv").string());
    out << "top attribution features (" << cfg.explain.features << "):\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(cfg.explain.top_k, ranking.rows.size()); ++i)
      out << "  " << ranking.rows[i][2] << ". " << ranking.rows[i][0]
          << " mean|phi|=" << ranking.rows[i][1] << "\n";
    guard.commit();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"referral-network analysis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag, "root seed (overrides config)");
  std::optional<std::string> out_dir_flag;
  app.add_option("--out-dir", out_dir_flag, "output directory (overrides config)");
  std::optional<std::int64_t> max_gap_flag;
  app.add_option("--max-gap-days", max_gap_flag, "referral gap cap in days");
  std::optional<std::string> model_flag;
  app.add_option("--model", model_flag, "embedding model: node2vec|graphsage|attri2vec");
  std::optional<std::string> features_flag;
  app.add_option("--features", features_flag, "feature set: with_social|without_social");
  std::optional<double> alpha_flag;
  app.add_option("--alpha", alpha_flag, "synthetic social coupling (overrides config)");
  std::optional<unsigned> threads_flag;
  app.add_option("--threads", threads_flag, "worker threads");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  auto* ingest_cmd = app.add_subcommand("ingest", "validate record files and report the census");
  auto* refer_cmd = app.add_subcommand("build-referral", "construct the referral network");
  auto* prof_cmd = app.add_subcommand("build-professional", "construct the professional network");
  auto* eda_cmd = app.add_subcommand("eda", "interval distribution and summary statistics");
  auto* centr_cmd = app.add_subcommand("centrality", "professional-network centralities");
  auto* embed_cmd = app.add_subcommand("embed", "train node embeddings and export them");
  auto* exp_cmd = app.add_subcommand("experiment", "link-prediction experiment for one model");
  auto* explain_cmd = app.add_subcommand("explain", "pair classifier + exact Shapley attribution");
  auto* repro_cmd = app.add_subcommand("reproduce", "full synthetic pipeline, cached per stage");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_run_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (out_dir_flag) cfg.out_dir = *out_dir_flag;
    if (max_gap_flag) cfg.max_gap_days = *max_gap_flag;
    if (model_flag) cfg.model = *model_flag;
    if (features_flag) cfg.features = *features_flag;
    if (alpha_flag) cfg.synth.alpha = *alpha_flag;
    if (threads_flag) cfg.threads = *threads_flag;

    if (synth_cmd->parsed()) cmd_synth(cfg);
    if (ingest_cmd->parsed()) cmd_ingest(cfg);
    if (refer_cmd->parsed()) cmd_build_referral(cfg);
    if (prof_cmd->parsed()) cmd_build_professional(cfg);
    if (eda_cmd->parsed()) cmd_eda(cfg);
    if (centr_cmd->parsed()) cmd_centrality(cfg);
    if (embed_cmd->parsed()) cmd_embed(cfg);
    if (exp_cmd->parsed()) cmd_experiment(cfg);
    if (explain_cmd->parsed()) cmd_explain(cfg);
    if (repro_cmd->parsed()) cmd_reproduce(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
