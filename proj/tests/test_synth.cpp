#include <catch2/catch_amalgamated.hpp>
#include <map>

#include "oracles.hpp"
#include "refnet/netbuild.hpp"
#include "refnet/synth.hpp"

using namespace refnet;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_pc = 20;
  cfg.n_sc = 40;
  cfg.n_hospitals = 5;
  cfg.n_schools = 8;
  cfg.n_residencies = 8;
  cfg.n_communities = 5;
  cfg.patients = 4000;
  cfg.seed = 101;
  return cfg;
}

IngestConfig synth_ingest_config(const SynthConfig& cfg) {
  IngestConfig ic;
  ic.window = cfg.window;
  ic.study_end_year = cfg.window.end.year;
  return ic;
}

}  // namespace

TEST_CASE("generated census matches the configured counts") {
  SynthConfig cfg;
  cfg.n_pc = 2;
  cfg.n_sc = 3;
  cfg.patients = 50;
  cfg.seed = 7;
  auto res = generate(cfg);
  CHECK(res.physicians.census.pc == 2);
  CHECK(res.physicians.census.sc == 3);
  CHECK(res.physicians.census.unknown == 0);

  // CSV round trip through ingest preserves the census and roles
  res.write_physicians_csv("/tmp/refnet_synth_phys.csv");
  auto loaded = load_physicians("/tmp/refnet_synth_phys.csv", synth_ingest_config(cfg));
  CHECK(loaded.census.pc == 2);
  CHECK(loaded.census.sc == 3);
  CHECK(loaded.census.unknown == 0);

  SynthConfig bad = cfg;
  bad.n_sc = 0;
  CHECK_THROWS_AS(generate(bad), SynthError);
}

TEST_CASE("generation is bit-reproducible for a fixed seed") {
  auto cfg = small_config();
  auto a = generate(cfg);
  auto b = generate(cfg);
  REQUIRE(a.consultations.records.size() == b.consultations.records.size());
  for (std::size_t i = 0; i < a.consultations.records.size(); ++i) {
    CHECK(a.consultations.records[i].patient_id == b.consultations.records[i].patient_id);
    CHECK(a.consultations.records[i].physician_id == b.consultations.records[i].physician_id);
    CHECK(a.consultations.records[i].date == b.consultations.records[i].date);
  }
  CHECK(a.planted_pairs == b.planted_pairs);
  CHECK(a.propensity == b.propensity);

  cfg.seed = 102;
  auto c = generate(cfg);
  CHECK_FALSE(a.planted_pairs == c.planted_pairs);
}

TEST_CASE("null mechanism sends referrals uniformly across SCs") {
  SynthConfig cfg;
  cfg.n_pc = 20;
  cfg.n_sc = 50;
  cfg.alpha = 0;
  cfg.gamma = 0;
  cfg.beta = 0;
  cfg.patients = 80000;
  cfg.seed = 11;
  auto res = generate(cfg);

  std::vector<double> counts(cfg.n_sc, 0.0);
  double total = 0;
  for (const auto& [pair, c] : res.planted_pairs) {
    std::size_t idx = std::stoul(pair.second.substr(3)) - 1;
    counts[idx] += static_cast<double>(c);
    total += static_cast<double>(c);
  }
  REQUIRE(total > 90000);  // needs ~1e5 referrals for the chi-square power
  double expected = total / static_cast<double>(cfg.n_sc);
  double stat = 0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  CHECK(oracles::chi_square_pvalue(stat, static_cast<double>(cfg.n_sc - 1)) > 0.01);
}

TEST_CASE("netbuild reconstructs the planted pair multiset exactly") {
  auto cfg = small_config();
  auto res = generate(cfg);
  auto interactions =
      extract_interactions(res.consultations, res.physicians, cfg.gap_max_days);
  REQUIRE_FALSE(interactions.empty());

  std::map<std::pair<std::string, std::string>, std::size_t> recovered;
  for (const auto& it : interactions) ++recovered[{it.pc_id, it.sc_id}];
  CHECK(recovered == res.planted_pairs);

  // and through the network builder: weights equal planted counts
  auto net = build_referral_network(interactions);
  double total_weight = net.total_weight();
  std::size_t planted_total = 0;
  for (const auto& [pair, c] : res.planted_pairs) planted_total += c;
  CHECK(total_weight == static_cast<double>(planted_total));
}

TEST_CASE("interval distribution hits the configured mass at 30 days") {
  auto cfg = small_config();
  cfg.patients = 20000;
  cfg.gap_target_within_30 = 0.22;
  auto res = generate(cfg);
  auto interactions = extract_interactions(res.consultations, res.physicians, kUnboundedGap);
  auto dist = interval_distribution(interactions);
  CHECK(dist.cumulative_at(30) > 0.20);
  CHECK(dist.cumulative_at(30) < 0.24);
}

TEST_CASE("physicians-per-patient histogram has the configured heavy tail") {
  auto cfg = small_config();
  // pools large enough that distinct-physician counts scale linearly with
  // episode counts instead of saturating
  cfg.n_pc = 200;
  cfg.n_sc = 400;
  cfg.patients = 40000;
  cfg.powerlaw_exponent = 2.5;
  auto res = generate(cfg);
  auto hist = physicians_per_patient_histogram(res.consultations);

  // discrete power-law exponent via the Clauset MLE on the tail
  const double xmin = 4.0;
  double log_sum = 0;
  double n = 0;
  for (const auto& [k, c] : hist) {
    if (static_cast<double>(k) < xmin) continue;
    log_sum += static_cast<double>(c) * std::log(static_cast<double>(k) / (xmin - 0.5));
    n += static_cast<double>(c);
  }
  REQUIRE(n > 100);
  double alpha_hat = 1.0 + n / log_sum;
  CHECK(alpha_hat > cfg.powerlaw_exponent - 0.3);
  CHECK(alpha_hat < cfg.powerlaw_exponent + 0.3);
}

TEST_CASE("increasing social coupling increases background-weight correlation") {
  std::vector<double> correlations;
  for (double alpha : {0.0, 0.4, 0.8}) {
    auto cfg = small_config();
    cfg.alpha = alpha;
    cfg.gamma = 0;
    cfg.patients = 20000;
    cfg.seed = 303;
    auto res = generate(cfg);

    std::vector<double> shared, weight;
    for (std::size_t i = 0; i < cfg.n_pc; ++i)
      for (std::size_t j = 0; j < cfg.n_sc; ++j) {
        shared.push_back(static_cast<double>(res.shared_count[i * cfg.n_sc + j]));
        auto it = res.planted_pairs.find({res.pc_ids[i], res.sc_ids[j]});
        weight.push_back(it == res.planted_pairs.end() ? 0.0
                                                       : static_cast<double>(it->second));
      }
    correlations.push_back(oracles::spearman(shared, weight));
  }
  CHECK(correlations[0] < correlations[1]);
  CHECK(correlations[1] < correlations[2]);
}

TEST_CASE("manifest csv round-trips parameters and pair counts") {
  SynthConfig cfg;
  cfg.n_pc = 3;
  cfg.n_sc = 4;
  cfg.patients = 200;
  cfg.seed = 17;
  auto res = generate(cfg);
  res.write_manifest_csv("/tmp/refnet_manifest.csv", Provenance(1, 17));
  auto csv = read_csv("/tmp/refnet_manifest.csv");
  REQUIRE(csv.header == std::vector<std::string>{"kind", "key1", "key2", "value"});

  std::size_t pair_rows = 0, prop_rows = 0;
  bool saw_alpha = false;
  for (const auto& row : csv.rows) {
    if (row[0] == "pair") ++pair_rows;
    if (row[0] == "propensity") ++prop_rows;
    if (row[0] == "param" && row[1] == "alpha") saw_alpha = true;
  }
  CHECK(saw_alpha);
  CHECK(pair_rows == res.planted_pairs.size());
  CHECK(prop_rows == cfg.n_pc * cfg.n_sc);
}
