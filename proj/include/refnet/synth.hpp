#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/dates.hpp"
#include "refnet/dense.hpp"
#include "refnet/records.hpp"
#include "refnet/rng.hpp"

namespace refnet {

struct SynthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generator with planted, tunable social mechanisms. Referral propensity is
// log-linear: score(pc,sc) ~ exp(alpha*shared_background + gamma*ln(1+deg_sc)
// + beta*same_gender), where deg_sc is the SC's realized professional-network
// degree. Each knob isolates one driver, so the pipeline's recovery of that
// driver is checkable against ground truth.
struct SynthConfig {
  std::size_t n_pc = 300;
  std::size_t n_sc = 700;
  std::size_t n_hospitals = 100;
  std::size_t n_schools = 150;
  std::size_t n_residencies = 150;
  // Physicians belong to latent communities with zipf sizes; each affiliation
  // follows the community's canonical institution with probability
  // `affiliation_loyalty`, else a uniform draw from the pool. Correlated
  // affiliations give shared-background counts real contrast, and the size
  // spread gives professional degree (the gamma input) a wide dynamic range.
  std::size_t n_communities = 40;
  double community_skew = 1.4;
  double affiliation_loyalty = 0.75;
  double alpha = 0.8;  // social coupling (shared background)
  double gamma = 0.5;  // popularity preference
  double beta = 0.0;   // gender homophily
  std::size_t patients = 20000;
  double powerlaw_exponent = 2.5;  // episodes per patient ~ k^-exponent
  std::size_t max_episodes_per_patient = 50;
  double referral_probability = 0.7;
  double gap_target_within_30 = 0.22;
  std::int64_t gap_max_days = 365;
  DateRange window{{2012, 1, 1}, {2017, 12, 31}};
  std::uint64_t seed = 1;

  void validate() const {
    if (n_pc == 0 || n_sc == 0) throw SynthError("need at least one PC and one SC");
    if (n_hospitals == 0 || n_schools == 0 || n_residencies == 0)
      throw SynthError("affiliation pools must be nonempty");
    if (n_communities == 0 || n_communities > n_schools || n_communities > n_residencies ||
        n_communities > n_hospitals)
      throw SynthError("n_communities must be in [1, min(affiliation pools)]");
    if (affiliation_loyalty < 0 || affiliation_loyalty > 1)
      throw SynthError("affiliation_loyalty must be within [0,1]");
    if (patients == 0) throw SynthError("need at least one patient");
    if (referral_probability < 0 || referral_probability > 1 || gap_target_within_30 < 0 ||
        gap_target_within_30 > 1)
      throw SynthError("probabilities must be within [0,1]");
    if (gap_max_days < 31) throw SynthError("gap_max_days must be at least 31");
    if (powerlaw_exponent <= 1.0) throw SynthError("power-law exponent must exceed 1");
    std::int64_t span = days_between(window.start, window.end);
    if (span <= gap_max_days + 31) throw SynthError("study window too short for the gap cap");
  }
};

struct SynthResult {
  ConsultationTable consultations;
  PhysicianTable physicians;
  std::map<std::pair<std::string, std::string>, std::size_t> planted_pairs;
  std::vector<std::int64_t> planted_gaps;
  std::vector<std::string> pc_ids, sc_ids;
  Dense propensity;               // n_pc x n_sc, normalized per PC row
  std::vector<int> shared_count;  // n_pc x n_sc shared-background counts
  std::vector<std::size_t> professional_degree;  // per physician, pc block then sc block
  SynthConfig config;

  void write_consultations_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"patient_id", "physician_id", "date", "hospital_id"}, prov);
    for (const auto& r : consultations.records)
      w.row({r.patient_id, r.physician_id, format_date(r.date), r.hospital_id});
  }

  void write_physicians_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path,
                {"physician_id", "gender", "birth_year", "specialty", "school", "residency",
                 "hospitals"},
                prov);
    for (const auto& p : physicians.profiles) {
      std::string hospitals;
      for (std::size_t i = 0; i < p.hospitals.size(); ++i) {
        if (i) hospitals += ';';
        hospitals += p.hospitals[i];
      }
      w.row({p.physician_id, gender_name(p.gender), std::to_string(*p.birth_year), p.specialty,
             p.school, p.residency, hospitals});
    }
  }

  // Latent parameters, planted pair multiset, and the realized propensity
  // matrix, in one typed-row CSV.
  void write_manifest_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"kind", "key1", "key2", "value"}, prov);
    auto param = [&](const std::string& k, double v) {
      w.row({"param", k, "", CsvWriter::num(v)});
    };
    param("alpha", config.alpha);
    param("gamma", config.gamma);
    param("beta", config.beta);
    param("n_pc", static_cast<double>(config.n_pc));
    param("n_sc", static_cast<double>(config.n_sc));
    param("n_hospitals", static_cast<double>(config.n_hospitals));
    param("n_schools", static_cast<double>(config.n_schools));
    param("n_residencies", static_cast<double>(config.n_residencies));
    param("patients", static_cast<double>(config.patients));
    param("powerlaw_exponent", config.powerlaw_exponent);
    param("referral_probability", config.referral_probability);
    param("gap_target_within_30", config.gap_target_within_30);
    param("gap_max_days", static_cast<double>(config.gap_max_days));
    param("seed", static_cast<double>(config.seed));
    for (const auto& [pair, count] : planted_pairs)
      w.row({"pair", pair.first, pair.second, std::to_string(count)});
    for (std::size_t i = 0; i < pc_ids.size(); ++i)
      for (std::size_t j = 0; j < sc_ids.size(); ++j)
        w.row({"propensity", pc_ids[i], sc_ids[j], CsvWriter::num(propensity(i, j))});
  }
};

namespace synth_detail {

inline std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i + 1);
  return buf;
}

// Zipf-weighted index: affiliation sizes are heavy-tailed like real
// institutions, which widens the professional-degree spectrum.
inline std::size_t zipf_pick(std::size_t n, double skew, Rng& rng) {
  double total = 0;
  for (std::size_t i = 1; i <= n; ++i) total += 1.0 / std::pow(static_cast<double>(i), skew);
  double r = rng.next_double() * total;
  double acc = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i), skew);
    if (r < acc) return i - 1;
  }
  return n - 1;
}

inline const std::vector<std::string>& sc_specialties() {
  static const std::vector<std::string> names = {
      "cardiology", "dermatology", "orthopedics", "radiology",   "neurology",
      "pediatrics", "oncology",    "psychiatry",  "ophthalmology", "urology"};
  return names;
}

}  // namespace synth_detail

inline SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  SynthResult res;
  res.config = cfg;

  const std::size_t n_pc = cfg.n_pc, n_sc = cfg.n_sc, n_all = n_pc + n_sc;
  const int end_year = cfg.window.end.year;

  // physicians
  std::vector<PhysicianProfile> profiles(n_all);
  {
    Rng prng = root.derive("physicians");
    for (std::size_t i = 0; i < n_all; ++i) {
      PhysicianProfile& p = profiles[i];
      bool is_pc = i < n_pc;
      p.physician_id = is_pc ? synth_detail::padded_id("pc", i)
                             : synth_detail::padded_id("sc", i - n_pc);
      p.gender = prng.bernoulli(0.5) ? Gender::F : Gender::M;
      p.birth_year = static_cast<int>(prng.uniform_int(1945, 1990));
      p.role = is_pc ? Role::PC : Role::SC;
      p.specialty = is_pc ? "family medicine"
                          : synth_detail::sc_specialties()[prng.index(
                                synth_detail::sc_specialties().size())];
      std::size_t community = synth_detail::zipf_pick(cfg.n_communities, cfg.community_skew, prng);
      auto affiliated = [&](const char* prefix, std::size_t pool) {
        std::size_t idx = prng.bernoulli(cfg.affiliation_loyalty) ? community : prng.index(pool);
        return std::string(prefix) + "_" + std::to_string(idx + 1);
      };
      p.school = affiliated("school", cfg.n_schools);
      p.residency = affiliated("res", cfg.n_residencies);
      p.hospitals.push_back(affiliated("hospital", cfg.n_hospitals));
      if (prng.bernoulli(0.15) && cfg.n_hospitals > 1) {
        std::string extra = "hospital_" + std::to_string(prng.index(cfg.n_hospitals) + 1);
        if (extra != p.hospitals[0]) p.hospitals.push_back(extra);
      }
      std::sort(p.hospitals.begin(), p.hospitals.end());
      p.age = static_cast<double>(end_year - *p.birth_year);
      p.age_imputed = false;
    }
  }

  auto shared_background = [&](const PhysicianProfile& a, const PhysicianProfile& b) {
    int s = 0;
    if (a.school == b.school) ++s;
    if (a.residency == b.residency) ++s;
    bool common_hospital = false;
    for (const auto& h : a.hospitals)
      for (const auto& g : b.hospitals)
        if (h == g) common_hospital = true;
    return s + (common_hospital ? 1 : 0);
  };

  // professional degree over all physician pairs
  res.professional_degree.assign(n_all, 0);
  for (std::size_t i = 0; i < n_all; ++i)
    for (std::size_t j = i + 1; j < n_all; ++j)
      if (shared_background(profiles[i], profiles[j]) >= 1) {
        ++res.professional_degree[i];
        ++res.professional_degree[j];
      }

  // referral propensity, normalized per PC
  res.propensity = Dense(n_pc, n_sc);
  res.shared_count.assign(n_pc * n_sc, 0);
  for (std::size_t i = 0; i < n_pc; ++i) {
    double row_sum = 0;
    for (std::size_t j = 0; j < n_sc; ++j) {
      const auto& pc = profiles[i];
      const auto& sc = profiles[n_pc + j];
      int shared = shared_background(pc, sc);
      res.shared_count[i * n_sc + j] = shared;
      double logit = cfg.alpha * shared +
                     cfg.gamma * std::log(1.0 + static_cast<double>(
                                                    res.professional_degree[n_pc + j])) +
                     cfg.beta * (pc.gender == sc.gender ? 1.0 : 0.0);
      double score = std::exp(logit);
      res.propensity(i, j) = score;
      row_sum += score;
    }
    for (std::size_t j = 0; j < n_sc; ++j) res.propensity(i, j) /= row_sum;
  }

  // per-PC sampling CDF
  std::vector<double> cdf(n_pc * n_sc);
  for (std::size_t i = 0; i < n_pc; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < n_sc; ++j) {
      acc += res.propensity(i, j);
      cdf[i * n_sc + j] = acc;
    }
  }
  auto sample_sc = [&](std::size_t pc, Rng& rng) {
    double r = rng.next_double() * cdf[pc * n_sc + n_sc - 1];
    const double* begin = cdf.data() + pc * n_sc;
    return static_cast<std::size_t>(std::lower_bound(begin, begin + n_sc, r) - begin);
  };

  // episodes-per-patient CDF: P(k) ~ k^-exponent, truncated
  std::vector<double> episode_cdf(cfg.max_episodes_per_patient);
  {
    double acc = 0;
    for (std::size_t k = 1; k <= cfg.max_episodes_per_patient; ++k) {
      acc += std::pow(static_cast<double>(k), -cfg.powerlaw_exponent);
      episode_cdf[k - 1] = acc;
    }
  }
  auto sample_episode_count = [&](Rng& rng) {
    double r = rng.next_double() * episode_cdf.back();
    return static_cast<std::size_t>(
               std::lower_bound(episode_cdf.begin(), episode_cdf.end(), r) - episode_cdf.begin()) +
           1;
  };

  // patient journeys: serialized episodes, PC visit then optional SC visit.
  // Episodes stop before (window end - gap cap), so sampled gaps always fit
  // and the planted pair multiset is exactly recoverable by the scan rule.
  const std::int64_t first_day = day_number(cfg.window.start);
  const std::int64_t last_episode_day = day_number(cfg.window.end) - cfg.gap_max_days - 1;
  auto& records = res.consultations.records;
  for (std::size_t pat = 0; pat < cfg.patients; ++pat) {
    Rng jrng = root.derive("journey", pat);
    std::string patient_id = "pat_" + std::to_string(pat + 1);
    std::size_t episodes = sample_episode_count(jrng);
    std::int64_t cursor = first_day + jrng.uniform_int(0, 180);
    for (std::size_t e = 0; e < episodes && cursor <= last_episode_day; ++e) {
      std::size_t pc = jrng.index(n_pc);
      Date pc_date = date_from_day_number(cursor);
      const auto& pc_prof = profiles[pc];
      records.push_back({patient_id, pc_prof.physician_id, pc_date,
                         pc_prof.hospitals[jrng.index(pc_prof.hospitals.size())]});
      std::int64_t episode_end = cursor;
      if (jrng.bernoulli(cfg.referral_probability)) {
        std::size_t sc = sample_sc(pc, jrng);
        std::int64_t gap = jrng.bernoulli(cfg.gap_target_within_30)
                               ? jrng.uniform_int(0, 30)
                               : jrng.uniform_int(31, cfg.gap_max_days);
        Date sc_date = date_from_day_number(cursor + gap);
        const auto& sc_prof = profiles[n_pc + sc];
        records.push_back({patient_id, sc_prof.physician_id, sc_date,
                           sc_prof.hospitals[jrng.index(sc_prof.hospitals.size())]});
        ++res.planted_pairs[{pc_prof.physician_id, sc_prof.physician_id}];
        res.planted_gaps.push_back(gap);
        episode_end = cursor + gap;
      }
      cursor = episode_end + 1 + jrng.uniform_int(0, 13);
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
    if (day_number(a.date) != day_number(b.date)) return day_number(a.date) < day_number(b.date);
    if (a.physician_id != b.physician_id) return a.physician_id < b.physician_id;
    return a.hospital_id < b.hospital_id;
  });
  res.consultations.input_rows = records.size();

  res.physicians.profiles = std::move(profiles);
  std::sort(res.physicians.profiles.begin(), res.physicians.profiles.end(),
            [](const auto& a, const auto& b) { return a.physician_id < b.physician_id; });
  res.physicians.census = {n_pc, n_sc, 0};

  res.pc_ids.resize(n_pc);
  res.sc_ids.resize(n_sc);
  for (std::size_t i = 0; i < n_pc; ++i) res.pc_ids[i] = synth_detail::padded_id("pc", i);
  for (std::size_t j = 0; j < n_sc; ++j) res.sc_ids[j] = synth_detail::padded_id("sc", j);
  return res;
}

}  // namespace refnet
