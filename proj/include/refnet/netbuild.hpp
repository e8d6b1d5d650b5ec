#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/graph.hpp"
#include "refnet/records.hpp"

namespace refnet {

struct NetbuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A (PC visit, next SC visit) pair for one patient.
struct ReferralInteraction {
  std::string pc_id;
  std::string sc_id;
  std::string patient_id;
  Date pc_date;
  Date sc_date;
  std::int64_t gap_days = 0;

  friend bool operator==(const ReferralInteraction&, const ReferralInteraction&) = default;
};

inline constexpr std::int64_t kUnboundedGap = std::numeric_limits<std::int64_t>::max();

enum class InteractionRule {
  // A PC consultation pairs with the immediately next known-role
  // consultation, and only if that consultation is an SC one.
  Consecutive,
  // Sensitivity variant: every PC consultation pairs with the next SC
  // consultation, skipping over intervening PC visits.
  NextSc,
};

// Scans each patient's chronological known-role consultation sequence.
// Same-day ties order PC before SC; remaining ties break by physician id.
// Interactions are deduplicated on (patient, pc, sc, pc_date, sc_date).
inline std::vector<ReferralInteraction> extract_interactions(
    const ConsultationTable& consultations, const PhysicianTable& profiles,
    std::int64_t max_gap_days = 30, InteractionRule rule = InteractionRule::Consecutive) {
  struct Visit {
    std::int64_t day;
    Role role;
    const std::string* physician;
    Date date;
  };

  std::vector<ReferralInteraction> out;
  std::vector<Visit> seq;
  std::size_t i = 0;
  const auto& recs = consultations.records;
  while (i < recs.size()) {
    std::size_t j = i;
    while (j < recs.size() && recs[j].patient_id == recs[i].patient_id) ++j;

    seq.clear();
    for (std::size_t k = i; k < j; ++k) {
      const PhysicianProfile* p = profiles.find(recs[k].physician_id);
      if (!p || p->role == Role::None) continue;
      seq.push_back({day_number(recs[k].date), p->role, &recs[k].physician_id, recs[k].date});
    }
    std::sort(seq.begin(), seq.end(), [](const Visit& a, const Visit& b) {
      if (a.day != b.day) return a.day < b.day;
      if (a.role != b.role) return a.role == Role::PC;  // PC before SC on ties
      return *a.physician < *b.physician;
    });

    std::set<std::tuple<std::string, std::string, std::int64_t, std::int64_t>> seen;
    auto emit = [&](const Visit& pc, const Visit& sc) {
      std::int64_t gap = sc.day - pc.day;
      if (gap < 0 || gap > max_gap_days) return;
      if (!seen.insert({*pc.physician, *sc.physician, pc.day, sc.day}).second) return;
      out.push_back({*pc.physician, *sc.physician, recs[i].patient_id, pc.date, sc.date, gap});
    };

    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
      if (seq[k].role != Role::PC) continue;
      if (rule == InteractionRule::Consecutive) {
        if (seq[k + 1].role == Role::SC) emit(seq[k], seq[k + 1]);
      } else {
        for (std::size_t m = k + 1; m < seq.size(); ++m) {
          if (seq[m].role == Role::SC) {
            emit(seq[k], seq[m]);
            break;
          }
        }
      }
    }
    i = j;
  }
  return out;
}

// Directed bipartite PC->SC network. Node ids are assigned by ascending
// physician id over participating physicians; edge weight counts distinct
// interactions between the pair.
inline Network build_referral_network(const std::vector<ReferralInteraction>& interactions) {
  std::set<std::string> pcs, scs;
  for (const auto& it : interactions) {
    pcs.insert(it.pc_id);
    scs.insert(it.sc_id);
  }
  std::map<std::string, NodeId> index;
  std::vector<std::string> labels;
  std::vector<Role> roles;
  // Merged ascending order; PC wins if an id somehow appears as both.
  std::set<std::string> all;
  all.insert(pcs.begin(), pcs.end());
  all.insert(scs.begin(), scs.end());
  for (const auto& id : all) {
    index[id] = static_cast<NodeId>(labels.size());
    labels.push_back(id);
    roles.push_back(pcs.count(id) ? Role::PC : Role::SC);
  }

  Network net(labels.size(), /*directed=*/true);
  net.set_roles(std::move(roles));
  net.set_labels(std::move(labels));
  for (const auto& it : interactions) net.add_edge(index[it.pc_id], index[it.sc_id], 1.0);
  return net;
}

// Undirected co-affiliation network over all PC/SC physicians. Edge weight =
// number of shared background attribute classes among {school, residency,
// any common hospital}; empty fields never match.
inline Network build_professional_network(const PhysicianTable& profiles) {
  std::vector<const PhysicianProfile*> nodes;
  for (const auto& p : profiles.profiles)
    if (p.role == Role::PC || p.role == Role::SC) nodes.push_back(&p);

  Network net(nodes.size(), /*directed=*/false);
  std::vector<std::string> labels(nodes.size());
  std::vector<Role> roles(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    labels[k] = nodes[k]->physician_id;
    roles[k] = nodes[k]->role;
  }
  net.set_labels(std::move(labels));
  // Roles are informative only here; both-PC edges are legal, so the
  // bipartite check must stay off. Attach them as an attribute instead.
  std::vector<double> role_col(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k)
    role_col[k] = nodes[k]->role == Role::PC ? 0.0 : 1.0;
  net.add_attribute("is_sc", std::move(role_col));

  // Bucket by each attribute value to avoid the all-pairs scan.
  std::map<std::string, std::vector<NodeId>> by_school, by_residency, by_hospital;
  for (NodeId k = 0; k < nodes.size(); ++k) {
    if (!nodes[k]->school.empty()) by_school[nodes[k]->school].push_back(k);
    if (!nodes[k]->residency.empty()) by_residency[nodes[k]->residency].push_back(k);
    for (const auto& h : nodes[k]->hospitals) by_hospital[h].push_back(k);
  }
  std::map<std::pair<NodeId, NodeId>, double> weight;
  auto accumulate = [&](const std::map<std::string, std::vector<NodeId>>& buckets,
                        bool dedup_pairs) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& [_, members] : buckets)
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          auto key = std::minmax(members[a], members[b]);
          std::pair<NodeId, NodeId> p{key.first, key.second};
          if (dedup_pairs && !seen.insert(p).second) continue;  // >1 common hospital counts once
          weight[p] += 1.0;
        }
  };
  accumulate(by_school, false);
  accumulate(by_residency, false);
  accumulate(by_hospital, true);

  for (const auto& [pair, w] : weight) net.add_edge(pair.first, pair.second, w);
  return net;
}

// Cumulative time-interval distribution of PC->SC interactions.
struct IntervalDistribution {
  std::vector<std::int64_t> bucket_edges;  // upper bounds in days; last is unbounded
  std::vector<std::size_t> counts;
  std::vector<double> cumulative;

  double cumulative_at(std::int64_t days) const {
    for (std::size_t i = 0; i < bucket_edges.size(); ++i)
      if (bucket_edges[i] >= days) return cumulative[i];
    return 1.0;
  }

  void write_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"bucket_days", "count", "cumulative_fraction"}, prov);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      std::string edge = (i + 1 == counts.size()) ? "inf" : std::to_string(bucket_edges[i]);
      w.row({edge, std::to_string(counts[i]), CsvWriter::num(cumulative[i])});
    }
  }
};

// Expects interactions extracted with max_gap = unbounded.
inline IntervalDistribution interval_distribution(
    const std::vector<ReferralInteraction>& interactions) {
  if (interactions.empty())
    throw NetbuildError("interval distribution undefined on empty interaction set");
  IntervalDistribution d;
  d.bucket_edges = {7, 14, 30, 60, 90, 180, std::numeric_limits<std::int64_t>::max()};
  d.counts.assign(d.bucket_edges.size(), 0);
  for (const auto& it : interactions) {
    std::size_t b = 0;
    while (it.gap_days > d.bucket_edges[b]) ++b;
    ++d.counts[b];
  }
  double running = 0;
  for (std::size_t i = 0; i < d.counts.size(); ++i) {
    running += static_cast<double>(d.counts[i]);
    d.cumulative.push_back(running / static_cast<double>(interactions.size()));
  }
  return d;
}

// Patients bucketed by how many distinct physicians they consulted.
inline std::map<std::size_t, std::size_t> physicians_per_patient_histogram(
    const ConsultationTable& consultations) {
  std::map<std::size_t, std::size_t> hist;
  const auto& recs = consultations.records;
  std::size_t i = 0;
  while (i < recs.size()) {
    std::set<std::string> distinct;
    std::size_t j = i;
    while (j < recs.size() && recs[j].patient_id == recs[i].patient_id)
      distinct.insert(recs[j++].physician_id);
    ++hist[distinct.size()];
    i = j;
  }
  return hist;
}

inline void write_histogram_csv(const std::map<std::size_t, std::size_t>& hist,
                                const std::string& path, const Provenance& prov = {}) {
  CsvWriter w(path, {"distinct_physicians", "patients"}, prov);
  for (const auto& [k, v] : hist) w.row({std::to_string(k), std::to_string(v)});
}

// Summary tables behind the `eda` subcommand: consultations per specialty
// per year, and physician gender/birth-year counts per school.
inline void write_specialty_year_csv(const ConsultationTable& consultations,
                                     const PhysicianTable& profiles, const std::string& path,
                                     const Provenance& prov = {}) {
  std::map<std::pair<std::string, int>, std::size_t> counts;
  for (const auto& r : consultations.records) {
    const PhysicianProfile* p = profiles.find(r.physician_id);
    std::string spec = p && !p->specialty.empty() ? p->specialty : "unknown";
    ++counts[{spec, r.date.year}];
  }
  CsvWriter w(path, {"specialty", "year", "consultations"}, prov);
  for (const auto& [key, n] : counts)
    w.row({key.first, std::to_string(key.second), std::to_string(n)});
}

inline void write_school_demographics_csv(const PhysicianTable& profiles, const std::string& path,
                                          const Provenance& prov = {}) {
  std::map<std::tuple<std::string, int, Gender>, std::size_t> counts;
  for (const auto& p : profiles.profiles) {
    if (p.school.empty() || !p.birth_year) continue;
    ++counts[{p.school, *p.birth_year, p.gender}];
  }
  CsvWriter w(path, {"school", "birth_year", "gender", "physicians"}, prov);
  for (const auto& [key, n] : counts)
    w.row({std::get<0>(key), std::to_string(std::get<1>(key)), gender_name(std::get<2>(key)),
           std::to_string(n)});
}

}  // namespace refnet
