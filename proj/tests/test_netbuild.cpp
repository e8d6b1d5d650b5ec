#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <sstream>

#include "refnet/netbuild.hpp"

using namespace refnet;

namespace {

const std::string kData = REFNET_TEST_DATA_DIR;

IngestConfig fixture_config() {
  IngestConfig cfg;
  cfg.window = {{2015, 1, 1}, {2015, 12, 31}};
  cfg.study_end_year = 2015;
  return cfg;
}

struct Fixture {
  ConsultationTable consultations;
  PhysicianTable physicians;
};

Fixture load_fixture() {
  auto cfg = fixture_config();
  return {load_consultations(kData + "/consultations_20.csv", cfg),
          load_physicians(kData + "/physicians_7.csv", cfg)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PhysicianTable tiny_profiles() {
  PhysicianTable t;
  auto mk = [](std::string id, Role r) {
    PhysicianProfile p;
    p.physician_id = std::move(id);
    p.role = r;
    return p;
  };
  t.profiles = {mk("A", Role::PC), mk("B", Role::SC), mk("C", Role::PC), mk("X", Role::None)};
  std::sort(t.profiles.begin(), t.profiles.end(),
            [](const auto& a, const auto& b) { return a.physician_id < b.physician_id; });
  return t;
}

ConsultationTable consults(std::vector<std::tuple<std::string, std::string, int>> rows) {
  // day offsets from 2015-01-01
  ConsultationTable t;
  for (auto& [patient, phys, day] : rows)
    t.records.push_back({patient, phys, add_days({2015, 1, 1}, day), "h1"});
  std::sort(t.records.begin(), t.records.end(), [](const auto& a, const auto& b) {
    if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
    return day_number(a.date) < day_number(b.date);
  });
  t.input_rows = t.records.size();
  return t;
}

}  // namespace

TEST_CASE("a PC visit followed by an SC visit within the gap forms one interaction") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat", "A", 0}, {"pat", "B", 15}});
  auto inter = extract_interactions(t, profiles, 30);
  REQUIRE(inter.size() == 1);
  CHECK(inter[0].pc_id == "A");
  CHECK(inter[0].sc_id == "B");
  CHECK(inter[0].gap_days == 15);
}

TEST_CASE("interactions beyond the gap cap are dropped") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat", "A", 0}, {"pat", "B", 45}});
  CHECK(extract_interactions(t, profiles, 30).empty());
  CHECK(extract_interactions(t, profiles, kUnboundedGap).size() == 1);
}

TEST_CASE("an intervening PC consultation takes over the referral") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat", "A", 0}, {"pat", "C", 5}, {"pat", "B", 10}});
  auto inter = extract_interactions(t, profiles, 30);
  REQUIRE(inter.size() == 1);
  CHECK(inter[0].pc_id == "C");
  CHECK(inter[0].sc_id == "B");
  CHECK(inter[0].gap_days == 5);

  // sensitivity rule pairs both PCs with the next SC
  auto all = extract_interactions(t, profiles, 30, InteractionRule::NextSc);
  REQUIRE(all.size() == 2);
}

TEST_CASE("unknown-role physicians are invisible to the scan") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat", "A", 0}, {"pat", "X", 5}, {"pat", "B", 10}});
  auto inter = extract_interactions(t, profiles, 30);
  REQUIRE(inter.size() == 1);
  CHECK(inter[0].pc_id == "A");
}

TEST_CASE("same-day PC and SC visits count as a referral with gap zero") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat", "B", 7}, {"pat", "A", 7}});
  auto inter = extract_interactions(t, profiles, 30);
  REQUIRE(inter.size() == 1);
  CHECK(inter[0].gap_days == 0);
}

TEST_CASE("unbounded extraction is a superset of any capped extraction") {
  auto fx = load_fixture();
  auto capped = extract_interactions(fx.consultations, fx.physicians, 30);
  auto unbounded = extract_interactions(fx.consultations, fx.physicians, kUnboundedGap);
  REQUIRE(unbounded.size() >= capped.size());
  for (const auto& it : capped)
    CHECK(std::find(unbounded.begin(), unbounded.end(), it) != unbounded.end());
}

TEST_CASE("referral edge weights accumulate per distinct interaction") {
  auto profiles = tiny_profiles();
  auto t = consults({{"pat1", "A", 0}, {"pat1", "B", 5}, {"pat2", "A", 10}, {"pat2", "B", 12}});
  auto net = build_referral_network(extract_interactions(t, profiles, 30));
  REQUIRE(net.node_count() == 2);
  CHECK(net.edge_weight(0, 1) == 2.0);

  CHECK(build_referral_network({}).node_count() == 0);
}

TEST_CASE("20-record fixture reproduces the hand-computed 7-edge golden network") {
  auto fx = load_fixture();
  auto interactions = extract_interactions(fx.consultations, fx.physicians, 30);
  CHECK(interactions.size() == 8);
  auto net = build_referral_network(interactions);

  CHECK(net.total_weight() == static_cast<double>(interactions.size()));
  for (auto [u, v, w] : net.edges()) {
    CHECK(net.role(u) == Role::PC);
    CHECK(net.role(v) == Role::SC);
  }

  net.write_edge_csv("/tmp/refnet_golden_edges.csv");
  net.write_node_csv("/tmp/refnet_golden_nodes.csv");
  CHECK(slurp("/tmp/refnet_golden_edges.csv") == slurp(kData + "/golden_referral_edges.csv"));
  CHECK(slurp("/tmp/refnet_golden_nodes.csv") == slurp(kData + "/golden_referral_nodes.csv"));

  // byte-identical across a second run
  net.write_edge_csv("/tmp/refnet_golden_edges2.csv");
  CHECK(slurp("/tmp/refnet_golden_edges2.csv") == slurp("/tmp/refnet_golden_edges.csv"));
}

TEST_CASE("professional network links physicians by shared background") {
  auto fx = load_fixture();
  auto net = build_professional_network(fx.physicians);
  REQUIRE(net.node_count() == 6);  // u01 has unknown role and is excluded

  auto id = [&](const std::string& label) -> NodeId {
    for (NodeId u = 0; u < net.node_count(); ++u)
      if (net.label(u) == label) return u;
    FAIL("missing node " + label);
    return 0;
  };

  // school only
  CHECK(net.edge_weight(id("s01"), id("s03")) == 1.0);
  // school + hospital
  CHECK(net.edge_weight(id("p01"), id("s01")) == 2.0);
  // school + residency
  CHECK(net.edge_weight(id("p01"), id("s03")) == 2.0);
  // hospital only
  CHECK(net.edge_weight(id("p01"), id("s04")) == 1.0);
  // no shared background
  CHECK_FALSE(net.has_edge(id("s01"), id("s02")));
  CHECK_FALSE(net.has_edge(id("s02"), id("s04")));
  CHECK(net.edge_count() == 12);

  // symmetric, no self-loops
  for (auto [u, v, w] : net.edges()) {
    CHECK(u != v);
    CHECK(net.edge_weight(v, u) == w);
  }
}

TEST_CASE("interval distribution matches hand-computed cumulative fractions") {
  auto profiles = tiny_profiles();
  auto t = consults({{"p1", "A", 0}, {"p1", "B", 5},    // gap 5
                     {"p2", "A", 0}, {"p2", "B", 20},   // gap 20
                     {"p3", "A", 0}, {"p3", "B", 45}}); // gap 45
  auto d = interval_distribution(extract_interactions(t, profiles, kUnboundedGap));
  CHECK(d.cumulative_at(30) == Catch::Approx(2.0 / 3.0));
  CHECK(d.cumulative.back() == 1.0);

  auto zero = consults({{"p1", "A", 3}, {"p1", "B", 3}});
  auto dz = interval_distribution(extract_interactions(zero, profiles, kUnboundedGap));
  CHECK(dz.cumulative.front() == 1.0);

  CHECK_THROWS_AS(interval_distribution({}), NetbuildError);
}

TEST_CASE("fixture interval distribution matches the golden file byte for byte") {
  auto fx = load_fixture();
  auto unbounded = extract_interactions(fx.consultations, fx.physicians, kUnboundedGap);
  REQUIRE(unbounded.size() == 9);
  auto d = interval_distribution(unbounded);
  d.write_csv("/tmp/refnet_golden_interval.csv");
  CHECK(slurp("/tmp/refnet_golden_interval.csv") ==
        slurp(kData + "/golden_interval_distribution.csv"));
}

TEST_CASE("physicians-per-patient histogram counts distinct physicians") {
  auto one = consults({{"pat", "A", 0}, {"pat", "B", 3}, {"pat", "C", 6}});
  auto h1 = physicians_per_patient_histogram(one);
  REQUIRE(h1.size() == 1);
  CHECK(h1.at(3) == 1);

  auto two = consults({{"p1", "A", 0}, {"p2", "B", 0}});
  auto h2 = physicians_per_patient_histogram(two);
  CHECK(h2.at(1) == 2);

  // repeat visits to the same physician count once
  auto rep = consults({{"pat", "A", 0}, {"pat", "A", 9}, {"pat", "B", 12}});
  CHECK(physicians_per_patient_histogram(rep).at(2) == 1);
}
