#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "refnet/csv.hpp"
#include "refnet/dates.hpp"
#include "refnet/graph.hpp"

namespace refnet {

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One patient-physician appointment event.
struct ConsultationRecord {
  std::string patient_id;
  std::string physician_id;
  Date date;
  std::string hospital_id;
};

enum class Gender : std::uint8_t { F = 0, M = 1, Unknown = 2 };

inline const char* gender_name(Gender g) {
  switch (g) {
    case Gender::F: return "F";
    case Gender::M: return "M";
    default: return "unknown";
  }
}

struct PhysicianProfile {
  std::string physician_id;
  Gender gender = Gender::Unknown;
  std::optional<int> birth_year;
  Role role = Role::None;
  std::string specialty;
  std::string school;
  std::string residency;
  std::vector<std::string> hospitals;  // sorted, deduplicated

  // Derived by finalize_ages: study_end_year - birth_year, median-imputed.
  double age = 0.0;
  bool age_imputed = false;
};

struct RejectedRow {
  std::size_t row_number;  // 1-based line number in the source file
  std::string reason;
};

struct ConsultationTable {
  std::vector<ConsultationRecord> records;  // sorted by (patient, date, physician, hospital)
  std::vector<RejectedRow> rejections;
  std::size_t input_rows = 0;

  void write_rejections_csv(const std::string& path, const Provenance& prov = {}) const {
    CsvWriter w(path, {"row_number", "reason"}, prov);
    for (const auto& r : rejections) w.row({std::to_string(r.row_number), r.reason});
  }
};

struct RoleCensus {
  std::size_t pc = 0;
  std::size_t sc = 0;
  std::size_t unknown = 0;
};

struct PhysicianTable {
  std::vector<PhysicianProfile> profiles;  // sorted by physician_id
  RoleCensus census;

  const PhysicianProfile* find(const std::string& id) const {
    auto it = std::lower_bound(profiles.begin(), profiles.end(), id,
                               [](const PhysicianProfile& p, const std::string& s) {
                                 return p.physician_id < s;
                               });
    if (it == profiles.end() || it->physician_id != id) return nullptr;
    return &*it;
  }
};

struct IngestConfig {
  DateRange window{{2012, 1, 1}, {2017, 12, 31}};
  std::vector<std::string> primary_care_specialties = {"family medicine", "general practice"};
  int study_end_year = 2017;
};

namespace detail {
inline std::string lower_trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string out(s.substr(a, b - a));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace detail

inline Role classify_role(const std::string& specialty, const IngestConfig& cfg) {
  std::string s = detail::lower_trim(specialty);
  if (s.empty()) return Role::None;
  for (const auto& pc : cfg.primary_care_specialties)
    if (s == detail::lower_trim(pc)) return Role::PC;
  return Role::SC;
}

// Schema: patient_id,physician_id,date,hospital_id
inline ConsultationTable load_consultations(const std::string& path, const IngestConfig& cfg) {
  CsvTable csv = read_csv(path);
  const std::vector<std::string> expect = {"patient_id", "physician_id", "date", "hospital_id"};
  if (csv.header != expect) throw IngestError("consultations header mismatch in " + path);

  ConsultationTable out;
  out.input_rows = csv.rows.size();
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    std::size_t line = csv.line_numbers[i];
    if (r.size() != 4) {
      out.rejections.push_back({line, "bad_field_count"});
      continue;
    }
    if (r[0].empty() || r[1].empty()) {
      out.rejections.push_back({line, "empty_id"});
      continue;
    }
    auto date = parse_date(r[2]);
    if (!date) {
      out.rejections.push_back({line, "bad_date"});
      continue;
    }
    if (!cfg.window.contains(*date)) {
      out.rejections.push_back({line, "out_of_window"});
      continue;
    }
    out.records.push_back({r[0], r[1], *date, r[3]});
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const ConsultationRecord& a, const ConsultationRecord& b) {
              if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
              if (day_number(a.date) != day_number(b.date))
                return day_number(a.date) < day_number(b.date);
              if (a.physician_id != b.physician_id) return a.physician_id < b.physician_id;
              return a.hospital_id < b.hospital_id;
            });
  return out;
}

// Derives ages; unknown birth years get the median age of same-role
// physicians (global median if the role has none), flagged as imputed.
inline void finalize_ages(std::vector<PhysicianProfile>& profiles, int study_end_year) {
  auto median_of = [](std::vector<double> v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  std::map<Role, std::vector<double>> known;
  std::vector<double> all;
  for (const auto& p : profiles)
    if (p.birth_year) {
      double age = study_end_year - *p.birth_year;
      known[p.role].push_back(age);
      all.push_back(age);
    }
  auto global = median_of(all);
  for (auto& p : profiles) {
    if (p.birth_year) {
      p.age = study_end_year - *p.birth_year;
      p.age_imputed = false;
    } else {
      auto role_median = median_of(known[p.role]);
      p.age = role_median ? *role_median : (global ? *global : 0.0);
      p.age_imputed = true;
    }
  }
}

// Schema: physician_id,gender,birth_year,specialty,school,residency,hospitals
// (hospitals `;`-separated). Duplicate physician_id is fatal.
inline PhysicianTable load_physicians(const std::string& path, const IngestConfig& cfg) {
  CsvTable csv = read_csv(path);
  const std::vector<std::string> expect = {"physician_id", "gender",    "birth_year", "specialty",
                                           "school",       "residency", "hospitals"};
  if (csv.header != expect) throw IngestError("physicians header mismatch in " + path);

  PhysicianTable out;
  std::set<std::string> seen;
  for (const auto& r : csv.rows) {
    if (r.size() != 7) throw IngestError("physicians row with wrong field count in " + path);
    PhysicianProfile p;
    p.physician_id = r[0];
    if (p.physician_id.empty()) throw IngestError("empty physician_id in " + path);
    if (!seen.insert(p.physician_id).second)
      throw IngestError("duplicate physician_id: " + p.physician_id);
    if (r[1] == "F")
      p.gender = Gender::F;
    else if (r[1] == "M")
      p.gender = Gender::M;
    else
      p.gender = Gender::Unknown;
    if (!r[2].empty()) {
      int y = 0;
      auto [ptr, ec] = std::from_chars(r[2].data(), r[2].data() + r[2].size(), y);
      if (ec == std::errc{} && ptr == r[2].data() + r[2].size() && y >= 1900 &&
          y <= cfg.study_end_year)
        p.birth_year = y;
    }
    p.specialty = r[3];
    p.role = classify_role(p.specialty, cfg);
    p.school = r[4];
    p.residency = r[5];
    for (auto& h : split_csv_line(r[6], ';'))
      if (!h.empty()) p.hospitals.push_back(std::move(h));
    std::sort(p.hospitals.begin(), p.hospitals.end());
    p.hospitals.erase(std::unique(p.hospitals.begin(), p.hospitals.end()), p.hospitals.end());
    out.profiles.push_back(std::move(p));
  }
  std::sort(out.profiles.begin(), out.profiles.end(),
            [](const PhysicianProfile& a, const PhysicianProfile& b) {
              return a.physician_id < b.physician_id;
            });
  for (const auto& p : out.profiles) {
    if (p.role == Role::PC)
      ++out.census.pc;
    else if (p.role == Role::SC)
      ++out.census.sc;
    else
      ++out.census.unknown;
  }
  finalize_ages(out.profiles, cfg.study_end_year);
  return out;
}

// Feature-space gender code: F=0, M=1 (orientation matches the engineered
// g-variable downstream). Unknown maps to 0.5 so it stays between the codes.
inline double gender_code(Gender g) {
  switch (g) {
    case Gender::F: return 0.0;
    case Gender::M: return 1.0;
    default: return 0.5;
  }
}

}  // namespace refnet
