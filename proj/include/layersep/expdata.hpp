#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "layersep/detail/text.hpp"
#include "layersep/errors.hpp"
#include "layersep/graspfsm.hpp"

namespace layersep {

/// One experiment trial as logged: configuration plus terminal outcome, with
/// the maximum recorded pull force when the trial measured it.
struct TrialRecord {
  std::string trial_id;
  std::string material_pair;
  double penetration = 0.0;    // m
  double velocity_rpm = 0.0;   // rev/min
  double edge_distance = 0.0;  // m
  RollerSurface roller = RollerSurface::Dented;
  FingerCoating coating = FingerCoating::Silicone;
  double close_force = 0.0;    // N
  std::optional<FailureReason> outcome;  // nullopt = Success
  std::optional<double> max_pull_force;  // N

  bool succeeded() const { return !outcome.has_value(); }

  void validate() const {
    if (trial_id.empty()) throw ValidationError("trial with empty id");
    if (close_force < 0.0 || penetration < 0.0 || edge_distance < 0.0 ||
        (max_pull_force && *max_pull_force < 0.0))
      throw ValidationError("trial '" + trial_id + "': forces and distances must be >= 0");
  }

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline std::string outcome_label(const std::optional<FailureReason>& outcome) {
  return outcome ? to_string(*outcome) : "Success";
}

namespace detail {

inline const std::array<FailureReason, 6> all_failure_reasons = {
    FailureReason::RollerSlip,      FailureReason::BothLayersDragged,
    FailureReason::TopStuck,        FailureReason::BottomLayerCaptured,
    FailureReason::GraspLost,       FailureReason::NoSnap,
};

inline std::optional<FailureReason> parse_outcome(const std::string& s, bool& ok) {
  ok = true;
  if (s == "Success") return std::nullopt;
  for (auto r : all_failure_reasons)
    if (to_string(r) == s) return r;
  ok = false;
  return std::nullopt;
}

}  // namespace detail

inline const std::string trial_log_header =
    "trial_id,material_pair,penetration_m,velocity_rpm,edge_distance_m,roller,coating,"
    "close_force_n,outcome,max_pull_force_n";

/// Reads a trial log CSV. Row numbers are 1-based file lines and appear in
/// every error.
inline std::vector<TrialRecord> ingest_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trial log: " + path);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    return ParseError(path + ":" + std::to_string(lineno) + ": " + msg);
  };

  if (!std::getline(in, line)) throw ParseError(path + ": no records (empty file)");
  ++lineno;
  if (detail::trim(line) != trial_log_header) throw fail("missing or wrong header");

  std::vector<TrialRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto f = detail::split_fields(t);
    if (f.size() != 10)
      throw fail("expected 10 fields, got " + std::to_string(f.size()));
    TrialRecord r;
    r.trial_id = f[0];
    r.material_pair = f[1];
    if (!detail::parse_double(f[2], r.penetration) ||
        !detail::parse_double(f[3], r.velocity_rpm) ||
        !detail::parse_double(f[4], r.edge_distance) ||
        !detail::parse_double(f[7], r.close_force))
      throw fail("malformed numeric field");
    if (f[5] == "dented") r.roller = RollerSurface::Dented;
    else if (f[5] == "smooth") r.roller = RollerSurface::Smooth;
    else throw fail("unknown roller '" + f[5] + "'");
    if (f[6] == "silicone") r.coating = FingerCoating::Silicone;
    else if (f[6] == "plain") r.coating = FingerCoating::Plain;
    else throw fail("unknown coating '" + f[6] + "'");
    bool ok = false;
    r.outcome = detail::parse_outcome(f[8], ok);
    if (!ok) throw fail("unknown outcome '" + f[8] + "'");
    if (!f[9].empty()) {
      double pull = 0.0;
      if (!detail::parse_double(f[9], pull)) throw fail("malformed max_pull_force_n");
      r.max_pull_force = pull;
    }
    try {
      r.validate();
    } catch (const ValidationError& e) {
      throw fail(e.what());
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ParseError(path + ": no records");
  return records;
}

inline void write_log(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << trial_log_header << "\n";
  for (const auto& r : records) {
    out << r.trial_id << "," << r.material_pair << "," << detail::format_double(r.penetration)
        << "," << detail::format_double(r.velocity_rpm) << ","
        << detail::format_double(r.edge_distance) << "," << to_string(r.roller) << ","
        << to_string(r.coating) << "," << detail::format_double(r.close_force) << ","
        << outcome_label(r.outcome) << ","
        << (r.max_pull_force ? detail::format_double(*r.max_pull_force) : "") << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

enum class GroupKey { Object, Roller, Coating };

inline std::string group_key_value(const TrialRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::Object: return r.material_pair;
    case GroupKey::Roller: return to_string(r.roller);
    case GroupKey::Coating: return to_string(r.coating);
  }
  return "?";
}

struct GroupStat {
  std::string key;
  int total = 0;
  int successes = 0;

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(successes) / total; }
};

struct PullStats {
  int count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct HoldingFit {
  double mu_eff_silicone = 0.0;
  double mu_eff_plain = 0.0;
  double roller_contribution = 0.0;
  int contact_count = 2;
  double residual_rms = 0.0;
  double residual_max = 0.0;
  bool rank_deficient = false;

  HoldingCalibration to_calibration() const {
    HoldingCalibration c{mu_eff_silicone, mu_eff_plain, roller_contribution};
    c.validate();
    return c;
  }

  double capacity(FingerCoating coating, double close_force) const {
    const double mu = coating == FingerCoating::Silicone ? mu_eff_silicone : mu_eff_plain;
    return mu * close_force * contact_count + roller_contribution;
  }
};

struct SummaryReport {
  int total_records = 0;
  GroupKey grouped_by = GroupKey::Object;
  std::vector<GroupStat> groups;  // sorted by key
  std::vector<std::pair<FingerCoating, PullStats>> pull_stats;  // coatings with any pull data
  std::optional<HoldingFit> fit;
};

/// Success rates per group plus pull-force statistics per coating.
/// Aggregation sorts values first, so the result is independent of record
/// order.
inline SummaryReport summarize(const std::vector<TrialRecord>& records,
                               GroupKey key = GroupKey::Object) {
  if (records.empty()) throw ValidationError("summarize: no records");
  SummaryReport report;
  report.total_records = static_cast<int>(records.size());
  report.grouped_by = key;

  std::map<std::string, GroupStat> groups;
  std::map<FingerCoating, std::vector<double>> pulls;
  for (const auto& r : records) {
    auto& g = groups[group_key_value(r, key)];
    g.total += 1;
    if (r.succeeded()) g.successes += 1;
    if (r.max_pull_force) pulls[r.coating].push_back(*r.max_pull_force);
  }
  for (auto& [k, g] : groups) {
    g.key = k;
    report.groups.push_back(g);
  }
  for (auto& [coating, values] : pulls) {
    std::sort(values.begin(), values.end());
    PullStats s;
    s.count = static_cast<int>(values.size());
    s.min = values.front();
    s.max = values.back();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    report.pull_stats.emplace_back(coating, s);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Holding-force calibration
// ---------------------------------------------------------------------------

namespace detail {

/// 3x3 solve with partial pivoting; returns false when the pivot ratio says
/// the normal matrix is numerically singular (condition estimate > 1e12).
inline bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
                   std::array<double, 3>& x) {
  std::array<double, 3> pivots{};
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int row = col + 1; row < 3; ++row)
      if (std::abs(a[row][col]) > std::abs(a[best][col])) best = row;
    std::swap(a[col], a[best]);
    std::swap(b[col], b[best]);
    pivots[col] = std::abs(a[col][col]);
    if (pivots[col] == 0.0) return false;
    for (int row = col + 1; row < 3; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  const double pmax = std::max({pivots[0], pivots[1], pivots[2]});
  const double pmin = std::min({pivots[0], pivots[1], pivots[2]});
  if (pmin <= 0.0 || pmax / pmin > 1e12) return false;
  for (int row = 2; row >= 0; --row) {
    double s = b[row];
    for (int k = row + 1; k < 3; ++k) s -= a[row][k] * x[k];
    x[row] = s / a[row][row];
  }
  return true;
}

}  // namespace detail

/// Least squares of capacity = mu_eff(coating) * close_force * contact_count
/// + roller_contribution over the records that carry a pull measurement. The
/// intercept is shared: the side rollers do not change with the coating.
/// A rank-deficient design (all close forces equal) falls back to an
/// intercept-only fit and flags it instead of failing.
inline HoldingFit fit_holding_model(const std::vector<TrialRecord>& records,
                                    int contact_count = 2) {
  std::vector<const TrialRecord*> usable;
  int n_sil = 0, n_plain = 0;
  for (const auto& r : records)
    if (r.max_pull_force && r.close_force > 0.0) {
      usable.push_back(&r);
      (r.coating == FingerCoating::Silicone ? n_sil : n_plain) += 1;
    }
  if (n_sil < 2 || n_plain < 2)
    throw ValidationError("fit_holding_model: need at least 2 pull records per coating, got " +
                          std::to_string(n_sil) + " silicone / " + std::to_string(n_plain) +
                          " plain");

  HoldingFit fit;
  fit.contact_count = contact_count;

  // Normal equations for x = (mu_sil, mu_plain, intercept).
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> atb{};
  for (const auto* r : usable) {
    const double load = r->close_force * contact_count;
    const std::array<double, 3> row = {
        r->coating == FingerCoating::Silicone ? load : 0.0,
        r->coating == FingerCoating::Plain ? load : 0.0,
        1.0,
    };
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
      atb[i] += row[i] * *r->max_pull_force;
    }
  }

  std::array<double, 3> x{};
  if (detail::solve3(ata, atb, x)) {
    fit.mu_eff_silicone = x[0];
    fit.mu_eff_plain = x[1];
    fit.roller_contribution = x[2];
  } else {
    fit.rank_deficient = true;
    double sum = 0.0;
    for (const auto* r : usable) sum += *r->max_pull_force;
    fit.roller_contribution = sum / static_cast<double>(usable.size());
  }

  double sq = 0.0;
  for (const auto* r : usable) {
    const double predicted =
        fit.rank_deficient ? fit.roller_contribution : fit.capacity(r->coating, r->close_force);
    const double res = *r->max_pull_force - predicted;
    sq += res * res;
    fit.residual_max = std::max(fit.residual_max, std::abs(res));
  }
  fit.residual_rms = std::sqrt(sq / static_cast<double>(usable.size()));
  return fit;
}

/// Median close force over the records that enter the fit.
inline double median_close_force(const std::vector<TrialRecord>& records) {
  std::vector<double> values;
  for (const auto& r : records)
    if (r.max_pull_force && r.close_force > 0.0) values.push_back(r.close_force);
  if (values.empty()) throw ValidationError("median_close_force: no pull records");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------
// Report rendering: key=value sections plus a CSV table of the groups.
// ---------------------------------------------------------------------------

inline std::string group_key_name(GroupKey key) {
  switch (key) {
    case GroupKey::Object: return "object";
    case GroupKey::Roller: return "roller";
    case GroupKey::Coating: return "coating";
  }
  return "?";
}

inline std::string format_rate_percent(int successes, int total) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * successes / std::max(total, 1));
  return buf;
}

inline std::string format_report(const SummaryReport& report) {
  std::ostringstream out;
  out << "[summary]\n";
  out << "records=" << report.total_records << "\n";
  out << "grouped_by=" << group_key_name(report.grouped_by) << "\n\n";
  for (const auto& g : report.groups) {
    out << "[group " << group_key_name(report.grouped_by) << "=" << g.key << "]\n";
    out << "total=" << g.total << "\n";
    out << "successes=" << g.successes << "\n";
    out << "rate=" << g.successes << "/" << g.total << " ("
        << format_rate_percent(g.successes, g.total) << ")\n\n";
  }
  for (const auto& [coating, s] : report.pull_stats) {
    out << "[pull coating=" << to_string(coating) << "]\n";
    out << "count=" << s.count << "\n";
    out << "min_n=" << detail::format_double(s.min) << "\n";
    out << "max_n=" << detail::format_double(s.max) << "\n";
    out << "mean_n=" << detail::format_double(s.mean) << "\n\n";
  }
  if (report.fit) {
    const auto& f = *report.fit;
    out << "[holding_fit]\n";
    out << "mu_eff_silicone=" << detail::format_double(f.mu_eff_silicone) << "\n";
    out << "mu_eff_plain=" << detail::format_double(f.mu_eff_plain) << "\n";
    out << "roller_contribution_n=" << detail::format_double(f.roller_contribution) << "\n";
    out << "contact_count=" << f.contact_count << "\n";
    out << "residual_rms_n=" << detail::format_double(f.residual_rms) << "\n";
    out << "residual_max_n=" << detail::format_double(f.residual_max) << "\n";
    out << "rank_deficient=" << (f.rank_deficient ? "true" : "false") << "\n\n";
  }
  return out.str();
}

inline std::string groups_to_csv(const SummaryReport& report) {
  std::ostringstream out;
  out << group_key_name(report.grouped_by) << ",total,successes,rate\n";
  for (const auto& g : report.groups)
    out << g.key << "," << g.total << "," << g.successes << ","
        << detail::format_double(g.rate()) << "\n";
  return out.str();
}

}  // namespace layersep
