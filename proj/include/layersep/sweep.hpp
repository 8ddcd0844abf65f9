#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "layersep/detail/rng.hpp"
#include "layersep/detail/text.hpp"
#include "layersep/graspfsm.hpp"

namespace layersep {

/// Linear map from commanded penetration depth to roller normal force.
struct ContactModel {
  double stiffness = 500.0;  // N/m: 0..4 mm of penetration -> 0..2 N

  double normal_force_for(double penetration) const {
    if (!(stiffness > 0.0)) throw ValidationError("contact stiffness must be > 0");
    return stiffness * std::abs(penetration);
  }
};

struct SweepAxes {
  std::vector<double> penetrations;    // m
  std::vector<double> velocities_rpm;  // rev/min
  std::vector<double> edge_distances;  // m
  std::vector<RollerSurface> roller_types = {RollerSurface::Dented};
  int repetitions = 1;

  void validate() const {
    if (penetrations.empty() || velocities_rpm.empty() || edge_distances.empty() ||
        roller_types.empty())
      throw ValidationError("sweep axes must all be non-empty");
    if (repetitions < 1) throw ValidationError("sweep repetitions must be >= 1");
    for (double p : penetrations)
      if (p < 0.0) throw ValidationError("penetration depths must be >= 0");
    for (double v : velocities_rpm)
      if (v < motor_rpm_min || v > motor_rpm_max)
        throw ValidationError("velocity " + detail::format_double(v) +
                              " rev/min outside motor envelope [1, 45]");
    for (double e : edge_distances)
      if (e < 0.0) throw ValidationError("edge distances must be >= 0");
    for (std::size_t i = 0; i < roller_types.size(); ++i)
      for (std::size_t j = i + 1; j < roller_types.size(); ++j)
        if (roller_types[i] == roller_types[j])
          throw ValidationError("duplicate roller type in sweep axes");
  }

  std::size_t cell_count() const {
    return penetrations.size() * velocities_rpm.size() * edge_distances.size() *
           roller_types.size();
  }

  friend bool operator==(const SweepAxes&, const SweepAxes&) = default;
};

/// Trial-to-trial variability: relative sigmas on the interface coefficients
/// and the normal force. Draws are keyed by (seed, physical cell, repetition)
/// so the dented and smooth variants of the same physical conditions see the
/// same perturbations, and evaluation order cannot change any tally.
struct NoiseModel {
  double mu_sigma = 0.05;
  double fn_sigma = 0.10;
  std::uint64_t seed = 0;

  void validate() const {
    if (mu_sigma < 0.0 || fn_sigma < 0.0) throw ValidationError("noise sigmas must be >= 0");
  }
};

struct GridCell {
  int success_count = 0;
  int repetitions = 0;
  OutcomeKind modal_outcome = OutcomeKind::NothingMoves;  // drag-phase classification

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct OutcomeGrid {
  SweepAxes axes;
  std::vector<GridCell> cells;  // flat, penetration-major: ((ip*nv + iv)*ne + ie)*nr + ir

  std::size_t flat_index(std::size_t ip, std::size_t iv, std::size_t ie, std::size_t ir) const {
    return ((ip * axes.velocities_rpm.size() + iv) * axes.edge_distances.size() + ie) *
               axes.roller_types.size() +
           ir;
  }

  const GridCell& at(std::size_t ip, std::size_t iv, std::size_t ie, std::size_t ir) const {
    return cells.at(flat_index(ip, iv, ie, ir));
  }

  bool any_success() const {
    return std::any_of(cells.begin(), cells.end(),
                       [](const GridCell& c) { return c.success_count > 0; });
  }

  friend bool operator==(const OutcomeGrid&, const OutcomeGrid&) = default;
};

// The paper's fixed evaluation velocity; stop overrun expressed as commanded
// extra rotation is normalized to overrun time at this velocity, so a faster
// roller eats its snap tolerance sooner.
constexpr double reference_rpm = 18.3;

namespace detail {

struct TrialDraw {
  InterfaceFrictions mu;
  double normal_force = 0.0;
};

inline TrialDraw perturb_trial(const InterfaceFrictions& mu, double normal_force,
                               const NoiseModel& noise, Rng& rng) {
  // Fixed draw order: mu1, mu2, mu3, F_N.
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double z3 = rng.normal();
  const double z4 = rng.normal();
  TrialDraw d{mu, normal_force};
  if (noise.mu_sigma > 0.0) {
    constexpr double mu_floor = 0.01;
    d.mu.roller_top = std::max(mu_floor, mu.roller_top * (1.0 + noise.mu_sigma * z1));
    d.mu.top_bottom = std::max(mu_floor, mu.top_bottom * (1.0 + noise.mu_sigma * z2));
    d.mu.bottom_substrate =
        std::max(mu_floor, mu.bottom_substrate * (1.0 + noise.mu_sigma * z3));
  }
  if (noise.fn_sigma > 0.0)
    d.normal_force = std::max(0.0, normal_force * (1.0 + noise.fn_sigma * z4));
  return d;
}

}  // namespace detail

/// One sweep cell for one repetition: drag prediction for the scenario's
/// clamp mode; on separation, the snap rule; under a finger clamp the full
/// grasp episode including the lift. Returns (episode success, drag kind).
inline std::pair<bool, OutcomeKind> evaluate_trial(const EpisodeConfig& config,
                                                   const InterfaceFrictions& mu,
                                                   double effective_stop_delay,
                                                   const HoldingCalibration& calib) {
  const auto& scenario = config.scenario;
  if (scenario.clamp.mode == ClampMode::FingerClamp) {
    EpisodeConfig cell_config = config;
    cell_config.roller_stop_delay = effective_stop_delay;
    const auto trace = run_episode(cell_config, mu, calib);
    const auto drag = classify_clamped(balance_from(scenario, mu));
    return {trace.terminal.succeeded(), drag};
  }
  // Roller-only scenarios: separation plus a clean snap, no grasp to hold.
  const auto outcome = predict(scenario, mu);
  bool ok = outcome.kind == OutcomeKind::TopSeparates &&
            snap_resolution(scenario.roller, effective_stop_delay) == SnapResult::SnapOk;
  return {ok, outcome.kind};
}

/// Seeded deterministic sweep over (penetration x velocity x edge distance x
/// roller type). Output is bit-identical for identical inputs regardless of
/// parallelism.
inline OutcomeGrid run_sweep(const SweepAxes& axes, const EpisodeConfig& base,
                             const ContactModel& contact, const NoiseModel& noise,
                             const HoldingCalibration& calib = default_holding_calibration(),
                             bool parallel = true) {
  axes.validate();
  noise.validate();
  base.fingers.validate();
  base.scenario.stack.validate();

  const auto base_mu = resolve_frictions(base.scenario);
  OutcomeGrid grid;
  grid.axes = axes;
  grid.cells.resize(axes.cell_count());

  const std::size_t nv = axes.velocities_rpm.size();
  const std::size_t ne = axes.edge_distances.size();
  const std::size_t nr = axes.roller_types.size();

  auto evaluate_cell = [&](std::size_t flat) {
    const std::size_t ir = flat % nr;
    const std::size_t ie = (flat / nr) % ne;
    const std::size_t iv = (flat / (nr * ne)) % nv;
    const std::size_t ip = flat / (nr * ne * nv);

    EpisodeConfig config = base;
    config.scenario.roller.surface = axes.roller_types[ir];
    config.scenario.roller.angular_velocity = rpm_to_rad_s(axes.velocities_rpm[iv]);
    config.scenario.edge_distance = axes.edge_distances[ie];
    const double cell_force = contact.normal_force_for(axes.penetrations[ip]);
    const double effective_delay =
        base.roller_stop_delay * (axes.velocities_rpm[iv] / reference_rpm);

    GridCell cell;
    cell.repetitions = axes.repetitions;
    std::array<int, 4> kind_counts{0, 0, 0, 0};
    for (int rep = 0; rep < axes.repetitions; ++rep) {
      // Roller type deliberately not in the key: paired comparison.
      std::uint64_t key = detail::mix_key(noise.seed, 0x636C6C);
      key = detail::mix_key(key, ip);
      key = detail::mix_key(key, iv);
      key = detail::mix_key(key, ie);
      key = detail::mix_key(key, static_cast<std::uint64_t>(rep));
      detail::Rng rng(key);
      const auto draw = detail::perturb_trial(base_mu, cell_force, noise, rng);
      config.scenario.normal_force = draw.normal_force;
      const auto [ok, kind] = evaluate_trial(config, draw.mu, effective_delay, calib);
      if (ok) ++cell.success_count;
      ++kind_counts[static_cast<std::size_t>(kind)];
    }
    // Modal drag outcome; ties resolve to the lowest enum value.
    std::size_t best = 0;
    for (std::size_t k = 1; k < kind_counts.size(); ++k)
      if (kind_counts[k] > kind_counts[best]) best = k;
    cell.modal_outcome = static_cast<OutcomeKind>(best);
    grid.cells[flat] = cell;
  };

  // A failing cell aborts the whole sweep, reported with its coordinates.
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error_message;
  auto guarded_evaluate = [&](std::size_t flat) {
    try {
      evaluate_cell(flat);
    } catch (const std::exception& e) {
      std::scoped_lock lock(error_mutex);
      if (!failed.exchange(true)) {
        const std::size_t ir = flat % nr;
        const std::size_t ie = (flat / nr) % ne;
        const std::size_t iv = (flat / (nr * ne)) % nv;
        const std::size_t ip = flat / (nr * ne * nv);
        error_message = "sweep aborted at cell (penetration=" +
                        detail::format_double(axes.penetrations[ip]) +
                        ", velocity=" + detail::format_double(axes.velocities_rpm[iv]) +
                        ", edge=" + detail::format_double(axes.edge_distances[ie]) +
                        ", roller=" + to_string(axes.roller_types[ir]) + "): " + e.what();
      }
    }
  };

  const std::size_t total = grid.cells.size();
  const unsigned workers =
      parallel ? std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                 static_cast<unsigned>(total)))
               : 1u;
  if (workers <= 1) {
    for (std::size_t i = 0; i < total && !failed; ++i) guarded_evaluate(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < total && !failed; i += workers) guarded_evaluate(i);
      });
    for (auto& t : pool) t.join();
  }
  if (failed) throw ValidationError(error_message);
  return grid;
}

/// Same grid under Unclamped and FingerClamp so success regions can be
/// compared. The base config must carry the FingerClamp spec; the unclamped
/// arm drops it.
inline std::pair<OutcomeGrid, OutcomeGrid> clamp_comparison(
    const SweepAxes& axes, const EpisodeConfig& base, const ContactModel& contact,
    const NoiseModel& noise, const HoldingCalibration& calib = default_holding_calibration(),
    bool parallel = true) {
  if (base.scenario.clamp.mode != ClampMode::FingerClamp)
    throw ValidationError("clamp_comparison expects a FingerClamp base config");
  EpisodeConfig unclamped = base;
  unclamped.scenario.clamp = ClampSpec{ClampMode::Unclamped, 0.0, 0.0, 0.0};
  return {run_sweep(axes, unclamped, contact, noise, calib, parallel),
          run_sweep(axes, base, contact, noise, calib, parallel)};
}

// ---------------------------------------------------------------------------
// Grid files
// ---------------------------------------------------------------------------

inline std::string grid_to_csv(const OutcomeGrid& grid) {
  std::ostringstream out;
  out << "penetration_m,velocity_rpm,edge_distance_m,roller,success,reps,modal_outcome\n";
  const auto& a = grid.axes;
  for (std::size_t ip = 0; ip < a.penetrations.size(); ++ip)
    for (std::size_t iv = 0; iv < a.velocities_rpm.size(); ++iv)
      for (std::size_t ie = 0; ie < a.edge_distances.size(); ++ie)
        for (std::size_t ir = 0; ir < a.roller_types.size(); ++ir) {
          const auto& c = grid.at(ip, iv, ie, ir);
          out << detail::format_double(a.penetrations[ip]) << ","
              << detail::format_double(a.velocities_rpm[iv]) << ","
              << detail::format_double(a.edge_distances[ie]) << ","
              << to_string(a.roller_types[ir]) << "," << c.success_count << ","
              << c.repetitions << "," << to_string(c.modal_outcome) << "\n";
        }
  return out.str();
}

/// Plain-text heatmap: one matrix block per (edge distance, roller) slice,
/// penetration rows by velocity columns, cells as success/reps.
inline std::string grid_to_heatmap(const OutcomeGrid& grid) {
  std::ostringstream out;
  const auto& a = grid.axes;
  for (std::size_t ie = 0; ie < a.edge_distances.size(); ++ie)
    for (std::size_t ir = 0; ir < a.roller_types.size(); ++ir) {
      out << "# roller=" << to_string(a.roller_types[ir])
          << " edge_distance_m=" << detail::format_double(a.edge_distances[ie]) << "\n";
      out << std::setw(14) << "pen_m \\ rpm";
      for (double v : a.velocities_rpm)
        out << std::setw(10) << detail::format_double(v);
      out << "\n";
      for (std::size_t ip = 0; ip < a.penetrations.size(); ++ip) {
        out << std::setw(14) << detail::format_double(a.penetrations[ip]);
        for (std::size_t iv = 0; iv < a.velocities_rpm.size(); ++iv) {
          const auto& c = grid.at(ip, iv, ie, ir);
          out << std::setw(10)
              << (std::to_string(c.success_count) + "/" + std::to_string(c.repetitions));
        }
        out << "\n";
      }
      out << "\n";
    }
  return out.str();
}

inline std::string heatmap_path_for(const std::string& csv_path) {
  auto dot = csv_path.rfind('.');
  const std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
  return stem + "_heatmap.txt";
}

/// Writes the CSV plus the adjacent heatmap text file.
inline void export_grid(const OutcomeGrid& grid, const std::string& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw ParseError("cannot open for writing: " + csv_path);
  csv << grid_to_csv(grid);
  if (!csv) throw ParseError("write failed: " + csv_path);

  const std::string hm_path = heatmap_path_for(csv_path);
  std::ofstream hm(hm_path, std::ios::binary);
  if (!hm) throw ParseError("cannot open for writing: " + hm_path);
  hm << grid_to_heatmap(grid);
  if (!hm) throw ParseError("write failed: " + hm_path);
}

inline OutcomeGrid import_grid(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open grid csv: " + csv_path);
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line) !=
          "penetration_m,velocity_rpm,edge_distance_m,roller,success,reps,modal_outcome")
    throw ParseError(csv_path + ": missing or wrong header");

  auto push_unique = [](std::vector<double>& axis, double v) {
    if (std::find(axis.begin(), axis.end(), v) == axis.end()) axis.push_back(v);
  };

  SweepAxes axes;
  axes.roller_types.clear();
  axes.repetitions = 1;
  struct Row {
    double p, v, e;
    RollerSurface r;
    GridCell cell;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto f = detail::split_fields(t);
    if (f.size() != 7)
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": expected 7 fields");
    Row row{};
    double succ = 0.0, reps = 0.0;
    if (!detail::parse_double(f[0], row.p) || !detail::parse_double(f[1], row.v) ||
        !detail::parse_double(f[2], row.e) || !detail::parse_double(f[4], succ) ||
        !detail::parse_double(f[5], reps))
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": malformed numeric field");
    if (f[3] == "dented") row.r = RollerSurface::Dented;
    else if (f[3] == "smooth") row.r = RollerSurface::Smooth;
    else throw ParseError(csv_path + ":" + std::to_string(lineno) + ": unknown roller '" + f[3] + "'");
    row.cell.success_count = static_cast<int>(succ);
    row.cell.repetitions = static_cast<int>(reps);
    if (row.cell.success_count < 0 || row.cell.success_count > row.cell.repetitions)
      throw ParseError(csv_path + ":" + std::to_string(lineno) +
                       ": success count exceeds repetitions");
    bool known = false;
    for (auto k : {OutcomeKind::TopSeparates, OutcomeKind::BothDragged, OutcomeKind::NothingMoves,
                   OutcomeKind::TopStuck})
      if (to_string(k) == f[6]) {
        row.cell.modal_outcome = k;
        known = true;
      }
    if (!known)
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": unknown outcome '" + f[6] + "'");
    push_unique(axes.penetrations, row.p);
    push_unique(axes.velocities_rpm, row.v);
    push_unique(axes.edge_distances, row.e);
    if (std::find(axes.roller_types.begin(), axes.roller_types.end(), row.r) ==
        axes.roller_types.end())
      axes.roller_types.push_back(row.r);
    axes.repetitions = std::max(axes.repetitions, row.cell.repetitions);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(csv_path + ": no data rows");
  if (rows.size() != axes.cell_count())
    throw ParseError(csv_path + ": row count does not match the axis cross-product");

  OutcomeGrid grid;
  grid.axes = axes;
  grid.cells.resize(axes.cell_count());
  auto index_of = [](const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(
        std::distance(axis.begin(), std::find(axis.begin(), axis.end(), v)));
  };
  for (const auto& row : rows) {
    const std::size_t ir = static_cast<std::size_t>(
        std::distance(axes.roller_types.begin(),
                      std::find(axes.roller_types.begin(), axes.roller_types.end(), row.r)));
    grid.cells[grid.flat_index(index_of(axes.penetrations, row.p),
                               index_of(axes.velocities_rpm, row.v),
                               index_of(axes.edge_distances, row.e), ir)] = row.cell;
  }
  return grid;
}

/// Cell-wise dented-vs-smooth comparison over the shared physical axes.
struct RollerComparison {
  bool dented_dominates = true;  // dented success >= smooth success in every cell
  int strictly_better_cells = 0;
};

inline RollerComparison compare_rollers(const OutcomeGrid& grid) {
  const auto& a = grid.axes;
  auto find_roller = [&](RollerSurface s) {
    auto it = std::find(a.roller_types.begin(), a.roller_types.end(), s);
    if (it == a.roller_types.end())
      throw ValidationError("grid does not contain both roller types");
    return static_cast<std::size_t>(std::distance(a.roller_types.begin(), it));
  };
  const std::size_t dented = find_roller(RollerSurface::Dented);
  const std::size_t smooth = find_roller(RollerSurface::Smooth);
  RollerComparison cmp;
  for (std::size_t ip = 0; ip < a.penetrations.size(); ++ip)
    for (std::size_t iv = 0; iv < a.velocities_rpm.size(); ++iv)
      for (std::size_t ie = 0; ie < a.edge_distances.size(); ++ie) {
        const int d = grid.at(ip, iv, ie, dented).success_count;
        const int s = grid.at(ip, iv, ie, smooth).success_count;
        if (d < s) cmp.dented_dominates = false;
        if (d > s) ++cmp.strictly_better_cells;
      }
  return cmp;
}

}  // namespace layersep
