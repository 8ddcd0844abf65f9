// Command-line front end: separation predictions, parameter sweeps, grasp
// episodes, trial-log ingestion and reporting.
//
// Exit codes: 0 success (predict: TopSeparates; fsm: grasp succeeded),
// 2 a clean non-separating / failed-episode result, 1 any error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layersep/layersep.hpp"

namespace fs = std::filesystem;
using namespace layersep;

namespace {

struct GlobalOpts {
  std::string db_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";
};

std::string resolve_db_path(const GlobalOpts& g) {
  if (!g.db_path.empty()) return g.db_path;
  if (const char* env = std::getenv("LAYERSEP_DB"); env && *env) return env;
  return "data/materials_fig6.db";
}

// Scenario flags shared by predict/sweep/fsm.
struct ScenarioOpts {
  std::string pair;
  std::string substrate = "lab-table";
  double fn = 2.0;
  double penetration_mm = -1.0;  // <0: use --fn
  double contact_stiffness = 500.0;
  std::string clamp = "none";
  double clamp_distance = 0.02535;
  double hold_force = 5.0;
  double edge_distance = 0.02;
  std::string roller = "dented";
  double rpm = 18.3;
  double adhesion = 0.0;
  double overrun_tolerance = 0.15;
};

void add_scenario_flags(CLI::App* cmd, ScenarioOpts& s, const std::string& default_clamp) {
  s.clamp = default_clamp;
  cmd->add_option("--pair", s.pair,
                  "material pair: paper-paper | plastic-paper | plastic-plastic | "
                  "white-fabric | blue-fabric | <top>:<bottom> (db material names)")
      ->required();
  cmd->add_option("--substrate", s.substrate, "substrate surface id (default lab-table)");
  cmd->add_option("--fn", s.fn, "roller normal force F_N, N");
  cmd->add_option("--penetration-mm", s.penetration_mm,
                  "penetration depth in mm; overrides --fn via --kc");
  cmd->add_option("--kc", s.contact_stiffness, "contact stiffness, N/m (penetration -> force)");
  cmd->add_option("--clamp", s.clamp, "clamp mode: none | rigid | finger")
      ->check(CLI::IsMember({"none", "rigid", "finger"}));
  cmd->add_option("--a", s.clamp_distance,
                  "clamp distance, m (roller contact to clamp line / pre-opened finger distance)");
  cmd->add_option("--hold-force", s.hold_force, "clamp holding force F_N2, N");
  cmd->add_option("--edge", s.edge_distance, "roller contact to free edge, m");
  cmd->add_option("--roller", s.roller, "roller surface: dented | smooth")
      ->check(CLI::IsMember({"dented", "smooth"}));
  cmd->add_option("--rpm", s.rpm, "roller angular velocity, rev/min (motor range 1-45)");
  cmd->add_option("--adhesion", s.adhesion, "interlayer adhesion force, N");
  cmd->add_option("--overrun-tolerance", s.overrun_tolerance,
                  "smooth-roller stop overrun tolerance, s");
}

LayerStack build_stack(const MaterialDb& db, const std::string& pair,
                       const std::string& substrate) {
  auto stack_of = [&](const std::string& top, const std::string& bottom) {
    return LayerStack{db.sheet(top), db.sheet(bottom), substrate};
  };
  if (pair == "paper-paper") return stack_of("bag-paper", "bag-paper");
  if (pair == "plastic-paper") return stack_of("pouch-plastic", "pouch-paper");
  if (pair == "plastic-plastic") return stack_of("apron-plastic", "apron-plastic");
  if (pair == "white-fabric") return stack_of("white-coat-fabric", "white-coat-fabric");
  if (pair == "blue-fabric") return stack_of("blue-coat-fabric", "blue-coat-fabric");
  if (auto colon = pair.find(':'); colon != std::string::npos)
    return stack_of(pair.substr(0, colon), pair.substr(colon + 1));
  throw ValidationError("unknown material pair '" + pair +
                        "'; use a named pair or <top>:<bottom>");
}

SeparationScenario build_scenario(const MaterialDb& db, const ScenarioOpts& s) {
  SeparationScenario scenario;
  scenario.stack = build_stack(db, s.pair, s.substrate);
  scenario.friction = db.friction;
  scenario.roller.surface = s.roller == "dented" ? RollerSurface::Dented : RollerSurface::Smooth;
  scenario.roller.angular_velocity = rpm_to_rad_s(s.rpm);
  scenario.roller.overrun_tolerance = s.overrun_tolerance;
  scenario.normal_force = s.penetration_mm >= 0.0
                              ? ContactModel{s.contact_stiffness}.normal_force_for(
                                    mm_to_m(s.penetration_mm))
                              : s.fn;
  if (s.clamp == "none") {
    scenario.clamp = ClampSpec{ClampMode::Unclamped, 0.0, 0.0, 0.0};
  } else {
    const auto mode = s.clamp == "rigid" ? ClampMode::RigidClamp : ClampMode::FingerClamp;
    scenario.clamp = ClampSpec{mode, s.hold_force, s.clamp_distance, 200.0};
  }
  scenario.edge_distance = s.edge_distance;
  scenario.interlayer_adhesion = s.adhesion;
  scenario.validate();
  return scenario;
}

fs::path ensure_out_dir(const GlobalOpts& g) {
  fs::path dir(g.out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  return dir;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void print_balance(const ForceBalance& b) {
  std::cout << "f_fr1 (roller/top)        = " << fmt6(b.f_fr1) << " N\n"
            << "f_fr2 (interlayer)        = " << fmt6(b.f_fr2) << " N\n"
            << "f_fr3 (bottom hold)       = " << fmt6(b.f_fr3) << " N\n"
            << "f_b1  (top buckling)      = " << fmt6(b.f_b1) << " N\n"
            << "f_b2  (bottom buckling)   = " << fmt6(b.f_b2) << " N\n"
            << "top margin                = " << fmt6(b.top_margin) << " N\n"
            << "bottom margin             = " << fmt6(b.bottom_margin) << " N\n";
}

int cmd_predict(const GlobalOpts& g, const ScenarioOpts& s) {
  const auto db = load_material_db(resolve_db_path(g));
  const auto scenario = build_scenario(db, s);
  const auto outcome = predict(scenario);
  print_balance(outcome.balance);
  std::cout << "outcome: " << to_string(outcome.kind) << "\n";
  return outcome.kind == OutcomeKind::TopSeparates ? 0 : 2;
}

struct SweepOpts {
  double pen_mm_min = 0.0;
  double pen_mm_max = 4.0;
  int pen_steps = 5;
  double rpm_min = 1.0;
  double rpm_max = 45.0;
  int rpm_steps = 5;
  std::vector<double> edges = {0.02};
  std::string rollers = "dented";
  int reps = 1;
  double mu_sigma = 0.05;
  double fn_sigma = 0.10;
  double stop_delay = 0.1;
  double pull_force = 40.0;
  std::string coating = "silicone";
  double close_force = 60.0;
  bool compare_clamp = false;
  bool no_parallel = false;
  bool no_noise = false;
};

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> v;
  if (steps <= 1) {
    v.push_back(lo);
    return v;
  }
  for (int i = 0; i < steps; ++i)
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
  return v;
}

FingerSpec build_fingers(const std::string& coating, double close_force) {
  FingerSpec f;
  f.coating = coating == "plain" ? FingerCoating::Plain : FingerCoating::Silicone;
  f.close_force = close_force;
  return f;
}

void print_grid_summary(const std::string& label, const OutcomeGrid& grid) {
  int success_cells = 0, full_cells = 0;
  for (const auto& c : grid.cells) {
    if (c.success_count > 0) ++success_cells;
    if (c.success_count == c.repetitions) ++full_cells;
  }
  std::cout << label << ": " << grid.cells.size() << " cells, " << success_cells
            << " with any success, " << full_cells << " fully successful\n";
}

int cmd_sweep(const GlobalOpts& g, const ScenarioOpts& s, const SweepOpts& w) {
  const auto db = load_material_db(resolve_db_path(g));
  auto scenario = build_scenario(db, s);

  SweepAxes axes;
  for (double mm : linspace(w.pen_mm_min, w.pen_mm_max, w.pen_steps))
    axes.penetrations.push_back(mm_to_m(mm));
  axes.velocities_rpm = linspace(w.rpm_min, w.rpm_max, w.rpm_steps);
  axes.edge_distances = w.edges;
  axes.roller_types.clear();
  for (const auto& r : detail::split_fields(w.rollers)) {
    if (r == "dented") axes.roller_types.push_back(RollerSurface::Dented);
    else if (r == "smooth") axes.roller_types.push_back(RollerSurface::Smooth);
    else throw ValidationError("unknown roller type '" + r + "'");
  }
  axes.repetitions = w.reps;

  EpisodeConfig base;
  base.scenario = scenario;
  base.fingers = build_fingers(w.coating, w.close_force);
  base.roller_stop_delay = w.stop_delay;
  base.pull_force = w.pull_force;

  ContactModel contact{s.contact_stiffness};
  NoiseModel noise;
  noise.seed = g.seed;
  if (w.no_noise) {
    noise.mu_sigma = 0.0;
    noise.fn_sigma = 0.0;
  } else {
    noise.mu_sigma = w.mu_sigma;
    noise.fn_sigma = w.fn_sigma;
  }

  const auto out = ensure_out_dir(g);
  const bool parallel = !w.no_parallel;

  auto emit = [&](const OutcomeGrid& grid, const std::string& stem) {
    const auto csv_path = (out / (stem + ".csv")).string();
    export_grid(grid, csv_path);
    if (g.format == "svg") write_grid_svg(grid, (out / (stem + ".svg")).string());
    if (g.format == "text") std::cout << grid_to_heatmap(grid);
    print_grid_summary(stem, grid);
  };

  if (w.compare_clamp) {
    if (scenario.clamp.mode != ClampMode::FingerClamp)
      throw ValidationError("--compare-clamp needs --clamp finger as the clamped arm");
    const auto [unclamped, clamped] = clamp_comparison(axes, base, contact, noise,
                                                       default_holding_calibration(), parallel);
    emit(unclamped, "grid_unclamped");
    emit(clamped, "grid_clamped");
    std::cout << "clamped-only success cells: "
              << [&] {
                   int n = 0;
                   for (std::size_t i = 0; i < clamped.cells.size(); ++i)
                     if (clamped.cells[i].success_count > 0 &&
                         unclamped.cells[i].success_count == 0)
                       ++n;
                   return n;
                 }()
              << "\n";
    return 0;
  }

  const auto grid = run_sweep(axes, base, contact, noise, default_holding_calibration(), parallel);
  emit(grid, "grid");
  if (axes.roller_types.size() == 2) {
    const auto cmp = compare_rollers(grid);
    std::cout << "dented dominates smooth: " << (cmp.dented_dominates ? "yes" : "no") << " ("
              << cmp.strictly_better_cells << " cells strictly better)\n";
  }
  return 0;
}

struct FsmOpts {
  double stop_delay = 0.0;
  double pull_force = 40.0;
  std::string coating = "silicone";
  double close_force = 60.0;
  std::string trace_name = "trace.txt";
};

int cmd_fsm(const GlobalOpts& g, const ScenarioOpts& s, const FsmOpts& f) {
  const auto db = load_material_db(resolve_db_path(g));
  EpisodeConfig config;
  config.scenario = build_scenario(db, s);
  config.fingers = build_fingers(f.coating, f.close_force);
  config.roller_stop_delay = f.stop_delay;
  config.pull_force = f.pull_force;

  const auto trace = run_episode(config);
  const auto out = ensure_out_dir(g);
  write_trace(trace, (out / f.trace_name).string());
  std::cout << format_trace(trace);
  std::cout << "terminal: " << to_string(trace.terminal) << "\n";
  return trace.terminal.succeeded() ? 0 : 2;
}

int cmd_ingest(const std::string& log_path, const std::string& normalize_path) {
  const auto records = ingest_log(log_path);
  std::cout << "ingested " << records.size() << " records from " << log_path << "\n";
  if (!normalize_path.empty()) {
    write_log(records, normalize_path);
    std::cout << "wrote normalized log to " << normalize_path << "\n";
  }
  return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& log_path, const std::string& group_by,
               bool fit) {
  const auto records = ingest_log(log_path);
  GroupKey key = GroupKey::Object;
  if (group_by == "roller") key = GroupKey::Roller;
  else if (group_by == "coating") key = GroupKey::Coating;

  auto report = summarize(records, key);
  if (fit) {
    report.fit = fit_holding_model(records);
    const auto& f = *report.fit;
    const double median = median_close_force(records);
    std::cout << "coating capacity gap at median close force ("
              << detail::format_double(median) << " N): "
              << detail::format_double(f.capacity(FingerCoating::Silicone, median) -
                                       f.capacity(FingerCoating::Plain, median))
              << " N\n";
  }

  const auto text = format_report(report);
  std::cout << text;
  const auto out = ensure_out_dir(g);
  {
    std::ofstream rf(out / "report.txt", std::ios::binary);
    rf << text;
  }
  {
    std::ofstream cf(out / "groups.csv", std::ios::binary);
    cf << groups_to_csv(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thin-layer separation simulator and experiment toolchain"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--db", g.db_path,
                 "material database path (default: $LAYERSEP_DB, else data/materials_fig6.db)");
  app.add_option("--seed", g.seed, "RNG seed for sweeps");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--format", g.format, "output format: csv | text | svg")
      ->check(CLI::IsMember({"csv", "text", "svg"}));

  ScenarioOpts ps;
  auto* predict_cmd =
      app.add_subcommand("predict", "evaluate the separation conditions for one scenario");
  add_scenario_flags(predict_cmd, ps, "none");

  ScenarioOpts ss;
  SweepOpts w;
  auto* sweep_cmd = app.add_subcommand("sweep", "seeded parameter sweep over the outcome grid");
  add_scenario_flags(sweep_cmd, ss, "finger");
  sweep_cmd->add_option("--pen-mm-min", w.pen_mm_min, "penetration axis start, mm");
  sweep_cmd->add_option("--pen-mm-max", w.pen_mm_max, "penetration axis end, mm");
  sweep_cmd->add_option("--pen-steps", w.pen_steps, "penetration axis steps");
  sweep_cmd->add_option("--rpm-min", w.rpm_min, "velocity axis start, rev/min");
  sweep_cmd->add_option("--rpm-max", w.rpm_max, "velocity axis end, rev/min");
  sweep_cmd->add_option("--rpm-steps", w.rpm_steps, "velocity axis steps");
  sweep_cmd->add_option("--edges", w.edges, "edge distances, m (repeatable)");
  sweep_cmd->add_option("--rollers", w.rollers, "roller types, comma list: dented,smooth");
  sweep_cmd->add_option("--reps", w.reps, "repetitions per cell");
  sweep_cmd->add_option("--mu-sigma", w.mu_sigma, "relative noise on friction coefficients");
  sweep_cmd->add_option("--fn-sigma", w.fn_sigma, "relative noise on normal force");
  sweep_cmd->add_flag("--no-noise", w.no_noise, "zero both noise sigmas");
  sweep_cmd->add_option("--stop-delay", w.stop_delay,
                        "roller stop overrun, s (velocity-scaled inside the sweep)");
  sweep_cmd->add_option("--pull", w.pull_force, "lift pull force, N");
  sweep_cmd->add_option("--coating", w.coating, "finger coating: silicone | plain")
      ->check(CLI::IsMember({"silicone", "plain"}));
  sweep_cmd->add_option("--close-force", w.close_force, "finger close force, N");
  sweep_cmd->add_flag("--compare-clamp", w.compare_clamp,
                      "run the grid unclamped and finger-clamped and compare");
  sweep_cmd->add_flag("--no-parallel", w.no_parallel, "evaluate cells on one thread");

  ScenarioOpts fscen;
  FsmOpts f;
  auto* fsm_cmd = app.add_subcommand("fsm", "run one grasp episode through the phase machine");
  add_scenario_flags(fsm_cmd, fscen, "finger");
  fsm_cmd->add_option("--stop-delay", f.stop_delay, "roller stop overrun past edge arrival, s");
  fsm_cmd->add_option("--pull", f.pull_force, "lift pull force, N");
  fsm_cmd->add_option("--coating", f.coating, "finger coating: silicone | plain")
      ->check(CLI::IsMember({"silicone", "plain"}));
  fsm_cmd->add_option("--close-force", f.close_force, "finger close force, N");
  fsm_cmd->add_option("--trace-name", f.trace_name, "trace file name under --out");

  std::string ingest_log_path, normalize_path;
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a trial log CSV");
  ingest_cmd->add_option("--log", ingest_log_path, "trial log CSV path")->required();
  ingest_cmd->add_option("--normalize", normalize_path, "write a normalized copy here");

  std::string report_log_path, group_by = "object";
  bool fit = false;
  auto* report_cmd = app.add_subcommand("report", "summary statistics over a trial log");
  report_cmd->add_option("--log", report_log_path, "trial log CSV path")->required();
  report_cmd->add_option("--group-by", group_by, "grouping key: object | roller | coating")
      ->check(CLI::IsMember({"object", "roller", "coating"}));
  report_cmd->add_flag("--fit", fit, "fit the holding-force model and report it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (predict_cmd->parsed()) return cmd_predict(g, ps);
    if (sweep_cmd->parsed()) return cmd_sweep(g, ss, w);
    if (fsm_cmd->parsed()) return cmd_fsm(g, fscen, f);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest_log_path, normalize_path);
    if (report_cmd->parsed()) return cmd_report(g, report_log_path, group_by, fit);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
