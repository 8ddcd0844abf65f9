#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "layersep/svg.hpp"
#include "layersep/sweep.hpp"
#include "test_helpers.hpp"

using namespace layersep;
using Catch::Approx;
namespace th = test_helpers;

namespace {

SweepAxes small_axes(int reps = 3) {
  SweepAxes axes;
  axes.penetrations = {0.0, 0.002, 0.004};
  axes.velocities_rpm = {1.0, 18.3, 45.0};
  axes.edge_distances = {0.02};
  axes.roller_types = {RollerSurface::Dented};
  axes.repetitions = reps;
  return axes;
}

NoiseModel noisy(std::uint64_t seed) {
  NoiseModel n;
  n.seed = seed;
  return n;
}

NoiseModel quiet(std::uint64_t seed) {
  NoiseModel n;
  n.mu_sigma = 0.0;
  n.fn_sigma = 0.0;
  n.seed = seed;
  return n;
}

}  // namespace

TEST_CASE("sweeps are deterministic and parallelism-independent", "[sweep][determinism]") {
  const auto base = th::make_episode_config();
  const ContactModel contact;
  const auto axes = small_axes(5);

  const auto a = run_sweep(axes, base, contact, noisy(42));
  const auto b = run_sweep(axes, base, contact, noisy(42));
  CHECK(a == b);

  const auto serial = run_sweep(axes, base, contact, noisy(42), default_holding_calibration(),
                                /*parallel=*/false);
  CHECK(a == serial);
  CHECK(grid_to_csv(a) == grid_to_csv(serial));

  const auto other_seed = run_sweep(axes, base, contact, noisy(43));
  CHECK(a.axes == other_seed.axes);  // shape identical, contents may differ
}

TEST_CASE("zero noise makes every cell all-or-nothing", "[sweep]") {
  const auto base = th::make_episode_config();
  const auto grid = run_sweep(small_axes(5), base, ContactModel{}, quiet(0));
  for (const auto& c : grid.cells) {
    CHECK((c.success_count == 0 || c.success_count == c.repetitions));
    CHECK(c.success_count <= c.repetitions);
  }
}

TEST_CASE("grid shape equals the axis cross-product", "[sweep]") {
  auto axes = small_axes(2);
  axes.roller_types = {RollerSurface::Dented, RollerSurface::Smooth};
  axes.edge_distances = {0.0, 0.02};
  const auto grid = run_sweep(axes, th::make_episode_config(), ContactModel{}, quiet(0));
  CHECK(grid.cells.size() == 3u * 3u * 2u * 2u);
  CHECK(grid.cells.size() == axes.cell_count());
}

TEST_CASE("dented roller dominates smooth cell-wise", "[sweep][dominance]") {
  auto axes = small_axes(5);
  axes.roller_types = {RollerSurface::Dented, RollerSurface::Smooth};
  auto base = th::make_episode_config();
  base.roller_stop_delay = 0.1;  // scaled past the smooth tolerance at high rpm

  const auto grid = run_sweep(axes, base, ContactModel{}, noisy(7));
  const auto cmp = compare_rollers(grid);
  CHECK(cmp.dented_dominates);
  CHECK(cmp.strictly_better_cells > 0);
}

TEST_CASE("velocity-scaled overrun: fast smooth rollers miss the stop window", "[sweep][snap]") {
  auto axes = small_axes(1);
  axes.penetrations = {0.004};
  axes.roller_types = {RollerSurface::Smooth};
  auto base = th::make_episode_config();
  base.roller_stop_delay = 0.1;  // commanded overrun, normalized at 18.3 rev/min

  const auto grid = run_sweep(axes, base, ContactModel{}, quiet(0));
  // 0.1 s * (rpm/18.3) vs tolerance 0.15 s: 1 rpm passes, 45 rpm fails.
  CHECK(grid.at(0, 0, 0, 0).success_count == 1);
  CHECK(grid.at(0, 2, 0, 0).success_count == 0);
  // The drag itself separated fine; the failure is at the snap.
  CHECK(grid.at(0, 2, 0, 0).modal_outcome == OutcomeKind::TopSeparates);
}

TEST_CASE("clamp comparison: finger clamp rescues the plastic-paper stack", "[sweep][clamp]") {
  auto axes = small_axes(1);
  axes.penetrations = {0.0, 0.001, 0.002, 0.003, 0.004};
  axes.velocities_rpm = {1.0, 12.0, 23.0, 34.0, 45.0};
  const auto base = th::make_episode_config();  // interlayer 0.36 vs table 0.35

  const auto [unclamped, clamped] = clamp_comparison(axes, base, ContactModel{}, quiet(0));

  for (const auto& c : unclamped.cells) {
    CHECK(c.success_count == 0);
    CHECK(c.modal_outcome != OutcomeKind::TopSeparates);
  }
  CHECK(clamped.any_success());

  SECTION("identical inputs give identical grids") {
    const auto again = clamp_comparison(axes, base, ContactModel{}, quiet(0));
    CHECK(again.first == unclamped);
    CHECK(again.second == clamped);
  }
  SECTION("modal outcome of the failing unclamped cells") {
    // Zero penetration row: nothing moves; any force: both dragged.
    CHECK(unclamped.at(0, 0, 0, 0).modal_outcome == OutcomeKind::NothingMoves);
    CHECK(unclamped.at(2, 0, 0, 0).modal_outcome == OutcomeKind::BothDragged);
  }
}

TEST_CASE("rigid clamp sweeps use the buckling conditions with unbounded hold", "[sweep][clamp]") {
  auto axes = small_axes(1);
  auto base = th::make_episode_config();
  base.scenario.clamp = ClampSpec{ClampMode::RigidClamp, 5.0, 0.02535, 0.0};
  const auto grid = run_sweep(axes, base, ContactModel{}, quiet(0));
  // Zero force: stuck; any swept force beats the thin film's threshold.
  CHECK(grid.at(0, 0, 0, 0).success_count == 0);
  CHECK(grid.at(0, 0, 0, 0).modal_outcome == OutcomeKind::TopStuck);
  CHECK(grid.at(2, 0, 0, 0).success_count == 1);
  CHECK(grid.at(2, 0, 0, 0).modal_outcome == OutcomeKind::TopSeparates);
}

TEST_CASE("bundled blue-coat fabric: clamped success from a light normal force",
          "[sweep][clamp][db]") {
  const auto db = load_material_db(th::data_file("materials_fig6.db"));
  EpisodeConfig base;
  base.scenario.stack =
      LayerStack{db.sheet("blue-coat-fabric"), db.sheet("blue-coat-fabric"), "lab-table"};
  base.scenario.friction = db.friction;
  base.scenario.clamp = ClampSpec{ClampMode::FingerClamp, 5.0, 0.02535, 200.0};
  base.scenario.edge_distance = 0.02;

  auto axes = small_axes(1);
  axes.penetrations = {0.0, 0.001, 0.002, 0.003, 0.004};
  axes.velocities_rpm = {18.3};
  const auto grid = run_sweep(axes, base, ContactModel{}, quiet(0));
  CHECK(grid.at(0, 0, 0, 0).success_count == 0);  // zero force still stuck
  CHECK(grid.at(1, 0, 0, 0).success_count == 1);  // 1 mm -> 0.5 N already separates
  CHECK(grid.at(4, 0, 0, 0).success_count == 1);
}

TEST_CASE("clamped success region along the penetration axis is an interval", "[sweep]") {
  auto axes = small_axes(1);
  axes.penetrations = {0.0, 0.0005, 0.001, 0.0015, 0.002, 0.003, 0.004};
  axes.velocities_rpm = {18.3};
  const auto grid = run_sweep(axes, th::make_episode_config(), ContactModel{}, quiet(0));

  std::vector<bool> success;
  for (std::size_t ip = 0; ip < axes.penetrations.size(); ++ip)
    success.push_back(grid.at(ip, 0, 0, 0).success_count > 0);
  // Scan: once the region ends it must not restart.
  bool seen = false, ended = false;
  for (bool s : success) {
    if (s) {
      CHECK_FALSE(ended);
      seen = true;
    } else if (seen) {
      ended = true;
    }
  }
  CHECK(seen);
}

TEST_CASE("grid export round-trips through CSV", "[sweep][io]") {
  auto axes = small_axes(4);
  axes.roller_types = {RollerSurface::Dented, RollerSurface::Smooth};
  auto base = th::make_episode_config();
  base.roller_stop_delay = 0.1;
  const auto grid = run_sweep(axes, base, ContactModel{}, noisy(3));

  const auto path = th::temp_file("grid_roundtrip.csv");
  export_grid(grid, path);
  CHECK(import_grid(path) == grid);

  SECTION("heatmap sits next to the csv and mentions every slice") {
    const auto heatmap = th::read_text(heatmap_path_for(path));
    CHECK(heatmap.find("roller=dented") != std::string::npos);
    CHECK(heatmap.find("roller=smooth") != std::string::npos);
  }
  SECTION("export is byte-stable") {
    const auto bytes = th::read_text(path);
    export_grid(grid, path);
    CHECK(th::read_text(path) == bytes);
  }
}

TEST_CASE("degenerate 1x1x1 grid exports exactly one data row", "[sweep][io]") {
  SweepAxes axes;
  axes.penetrations = {0.002};
  axes.velocities_rpm = {18.3};
  axes.edge_distances = {0.02};
  axes.repetitions = 1;
  const auto grid = run_sweep(axes, th::make_episode_config(), ContactModel{}, quiet(0));
  const auto csv = grid_to_csv(grid);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
  CHECK(csv.rfind("penetration_m,velocity_rpm,edge_distance_m,roller,success,reps,modal_outcome",
                  0) == 0);
}

TEST_CASE("perturbations respect the documented floors", "[sweep][noise]") {
  InterfaceFrictions mu{0.05, 0.05, 0.05};
  NoiseModel noise;
  noise.mu_sigma = 3.0;  // absurd, to force excursions
  noise.fn_sigma = 3.0;
  for (std::uint64_t k = 0; k < 500; ++k) {
    detail::Rng rng(k);
    const auto d = detail::perturb_trial(mu, 1.0, noise, rng);
    CHECK(d.mu.roller_top >= 0.01);
    CHECK(d.mu.top_bottom >= 0.01);
    CHECK(d.mu.bottom_substrate >= 0.01);
    CHECK(d.normal_force >= 0.0);
  }
  SECTION("zero sigma leaves values untouched") {
    detail::Rng rng(1);
    const auto d = detail::perturb_trial(mu, 1.0, NoiseModel{0.0, 0.0, 0}, rng);
    CHECK(d.mu.roller_top == 0.05);
    CHECK(d.normal_force == 1.0);
  }
}

TEST_CASE("a failing cell aborts the sweep with its coordinates", "[sweep][errors]") {
  auto base = th::make_episode_config();
  base.scenario.clamp.clamp_distance = 0.0;  // invalid under FingerClamp, caught per cell
  try {
    run_sweep(small_axes(1), base, ContactModel{}, quiet(0));
    FAIL("expected the sweep to abort");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("sweep aborted at cell") != std::string::npos);
    CHECK(what.find("penetration=") != std::string::npos);
    CHECK(what.find("roller=dented") != std::string::npos);
  }
}

TEST_CASE("axis validation", "[sweep]") {
  auto axes = small_axes(1);
  SECTION("empty axis") {
    axes.penetrations.clear();
    CHECK_THROWS_AS(axes.validate(), ValidationError);
  }
  SECTION("velocity outside the motor envelope") {
    axes.velocities_rpm.push_back(60.0);
    CHECK_THROWS_AS(axes.validate(), ValidationError);
  }
  SECTION("duplicate roller type") {
    axes.roller_types = {RollerSurface::Dented, RollerSurface::Dented};
    CHECK_THROWS_AS(axes.validate(), ValidationError);
  }
  SECTION("zero repetitions") {
    axes.repetitions = 0;
    CHECK_THROWS_AS(axes.validate(), ValidationError);
  }
}

TEST_CASE("svg rendering emits one rect per cell", "[sweep][svg]") {
  auto axes = small_axes(2);
  const auto grid = run_sweep(axes, th::make_episode_config(), ContactModel{}, quiet(0));
  const auto svg = grid_to_svg(grid);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t rects = 0, pos = 0;
  while ((pos = svg.find("<rect", pos)) != std::string::npos) {
    ++rects;
    pos += 5;
  }
  CHECK(rects == grid.cells.size());
}
