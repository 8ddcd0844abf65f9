// Minimal library walkthrough: load the bundled materials, predict the
// plastic-paper outcome with and without the finger clamp, then run one full
// grasp episode. Pass the database path as argv[1] (default
// data/materials_fig6.db).

#include <iostream>

#include "layersep/layersep.hpp"

using namespace layersep;

int main(int argc, char** argv) {
  const std::string db_path = argc > 1 ? argv[1] : "data/materials_fig6.db";
  const auto db = load_material_db(db_path);

  SeparationScenario scenario;
  scenario.stack = LayerStack{db.sheet("pouch-plastic"), db.sheet("pouch-paper"), "lab-table"};
  scenario.friction = db.friction;
  scenario.normal_force = 2.0;
  scenario.edge_distance = 0.02;

  const auto unclamped = predict_unclamped(scenario);
  std::cout << "unclamped: " << to_string(unclamped.kind) << "\n";

  scenario.clamp = ClampSpec{ClampMode::FingerClamp, 5.0, 0.02535, 200.0};
  const auto clamped = predict_clamped(scenario);
  std::cout << "finger-clamped at a=25.35 mm: " << to_string(clamped.kind) << "\n";

  EpisodeConfig config;
  config.scenario = scenario;
  config.pull_force = 40.0;
  const auto trace = run_episode(config);
  std::cout << format_trace(trace);
  return trace.terminal.succeeded() ? 0 : 1;
}
