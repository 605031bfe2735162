// Generates one apartment, hides a target in the far half and compares the
// non-map-aware planner against plain frontier exploration on it.

#include <iostream>

#include "vsearch/episode.hpp"
#include "vsearch/world_gen.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 3;
  vsearch::WorldGenParams p;
  p.width = 12;
  p.height = 16;
  p.object_density = 0.01;
  p.seed = seed;
  const vsearch::LineWorld world = vsearch::generate_world(p, vsearch::Difficulty::hard);

  vsearch::PlannerConfig cfg;
  cfg.weights.w_unknown = 0.1;
  for (double w_nonmap : {5.0, 0.0}) {
    cfg.weights.w_nonmap = w_nonmap;
    const auto r = vsearch::search_episode(world, cfg, vsearch::LabelMode::ground_truth, seed);
    std::cout << (w_nonmap > 0 ? "non-map aware: " : "frontier only: ") << r.termination << " after "
              << r.detection_time << " s, " << r.steps.size() << " viewpoints, " << r.registry_size
              << " registry bins\n";
  }
}
