// Scores the candidate frontiers on the route-choice fixture for a few
// entropy settings and prints the decision record for each.

#include <iostream>

#include "coupled_explore/coupled_explore.hpp"

namespace ce = coupled_explore;

int main() {
  const auto f = ce::route_choice_fixture();
  auto st = ce::initial_state(ce::PoseBelief{f.start, ce::Mat3::Identity() * 1e-3}, f.belief_map);
  ce::DecisionConfig cfg;
  cfg.rollout_beam_stride = 4;
  for (const auto& spec : {ce::EntropySpec::behavioral(0.2), ce::EntropySpec::behavioral(1.0),
                           ce::EntropySpec::behavioral(3.0), ce::EntropySpec::renyi(2.0)}) {
    cfg.entropy = spec;
    const auto [rec, plans] = ce::evaluate_candidates(st, cfg, ce::SensorSpec{}, ce::SimParams{});
    std::cout << ce::to_string(spec.family()) << " alpha=" << spec.alpha() << " " << ce::to_json(rec).dump()
              << std::endl;
  }
  return 0;
}
