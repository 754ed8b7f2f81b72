// Library walkthrough: build an instance, run a small coalition, inspect the
// result, and export the model for an external MILP solver.
#include <iostream>

#include "cbm/cbm.hpp"

int main() {
  using namespace cbm;

  Rng rng(42);
  const ProblemInstance inst = generate_xd_instance(/*n_tasks=*/10, /*n_robots=*/3, /*prec_fraction=*/0.2, rng);
  if (const auto issues = validate_instance(inst); !issues.empty()) {
    for (const auto& v : issues) std::cerr << v.describe() << "\n";
    return 1;
  }
  const Problem problem(inst);

  CoalitionConfig cfg;
  cfg.n_agents = 3;
  cfg.agent.pop_size = 12;
  cfg.agent.patience = 200;
  cfg.agent.seed = 7;
  const CoalitionResult result = run_coalition(problem, cfg);

  std::cout << "makespan " << result.objectives.makespan << ", cost " << result.objectives.cost << " after "
            << result.iterations << " iterations (" << result.runtime_s << " s)\n";
  for (Robot r = 0; r < result.best.routes.size(); ++r) {
    std::cout << "robot " << r << ":";
    for (Task t : result.best.routes[r]) std::cout << " " << t;
    std::cout << "\n";
  }
  std::cout << "\nrobot\ttask\tstart\tfinish\n" << gantt_text(result.schedule);

  // Every constraint family of the MILP holds for the decoded best.
  const auto violations = check_constraints(problem, result.best, result.schedule);
  std::cout << "\nconstraint violations: " << violations.size() << "\n";

  const std::string lp = export_lp(problem);
  std::cout << "LP model: " << lp.size() << " bytes\n";
  return violations.empty() ? 0 : 1;
}
