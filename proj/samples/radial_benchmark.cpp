// Solves the arrival-time problem on the unit disk and compares it with the
// shrinking-circle solution.
#include <cstdio>
#include <cstdlib>

#include "hkflow/oracle/sphere.hpp"
#include "hkflow/solver/continuation.hpp"

int main(int argc, char** argv) {
  const int resolution = argc > 1 ? std::atoi(argv[1]) : 64;
  const double k = argc > 2 ? std::atof(argv[2]) : 1.0;
  const auto disc = hkflow::build_grid(hkflow::DomainSpec::ball(2, {}, 1.0), resolution);
  hkflow::SolverParams params;
  params.k = k;
  const auto flow = hkflow::epsilon_sweep(disc, hkflow::EpsSchedule::for_grid(1.0 / resolution),
                                          params);
  const hkflow::SphereState sphere{1.0, 1, k};
  double err = 0.0;
  for (std::size_t p : flow.u.mask().unknowns()) {
    const double r = std::min(1.0, hkflow::norm(disc->grid.position(p), 2));
    err = std::max(err, std::abs(flow.u.values()[p] - hkflow::sphere_arrival_time(sphere, r)));
  }
  std::printf("T = %.6f (exact %.6f), sup error %.3e\n", flow.T,
              hkflow::extinction_time(sphere), err);
  for (const auto& s : flow.per_eps) {
    std::printf("  eps %-10.6g newton %3d  change %.3e\n", s.epsilon, s.newton_iterations,
                s.change);
  }
}
