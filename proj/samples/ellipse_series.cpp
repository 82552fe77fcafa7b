// Level-set series of the flow out of an ellipse: perimeter, area and the
// isoperimetric difference L^2 - 4 pi A per level.
#include <cstdio>
#include <cstdlib>

#include "hkflow/iso/report.hpp"
#include "hkflow/solver/continuation.hpp"

int main(int argc, char** argv) {
  const int resolution = argc > 1 ? std::atoi(argv[1]) : 64;
  const auto disc =
      hkflow::build_grid(hkflow::DomainSpec::ellipsoid(2, {}, {1.0, 0.5}), resolution);
  const auto flow = hkflow::epsilon_sweep(disc, hkflow::EpsSchedule::for_grid(1.0 / resolution),
                                          hkflow::SolverParams{});
  const auto series = hkflow::iso_series(flow.u, 16, {});
  std::printf("%10s %10s %10s %12s\n", "t", "length", "area", "L^2-4piA");
  for (const auto& L : series.levels) {
    std::printf("%10.5f %10.5f %10.5f %12.5e\n", L.t, L.area, L.volume, L.iso_diff);
  }
  const auto report = hkflow::monotonicity_report(series);
  std::printf("monotone decrease: %s\n", hkflow::to_string(report.decreasing.verdict));
}
