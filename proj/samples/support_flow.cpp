// Support-function flow of an ellipse until it shrinks to a point.
#include <cstdio>

#include "hkflow/oracle/support.hpp"

int main() {
  const double k = 1.0;
  const auto run = hkflow::evolve_support(hkflow::ellipse_support(1.0, 0.5, 256), k, 1.0, 0.02);
  for (const auto& state : run.states) {
    const auto g = hkflow::support_geometry(state);
    std::printf("t %.4f  L %.6f  A %.6f  L^2-4piA %.3e  min rho %.3e\n", state.t, g.length,
                g.area, g.iso_diff(), g.min_rho());
  }
  std::printf("%s after %lld substeps\n", run.halted ? run.halt_reason.c_str() : "reached t_end",
              static_cast<long long>(run.substeps));
}
