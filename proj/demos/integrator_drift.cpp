// Energy error of several one-step methods on the double well over a long run.
// Symplectic schemes keep it bounded; rk2 drifts.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ihnn/integrators/integrate.hpp"
#include "ihnn/systems/benchmarks.hpp"

int main() {
  using namespace ihnn;
  const auto sys = double_well();
  auto field = [&](const PhasePoint& y) { return sys.dynamics(y); };
  const PhasePoint y0({0.3}, {0.5});
  const double e0 = sys.value(y0);
  std::printf("%-20s %8s %14s %14s\n", "method", "h", "max |dH|", "final |dH|");
  for (const char* name : {"implicit_midpoint", "semi_implicit_euler", "gauss2", "rk2"}) {
    for (double h : {0.1, 0.05}) {
      const auto n = static_cast<std::size_t>(std::llround(200.0 / h));
      const auto pts = integrate(field, y0, h, n, StepMethod::by_name(name)).trajectory.points;
      double worst = 0.0;
      for (const auto& y : pts) worst = std::max(worst, std::abs(sys.value(y) - e0));
      std::printf("%-20s %8.3f %14.3e %14.3e\n", name, h, worst, std::abs(sys.value(pts.back()) - e0));
    }
  }
}
