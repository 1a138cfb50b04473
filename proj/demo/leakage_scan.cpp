// Scans the instantaneous leakage rate over spin magnitude at a fixed
// two-site-cell configuration.  Even cells approach the analytic large-J
// limit like 1/J (so gamma2 * 2J tends to a constant), which is the quantum
// correction picture: the variational manifold captures the classical limit
// exactly and leaks at order 1/J.

#include <cstdio>

#include "pxpdyn/leakage.hpp"

int main() {
  pxpdyn::ModelParams p;
  p.K = 2;
  p.Omega = {1.0, 1.1};
  p.Delta = {0.4, -0.3};

  pxpdyn::VariationalState st;
  st.theta = {0.35, 0.45};
  st.phi = {0.2, -0.6};

  std::printf("%8s %14s %14s %14s\n", "J", "gamma2", "gamma2*2J", "large_J_limit");
  for (const double J : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0}) {
    p.J = J;
    const double g2 = pxpdyn::leakage_rate(p, st).gamma2;
    const double lim = pxpdyn::leakage_large_j(p, st) * 2.0 * J;
    std::printf("%8.1f %14.6e %14.8f %14.8f\n", J, g2, g2 * 2.0 * J, lim);
  }
  return 0;
}
