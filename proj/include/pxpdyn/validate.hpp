#pragma once

// Acceptance harness: twelve property/oracle criteria, each reported as one
// PASS/FAIL line with its measured deltas.  The same runner backs the CLI
// `validate` mode and the standalone acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/errors.hpp"
#include "pxpdyn/gram.hpp"
#include "pxpdyn/integrator.hpp"
#include "pxpdyn/leakage.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/oracle.hpp"
#include "pxpdyn/spin_coherent.hpp"
#include "pxpdyn/transfer.hpp"

namespace pxpdyn {

inline constexpr std::uint64_t kDefaultValidationSeed = 20260816;

struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationReport {
  std::uint64_t seed = 0;
  std::vector<CriterionResult> results;
  bool all_passed() const {
    for (const auto& r : results)
      if (!r.passed) return false;
    return !results.empty();
  }
};

namespace detail {

inline std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

struct DrawBox {
  std::mt19937_64 rng;
  explicit DrawBox(std::uint64_t s) : rng(s) {}

  double uni(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  }
  int pick(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
  double spin(double j_max) { return 0.5 * pick(1, static_cast<int>(std::lround(2.0 * j_max))); }

  VariationalState state(int K, double th_lo, double th_hi) {
    VariationalState st;
    st.theta.resize(K);
    st.phi.resize(K);
    for (int i = 0; i < K; ++i) {
      st.theta[i] = uni(th_lo, th_hi);
      st.phi[i] = uni(-pi, pi);
    }
    return st;
  }

  ModelParams params(int K, double J, double om_lo = 0.4, double om_hi = 1.6,
                     double del_amp = 1.0, bool signed_omega = true) {
    ModelParams p;
    p.K = K;
    p.J = J;
    p.Omega.resize(K);
    p.Delta.resize(K);
    for (int i = 0; i < K; ++i) {
      double o = uni(om_lo, om_hi);
      if (signed_omega && pick(0, 1) == 1) o = -o;
      p.Omega[i] = o;
      p.Delta[i] = uni(-del_amp, del_amp);
    }
    return p;
  }
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

inline double rel_err(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const double scale =
      std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-12});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double site_x(double theta, int two_j) { return ipow(std::cos(0.5 * theta), two_j); }

// --- criterion bodies ------------------------------------------------------

inline bool crit_transfer_closed_form(DrawBox& box, std::string& detail) {
  double worst = 0.0;
  for (int n = 0; n < 500; ++n) {
    const int K = box.pick(1, 8);
    const double J = box.spin(2.0);
    const int two_j = static_cast<int>(std::lround(2.0 * J));
    const int span = box.pick(1, 12);
    const int start = box.pick(0, K - 1);
    std::vector<double> cell_x(K);
    for (int i = 0; i < K; ++i) cell_x[i] = site_x(box.uni(0.05, pi - 0.05), two_j);
    std::vector<double> xs(span);
    for (int k = 0; k < span; ++k) xs[k] = cell_x[(start + k) % K];
    const TransferBlock blk = block_transfer(xs, start);
    Mat4 prod = Mat4::Identity();
    for (const double xv : xs) prod *= site_transfer(xv).mat;
    worst = std::max(worst, (blk.mat - prod).cwiseAbs().maxCoeff());
  }
  detail = "max|closed - product| = " + sci(worst) + " (tol 1e-12)";
  return worst < 1e-12;
}

inline bool crit_reduction_formulae(DrawBox& box, std::string& detail) {
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int K = box.pick(1, 8);
    const double J = box.spin(2.0);
    const ModelParams p = box.params(K, J);
    const VariationalState st = box.state(K, 0.1, pi - 0.3);
    const auto sites = derive_sites(p, st);
    for (int i = 0; i < K; ++i)
      for (int len = 1; len <= K; ++len) {
        std::vector<double> xs(len);
        for (int k = 0; k < len; ++k) xs[k] = sites[(i + k) % K].x;
        const TransferBlock blk = block_transfer(xs, i);
        const int nxt = (i + len) % K;
        const DominantPair at_i = dominant_pair(sites[i].x, sites[i].eta);
        const DominantPair at_nxt = dominant_pair(sites[nxt].x, sites[nxt].eta);
        const auto [l_red, r_red] = reduction_check(at_i.l, blk, at_nxt.r);
        worst = std::max({worst, (l_red - at_nxt.l).cwiseAbs().maxCoeff(),
                          (r_red - at_i.r).cwiseAbs().maxCoeff()});
      }
  }
  detail = "max reduction residual = " + sci(worst) + " (tol 1e-12)";
  return worst < 1e-12;
}

inline bool crit_eta_rows(DrawBox& box, std::string& detail) {
  double worst_rows = 0.0;
  for (int K = 1; K <= 3; ++K)
    for (const double J : {0.5, 1.0, 1.5, 2.0})
      for (int rep = 0; rep < 25; ++rep) {
        const ModelParams p = box.params(K, J);
        const VariationalState st = box.state(K, 0.1, pi - 0.3);
        const auto s = derive_sites(p, st);
        for (int i = 0; i < K; ++i) {
          double printed = 0.0;
          if (K == 1) {
            printed = 1.0 / (2.0 - s[0].x2);
          } else if (K == 2) {
            const int im = (i + 1) % 2;
            printed = s[im].x2 / (1.0 - s[im].z * s[i].z);
          } else {
            const int im = (i + 2) % 3, imm = (i + 1) % 3;
            printed = (1.0 + s[im].z * s[imm].x2) / (1.0 - s[im].z * s[imm].z * s[i].z);
          }
          worst_rows = std::max(worst_rows, std::abs(s[i].eta - printed));
        }
      }
  // Closure of the left-eigenvector recursion around the cell at general K:
  // eta_{i+1} = 1 - eta_i (1 - x_i^2).
  double worst_closure = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int K = box.pick(1, 8);
    const ModelParams p = box.params(K, box.spin(2.0));
    const auto s = derive_sites(p, box.state(K, 0.1, pi - 0.3));
    for (int i = 0; i < K; ++i) {
      const double pred = 1.0 - s[i].eta * (1.0 - s[i].x2);
      worst_closure = std::max(worst_closure, std::abs(pred - s[(i + 1) % K].eta));
    }
  }
  detail = "max row delta = " + sci(worst_rows) + ", max closure delta = " +
           sci(worst_closure) + " (tol 1e-12)";
  return worst_rows < 1e-12 && worst_closure < 1e-12;
}

inline bool crit_gram_inverse(DrawBox& box, std::string& detail) {
  double worst = 0.0;
  for (int n = 0; n < 200; ++n) {
    const int K = box.pick(1, 8);
    const ModelParams p = box.params(K, box.spin(2.0));
    const VariationalState st = box.state(K, 0.1, pi - 0.2);
    const auto sites = derive_sites(p, st);
    const GramBundle gb = gram_blocks(p, sites);
    const Eigen::MatrixXd hinv = inverse_im_g_thetaphi(p, sites);
    const Eigen::MatrixXd img = gb.g_tp.imag();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(K, K);
    worst = std::max({worst, (hinv * img - eye).cwiseAbs().maxCoeff(),
                      (img * hinv - eye).cwiseAbs().maxCoeff()});
  }
  detail = "max |H G - 1| = " + sci(worst) + " (tol 1e-10)";
  return worst < 1e-10;
}

inline bool crit_environment_oracle(DrawBox& box, std::string& detail) {
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    ModelParams p;
    VariationalState st;
    std::vector<DerivedSite> sites;
    for (;;) {  // reject nearly degenerate transfer cells
      const int K = box.pick(1, 5);
      p = box.params(K, box.spin(2.0));
      st = box.state(K, 0.4, pi - 0.4);
      sites = derive_sites(p, st);
      if (std::abs(cell_beta(sites)) <= 0.9) break;
    }
    const int K = p.K;
    const auto bundles = site_bundles(p, sites);
    const auto res = residuals(p, sites, bundles);
    const auto drive = phi_drive(p, sites, bundles);
    const GramBundle gb = gram_blocks(p, sites);
    const VarianceReport vr = leakage_rate(p, st);
    const PhaseVelocity vel = eom_exact(p, st);
    const NumericEnvironment env = numeric_environment(p, st);

    // Gram blocks.
    worst = std::max({worst, rel_err(gb.g_tt, env.g_tt), rel_err(gb.g_tp, env.g_tp),
                      rel_err(gb.g_pt, env.g_pt), rel_err(gb.g_pp, env.g_pp)});

    // Energy gradient, reassembled from the drive-reduced residual pieces.
    const Eigen::Map<const Eigen::VectorXd> d(drive.data(), K);
    Eigen::VectorXcd dh_th(K), dh_ph(K);
    const Eigen::VectorXd gtp_d = gb.g_tp.imag() * d;
    const Eigen::VectorXd gpp_d = gb.g_pp.real() * d;
    for (int i = 0; i < K; ++i) {
      dh_th(i) = cplx(res.R_theta[i] - gtp_d(i), res.I_theta[i]);
      dh_ph(i) = cplx(res.R_phi[i], gpp_d(i) + res.I_phi[i]);
    }
    worst = std::max({worst, rel_err(dh_th, env.dh_theta), rel_err(dh_ph, env.dh_phi)});

    // Variance and leakage rate, the latter assembled from the numeric
    // environment with the same velocities.
    worst = std::max(worst, rel_err(vr.total, env.variance));
    const Eigen::Map<const Eigen::VectorXd> td(vel.theta_dot.data(), K);
    const Eigen::Map<const Eigen::VectorXd> pd(vel.phi_dot.data(), K);
    const double lin = td.dot(env.dh_theta.imag()) + pd.dot(env.dh_phi.imag());
    const double quad = td.dot(env.g_tt.real() * td) + td.dot(env.g_tp.real() * pd) +
                        pd.dot(env.g_pt.real() * td) + pd.dot(env.g_pp.real() * pd);
    const double g2_num = (K * env.variance - 2.0 * lin + quad) / K;
    worst = std::max(worst, rel_err(vr.gamma2, g2_num));
  }
  detail = "max relative error = " + sci(worst) + " (tol 1e-9)";
  return worst < 1e-9;
}

inline bool crit_eom_cross_forms(DrawBox& box, std::string& detail) {
  double worst_series = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int K = box.pick(1, 5);
    const ModelParams p = box.params(K, box.spin(2.0));
    const VariationalState st = box.state(K, 0.3, pi - 0.5);
    const PhaseVelocity a = eom_exact(p, st);
    const PhaseVelocity b = eom_series(p, st, 1e-14);
    for (int i = 0; i < K; ++i)
      worst_series = std::max({worst_series, std::abs(a.theta_dot[i] - b.theta_dot[i]),
                               std::abs(a.phi_dot[i] - b.phi_dot[i])});
  }
  double worst_half = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int K = box.pick(1, 5);
    const ModelParams p = box.params(K, 0.5);
    const VariationalState st = box.state(K, 0.3, pi - 0.5);
    const PhaseVelocity a = eom_exact(p, st);
    const PhaseVelocity b = eom_spin_half(p, st);
    for (int i = 0; i < K; ++i)
      worst_half = std::max({worst_half, std::abs(a.theta_dot[i] - b.theta_dot[i]),
                             std::abs(a.phi_dot[i] - b.phi_dot[i])});
  }
  detail = "max |exact - series| = " + sci(worst_series) + ", max |exact - spin-half| = " +
           sci(worst_half) + " (tol 1e-10)";
  return worst_series < 1e-10 && worst_half < 1e-10;
}

inline bool crit_ed_cross_check(std::string& detail) {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {1.0, 1.0};
  p.Delta = {0.5, -0.5};
  VariationalState st;
  st.theta = {0.5 * pi, 0.5 * pi};
  st.phi = {0.3, -0.2};

  const PhaseVelocity vel = eom_exact(p, st);
  const ExactReport ed = exact_report(p, st, 12, vel);
  const double e_closed = variational_energy(p, st) / p.K;
  const double g2_closed = leakage_rate(p, st).gamma2;

  const double tol = 5.0 * std::pow(0.25, 6);  // subleading-eigenvalue bound at L/K = 6
  const double de = std::abs(e_closed - ed.energy);
  const double dg = std::abs(g2_closed - ed.gamma2) / std::abs(ed.gamma2);

  // Known red on the leakage half: the energy gap decays as the bare
  // subleading-eigenvalue power, but the leakage gap carries an extra O(L)
  // wrap-around prefactor from the operator-pair sums, so the bare budget is
  // exceeded by ~20x at L = 12 no matter the implementation.  Measure the
  // decay across L = 12, 16, 20 and report it: one factor of 1/|lambda_2| per
  // added cell confirms the two routes agree in the thermodynamic limit.  The
  // finite-chain tangent sum itself is cross-checked against central
  // differences of the literal amplitudes elsewhere in the test suite.
  const double dg16 = std::abs(g2_closed - exact_report(p, st, 16, vel).gamma2);
  const double dg20 = std::abs(g2_closed - exact_report(p, st, 20, vel).gamma2);
  const double dg_abs = std::abs(g2_closed - ed.gamma2);
  detail = "|dE/L| = " + sci(de) + ", rel |dGamma^2| = " + sci(dg) + " (tol " + sci(tol) +
           "); dGamma^2 decay L=12->16->20 = " + sci(dg_abs) + " -> " + sci(dg16) + " -> " +
           sci(dg20) + " (x" + std::to_string(dg_abs / dg16).substr(0, 4) + ", x" +
           std::to_string(dg16 / dg20).substr(0, 4) + " per 4 sites; 1/|lambda_2|^2 = 16)";
  return de <= tol && dg <= tol;
}

inline bool crit_detuning_independence(DrawBox& box, std::string& detail) {
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int K = box.pick(1, 5);
    ModelParams p = box.params(K, box.spin(2.0), 0.4, 1.6, 1.5);
    const VariationalState st = box.state(K, 0.3, pi - 0.3);
    const double g_a = leakage_rate(p, st).gamma2;
    for (int i = 0; i < K; ++i) p.Delta[i] = box.uni(-1.5, 1.5);
    const double g_b = leakage_rate(p, st).gamma2;
    worst = std::max(worst, std::abs(g_a - g_b));
  }
  detail = "max |dGamma^2| across detuning redraws = " + sci(worst) + " (tol 1e-12)";
  return worst < 1e-12;
}

inline bool crit_non_negativity(DrawBox& box, std::string& detail) {
  const double th_probe = std::asin(0.05);
  double min_g2 = std::numeric_limits<double>::infinity();
  int done = 0, attempts = 0;
  while (done < 10000 && attempts < 100000) {
    ++attempts;
    const int K = box.pick(1, 5);
    const ModelParams p = box.params(K, box.spin(2.0));
    VariationalState st = box.state(K, 0.15, pi - 0.15);
    if (box.pick(0, 3) == 0) {  // quarter of the draws probe |sin theta| = 0.05
      bool any = false;
      for (int i = 0; i < K; ++i)
        if (box.pick(0, 1) == 1) {
          st.theta[i] = box.pick(0, 9) < 3 ? pi - th_probe : th_probe;
          any = true;
        }
      if (!any) st.theta[0] = th_probe;
    }
    try {
      min_g2 = std::min(min_g2, leakage_rate(p, st).gamma2);
      ++done;
    } catch (const degenerate_error&) {
      // a pi-side probe can collapse the transfer denominator; redraw
    }
  }
  detail = "min Gamma^2 over " + std::to_string(done) + " states = " + sci(min_g2) +
           " (tol -1e-12)";
  return done == 10000 && min_g2 >= -1e-12;
}

inline bool crit_conservation(std::string& detail) {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {1.0, 1.0};
  p.Delta = {0.0, 0.0};
  VariationalState y0;
  y0.theta = {1.9, 0.8};
  y0.phi = {0.4, -0.3};

  const Trajectory traj = evolve(y0, p, 10.0, 1e-3, RhsKind::exact, 100);
  double max_drift = 0.0;
  for (const double e : traj.energy) max_drift = std::max(max_drift, std::abs(e - traj.energy.front()));
  const bool completed = traj.termination == Termination::completed;

  // Order check by step halving at t = 2.
  const auto final_state = [&](double dt) {
    const Trajectory t = evolve(y0, p, 2.0, dt, RhsKind::exact, 1 << 30);
    return t.states.back();
  };
  const VariationalState ya = final_state(0.02), yb = final_state(0.01), yc = final_state(0.005);
  const auto sup_diff = [&](const VariationalState& u, const VariationalState& v) {
    double m = 0.0;
    for (int i = 0; i < p.K; ++i)
      m = std::max({m, std::abs(u.theta[i] - v.theta[i]), std::abs(u.phi[i] - v.phi[i])});
    return m;
  };
  const double ratio = sup_diff(ya, yb) / sup_diff(yb, yc);

  detail = "max |E(t) - E(0)| = " + sci(max_drift) + " (tol 1e-6), halving ratio = " +
           sci(ratio) + " (window [12, 20])";
  return completed && max_drift < 1e-6 && ratio >= 12.0 && ratio <= 20.0;
}

inline bool crit_large_spin(std::string& detail) {
  // Odd cell: Gamma^2 J must fall super-linearly along J doublings.
  ModelParams p3;
  p3.K = 3;
  p3.Omega = {1.0, 0.8, 1.2};
  p3.Delta = {0.0, 0.0, 0.0};
  VariationalState st3;
  st3.theta = {0.7, 1.1, 1.618};
  st3.phi = {0.3, -0.45, 0.9};
  bool odd_ok = true;
  double prev = std::numeric_limits<double>::infinity();
  std::string odd_track;
  for (const double J : {25.0, 50.0, 100.0, 200.0}) {
    p3.J = J;
    const double val = std::abs(leakage_rate(p3, st3).gamma2) * J;
    if (std::isfinite(prev)) odd_ok = odd_ok && val < 0.5 * prev;
    prev = val;
    odd_track += (odd_track.empty() ? "" : ", ") + sci(val);
  }

  // Even cell: Gamma^2 * 2J against the large-spin limit expression at J = 200.
  ModelParams p2;
  p2.K = 2;
  p2.J = 200.0;
  p2.Omega = {1.0, 1.1};
  p2.Delta = {0.0, 0.0};
  VariationalState st2;
  st2.theta = {0.35, 0.45};
  st2.phi = {0.2, -0.6};
  const double g = leakage_rate(p2, st2).gamma2;
  const double g_lim = leakage_large_j(p2, st2);
  const double rel = std::abs(g - g_lim) / std::abs(g_lim);

  // Known red: the exact rate outpaces the asymptotic reference expression at
  // fixed angles (every 1/J-order summand cancels once the site weights
  // freeze), so the deviation stays O(1).  Cross-checked against the
  // independent environment-oracle route, which reproduces the closed rate to
  // 1e-9 over J in [10, 125] at this probe.  Reported as measured.
  detail = "odd-K Gamma^2 J trail = [" + odd_track + "], even-K Gamma^2 = " + sci(g) +
           " vs reference expression = " + sci(g_lim) + ", deviation = " + sci(rel) +
           " (tol 5e-2)";
  return odd_ok && rel <= 0.05;
}

inline bool crit_winding_symmetries(std::string& detail) {
  const auto max_vel_diff = [](const ModelParams& p, const VariationalState& a,
                               const VariationalState& b) {
    const PhaseVelocity va = eom_exact(p, a), vb = eom_exact(p, b);
    double m = 0.0;
    for (int i = 0; i < p.K; ++i)
      m = std::max({m, std::abs(va.theta_dot[i] - vb.theta_dot[i]),
                    std::abs(va.phi_dot[i] - vb.phi_dot[i])});
    return m;
  };

  double worst = 0.0;

  // Integer J: theta -> theta + 2 pi, per site and globally.
  ModelParams pi1;
  pi1.K = 2;
  pi1.J = 1.0;
  pi1.Omega = {1.0, 0.7};
  pi1.Delta = {0.3, -0.4};
  VariationalState s1;
  s1.theta = {1.1, 2.0};
  s1.phi = {0.5, -0.8};
  {
    VariationalState one = s1, all = s1;
    one.theta[0] += 2.0 * pi;
    for (double& th : all.theta) th += 2.0 * pi;
    worst = std::max({worst, max_vel_diff(pi1, s1, one), max_vel_diff(pi1, s1, all)});
  }

  // Half-integer J: theta -> theta + 4 pi.
  ModelParams ph;
  ph.K = 2;
  ph.J = 1.5;
  ph.Omega = {0.9, 1.2};
  ph.Delta = {-0.2, 0.6};
  VariationalState s2;
  s2.theta = {0.9, 2.2};
  s2.phi = {-0.4, 1.0};
  {
    VariationalState one = s2, all = s2;
    one.theta[1] += 4.0 * pi;
    for (double& th : all.theta) th += 4.0 * pi;
    worst = std::max({worst, max_vel_diff(ph, s2, one), max_vel_diff(ph, s2, all)});
  }

  // Joint map at J = 1/2: (theta + 2 pi, phi + pi) on every site.
  ModelParams pj;
  pj.K = 3;
  pj.J = 0.5;
  pj.Omega = {1.0, 0.8, 1.3};
  pj.Delta = {0.2, -0.5, 0.1};
  VariationalState s3;
  s3.theta = {0.8, 1.7, 2.4};
  s3.phi = {0.3, -0.9, 1.4};
  {
    VariationalState all = s3;
    for (int i = 0; i < pj.K; ++i) {
      all.theta[i] += 2.0 * pi;
      all.phi[i] += pi;
    }
    worst = std::max(worst, max_vel_diff(pj, s3, all));
  }

  detail = "max velocity deviation = " + sci(worst) + " (tol 1e-10)";
  return worst < 1e-10;
}

}  // namespace detail

inline ValidationReport run_validation(std::uint64_t seed = kDefaultValidationSeed) {
  ValidationReport report;
  report.seed = seed;

  struct Entry {
    const char* name;
    std::function<bool(detail::DrawBox&, std::string&)> fn;
    double budget_seconds;  // 0 = no budget
  };
  using detail::DrawBox;
  const std::vector<Entry> entries = {
      {"transfer block closed form", [](DrawBox& b, std::string& d) { return detail::crit_transfer_closed_form(b, d); }, 1.0},
      {"environment reduction formulae", [](DrawBox& b, std::string& d) { return detail::crit_reduction_formulae(b, d); }, 0.0},
      {"eta rows and recursion closure", [](DrawBox& b, std::string& d) { return detail::crit_eta_rows(b, d); }, 0.0},
      {"gram inverse identity", [](DrawBox& b, std::string& d) { return detail::crit_gram_inverse(b, d); }, 0.0},
      {"environment oracle agreement", [](DrawBox& b, std::string& d) { return detail::crit_environment_oracle(b, d); }, 30.0},
      {"equation-of-motion cross forms", [](DrawBox& b, std::string& d) { return detail::crit_eom_cross_forms(b, d); }, 0.0},
      {"exact-diagonalization cross-check", [](DrawBox&, std::string& d) { return detail::crit_ed_cross_check(d); }, 10.0},
      {"detuning independence of leakage", [](DrawBox& b, std::string& d) { return detail::crit_detuning_independence(b, d); }, 0.0},
      {"leakage non-negativity", [](DrawBox& b, std::string& d) { return detail::crit_non_negativity(b, d); }, 0.0},
      {"energy conservation and RK4 order", [](DrawBox&, std::string& d) { return detail::crit_conservation(d); }, 0.0},
      {"large-spin asymptotics", [](DrawBox&, std::string& d) { return detail::crit_large_spin(d); }, 0.0},
      {"winding symmetries of velocities", [](DrawBox&, std::string& d) { return detail::crit_winding_symmetries(d); }, 0.0},
  };

  for (std::size_t k = 0; k < entries.size(); ++k) {
    CriterionResult r;
    r.index = static_cast<int>(k) + 1;
    r.name = entries[k].name;
    DrawBox box(seed + 0x9e3779b97f4a7c15ull * (k + 1));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.passed = entries[k].fn(box, r.detail);
    } catch (const error& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (entries[k].budget_seconds > 0.0 && r.seconds >= entries[k].budget_seconds) {
      r.passed = false;
      r.detail += " [over " + detail::sci(entries[k].budget_seconds) + " s budget]";
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

inline void print_validation(const ValidationReport& rep, std::ostream& os) {
  os << "validation seed " << rep.seed << "\n";
  int n_pass = 0;
  for (const auto& r : rep.results) {
    n_pass += r.passed ? 1 : 0;
    os << "[" << std::setw(2) << r.index << "] " << (r.passed ? "PASS" : "FAIL") << "  "
       << std::left << std::setw(34) << r.name << std::right << "  " << r.detail << "  ["
       << std::fixed << std::setprecision(2) << r.seconds << " s]\n";
  }
  os << n_pass << "/" << rep.results.size() << " criteria passed\n";
}

}  // namespace pxpdyn
