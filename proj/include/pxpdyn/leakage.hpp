#pragma once

// Connected energy variance and the quantum-leakage rate Gamma^2, all as
// per-site densities.  Three routes to Gamma^2 are kept side by side:
//
//   * gamma2_breakdown: the seven printed summands, reported exactly as
//     printed (the last two carry 1/x^2 factors that cancel only in the sum,
//     so individual entries can blow up near theta = pi at large J);
//   * gamma2: the same total regrouped so the 1/x^2 cancellation is done
//     algebraically before evaluation -- safe down to |sin theta| ~ 1e-9;
//   * gamma2_definition: variance - 2 mu_dot Im<dH> + mu_dot G mu_dot,
//     assembled from the Gram blocks and the equations of motion, as an
//     independent numerical cross-check of the closed form.
//
// The variance alone (energy_variance) is pole-free and works at theta = 0;
// the leakage routes need velocities and refuse coordinate poles.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/errors.hpp"
#include "pxpdyn/gram.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/spin_coherent.hpp"

namespace pxpdyn {

struct VarianceReport {
  double var_zz = 0.0;    // <(sum Delta s^z)^2>_c density
  double var_zxxz = 0.0;  // z-x cross terms
  double var_xx = 0.0;    // <(sum Omega P s^x P)^2>_c density
  double total = 0.0;     // connected <H^2> density
  double gamma2 = std::numeric_limits<double>::quiet_NaN();
  double gamma2_definition = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 7> gamma2_breakdown{};
};

namespace detail {

// Per-site ingredients shared by the variance and leakage assemblies.
struct LeakageScratch {
  std::vector<double> hsx;   // Re h~_{s^x_i} = cos(phi) sin(theta) w
  std::vector<double> ssw;   // Im h~_{s^+_i} = sin(phi) sin(theta) w
  std::vector<double> w;     // 1 + x2_c2_i (-1 + x_{i+1})
  std::vector<double> omh;   // Omega_i h~_i
  std::vector<double> wrap;  // z-arc over the other K-1 sites (whole winding)
  double gf = 1.0;           // 1/(1 - beta_cell) or 1
};

inline LeakageScratch leakage_scratch(const ModelParams& p, const std::vector<DerivedSite>& sites,
                                      const std::vector<ExpectationBundle>& bundles) {
  const int K = p.K;
  LeakageScratch sc;
  sc.hsx.resize(K);
  sc.ssw.resize(K);
  sc.w.resize(K);
  sc.omh.resize(K);
  sc.wrap.resize(K);
  sc.gf = geometric_factor(p, sites);
  for (int i = 0; i < K; ++i) {
    const cplx hp = h_tilde(SiteOp::sp, bundles[i], sites[i].x, sites[(i + 1) % K].x);
    sc.hsx[i] = hp.real();
    sc.ssw[i] = hp.imag();
    sc.w[i] = 1.0 + sites[i].x2_c2 * (-1.0 + sites[(i + 1) % K].x);
    sc.omh[i] = p.Omega[i] * sc.hsx[i];
    sc.wrap[i] = arc_z(sites, i + 1, K - 1);
  }
  return sc;
}

// (G_pp . dOmega)_i with dOmega_j = Omega_j h~_j / (J(1-cos th_j)) folded into
// the matrix entries before evaluation, so theta -> 0 is regular.
inline std::vector<double> g_pp_dot_domega(const ModelParams& p,
                                           const std::vector<DerivedSite>& sites,
                                           const LeakageScratch& sc) {
  const int K = p.K;
  const double J = p.J;
  std::vector<double> v(K, 0.0);
  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];
    const DerivedSite& sn = sites[(i + 1) % K];
    const double omc_i = 2.0 * si.sh2;
    v[i] += si.eta * (1.0 - si.eta) * J * omc_i * sc.omh[i] +
            0.5 * si.eta * (1.0 + si.cos_t) * sc.omh[i] -
            2.0 * J * si.eta * sn.eta * omc_i * sc.wrap[i] * sc.gf * sc.omh[i];
    for (int k = 1; k < K; ++k) {
      const int j = (i + k) % K;
      const DerivedSite& sj = sites[j];
      const DerivedSite& sjn = sites[(j + 1) % K];
      const double arc_fwd = arc_z(sites, i + 1, k - 1);
      const double arc_bwd = arc_z(sites, j + 1, K - k - 1);
      v[i] += -J * sc.gf * omc_i *
              (si.eta * sn.eta * arc_fwd + sj.eta * sjn.eta * arc_bwd) * sc.omh[j];
    }
  }
  return v;
}

// dOmega^T G_pp dOmega with both drive factors folded in (theta -> 0 regular).
inline double domega_g_pp_domega(const ModelParams& p, const std::vector<DerivedSite>& sites,
                                 const LeakageScratch& sc) {
  const int K = p.K;
  const double J = p.J;
  double q = 0.0;
  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];
    const DerivedSite& sn = sites[(i + 1) % K];
    const double cphi = std::cos(si.phi);
    q += si.eta * (1.0 - si.eta) * sc.omh[i] * sc.omh[i] +
         2.0 * si.eta * si.ch2 * si.ch2 * cphi * cphi * sc.w[i] * sc.w[i] * p.Omega[i] *
             p.Omega[i] / J -
         2.0 * si.eta * sn.eta * sc.wrap[i] * sc.gf * sc.omh[i] * sc.omh[i];
    for (int k = 1; k < K; ++k) {
      const int j = (i + k) % K;
      const DerivedSite& sj = sites[j];
      const DerivedSite& sjn = sites[(j + 1) % K];
      const double arc_fwd = arc_z(sites, i + 1, k - 1);
      const double arc_bwd = arc_z(sites, j + 1, K - k - 1);
      // One term per ordered pair (i, j): both orders are visited by the
      // surrounding loops, so no pair factor of two here.
      q += -sc.gf * (si.eta * sn.eta * arc_fwd + sj.eta * sjn.eta * arc_bwd) *
           sc.omh[i] * sc.omh[j];
    }
  }
  return q;
}

// Self + nearest-neighbour XX pieces that sit outside the Gram quadratic form.
inline double xx_local(const ModelParams& p, const std::vector<DerivedSite>& sites,
                       const LeakageScratch& sc) {
  const int K = p.K;
  const double J = p.J;
  double q = 0.0;
  for (int i = 0; i < K; ++i) {
    const int ip = (i + 1) % K, ipp = (i + 2) % K;
    const DerivedSite& si = sites[i];
    const DerivedSite& sp = sites[ip];
    const double cphi = std::cos(si.phi);
    q += 2.0 * p.Omega[i] * p.Omega[ip] * si.eta * si.x2t * sp.xt * sites[ipp].x *
         std::cos(sp.phi - si.phi);
    const double bracket =
        1.0 + (2.0 * J - 1.0) * cphi * cphi * si.sin_t * si.sin_t +
        (-1.0 - 2.0 * J + (2.0 * J - 1.0) * si.cos_t) * 2.0 * si.ch2 * cphi * cphi * sc.w[i] *
            sc.w[i] +
        si.x2 * sp.z + 2.0 * (2.0 * J - 1.0) * std::cos(2.0 * si.phi) * si.x2t2 *
                           (-1.0 + sp.x);
    q += si.eta * p.Omega[i] * p.Omega[i] / (2.0 * J) * bracket;
  }
  return q;
}

// Variance components as cell sums (caller divides by K).
struct VarianceCells {
  double zz = 0.0, zxxz = 0.0, xx = 0.0;
};

inline VarianceCells variance_cells(const ModelParams& p, const std::vector<DerivedSite>& sites,
                                    const std::vector<ExpectationBundle>& bundles,
                                    const LeakageScratch& sc, const GramBundle& g,
                                    const std::vector<double>& vg) {
  const int K = p.K;
  const double J = p.J;
  VarianceCells out;

  // zz: plain quadratic form with the finite vector Delta/J.
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      out.zz += (p.Delta[i] / J) * g.g_pp(i, j).real() * (p.Delta[j] / J);

  // z-x cross terms through Im<d_phi H> = G_pp dOmega + I_phi.
  const Residuals res = residuals(p, sites, bundles);
  for (int i = 0; i < K; ++i) out.zxxz += 2.0 * (p.Delta[i] / J) * (vg[i] + res.I_phi[i]);

  out.xx = domega_g_pp_domega(p, sites, sc) + xx_local(p, sites, sc);
  return out;
}

}  // namespace detail

// Connected variance of H per site.  Pole-free: valid at theta = 0 and pi.
inline VarianceReport energy_variance(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  const auto bundles = site_bundles(p, sites);
  const auto sc = detail::leakage_scratch(p, sites, bundles);
  const auto g = gram_blocks(p, sites);
  const auto vg = detail::g_pp_dot_domega(p, sites, sc);
  const auto cells = detail::variance_cells(p, sites, bundles, sc, g, vg);
  VarianceReport rep;
  rep.var_zz = cells.zz / p.K;
  rep.var_zxxz = cells.zxxz / p.K;
  rep.var_xx = cells.xx / p.K;
  rep.total = rep.var_zz + rep.var_zxxz + rep.var_xx;
  return rep;
}

// Full leakage report: variance, Gamma^2 (printed breakdown, stabilized
// total, and the definition-route cross-check).
inline VarianceReport leakage_rate(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  detail::require_away_from_poles(sites);
  const auto bundles = site_bundles(p, sites);
  const auto sc = detail::leakage_scratch(p, sites, bundles);
  const auto g = gram_blocks(p, sites);
  const auto vg = detail::g_pp_dot_domega(p, sites, sc);
  const auto cells = detail::variance_cells(p, sites, bundles, sc, g, vg);
  const auto res = residuals(p, sites, bundles);
  const int K = p.K;
  const double J = p.J;

  double cell = 1.0;
  for (const auto& s : sites) cell *= s.ctilde;
  if (std::abs(1.0 - cell) < 1e-12)
    throw resonance_error("ctilde cell product resonates: |1 - prod ctilde| = " +
                          std::to_string(std::abs(1.0 - cell)));
  const double resum = 1.0 / (1.0 - cell);

  // Band walks.  S: forward sources of the theta-residual band (the Gram
  // inverse contraction); Q-like backward walk: theta_dot band sources.
  std::vector<double> S(K, 0.0), theta_dot(K, 0.0), u(K, 0.0), v(K, 0.0);
  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];
    double fsum = 0.0, prod = 1.0;
    for (int s = 1; s <= K; ++s) {
      const int j = (i + s) % K;
      fsum += sites[j].t / sites[j].eta * res.R_theta[j] * prod;
      prod *= sites[j].ctilde;
    }
    S[i] = resum * fsum;

    double bsum = 0.0;
    prod = 1.0;
    for (int s = 1; s <= K; ++s) {
      const int j = ((i - s) % K + K) % K;
      bsum += sites[j].eta * p.Omega[j] * sites[j].x2_c2 * sc.ssw[j] * prod;
      prod *= sites[j].ctilde;
    }
    theta_dot[i] = p.Omega[i] * std::sin(si.phi) * sc.w[i] / J + si.t * resum * bsum / si.eta;

    v[i] = res.R_theta[i] + 2.0 * J * si.eta * si.x2t * S[i];
    u[i] = -2.0 * v[i] / (J * si.eta * si.sin_t);
  }

  VarianceReport rep;
  rep.var_zz = cells.zz / K;
  rep.var_zxxz = cells.zxxz / K;
  rep.var_xx = cells.xx / K;
  rep.total = rep.var_zz + rep.var_zxxz + rep.var_xx;

  // Printed seven-summand breakdown, reported exactly as printed.
  std::array<double, 7> b{};
  double s4_domega = 0.0;  // -2 sum dOmega_i I_phi_i, folded (theta -> 0 regular)
  double s467 = 0.0;       // stabilized regrouping of the 1/x^2 summands
  for (int i = 0; i < K; ++i) {
    const int ip = (i + 1) % K, ipp = (i + 2) % K;
    const DerivedSite& si = sites[i];
    const DerivedSite& sp = sites[ip];
    const double cphi = std::cos(si.phi);
    const double a = 1.0 + 2.0 * (2.0 * J - 1.0) * si.sh2;
    const double bigw = 1.0 + a * si.x2_c2 * (-1.0 + sp.x);

    b[0] += 2.0 / K * p.Omega[i] * p.Omega[ip] * si.eta * si.x2t * sp.xt * sites[ipp].x *
            std::cos(sp.phi - si.phi);
    const double bracket =
        1.0 + (2.0 * J - 1.0) * cphi * cphi * si.sin_t * si.sin_t +
        (-1.0 - 2.0 * J + (2.0 * J - 1.0) * si.cos_t) * 2.0 * si.ch2 * cphi * cphi * sc.w[i] *
            sc.w[i] +
        si.x2 * sp.z +
        2.0 * (2.0 * J - 1.0) * std::cos(2.0 * si.phi) * si.x2t2 * (-1.0 + sp.x);
    b[1] += si.eta * p.Omega[i] * p.Omega[i] / (2.0 * J * K) * bracket;
    b[2] += -2.0 / K * theta_dot[i] * res.I_theta[i];

    // dOmega_i I_phi_i folded: -(eta Omega^2 cos^2 phi w / 2J) [(1 + cos th)
    // + 2 a x^2 (-1 + x_next)].
    const double dom_iphi = -(si.eta * p.Omega[i] * p.Omega[i] * cphi * cphi * sc.w[i] /
                              (2.0 * J)) *
                            ((1.0 + si.cos_t) + 2.0 * a * si.x2 * (-1.0 + sp.x));
    s4_domega += -2.0 / K * dom_iphi;
    b[3] += -2.0 / K * dom_iphi + 2.0 / K * u[i] * res.I_phi[i];
    b[4] += si.eta * J / (2.0 * K) * theta_dot[i] * theta_dot[i];
    b[5] += 2.0 / K * u[i] * (-sp.eta * si.sin_t / si.x2) * res.R_theta[i];
    b[6] += si.eta * J * si.sin_t * si.sin_t / (2.0 * K * si.x2) *
            ((1.0 - si.eta) * si.ctilde - sp.eta) * u[i] * u[i];

    // Same three summands with the 1/x^2 cancellation done in closed form.
    s467 += (-8.0 * sp.eta * si.t * S[i] * v[i] +
             2.0 / (J * si.eta) * (1.0 + 2.0 * J * (1.0 - si.eta) * si.t * si.t) * v[i] * v[i] +
             2.0 / J * p.Omega[i] * cphi * bigw * v[i]) /
            K;
  }
  rep.gamma2_breakdown = b;
  rep.gamma2 = b[0] + b[1] + b[2] + s4_domega + b[4] + s467;

  // Definition route: variance - 2 mu_dot Im<dH> + mu_dot Re G mu_dot, with
  // the velocities from the exact EOM and Im<d_phi H> = G_pp d + I_phi.
  const PhaseVelocity vel = eom_exact(p, st);
  std::vector<double> gz(K, 0.0);  // G_pp . (Delta/J)
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) gz[i] += g.g_pp(i, j).real() * (p.Delta[j] / J);
  double def = rep.total * K;
  for (int i = 0; i < K; ++i) {
    def += -2.0 * vel.theta_dot[i] * res.I_theta[i];
    def += -2.0 * vel.phi_dot[i] * (vg[i] + gz[i] + res.I_phi[i]);
    def += 0.5 * sites[i].eta * J * vel.theta_dot[i] * vel.theta_dot[i];
    for (int j = 0; j < K; ++j)
      def += vel.phi_dot[i] * g.g_pp(i, j).real() * vel.phi_dot[j];
  }
  rep.gamma2_definition = def / K;
  return rep;
}

// Compact J = 1/2 leakage rate.
inline double leakage_spin_half(const ModelParams& p, const VariationalState& st) {
  if (p.two_j() != 1)
    throw wrong_spin_error("compact leakage rate requires J = 1/2, got J = " +
                           std::to_string(p.J));
  const auto sites = derive_sites(p, st);
  double q = 0.0;
  for (int i = 0; i < p.K; ++i) {
    const DerivedSite& si = sites[i];
    const DerivedSite& sp = sites[(i + 1) % p.K];
    q += p.Omega[i] * p.Omega[i] * si.sh2 * sp.sh2 * si.eta * (1.0 - si.eta) / sp.eta;
  }
  return q / p.K;
}

// Leading large-J leakage rate (decays as 1/J).
inline double leakage_large_j(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  double q = 0.0;
  for (int i = 0; i < p.K; ++i) {
    const DerivedSite& s = sites[i];
    const double cphi = std::cos(s.phi);
    q += p.Omega[i] * p.Omega[i] * s.eta * (-1.0 + 2.0 * s.eta) * cphi * cphi / (2.0 * p.J);
  }
  return q / p.K;
}

}  // namespace pxpdyn
