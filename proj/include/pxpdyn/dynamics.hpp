#pragma once

// Variational energy, the TDVP residual vectors, and the equation-of-motion
// right-hand sides: the exact banded-inverse form, its truncated-series
// companion, the compact J = 1/2 form, and the large-J limit.
//
// All residual and Gram quantities are per-cell densities; the extensive L/K
// prefactors cancel between the Gram inverse and the residuals.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pxpdyn/errors.hpp"
#include "pxpdyn/gram.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/spin_coherent.hpp"

namespace pxpdyn {

// Drive-reduced gradient pieces per cell site.  With d the local phase drive
// (Omega h + Delta(1 - cos theta)) / (J (1 - cos theta)):
//   R_phi   =  Re<d_phi   psi|H|psi>_c
//   R_theta =  Re<d_theta psi|H|psi>_c + (Im G_thetaphi . d)
//   I_theta =  Im<d_theta psi|H|psi>_c
//   I_phi   =  Im<d_phi   psi|H|psi>_c - (G_phiphi . d)
// These are the combinations the equations of motion and the leakage rate
// contract against; they stay finite at the theta poles.
struct Residuals {
  std::vector<double> R_theta, R_phi;
  std::vector<double> I_theta, I_phi;
};

struct PhaseVelocity {
  std::vector<double> theta_dot, phi_dot;
};

namespace detail {

inline constexpr double kPoleSin = 1e-9;  // refuse |sin theta_i| below this
inline constexpr double kPoleOmc = 1e-12; // refuse 1 - cos(theta_i) below this

inline void require_away_from_poles(const std::vector<DerivedSite>& sites) {
  for (const auto& s : sites) {
    if (std::abs(s.sin_t) < kPoleSin)
      throw pole_error("coordinate pole: |sin theta| = " + std::to_string(std::abs(s.sin_t)) +
                       " < 1e-9 at theta = " + std::to_string(s.theta));
    if (2.0 * s.sh2 < kPoleOmc)
      throw pole_error("coordinate pole: 1 - cos theta = " + std::to_string(2.0 * s.sh2) +
                       " < 1e-12 at theta = " + std::to_string(s.theta));
  }
}

}  // namespace detail

// One expectation bundle per cell site (zero tangent direction: only the
// operator tables are needed downstream, not the B rows).
inline std::vector<ExpectationBundle> site_bundles(const ModelParams& p,
                                                   const std::vector<DerivedSite>& sites) {
  std::vector<ExpectationBundle> b;
  b.reserve(sites.size());
  for (const auto& s : sites) b.push_back(expectations(s.theta, s.phi, p.J, 0.0, 0.0));
  return b;
}

// Variational energy per unit cell: sum_i [-Delta_i + eta_i(Delta_i(1-cos th_i)
// + Omega_i h~_{s^x_i})].
inline double variational_energy(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  const auto bundles = site_bundles(p, sites);
  double e = 0.0;
  for (int i = 0; i < p.K; ++i) {
    const DerivedSite& s = sites[i];
    const double hsx =
        std::real(h_tilde(SiteOp::sx, bundles[i], s.x, sites[(i + 1) % p.K].x));
    e += -p.Delta[i] + s.eta * (p.Delta[i] * (1.0 - s.cos_t) + p.Omega[i] * hsx);
  }
  return e;
}

// The four residual sequences.  The azimuthal dressings come from one
// h~_{s^+} contraction per site: h~_{s^+} = e^{+i phi} sin(theta) w, so its
// real/imaginary parts give cos/sin(phi) * sin(theta) * w without the
// spurious tan(phi) poles of the raw printed forms.
inline Residuals residuals(const ModelParams& p, const std::vector<DerivedSite>& sites,
                           const std::vector<ExpectationBundle>& bundles) {
  const int K = p.K;
  const double J = p.J;
  Residuals r;
  r.R_theta.resize(K);
  r.R_phi.resize(K);
  r.I_theta.resize(K);
  r.I_phi.resize(K);
  for (int j = 0; j < K; ++j) {
    const int jm = (j + K - 1) % K, jp = (j + 1) % K;
    const DerivedSite& s = sites[j];
    const DerivedSite& sm = sites[jm];
    const double om = p.Omega[j];
    const cplx hp = h_tilde(SiteOp::sp, bundles[j], s.x, sites[jp].x);
    const double ssw = hp.imag();  // sin(phi_j) sin(theta_j) w_j
    const double w = 1.0 + s.x2_c2 * (-1.0 + sites[jp].x);  // ssw / (sin phi sin theta)
    // shared cross-site factor J Omega_{j-1} eta_{j-1} x_j t_j x_{j-1}^2 t_{j-1}
    const double cross = J * p.Omega[jm] * sm.eta * s.xt * sm.x2t;
    const double cphi = std::cos(s.phi);
    const double a = 1.0 + 2.0 * (2.0 * J - 1.0) * s.sh2;  // cos th + 2J(1 - cos th)
    const double b = 0.5 + (2.0 * J - 1.0) * s.sh2;
    r.R_theta[j] = -(cross * std::cos(sm.phi) +
                     s.eta * om * cphi * (0.5 + (-1.0 + sites[jp].x) * s.x2_c2 * b));
    r.R_phi[j] = -0.5 * s.eta * om * ssw;
    // Same-site bracket carries w without the sin(theta) dressing: the raw
    // x^2 tan(theta/2)/sin(theta) factor of the neighbor term reduces to
    // x2_c2 / 2 identically.
    r.I_theta[j] = cross * std::sin(sm.phi) + 0.5 * s.eta * om * std::sin(s.phi) * w;
    r.I_phi[j] =
        -0.5 * s.eta * om * cphi * (s.sin_t + a * 2.0 * s.x2t * (-1.0 + sites[jp].x));
  }
  return r;
}

namespace detail {

// Full azimuthal drive [Omega_i h~_{s^x_i} + Delta_i(1-cos th_i)]/(J(1-cos th_i)).
inline std::vector<double> phi_drive(const ModelParams& p, const std::vector<DerivedSite>& sites,
                                     const std::vector<ExpectationBundle>& bundles) {
  std::vector<double> d(p.K);
  for (int i = 0; i < p.K; ++i) {
    const DerivedSite& s = sites[i];
    const double hsx =
        std::real(h_tilde(SiteOp::sx, bundles[i], s.x, sites[(i + 1) % p.K].x));
    const double omc = 2.0 * s.sh2;  // 1 - cos(theta_i)
    d[i] = (p.Omega[i] * hsx + p.Delta[i] * omc) / (p.J * omc);
  }
  return d;
}

}  // namespace detail

// Exact appendix-form EOM through the closed-form Gram inverse:
//   theta_dot_i = sum_j (Im G_tp)^-1_{ji} R_phi_j
//   phi_dot_i   = drive_i - sum_j (Im G_tp)^-1_{ij} R_theta_j.
inline PhaseVelocity eom_exact(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  detail::require_away_from_poles(sites);
  const auto bundles = site_bundles(p, sites);
  const auto res = residuals(p, sites, bundles);
  const Eigen::MatrixXd h = inverse_im_g_thetaphi(p, sites);
  const auto drive = detail::phi_drive(p, sites, bundles);

  PhaseVelocity v;
  v.theta_dot.assign(p.K, 0.0);
  v.phi_dot.assign(p.K, 0.0);
  for (int i = 0; i < p.K; ++i) {
    double td = 0.0, u = 0.0;
    for (int j = 0; j < p.K; ++j) {
      td += h(j, i) * res.R_phi[j];
      u += h(i, j) * res.R_theta[j];
    }
    v.theta_dot[i] = td;
    v.phi_dot[i] = drive[i] - u;
  }
  return v;
}

// Truncated-series EOM: one winding of the banded sums with the running
// ctilde arc product, stopped once it drops below trunc_eps, and whole
// windings resummed geometrically by 1/(1 - prod ctilde).
inline PhaseVelocity eom_series(const ModelParams& p, const VariationalState& st,
                                double trunc_eps) {
  const auto sites = derive_sites(p, st);
  detail::require_away_from_poles(sites);
  const auto bundles = site_bundles(p, sites);
  const auto res = residuals(p, sites, bundles);
  const auto drive = detail::phi_drive(p, sites, bundles);
  const int K = p.K;
  const double J = p.J;

  double cell = 1.0;
  for (const auto& s : sites) cell *= s.ctilde;
  if (std::abs(cell) >= 1.0)
    throw convergence_error("band series cannot converge: |prod ctilde| = " +
                            std::to_string(std::abs(cell)));
  if (std::abs(1.0 - cell) < 1e-12)
    throw resonance_error("ctilde cell product resonates: |1 - prod ctilde| = " +
                          std::to_string(std::abs(1.0 - cell)));
  const double resum = 1.0 / (1.0 - cell);

  // Azimuthal dressing sin(phi_j) sin(theta_j) w_j per site, via h~_{s^+}.
  std::vector<double> ssw(K), w(K);
  for (int j = 0; j < K; ++j) {
    ssw[j] = h_tilde(SiteOp::sp, bundles[j], sites[j].x, sites[(j + 1) % K].x).imag();
    w[j] = 1.0 + sites[j].x2_c2 * (-1.0 + sites[(j + 1) % K].x);
  }

  PhaseVelocity v;
  v.theta_dot.assign(K, 0.0);
  v.phi_dot.assign(K, 0.0);
  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];

    // theta_dot: backward walk over sources j = i-1, i-2, ...
    double tsum = 0.0, prod = 1.0;
    for (int s = 1; s <= K; ++s) {
      if (std::abs(prod) < trunc_eps) break;
      const int j = ((i - s) % K + K) % K;
      tsum += sites[j].eta * p.Omega[j] * sites[j].x2_c2 * ssw[j] * prod;
      prod *= sites[j].ctilde;
    }
    v.theta_dot[i] = p.Omega[i] * std::sin(si.phi) * w[i] / J + si.t * resum * tsum / si.eta;

    // phi_dot: forward walk over sources j = i+1, i+2, ...
    double psum = 0.0;
    prod = 1.0;
    for (int s = 1; s <= K; ++s) {
      if (std::abs(prod) < trunc_eps) break;
      const int j = (i + s) % K;
      psum += sites[j].t / sites[j].eta * res.R_theta[j] * prod;
      prod *= sites[j].ctilde;
    }
    v.phi_dot[i] = drive[i] + 2.0 * res.R_theta[i] / (J * si.eta * si.sin_t) +
                   2.0 * si.x2_c2 * resum * psum;
  }
  return v;
}

// Compact J = 1/2 EOM (printed two-line form).
inline PhaseVelocity eom_spin_half(const ModelParams& p, const VariationalState& st) {
  if (p.two_j() != 1)
    throw wrong_spin_error("compact EOM requires J = 1/2, got J = " + std::to_string(p.J));
  const auto sites = derive_sites(p, st);
  detail::require_away_from_poles(sites);
  const int K = p.K;

  PhaseVelocity v;
  v.theta_dot.assign(K, 0.0);
  v.phi_dot.assign(K, 0.0);
  for (int i = 0; i < K; ++i) {
    const int im = (i + K - 1) % K, ip = (i + 1) % K, ipp = (i + 2) % K;
    const DerivedSite& s = sites[i];
    const DerivedSite& sm = sites[im];
    const DerivedSite& sp = sites[ip];
    const double cphi = std::cos(s.phi), sphi = std::sin(s.phi);
    v.theta_dot[i] = 2.0 * p.Omega[i] * sphi * sp.ch +
                     p.Omega[im] * sm.eta * s.sh * std::sin(sm.phi) * sm.sin_t / s.eta;
    v.phi_dot[i] = 2.0 * p.Omega[i] * sp.ch * cphi * s.cos_t / s.sin_t + 2.0 * p.Delta[i] -
                   p.Omega[im] * std::cos(sm.phi) / s.ch * sm.sin_t * sm.eta / (2.0 * s.eta) -
                   p.Omega[i] * cphi * s.sin_t * sp.sh * sp.t * s.eta / (2.0 * sp.eta) -
                   p.Omega[ip] * sites[ipp].ch * std::cos(sp.phi) * sp.t;
  }
  return v;
}

// Large-J limit: J theta_dot = Omega sin phi, J phi_dot = Delta + Omega cos phi cot theta.
inline PhaseVelocity eom_large_j(const ModelParams& p, const VariationalState& st) {
  const auto sites = derive_sites(p, st);
  for (const auto& s : sites)
    if (std::abs(s.sin_t) < detail::kPoleSin)
      throw pole_error("large-J EOM needs |sin theta| >= 1e-9, got " +
                       std::to_string(std::abs(s.sin_t)));
  PhaseVelocity v;
  v.theta_dot.assign(p.K, 0.0);
  v.phi_dot.assign(p.K, 0.0);
  for (int i = 0; i < p.K; ++i) {
    const DerivedSite& s = sites[i];
    v.theta_dot[i] = p.Omega[i] * std::sin(s.phi) / p.J;
    v.phi_dot[i] = (p.Delta[i] + p.Omega[i] * std::cos(s.phi) * s.cos_t / s.sin_t) / p.J;
  }
  return v;
}

}  // namespace pxpdyn
