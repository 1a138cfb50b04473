#pragma once

// Connected Gram-matrix blocks of the cyclic bond-dimension-2 ansatz, as
// per-cell densities (the extensive L/K factor is stripped), and the banded
// closed-form inverse of Im G_{theta phi}.
//
// Conventions: block (i, j) pairs the bra derivative at cell site i with the
// ket derivative at cell site j.  Arc products run forward-cyclically, and
// every whole-winding geometric factor 1/(1 - beta_cell) is replaced by 1 in
// truncated mode (retain_beta = false); finite arc products are always kept.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pxpdyn/errors.hpp"
#include "pxpdyn/model.hpp"

namespace pxpdyn {

struct GramBundle {
  Eigen::MatrixXcd g_tt;  // theta-theta block (real diagonal eta_i J / 2)
  Eigen::MatrixXcd g_tp;  // theta-phi block (purely imaginary)
  Eigen::MatrixXcd g_pt;  // phi-theta block (= adjoint of g_tp)
  Eigen::MatrixXcd g_pp;  // phi-phi block (real symmetric)
  Eigen::MatrixXd inv_im_g_tp;  // filled by inverse_im_g_thetaphi, not gram_blocks
};

namespace detail {

// Product of z_m over the cyclic arc starting at site `from`, `len` sites long.
inline double arc_z(const std::vector<DerivedSite>& s, int from, int len) {
  const int K = static_cast<int>(s.size());
  double p = 1.0;
  for (int m = 0; m < len; ++m) p *= s[(from + m) % K].z;
  return p;
}

// Product of ctilde_m over the cyclic arc starting at `from`, `len` sites long.
inline double arc_ctilde(const std::vector<DerivedSite>& s, int from, int len) {
  const int K = static_cast<int>(s.size());
  double p = 1.0;
  for (int m = 0; m < len; ++m) p *= s[(from + m) % K].ctilde;
  return p;
}

inline double geometric_factor(const ModelParams& p, const std::vector<DerivedSite>& sites) {
  return p.retain_beta ? 1.0 / one_minus_cell_beta(sites) : 1.0;
}

}  // namespace detail

// All four K x K blocks; inv_im_g_tp is left empty here.
inline GramBundle gram_blocks(const ModelParams& p, const std::vector<DerivedSite>& sites) {
  const int K = p.K;
  const double J = p.J;
  const std::complex<double> iu(0.0, 1.0);
  const double gf = detail::geometric_factor(p, sites);

  GramBundle g;
  g.g_tt = Eigen::MatrixXcd::Zero(K, K);
  g.g_tp = Eigen::MatrixXcd::Zero(K, K);
  g.g_pt = Eigen::MatrixXcd::Zero(K, K);
  g.g_pp = Eigen::MatrixXcd::Zero(K, K);

  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];
    const DerivedSite& sn = sites[(i + 1) % K];
    const double omc_i = 1.0 - si.cos_t;  // 1 - cos(theta_i) = 2 sh^2
    const double wrap = detail::arc_z(sites, i + 1, K - 1);

    g.g_tt(i, i) = 0.5 * si.eta * J;

    // Diagonal theta-phi: local piece plus the whole-winding correction whose
    // arc covers the other K-1 sites of the cell.
    g.g_tp(i, i) =
        -iu * (0.5 * si.eta * J * si.sin_t) + iu * (J * J * si.eta * si.x2t * wrap * gf * omc_i);
    g.g_pt(i, i) = -g.g_tp(i, i);

    // Diagonal phi-phi with the same whole-winding correction, twice (both
    // orientations of the wound pair).
    g.g_pp(i, i) = si.eta * (1.0 - si.eta) * J * J * omc_i * omc_i +
                   0.5 * si.eta * J * si.sin_t * si.sin_t -
                   2.0 * J * J * si.eta * sn.eta * omc_i * omc_i * wrap * gf;

    for (int k = 1; k < K; ++k) {
      const int j = (i + k) % K;
      const DerivedSite& sj = sites[j];
      const DerivedSite& sjn = sites[(j + 1) % K];
      const double omc_j = 1.0 - sj.cos_t;
      const double arc_fwd = detail::arc_z(sites, i + 1, k - 1);      // sites i+1 .. j-1
      const double arc_bwd = detail::arc_z(sites, j + 1, K - k - 1);  // sites j+1 .. i-1

      g.g_tp(i, j) = iu * (J * J * si.eta * si.x2t * arc_fwd * gf * omc_j);
      g.g_pt(i, j) = -iu * (J * J * sj.eta * sj.x2t * arc_bwd * gf * omc_i);
      g.g_pp(i, j) = -J * J *
                     (si.eta * sn.eta * omc_i * arc_fwd * gf * omc_j +
                      sj.eta * sjn.eta * omc_j * arc_bwd * gf * omc_i);
    }
  }
  return g;
}

// Closed-form inverse of Im g_tp (per-cell density convention, so it inverts
// the K x K density block directly).  Banded through the ctilde arc products:
// row i carries 2 x_i^2 / cos^2(theta_i/2), column j carries tan(theta_j/2)/eta_j.
inline Eigen::MatrixXd inverse_im_g_thetaphi(const ModelParams& p,
                                             const std::vector<DerivedSite>& sites) {
  const int K = p.K;
  const double J = p.J;

  for (const auto& s : sites)
    if (std::abs(s.sin_t) < 1e-9)
      throw pole_error("inverse of Im G_{theta phi} needs |sin theta_i| >= 1e-9, got " +
                       std::to_string(s.sin_t));

  const double cell = detail::arc_ctilde(sites, 0, K);
  if (std::abs(1.0 - cell) < 1e-12)
    throw resonance_error("ctilde cell product resonates: |1 - prod ctilde| = " +
                          std::to_string(std::abs(1.0 - cell)));
  const double resum = 1.0 / (1.0 - cell);

  Eigen::MatrixXd h(K, K);
  for (int i = 0; i < K; ++i) {
    const DerivedSite& si = sites[i];
    for (int k = 0; k < K; ++k) {
      const int j = (i + k) % K;
      const DerivedSite& sj = sites[j];
      const double arc = detail::arc_ctilde(sites, i + 1, k == 0 ? K - 1 : k - 1);
      // 4 x_i^2 t_i / sin(theta_i) = 2 ch_i^{4J-2}, which never divides by zero.
      const double band = -2.0 * si.x2_c2 * sj.t / sj.eta * arc * resum;
      h(i, j) = (k == 0) ? -2.0 / (J * si.eta * si.sin_t) + band : band;
    }
  }
  return h;
}

}  // namespace pxpdyn
