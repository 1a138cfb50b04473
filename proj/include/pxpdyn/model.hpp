#pragma once

// Parameter and state records for the spin-J PXP chain on the Z_K variational
// manifold, plus the per-site derived quantities (x_i, eta_i, ctilde_i, ...)
// every closed form downstream is written in.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "pxpdyn/errors.hpp"

namespace pxpdyn {

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Integer power with correct sign handling for negative bases (needed for
// half-integer J on the second 2*pi winding, where cos(theta/2) < 0).
inline double ipow(double b, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= b;
  return r;
}

struct ModelParams {
  int K = 1;                  // unit-cell length
  double J = 0.5;             // spin, positive half-integer
  std::vector<double> Omega;  // K-periodic Rabi pattern
  std::vector<double> Delta;  // K-periodic detuning pattern
  bool retain_beta = true;    // keep 1/(1-beta_cell) factors (exact finite-K mode)

  int two_j() const { return static_cast<int>(std::lround(2.0 * J)); }
};

struct VariationalState {
  std::vector<double> theta;  // polar angles, radians, stored unreduced
  std::vector<double> phi;    // azimuthal angles, radians
};

// Angles enter the ansatz with period 2*pi for integer J and 4*pi for
// half-integer J; reduce before taking half-angle powers.
inline double reduce_theta(double theta, int two_j) {
  const double period = (two_j % 2 == 0) ? 2.0 * pi : 4.0 * pi;
  double r = std::fmod(theta, period);
  if (r < 0.0) r += period;
  return r;
}

struct DerivedSite {
  double theta = 0.0;  // reduced angle actually used in closed forms
  double phi = 0.0;
  double sh = 0.0, ch = 1.0;    // sin(theta/2), cos(theta/2)
  double sh2 = 0.0, ch2 = 1.0;  // their squares
  double sin_t = 0.0;           // sin(theta) = 2 sh ch
  double cos_t = 1.0;           // cos(theta) = ch^2 - sh^2
  double x = 1.0;               // cos^{2J}(theta/2)
  double x2 = 1.0;
  double z = 0.0;      // -1 + x^2 (site transfer subleading eigenvalue)
  double t = 0.0;      // tan(theta/2); overflows at theta = pi, prefer monomials
  double xt = 0.0;     // x   * tan(theta/2) = sh ch^{2J-1}   (pole-safe)
  double x2t = 0.0;    // x^2 * tan(theta/2) = sh ch^{4J-1}   (pole-safe)
  double x2t2 = 0.0;   // x^2 * tan^2        = sh^2 ch^{4J-2} (pole-safe)
  double x2_c2 = 1.0;  // x^2 / cos^2(theta/2) = ch^{4J-2}    (pole-safe)
  std::complex<double> tau;  // tan(theta/2) e^{-i phi}
  double eta = 1.0;          // left-eigenvector weight at this site
  double ctilde = 0.0;       // band parameter of the Gram-inverse closed form
};

inline void validate(const ModelParams& p) {
  if (p.K < 1) throw validation_error("K must be a positive integer, got " + std::to_string(p.K));
  if (!(p.J > 0.0) || !std::isfinite(p.J))
    throw validation_error("J must be a positive half-integer, got " + std::to_string(p.J));
  const double two_j = 2.0 * p.J;
  if (std::abs(two_j - std::lround(two_j)) > 1e-9)
    throw validation_error("2J must be an integer, got 2J = " + std::to_string(two_j));
  if (p.Omega.size() != static_cast<std::size_t>(p.K))
    throw validation_error("Omega must have length K = " + std::to_string(p.K) + ", got " +
                           std::to_string(p.Omega.size()));
  if (p.Delta.size() != static_cast<std::size_t>(p.K))
    throw validation_error("Delta must have length K = " + std::to_string(p.K) + ", got " +
                           std::to_string(p.Delta.size()));
  for (double v : p.Omega)
    if (!std::isfinite(v)) throw validation_error("Omega entries must be finite");
  for (double v : p.Delta)
    if (!std::isfinite(v)) throw validation_error("Delta entries must be finite");
}

inline void validate_state(const ModelParams& p, const VariationalState& s) {
  if (s.theta.size() != static_cast<std::size_t>(p.K) ||
      s.phi.size() != static_cast<std::size_t>(p.K))
    throw validation_error("state angle sequences must have length K");
  for (double v : s.theta)
    if (!std::isfinite(v)) throw validation_error("theta entries must be finite");
  for (double v : s.phi)
    if (!std::isfinite(v)) throw validation_error("phi entries must be finite");
}

// Subleading cell eigenvalue beta_{[1,K]} = prod_i (-1 + x_i^2).
inline double cell_beta(const std::vector<DerivedSite>& sites) {
  double b = 1.0;
  for (const auto& s : sites) b *= s.z;
  return b;
}

// 1 - |beta_cell| = 1 - prod_i (1 - x_i^2), accumulated as
// q <- q + x^2 (1 - q) so no significance is lost when every x_i^2 is tiny
// (large J), where forming z = -1 + x^2 first would round to -1 exactly.
inline double one_minus_abs_cell_beta(const std::vector<DerivedSite>& sites) {
  double q = 0.0;
  for (const auto& s : sites) q += s.x2 * (1.0 - q);
  return q;
}

// 1 - beta_cell with the same guarantee: beta = (-1)^K prod_i (1 - x_i^2).
inline double one_minus_cell_beta(const std::vector<DerivedSite>& sites) {
  const double q = one_minus_abs_cell_beta(sites);
  return (sites.size() % 2 == 0) ? q : 2.0 - q;
}

// Builds the K per-site records. eta_i = (1 + alpha_{[i,i+K-1]})/(1 - beta)
// with the 1/(1-beta) dropped in truncated mode. ctilde uses the factored
// form sh^2 [ 2J ch^{4J-2} - sum_{k<2J} ch^{2k} ], exactly zero at J = 1/2.
inline std::vector<DerivedSite> derive_sites(const ModelParams& p, const VariationalState& st) {
  validate(p);
  validate_state(p, st);
  const int K = p.K;
  const int two_j = p.two_j();

  std::vector<DerivedSite> sites(K);
  for (int i = 0; i < K; ++i) {
    DerivedSite& s = sites[i];
    s.theta = reduce_theta(st.theta[i], two_j);
    s.phi = st.phi[i];
    s.sh = std::sin(0.5 * s.theta);
    s.ch = std::cos(0.5 * s.theta);
    s.sh2 = s.sh * s.sh;
    s.ch2 = s.ch * s.ch;
    s.sin_t = 2.0 * s.sh * s.ch;
    s.cos_t = s.ch2 - s.sh2;
    s.x = ipow(s.ch, two_j);
    s.x2 = s.x * s.x;
    s.z = -1.0 + s.x2;
    s.t = s.sh / s.ch;  // may overflow at the pole; monomials below are safe
    s.xt = s.sh * ipow(s.ch, two_j - 1);
    s.x2t = s.sh * ipow(s.ch, 2 * two_j - 1);
    s.x2t2 = s.sh2 * ipow(s.ch, 2 * two_j - 2);
    s.x2_c2 = ipow(s.ch, 2 * two_j - 2);
    s.tau = s.t * std::complex<double>(std::cos(s.phi), -std::sin(s.phi));

    double geom = 0.0, chp = 1.0;  // sum_{k=0}^{2J-1} ch^{2k}
    for (int k = 0; k < two_j; ++k) {
      geom += chp;
      chp *= s.ch2;
    }
    s.ctilde = s.sh2 * (two_j * ipow(s.ch2, two_j - 1) - geom);
  }

  // The environment weights carry 1/(1 - beta_cell). For even K the cell
  // beta tends to +1 in the deep large-J regime and the denominator can
  // genuinely vanish; for odd K beta tends to -1 and 1 - beta stays >= 1,
  // so only the signed denominator is guarded, not the eigenvalue gap.
  const double gap = one_minus_abs_cell_beta(sites);
  const double one_minus_beta = (K % 2 == 0) ? gap : 2.0 - gap;
  if (std::abs(one_minus_beta) < 1e-9)
    throw degenerate_error("transfer-cell denominator 1 - beta_cell = " +
                           std::to_string(one_minus_beta) + " is numerically zero");

  // eta_i = (1 + alpha_{[i,i+K-1]}) / (1 - beta). The numerator telescopes to
  // the nest 1 + z_{i+K-1}(1 + z_{i+K-2}(... (1 + z_{i+1}) ...)); carrying the
  // pair (g, 1-g) through the nest keeps full relative precision even when the
  // numerator collapses to an O(x^2) residue (large J, even K):
  //   1 - g' = (1 - x_k^2)(1 - g),   g' = g + x_k^2 (1 - g).
  for (int i = 0; i < K; ++i) {
    double gb = 0.0, dl = 1.0;  // gb = 1 - g, dl = g after each step
    for (int m = 1; m < K; ++m) {
      const double x2 = sites[(i + m) % K].x2;
      const double gb_next = (1.0 - x2) * dl;
      dl = gb + x2 * dl;
      gb = gb_next;
    }
    sites[i].eta = p.retain_beta ? dl / one_minus_beta : dl;
  }
  return sites;
}

}  // namespace pxpdyn
