#pragma once

// Spin-coherent-state machinery for |Omega> = exp(xi S+ - xi* S-)|J,-J>,
// xi = (theta/2) e^{-i phi}: coefficient vectors in the S^z basis, the
// closed-form expectation tables between <Omega|, <0| and |Omega>, |0>,
// the tangent operator B_mu = J(cot(theta) d_theta - i d_phi)
//                           + J(d_theta/sin(theta) - i d_phi) s^z,
// and the two-site shorthand h~_q.
//
// Normalization: s^alpha = S^alpha / J throughout. x = <0|Omega> =
// cos^{2J}(theta/2), tau = tan(theta/2) e^{-i phi}.

#include <cmath>
#include <complex>
#include <vector>

#include "pxpdyn/errors.hpp"
#include "pxpdyn/model.hpp"

namespace pxpdyn {

using cplx = std::complex<double>;
inline constexpr cplx iu{0.0, 1.0};

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r *= static_cast<double>(n - k + j) / j;
  return r;
}

// c_sigma for sigma = -J..J as a (2J+1)-vector indexed by n = sigma + J:
// c_n = sqrt(C(2J,n)) e^{-i n phi} sin^n(theta/2) cos^{2J-n}(theta/2).
// Powers are taken as integer powers (no complex log), so the half-integer-J
// second winding (cos(theta/2) < 0) evaluates without branch-cut trouble.
inline std::vector<cplx> coherent_coefficients(double theta, double phi, double J) {
  const int two_j = static_cast<int>(std::lround(2.0 * J));
  const double sh = std::sin(0.5 * theta), ch = std::cos(0.5 * theta);
  std::vector<cplx> c(two_j + 1);
  for (int n = 0; n <= two_j; ++n) {
    const cplx ph{std::cos(n * phi), -std::sin(n * phi)};
    c[n] = std::sqrt(binomial(two_j, n)) * ph * ipow(sh, n) * ipow(ch, two_j - n);
  }
  return c;
}

// d/dtheta and d/dphi of the coefficient vector (used by the tangent-vector
// oracle and the finite-difference checks of the decorated transfer matrices).
inline std::vector<cplx> coherent_coefficients_dtheta(double theta, double phi, double J) {
  const int two_j = static_cast<int>(std::lround(2.0 * J));
  const double sh = std::sin(0.5 * theta), ch = std::cos(0.5 * theta);
  std::vector<cplx> d(two_j + 1);
  for (int n = 0; n <= two_j; ++n) {
    const int m = two_j - n;
    const cplx ph{std::cos(n * phi), -std::sin(n * phi)};
    double t1 = (n > 0) ? n * ipow(sh, n - 1) * ipow(ch, m + 1) : 0.0;
    double t2 = (m > 0) ? m * ipow(sh, n + 1) * ipow(ch, m - 1) : 0.0;
    d[n] = std::sqrt(binomial(two_j, n)) * ph * 0.5 * (t1 - t2);
  }
  return d;
}

inline std::vector<cplx> coherent_coefficients_dphi(double theta, double phi, double J) {
  auto c = coherent_coefficients(theta, phi, J);
  for (int n = 0; n < static_cast<int>(c.size()); ++n) c[n] *= -iu * static_cast<double>(n);
  return c;
}

struct BmuCoefficients {
  cplx scalar{0.0, 0.0};  // J (cot(theta) d_theta - i d_phi)
  cplx zcoef{0.0, 0.0};   // J (d_theta/sin(theta) - i d_phi), multiplies s^z
};

inline BmuCoefficients bmu_coefficients(double theta, double J, double dtheta, double dphi) {
  const double st = std::sin(theta), ct = std::cos(theta);
  BmuCoefficients b;
  b.scalar = J * (ct / st * dtheta - iu * dphi);
  b.zcoef = J * (dtheta / st - iu * dphi);
  return b;
}

// The three matrix elements <Omega|O|Omega>, <0|O|Omega>, <0|O|0> of one
// operator (or operator product) O.
struct ExpectationTriple {
  cplx OO{0.0, 0.0};  // <Omega|O|Omega>
  cplx zO{0.0, 0.0};  // <0|O|Omega>
  cplx zz{0.0, 0.0};  // <0|O|0>
};

// All tabulated operators at one site, for the tangent direction
// mu = (dtheta, dphi) and (for the B^dag B row) nu = (ntheta, nphi).
struct ExpectationBundle {
  double theta = 0.0, phi = 0.0, J = 0.5;
  double dtheta = 0.0, dphi = 0.0;  // direction mu
  double ntheta = 0.0, nphi = 0.0;  // direction nu (defaults to mu)
  ExpectationTriple P, sz, sp, sm, sx, B;
  ExpectationTriple sxsx, sxsz, szsx, szsz, sxB, szB, BB;
  BmuCoefficients bmu;
};

// Closed forms of the one- and two-operator tables. Entries containing B_mu
// carry 1/sin(theta) poles at theta in {0, pi} through the B_mu coefficients;
// everything B-free is globally regular.
inline ExpectationBundle expectations(double theta, double phi, double J, double dtheta,
                                      double dphi, double ntheta = std::nan(""),
                                      double nphi = std::nan("")) {
  if (std::isnan(ntheta)) ntheta = dtheta;
  if (std::isnan(nphi)) nphi = dphi;
  ExpectationBundle e;
  e.theta = theta;
  e.phi = phi;
  e.J = J;
  e.dtheta = dtheta;
  e.dphi = dphi;
  e.ntheta = ntheta;
  e.nphi = nphi;

  const int two_j = static_cast<int>(std::lround(2.0 * J));
  const double sh = std::sin(0.5 * theta), ch = std::cos(0.5 * theta);
  const double st = std::sin(theta), ct = std::cos(theta);
  const double x = ipow(ch, two_j);
  const cplx eiphi{std::cos(phi), std::sin(phi)};
  const cplx tau = (sh / ch) * std::conj(eiphi);

  e.P = {x * x, x, 1.0};
  e.sz = {-ct, -x, -1.0};
  e.sp = {st * eiphi, 0.0, 0.0};
  e.sm = {st * std::conj(eiphi), 2.0 * x * tau, 0.0};
  e.sx = {st * std::cos(phi), x * tau, 0.0};  // (s+ + s-)/2

  e.bmu = bmu_coefficients(theta, J, dtheta, dphi);
  const double xt = sh * ipow(ch, two_j - 1);  // x tan(theta/2), pole-safe
  e.B = {iu * J * (ct - 1.0) * dphi, -J * xt * dtheta, -J * (sh / ch) * dtheta};

  e.sxsx = {(1.0 + (two_j - 1.0) * std::cos(phi) * std::cos(phi) * st * st) / two_j,
            ((two_j - 1.0) * x * tau * tau + x) / static_cast<double>(two_j), 1.0 / two_j};
  e.sxsz = {st / two_j * ((1.0 - two_j) * ct * std::cos(phi) - iu * std::sin(phi)),
            (1.0 - J) / J * x * tau, 0.0};
  e.szsx = {st / two_j * ((1.0 - two_j) * ct * std::cos(phi) + iu * std::sin(phi)), -x * tau,
            0.0};
  e.szsz = {((two_j - 1.0) * ct * ct + 1.0) / two_j, x, 1.0};

  e.sxB = {(ct * std::cos(phi) - iu * std::sin(phi)) / 2.0 * dtheta +
               (-std::sin(phi) + iu * std::cos(phi) * (-two_j + (two_j - 1.0) * ct)) / 2.0 * st *
                   dphi,
           -iu * x * tau * dphi + (1.0 - J + J * ct) / st * x * tau * dtheta, 0.0};
  e.szB = {iu * (-1.0 + (two_j - 1.0) * ct) * sh * sh * dphi + 0.5 * st * dtheta,
           J * xt * dtheta, J * (sh / ch) * dtheta};

  const double pp = (1.0 + 3.0 * two_j - 4.0 * two_j * ct + (two_j - 1.0) * std::cos(2.0 * theta)) / 4.0;
  e.BB = {J / 2.0 * dtheta * ntheta - iu * (J * st / 2.0) * dtheta * nphi +
              iu * (J * st / 2.0) * dphi * ntheta + J * pp * dphi * nphi,
          J * J * x * (sh / ch) * (sh / ch) * dtheta * ntheta,
          J * J * (sh / ch) * (sh / ch) * dtheta * ntheta};
  return e;
}

enum class SiteOp { identity, P, sx, sz, sp, sm };

inline ExpectationTriple triple_of(const ExpectationBundle& e, SiteOp q) {
  switch (q) {
    case SiteOp::identity:
      return {1.0, ipow(std::cos(0.5 * e.theta), static_cast<int>(std::lround(2.0 * e.J))),
              1.0};
    case SiteOp::P:
      return e.P;
    case SiteOp::sx:
      return e.sx;
    case SiteOp::sz:
      return e.sz;
    case SiteOp::sp:
      return e.sp;
    case SiteOp::sm:
      return e.sm;
  }
  throw error("unknown site operator");
}

// h~_q = x_i(-1+x_{i+1}) [ <0|qQ|Omega> + <Omega|Qq|0> ] + <Omega|q|Omega> - <0|q|0>
// with Q = 1 - P. Using P = |0><0|:
//   <0|qQ|Omega> = <0|q|Omega> - x <0|q|0>,
//   <Omega|Qq|0> = conj(<0|q^dag|Omega>) - x <0|q|0>.
inline cplx h_tilde(SiteOp q, const ExpectationBundle& bundle_i, double x_i, double x_next) {
  const ExpectationTriple tq = triple_of(bundle_i, q);
  cplx zqdO;  // <0|q^dag|Omega>
  switch (q) {
    case SiteOp::sp:
      zqdO = triple_of(bundle_i, SiteOp::sm).zO;
      break;
    case SiteOp::sm:
      zqdO = triple_of(bundle_i, SiteOp::sp).zO;
      break;
    default:
      zqdO = tq.zO;  // Hermitian cases
  }
  const cplx sandwich = tq.zO + std::conj(zqdO) - 2.0 * x_i * tq.zz;
  return x_i * (-1.0 + x_next) * sandwich + tq.OO - tq.zz;
}

}  // namespace pxpdyn
