#pragma once

// Transfer-matrix algebra for the bond-dimension-2 blockaded ansatz:
// A^{sigma=-J} = [[x, 0], [1, 0]],  A^{sigma>-J} = [[0, c_sigma], [0, 0]].
//
// The 4x4 transfer space is indexed by bond pairs (bra, ket) in the order
// (11, 12, 21, 22). Undecorated site/block transfer matrices are real with
// nonzero entries only in columns 1 and 4; their nonzero eigenvalues are
// {1, beta}. Operator- and derivative-decorated transfer matrices are complex
// with the sparsity patterns implemented below.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "pxpdyn/errors.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/spin_coherent.hpp"

namespace pxpdyn {

using Mat4 = Eigen::Matrix4d;
using Mat4c = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4d;
using RowVec4 = Eigen::RowVector4d;

struct TransferBlock {
  Mat4 mat = Mat4::Zero();
  double alpha = 0.0;
  double beta = 1.0;
  std::pair<int, int> span{0, 0};  // inclusive site interval [i, j]
};

struct DominantPair {
  Vec4 r;     // |r_i) = (1, x_i, x_i, 1)^T
  RowVec4 l;  // (l_i| = (eta_i, 0, 0, 1 - eta_i)
};

inline Mat4 block_matrix_from(double alpha, double beta, double x_first) {
  Mat4 m = Mat4::Zero();
  m(0, 0) = 1.0 + alpha + beta;
  m(0, 3) = -alpha - beta;
  m(1, 0) = x_first * (1.0 + alpha);
  m(1, 3) = -x_first * alpha;
  m(2, 0) = m(1, 0);
  m(2, 3) = m(1, 3);
  m(3, 0) = 1.0 + alpha;
  m(3, 3) = -alpha;
  return m;
}

inline TransferBlock site_transfer(double x) {
  TransferBlock b;
  b.alpha = 0.0;
  b.beta = -1.0 + x * x;
  b.mat = block_matrix_from(b.alpha, b.beta, x);
  return b;
}

// Closed form for T_i T_{i+1} ... T_j:
//   alpha_[i,j] = sum_{m=i}^{j} prod_{k=m}^{j} (-1+x_k^2) - prod_{k=i}^{j} (-1+x_k^2),
//   beta_[i,j]  = prod_{k=i}^{j} (-1+x_k^2).
// xs holds x_i..x_j in order; span records the interval for bookkeeping.
inline TransferBlock block_transfer(const std::vector<double>& xs, int first_index = 0) {
  if (xs.empty()) throw error("block_transfer: empty span");
  const int n = static_cast<int>(xs.size());
  double alpha = 0.0, prod = 1.0;
  for (int m = n - 1; m >= 0; --m) {  // right-aligned running products of z
    prod *= -1.0 + xs[m] * xs[m];
    alpha += prod;
  }
  TransferBlock b;
  b.beta = prod;
  b.alpha = alpha - prod;
  b.mat = block_matrix_from(b.alpha, b.beta, xs.front());
  b.span = {first_index, first_index + n - 1};
  return b;
}

inline DominantPair dominant_pair(double x_i, double eta_i) {
  DominantPair d;
  d.r << 1.0, x_i, x_i, 1.0;
  d.l << eta_i, 0.0, 0.0, 1.0 - eta_i;
  return d;
}

// Subleading (lambda = beta) eigenvectors of a block; exposed for the
// eigenstructure tests only.
inline std::pair<Vec4, RowVec4> subleading_pair(const TransferBlock& b, double x_first) {
  Vec4 r2;
  r2 << (b.alpha + b.beta) / (1.0 + b.alpha), x_first, x_first, 1.0;
  RowVec4 l2;
  const double g = (1.0 + b.alpha) / (1.0 - b.beta);
  l2 << -g, 0.0, 0.0, g;
  return {r2, l2};
}

// Reduction formulae: (l_i| T_[i,j] = (l_{j+1}| and T_[i,j] |r_{j+1}) = |r_i).
// Returns the two contractions for the caller to compare.
inline std::pair<RowVec4, Vec4> reduction_check(const RowVec4& l_i, const TransferBlock& block,
                                                const Vec4& r_next) {
  return {l_i * block.mat, block.mat * r_next};
}

namespace detail {

// Assembles the 4x4 decorated transfer matrix given the P/Q-sandwich
// ingredients: t = (<O|q|O>, <0|q|O>, <0|q|0>) and Oq0 = <Omega|q|0>.
inline Mat4c sandwich_matrix(const ExpectationTriple& t, cplx Oq0, double x) {
  Mat4c m = Mat4c::Zero();
  const cplx zqQ = t.zO - x * t.zz;   // <0|qQ|Omega>
  const cplx Qqz = Oq0 - x * t.zz;    // <Omega|Qq|0>
  m(0, 0) = x * x * t.zz;             // <PqP>
  m(0, 1) = x * zqQ;                  // <PqQ>
  m(0, 2) = x * Qqz;                  // <QqP>
  m(0, 3) = t.OO - x * t.zO - x * Oq0 + x * x * t.zz;  // <QqQ>
  m(1, 0) = x * t.zz;                 // <Omega|Pq|0>
  m(1, 2) = Oq0 - x * t.zz;           // <Omega|Qq|0>
  m(2, 0) = x * t.zz;                 // <0|qP|Omega>
  m(2, 1) = zqQ;                      // <0|qQ|Omega>
  m(3, 0) = t.zz;                     // <0|q|0>
  return m;
}

inline cplx omega_q_zero(const ExpectationBundle& e, SiteOp q) {
  // <Omega|q|0> = conj(<0|q^dag|Omega>)
  switch (q) {
    case SiteOp::sp:
      return std::conj(e.sm.zO);
    case SiteOp::sm:
      return std::conj(e.sp.zO);
    default:
      return std::conj(triple_of(e, q).zO);
  }
}

}  // namespace detail

// T_q = sum_{s,s'} (A^s)* tensor q_{s,s'} A^{s'}.
inline Mat4c operator_transfer(const ExpectationBundle& e, SiteOp q, double x) {
  return detail::sandwich_matrix(triple_of(e, q), detail::omega_q_zero(e, q), x);
}

enum class DerivKind { dT, dbarT, dbar_dT, dT_q };

// Derivative-decorated transfer matrices. B_mu is diagonal in the s^z basis
// and commutes with P, so all entries reduce to Table I/II matrix elements.
//  - dT      = sum (A^s)*  tensor d_mu A^s      (ket-side derivative)
//  - dbarT   = sum (d_mu A^s)* tensor A^s       (bra-side derivative)
//  - dbar_dT = sum (d_mu A^s)* tensor d_nu A^s  (both sides)
//  - dT_q    = sum (A^s)* tensor q d_mu A^s     (operator times ket derivative)
inline Mat4c derivative_transfer(DerivKind kind, const ExpectationBundle& e, double x,
                                 SiteOp q = SiteOp::identity) {
  Mat4c m = Mat4c::Zero();
  const cplx a = e.bmu.scalar, b = e.bmu.zcoef;
  // <.|B|.> elements; B diagonal makes <Omega|B|0> = <0|B|Omega>.
  const cplx B_OO = e.B.OO, B_zO = e.B.zO, B_zz = e.B.zz;
  const cplx B_Oz = B_zO;

  switch (kind) {
    case DerivKind::dT: {
      m(0, 0) = x * x * B_zz;
      m(0, 1) = x * (B_zO - x * B_zz);
      m(0, 2) = x * (B_Oz - x * B_zz);
      m(0, 3) = B_OO - x * B_zO - x * B_Oz + x * x * B_zz;
      m(2, 0) = x * B_zz;
      m(2, 1) = B_zO - x * B_zz;
      return m;
    }
    case DerivKind::dbarT: {
      const cplx Bd_OO = std::conj(B_OO), Bd_zO = std::conj(B_Oz), Bd_Oz = std::conj(B_zO),
                 Bd_zz = std::conj(B_zz);
      m(0, 0) = x * x * Bd_zz;
      m(0, 1) = x * (Bd_zO - x * Bd_zz);
      m(0, 2) = x * (Bd_Oz - x * Bd_zz);
      m(0, 3) = Bd_OO - x * Bd_zO - x * Bd_Oz + x * x * Bd_zz;
      m(1, 0) = x * Bd_zz;
      m(1, 2) = Bd_Oz - x * Bd_zz;
      return m;
    }
    case DerivKind::dbar_dT: {
      const cplx BB_OO = e.BB.OO, BB_zO = e.BB.zO, BB_zz = e.BB.zz;
      const cplx BB_Oz = BB_zO;  // diagonal product, real-symmetric zO entry
      m(0, 0) = x * x * BB_zz;
      m(0, 1) = x * (BB_zO - x * BB_zz);
      m(0, 2) = x * (BB_Oz - x * BB_zz);
      m(0, 3) = BB_OO - x * BB_zO - x * BB_Oz + x * x * BB_zz;
      return m;
    }
    case DerivKind::dT_q: {
      // Composite qB = a q + b q s^z; B|0> = (a - b)|0>.
      ExpectationTriple tq = triple_of(e, q);
      ExpectationTriple tqz;  // <.|q s^z|.>
      switch (q) {
        case SiteOp::sx:
          tqz = e.sxsz;
          break;
        case SiteOp::sz:
          tqz = e.szsz;
          break;
        case SiteOp::identity:
          tqz = e.sz;
          break;
        default:
          throw error("dT_q implemented for q in {identity, sx, sz}");
      }
      const cplx qB_OO = a * tq.OO + b * tqz.OO;
      const cplx qB_zO = a * tq.zO + b * tqz.zO;
      const cplx qB_zz = (a - b) * tq.zz;
      const cplx qB_Oz = (a - b) * detail::omega_q_zero(e, q);
      m(0, 0) = x * x * qB_zz;
      m(0, 1) = x * (qB_zO - x * qB_zz);
      m(0, 2) = x * (qB_Oz - x * qB_zz);
      m(0, 3) = qB_OO - x * qB_zO - x * qB_Oz + x * x * qB_zz;
      m(2, 0) = x * qB_zz;
      m(2, 1) = qB_zO - x * qB_zz;
      return m;
    }
  }
  throw error("unknown derivative kind");
}

}  // namespace pxpdyn
