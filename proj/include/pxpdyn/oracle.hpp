#pragma once

// Independent ground truth for the closed forms:
//   * exact diagonalization in the blockade-constrained space at finite L,
//   * literal-tensor MPS contraction (statevector, tangents, Gamma^2),
//   * a numeric thermodynamic-limit environment built from decorated 4x4
//     transfer matrices, a dense eigensolve of the cell transfer, and
//     connected sums by explicit geometric summation.
//
// Nothing here reuses the closed-form transfer/gram/leakage expressions; the
// only shared ingredient is the coherent-coefficient table the A-tensors are
// defined by.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/errors.hpp"
#include "pxpdyn/model.hpp"
#include "pxpdyn/spin_coherent.hpp"

namespace pxpdyn {

// ---------------------------------------------------------------------------
// Constrained basis and exact diagonalization
// ---------------------------------------------------------------------------

// Cyclic chain of L spin-J sites with occupations n_i in 0..2J and no two
// adjacent sites both excited (n > 0).  Words are packed into 64-bit codes
// with site 0 in the most significant position, so numeric order coincides
// with lexicographic order on (n_0, ..., n_{L-1}).
struct ConstrainedBasis {
  int L = 0;
  int two_j = 0;
  int bits = 0;
  std::vector<std::uint64_t> words;

  int occupation(std::uint64_t w, int site) const {
    return static_cast<int>((w >> (static_cast<unsigned>(L - 1 - site) * bits)) &
                            ((std::uint64_t{1} << bits) - 1));
  }
  std::uint64_t with_occupation(std::uint64_t w, int site, int n) const {
    const unsigned sh = static_cast<unsigned>(L - 1 - site) * bits;
    const std::uint64_t mask = ((std::uint64_t{1} << bits) - 1) << sh;
    return (w & ~mask) | (static_cast<std::uint64_t>(n) << sh);
  }
  std::ptrdiff_t index_of(std::uint64_t w) const {
    const auto it = std::lower_bound(words.begin(), words.end(), w);
    if (it == words.end() || *it != w) return -1;
    return it - words.begin();
  }
  std::size_t dimension() const { return words.size(); }
};

namespace detail {

// Number of cyclic constrained words, via the weighted trace tr(M^L) with
// M[g->g]=1, M[g->e]=2J, M[e->g]=1, M[e->e]=0.
inline std::uint64_t constrained_dimension(int L, int two_j) {
  std::array<std::uint64_t, 4> m = {1, static_cast<std::uint64_t>(two_j), 1, 0};
  std::array<std::uint64_t, 4> acc = {1, 0, 0, 1};
  const auto mul = [](const std::array<std::uint64_t, 4>& a,
                      const std::array<std::uint64_t, 4>& b) {
    std::array<std::uint64_t, 4> c{};
    c[0] = a[0] * b[0] + a[1] * b[2];
    c[1] = a[0] * b[1] + a[1] * b[3];
    c[2] = a[2] * b[0] + a[3] * b[2];
    c[3] = a[2] * b[1] + a[3] * b[3];
    return c;
  };
  int e = L;
  while (e > 0) {
    if (e & 1) acc = mul(acc, m);
    m = mul(m, m);
    e >>= 1;
  }
  return acc[0] + acc[3];
}

}  // namespace detail

inline ConstrainedBasis build_basis(int L, double J, std::size_t dim_cap = 2000000) {
  const int two_j = static_cast<int>(std::lround(2.0 * J));
  if (L < 3) throw validation_error("basis needs L >= 3, got L = " + std::to_string(L));
  if (two_j < 1) throw validation_error("basis needs 2J >= 1");
  const std::uint64_t dim = detail::constrained_dimension(L, two_j);
  if (dim > dim_cap)
    throw validation_error("constrained dimension " + std::to_string(dim) +
                           " exceeds cap " + std::to_string(dim_cap));

  ConstrainedBasis b;
  b.L = L;
  b.two_j = two_j;
  b.bits = 1;
  while ((1 << b.bits) <= two_j) ++b.bits;
  if (L * b.bits > 64)
    throw validation_error("word of " + std::to_string(L) + " sites at 2J = " +
                           std::to_string(two_j) + " does not fit 64 bits");
  b.words.reserve(dim);

  // Depth-first enumeration, ascending occupation at each site, site 0
  // outermost: emission order is lexicographic.
  std::vector<int> word(L, 0);
  const auto rec = [&](auto&& self, int s) -> void {
    if (s == L) {
      if (word[L - 1] > 0 && word[0] > 0) return;
      std::uint64_t w = 0;
      for (int i = 0; i < L; ++i)
        w |= static_cast<std::uint64_t>(word[i])
             << (static_cast<unsigned>(L - 1 - i) * b.bits);
      b.words.push_back(w);
      return;
    }
    const int top = (s > 0 && word[s - 1] > 0) ? 0 : two_j;
    for (int n = 0; n <= top; ++n) {
      word[s] = n;
      self(self, s + 1);
    }
    word[s] = 0;
  };
  rec(rec, 0);
  return b;
}

// H = sum_i Omega_i P s^x_i P + Delta_i s^z_i on the constrained space, cell
// parameters tiled around the ring.  Real symmetric.
inline Eigen::SparseMatrix<double> build_hamiltonian(const ConstrainedBasis& b,
                                                     const ModelParams& p) {
  if (b.L % p.K != 0)
    throw validation_error("L = " + std::to_string(b.L) + " not divisible by K = " +
                           std::to_string(p.K));
  if (b.two_j != p.two_j()) throw validation_error("basis and params disagree on J");
  const double J = p.J;
  const int n_rows = static_cast<int>(b.dimension());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_rows) * (b.L + 1));
  for (int r = 0; r < n_rows; ++r) {
    const std::uint64_t w = b.words[r];
    double diag = 0.0;
    for (int i = 0; i < b.L; ++i) {
      const int n = b.occupation(w, i);
      diag += p.Delta[i % p.K] * (n - J) / J;
      // Blockade-dressed flip: both neighbors must be unexcited.
      if (b.occupation(w, (i + 1) % b.L) != 0 || b.occupation(w, (i + b.L - 1) % b.L) != 0)
        continue;
      for (const int np : {n - 1, n + 1}) {
        if (np < 0 || np > b.two_j) continue;
        const std::uint64_t w2 = b.with_occupation(w, i, np);
        const auto c = b.index_of(w2);
        if (c < 0)
          throw validation_error("flip left the constrained space (internal basis error)");
        const int lo = std::min(n, np);
        trip.emplace_back(r, static_cast<int>(c),
                          p.Omega[i % p.K] *
                              std::sqrt(static_cast<double>((lo + 1) * (b.two_j - lo))) /
                              (2.0 * J));
      }
    }
    trip.emplace_back(r, r, diag);
  }
  Eigen::SparseMatrix<double> h(n_rows, n_rows);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

// ---------------------------------------------------------------------------
// Literal MPS tensors and statevector construction
// ---------------------------------------------------------------------------

struct DenseState {
  ConstrainedBasis basis;
  Eigen::VectorXcd amps;  // unnormalized (finite-L trace)
};

namespace detail {

// Site tensors A^n as 2x2 matrices: A^0 = [[c_0, 0], [1, 0]],
// A^{n>0} = [[0, c_n], [0, 0]].
inline std::vector<Eigen::Matrix2cd> site_tensors(double theta, double phi, double J) {
  const auto c = coherent_coefficients(theta, phi, J);
  std::vector<Eigen::Matrix2cd> a(c.size(), Eigen::Matrix2cd::Zero());
  a[0](0, 0) = c[0];
  a[0](1, 0) = 1.0;
  for (std::size_t n = 1; n < c.size(); ++n) a[n](0, 1) = c[n];
  return a;
}

// Derivative tensors: only the coherent coefficient entries move.
inline std::vector<Eigen::Matrix2cd> site_tensors_deriv(const std::vector<cplx>& dc) {
  std::vector<Eigen::Matrix2cd> a(dc.size(), Eigen::Matrix2cd::Zero());
  a[0](0, 0) = dc[0];
  for (std::size_t n = 1; n < dc.size(); ++n) a[n](0, 1) = dc[n];
  return a;
}

}  // namespace detail

// Amplitudes over an existing basis: amp(word) = tr(prod_i A^{n_i}).
inline Eigen::VectorXcd mps_amplitudes(const ModelParams& p, const VariationalState& st,
                                       const ConstrainedBasis& b) {
  if (b.L % p.K != 0)
    throw validation_error("L not divisible by K in mps_amplitudes");
  std::vector<std::vector<Eigen::Matrix2cd>> cell(p.K);
  for (int i = 0; i < p.K; ++i)
    cell[i] = detail::site_tensors(st.theta[i], st.phi[i], p.J);
  Eigen::VectorXcd amps(b.dimension());
  for (std::size_t r = 0; r < b.dimension(); ++r) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (int i = 0; i < b.L; ++i) m *= cell[i % p.K][b.occupation(b.words[r], i)];
    amps(static_cast<Eigen::Index>(r)) = m.trace();
  }
  return amps;
}

inline DenseState mps_to_statevector(const ModelParams& p, const VariationalState& st, int L,
                                     std::size_t dim_cap = 2000000) {
  DenseState out;
  out.basis = build_basis(L, p.J, dim_cap);
  out.amps = mps_amplitudes(p, st, out.basis);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-L exact report: energy, variance, Gamma^2 for a given velocity
// ---------------------------------------------------------------------------

struct ExactReport {
  double energy = 0.0;    // <H>/L
  double variance = 0.0;  // <H^2>_c / L
  double gamma2 = 0.0;    // (1/L) || (d/dt + iH) |Psi> ||^2, gauge-optimal
};

inline ExactReport exact_report(const ModelParams& p, const VariationalState& st, int L,
                                const PhaseVelocity& vel, std::size_t dim_cap = 2000000) {
  const ConstrainedBasis b = build_basis(L, p.J, dim_cap);
  const Eigen::SparseMatrix<double> h = build_hamiltonian(b, p);
  const Eigen::VectorXcd psi = mps_amplitudes(p, st, b);

  // Tangent sum d/dt |Psi> = sum_j [theta_dot dA_theta + phi_dot dA_phi]_j by
  // the product rule, via prefix/suffix partial products per word.
  std::vector<std::vector<Eigen::Matrix2cd>> cell(p.K), dth(p.K), dph(p.K);
  for (int i = 0; i < p.K; ++i) {
    cell[i] = detail::site_tensors(st.theta[i], st.phi[i], p.J);
    dth[i] = detail::site_tensors_deriv(
        coherent_coefficients_dtheta(st.theta[i], st.phi[i], p.J));
    dph[i] = detail::site_tensors_deriv(
        coherent_coefficients_dphi(st.theta[i], st.phi[i], p.J));
  }
  Eigen::VectorXcd dpsi(b.dimension());
  std::vector<Eigen::Matrix2cd> prefix(L + 1), suffix(L + 1);
  for (std::size_t r = 0; r < b.dimension(); ++r) {
    const std::uint64_t w = b.words[r];
    prefix[0] = Eigen::Matrix2cd::Identity();
    suffix[L] = Eigen::Matrix2cd::Identity();
    for (int i = 0; i < b.L; ++i)
      prefix[i + 1] = prefix[i] * cell[i % p.K][b.occupation(w, i)];
    for (int i = b.L - 1; i >= 0; --i)
      suffix[i] = cell[i % p.K][b.occupation(w, i)] * suffix[i + 1];
    cplx acc = 0.0;
    for (int i = 0; i < b.L; ++i) {
      const int k = i % p.K, n = b.occupation(w, i);
      const Eigen::Matrix2cd mid =
          vel.theta_dot[k] * dth[k][n] + vel.phi_dot[k] * dph[k][n];
      acc += (prefix[i] * mid * suffix[i + 1]).trace();
    }
    dpsi(static_cast<Eigen::Index>(r)) = acc;
  }

  const double norm = psi.squaredNorm();
  const Eigen::VectorXcd hpsi = h * psi;
  const double e = std::real(psi.dot(hpsi)) / norm;
  const double h2 = hpsi.squaredNorm() / norm;

  const Eigen::VectorXcd w = dpsi + cplx(0.0, 1.0) * hpsi;
  const cplx overlap = psi.dot(w);

  ExactReport rep;
  rep.energy = e / L;
  rep.variance = (h2 - e * e) / L;
  rep.gamma2 = (w.squaredNorm() / norm - std::norm(overlap) / (norm * norm)) / L;
  return rep;
}

// ---------------------------------------------------------------------------
// Numeric thermodynamic-limit environment
// ---------------------------------------------------------------------------

struct NumericEnvironment {
  Eigen::MatrixXcd g_tt, g_tp, g_pt, g_pp;  // connected Gram densities per cell
  Eigen::VectorXcd dh_theta, dh_phi;        // <dbar_mu Psi|H|Psi>_c per cell site
  double variance = 0.0;                    // connected <H^2> per site
};

namespace detail {

// Decorated transfer: T[(a',a),(b',b)] = sum_{n,n'} conj(bra^n(a',b')) q(n,n')
// ket^{n'}(a,b), rows/cols ordered (11, 12, 21, 22).
inline Eigen::Matrix4cd decorated_transfer(const std::vector<Eigen::Matrix2cd>& bra,
                                           const std::vector<Eigen::Matrix2cd>& ket,
                                           const Eigen::MatrixXcd& q) {
  Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
  for (int n = 0; n < q.rows(); ++n)
    for (int np = 0; np < q.cols(); ++np) {
      const cplx qv = q(n, np);
      if (qv == cplx(0.0, 0.0)) continue;
      for (int ap = 0; ap < 2; ++ap)
        for (int bp = 0; bp < 2; ++bp) {
          const cplx lb = std::conj(bra[n](ap, bp)) * qv;
          if (lb == cplx(0.0, 0.0)) continue;
          for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb)
              t(2 * ap + a, 2 * bp + bb) += lb * ket[np](a, bb);
        }
    }
  return t;
}

// Single-site spin operators in the occupation basis n = 0..2J.
inline Eigen::MatrixXcd op_identity(int two_j) {
  return Eigen::MatrixXcd::Identity(two_j + 1, two_j + 1);
}
inline Eigen::MatrixXcd op_projector(int two_j) {
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(two_j + 1, two_j + 1);
  q(0, 0) = 1.0;
  return q;
}
inline Eigen::MatrixXcd op_sx(int two_j) {
  const double J = 0.5 * two_j;
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(two_j + 1, two_j + 1);
  for (int n = 0; n < two_j; ++n) {
    const double v = std::sqrt(static_cast<double>((n + 1) * (two_j - n))) / (2.0 * J);
    q(n + 1, n) = v;
    q(n, n + 1) = v;
  }
  return q;
}
inline Eigen::MatrixXcd op_sz(int two_j) {
  const double J = 0.5 * two_j;
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(two_j + 1, two_j + 1);
  for (int n = 0; n <= two_j; ++n) q(n, n) = (n - J) / J;
  return q;
}

struct EnvSetup {
  int K = 0;
  int two_j = 0;
  double lambda1 = 0.0;
  double ratio2 = 0.0;  // |lambda2 / lambda1|
  int w_max = 1;
  std::vector<std::vector<Eigen::Matrix2cd>> a;  // cell site tensors
  std::vector<Eigen::Matrix4cd> t;               // rescaled plain transfers
  std::vector<Eigen::RowVector4cd> l;            // l[i] at the bond left of site i
  std::vector<Eigen::Vector4cd> r;               // r[i] at the bond left of site i
};

inline EnvSetup environment_setup(const ModelParams& p, const VariationalState& st) {
  EnvSetup env;
  env.K = p.K;
  env.two_j = p.two_j();
  env.a.resize(p.K);
  env.t.resize(p.K);
  const Eigen::MatrixXcd id = op_identity(env.two_j);
  for (int i = 0; i < p.K; ++i) {
    env.a[i] = site_tensors(st.theta[i], st.phi[i], p.J);
    env.t[i] = decorated_transfer(env.a[i], env.a[i], id);
  }
  Eigen::Matrix4cd cell = Eigen::Matrix4cd::Identity();
  for (int i = 0; i < p.K; ++i) cell *= env.t[i];

  // The cell transfer is only 4x4: take its full spectrum directly.  Rows of
  // the eigenvector-matrix inverse are the matching left eigenvectors, already
  // scaled to (l | r) = 1, so no deflation pass is needed for the subdominant
  // magnitude either.
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(cell);
  if (es.info() != Eigen::Success)
    throw convergence_error("transfer eigensolve failed");
  int i1 = 0;
  for (int k = 1; k < 4; ++k)
    if (std::abs(es.eigenvalues()(k)) > std::abs(es.eigenvalues()(i1))) i1 = k;
  const cplx lam1 = es.eigenvalues()(i1);
  if (std::abs(lam1.imag()) > 1e-9 * std::abs(lam1) || lam1.real() <= 0.0)
    throw convergence_error("dominant transfer eigenvalue is not real positive");
  env.lambda1 = lam1.real();

  double sub = 0.0;
  for (int k = 0; k < 4; ++k)
    if (k != i1) sub = std::max(sub, std::abs(es.eigenvalues()(k)));
  env.ratio2 = sub / env.lambda1;
  if (env.ratio2 > 1.0 - 1e-9)
    throw convergence_error("|lambda2/lambda1| = " + std::to_string(env.ratio2) +
                            " too close to 1 for the connected sums");
  env.w_max = env.ratio2 < 1e-16
                  ? 1
                  : static_cast<int>(std::ceil(std::log(1e-16) / std::log(env.ratio2))) + 1;

  const Eigen::Vector4cd rvec = es.eigenvectors().col(i1);
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> esl(cell.transpose());
  if (esl.info() != Eigen::Success)
    throw convergence_error("transfer eigensolve failed");
  int j1 = 0;
  for (int k = 1; k < 4; ++k)
    if (std::abs(esl.eigenvalues()(k)) > std::abs(esl.eigenvalues()(j1))) j1 = k;
  const Eigen::RowVector4cd lrow = esl.eigenvectors().col(j1).transpose();
  const cplx lr = lrow * rvec;
  if (std::abs(lr) < 1e-14)
    throw convergence_error("left/right dominant eigenvectors are numerically orthogonal");

  // Rescale so the cell product has dominant eigenvalue 1, then march the
  // in-cell environments: l_{i+1} = l_i T_i and r_i = T_i r_{i+1}.
  const double s = std::pow(env.lambda1, 1.0 / p.K);
  for (int i = 0; i < p.K; ++i) env.t[i] /= s;
  env.l.resize(p.K);
  env.r.resize(p.K);
  env.l[0] = lrow / lr;  // (l_0 | r_0) = 1
  env.r[0] = rvec;
  for (int i = 1; i < p.K; ++i) env.l[i] = env.l[i - 1] * env.t[i - 1];
  for (int i = p.K - 1; i >= 1; --i)
    env.r[i] = (i == p.K - 1) ? Eigen::Vector4cd(env.t[i] * env.r[0])
                              : Eigen::Vector4cd(env.t[i] * env.r[i + 1]);
  return env;
}

// Connected sum over placements of V (cell residue b) strictly to the right
// of U (cell residue a): separations ((b-a-1) mod K)+1 + mK for m = 0..w_max.
// Each placement subtracts the disconnected product of singles.
inline cplx connected_march(const EnvSetup& env, int a, const Eigen::Matrix4cd& u, int b,
                            const Eigen::Matrix4cd& v, bool skip_first = false) {
  const int K = env.K;
  const cplx v_single = env.l[b] * v * env.r[(b + 1) % K];

  Eigen::RowVector4cd w = env.l[a] * u;
  const int d0 = ((b - a - 1) % K + K) % K + 1;
  for (int s = 1; s < d0; ++s) w = w * env.t[(a + s) % K];

  cplx total(0.0, 0.0);
  for (int m = 0; m <= env.w_max; ++m) {
    // Disconnected subtraction with the *current* dominant weight
    // (w|r_b)(l_b|V|r_{b+1}) rather than a fixed product: the rescaled cell's
    // dominant eigenvalue is 1 only to the accuracy of the eigensolve, and a
    // fixed subtrahend would let that roundoff-level normalization error grow
    // linearly across the winding sum.
    if (!(m == 0 && skip_first))
      total += cplx(w * v * env.r[(b + 1) % K]) - cplx(w * env.r[b]) * v_single;
    for (int s = 0; s < K; ++s) w = w * env.t[(b + s) % K];
  }
  return total;
}

}  // namespace detail

inline NumericEnvironment numeric_environment(const ModelParams& p, const VariationalState& st) {
  using detail::decorated_transfer;
  const auto env = detail::environment_setup(p, st);
  const int K = p.K;
  const int tj = env.two_j;
  const double s = std::pow(env.lambda1, 1.0 / K);

  const Eigen::MatrixXcd id = detail::op_identity(tj);
  const Eigen::MatrixXcd proj = detail::op_projector(tj);
  const Eigen::MatrixXcd sx = detail::op_sx(tj);
  const Eigen::MatrixXcd sz = detail::op_sz(tj);
  const Eigen::MatrixXcd sxsx = sx * sx;
  const Eigen::MatrixXcd sxsz_sym = sx * sz + sz * sx;
  const Eigen::MatrixXcd szsz = sz * sz;
  const Eigen::MatrixXcd p_sx = proj * sx;

  // Per-cell-site decorated matrices (all rescaled like the plain transfer).
  std::vector<Eigen::Matrix4cd> t_sx(K), t_sz(K), t_h(K), t_proj(K), t_sxsx(K), t_cross(K),
      t_szsz(K), t_psx(K), t_dth(K), t_dph(K), t_bth(K), t_bph(K), t_bth_h(K), t_bph_h(K);
  std::vector<std::array<Eigen::Matrix4cd, 4>> t_gram(K);  // dbar{th,ph} x d{th,ph}
  for (int i = 0; i < K; ++i) {
    const auto& a = env.a[i];
    const auto dth = detail::site_tensors_deriv(
        coherent_coefficients_dtheta(st.theta[i], st.phi[i], p.J));
    const auto dph = detail::site_tensors_deriv(
        coherent_coefficients_dphi(st.theta[i], st.phi[i], p.J));
    const Eigen::MatrixXcd h_i = p.Omega[i] * sx + p.Delta[i] * sz;
    t_sx[i] = decorated_transfer(a, a, sx) / s;
    t_sz[i] = decorated_transfer(a, a, sz) / s;
    t_h[i] = decorated_transfer(a, a, h_i) / s;
    t_proj[i] = decorated_transfer(a, a, proj) / s;
    t_sxsx[i] = decorated_transfer(a, a, sxsx) / s;
    t_cross[i] = decorated_transfer(a, a, sxsz_sym) / s;
    t_szsz[i] = decorated_transfer(a, a, szsz) / s;
    t_psx[i] = decorated_transfer(a, a, p_sx) / s;
    t_dth[i] = decorated_transfer(a, dth, id) / s;
    t_dph[i] = decorated_transfer(a, dph, id) / s;
    t_bth[i] = decorated_transfer(dth, a, id) / s;
    t_bph[i] = decorated_transfer(dph, a, id) / s;
    t_bth_h[i] = decorated_transfer(dth, a, h_i) / s;
    t_bph_h[i] = decorated_transfer(dph, a, h_i) / s;
    t_gram[i][0] = decorated_transfer(dth, dth, id) / s;
    t_gram[i][1] = decorated_transfer(dth, dph, id) / s;
    t_gram[i][2] = decorated_transfer(dph, dth, id) / s;
    t_gram[i][3] = decorated_transfer(dph, dph, id) / s;
  }

  const auto single = [&](int i, const Eigen::Matrix4cd& t) -> cplx {
    return env.l[i] * t * env.r[(i + 1) % K];
  };

  NumericEnvironment out;
  out.g_tt = Eigen::MatrixXcd::Zero(K, K);
  out.g_tp = Eigen::MatrixXcd::Zero(K, K);
  out.g_pt = Eigen::MatrixXcd::Zero(K, K);
  out.g_pp = Eigen::MatrixXcd::Zero(K, K);
  out.dh_theta = Eigen::VectorXcd::Zero(K);
  out.dh_phi = Eigen::VectorXcd::Zero(K);

  // Gram blocks: same-site term plus both march orders.
  const std::vector<Eigen::Matrix4cd>*const bra[2] = {&t_bth, &t_bph};
  const std::vector<Eigen::Matrix4cd>*const ket[2] = {&t_dth, &t_dph};
  for (int mu = 0; mu < 2; ++mu)
    for (int nu = 0; nu < 2; ++nu) {
      Eigen::MatrixXcd& blk =
          (mu == 0) ? (nu == 0 ? out.g_tt : out.g_tp) : (nu == 0 ? out.g_pt : out.g_pp);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
          cplx g(0.0, 0.0);
          if (i == j)
            g += single(i, t_gram[i][2 * mu + nu]) -
                 single(i, (*bra[mu])[i]) * single(i, (*ket[nu])[i]);
          g += detail::connected_march(env, i, (*bra[mu])[i], j, (*ket[nu])[j]);
          g += detail::connected_march(env, j, (*ket[nu])[j], i, (*bra[mu])[i]);
          blk(i, j) = g;
        }
    }

  // <dbar_mu Psi | H | Psi>_c: same-site weighted term plus marches against
  // every Hamiltonian residue (the blockade projectors are redundant for
  // single insertions between constraint-satisfying states).
  for (int i = 0; i < K; ++i) {
    cplx th(0.0, 0.0), ph(0.0, 0.0);
    th += single(i, t_bth_h[i]) - single(i, t_bth[i]) * single(i, t_h[i]);
    ph += single(i, t_bph_h[i]) - single(i, t_bph[i]) * single(i, t_h[i]);
    for (int j = 0; j < K; ++j) {
      th += detail::connected_march(env, i, t_bth[i], j, t_h[j]);
      th += detail::connected_march(env, j, t_h[j], i, t_bth[i]);
      ph += detail::connected_march(env, i, t_bph[i], j, t_h[j]);
      ph += detail::connected_march(env, j, t_h[j], i, t_bph[i]);
    }
    out.dh_theta(i) = th;
    out.dh_phi(i) = ph;
  }

  // Connected variance per site.  Same-site XX keeps the neighbour
  // projectors (the intermediate state leaves the constrained space); the
  // d = 1 XX window keeps the surviving projector; all other pairs are plain.
  double var = 0.0;
  for (int i = 0; i < K; ++i) {
    const int im = (i + K - 1) % K, ip = (i + 1) % K, ipp = (i + 2) % K;
    const cplx sx_i = single(i, t_sx[i]);
    const cplx sz_i = single(i, t_sz[i]);

    const cplx xx_same =
        cplx(env.l[im] * t_proj[im] * t_sxsx[i] * t_proj[ip] * env.r[ipp]) - sx_i * sx_i;
    var += p.Omega[i] * p.Omega[i] * xx_same.real();
    var += p.Omega[i] * p.Delta[i] * (single(i, t_cross[i]) - 2.0 * sx_i * sz_i).real();
    var += p.Delta[i] * p.Delta[i] * (single(i, t_szsz[i]) - sz_i * sz_i).real();

    const cplx sx_ip = single(ip, t_sx[ip]);
    const cplx xx_d1 =
        cplx(env.l[im] * t_proj[im] * t_sx[i] * t_psx[ip] * env.r[ipp]) - sx_i * sx_ip;
    var += 2.0 * (p.Omega[i] * p.Omega[ip] * xx_d1).real();

    for (int j = 0; j < K; ++j) {
      const bool adjacent = ((j - i - 1) % K + K) % K + 1 == 1;
      cplx pair(0.0, 0.0);
      pair += p.Omega[i] * p.Omega[j] *
              detail::connected_march(env, i, t_sx[i], j, t_sx[j], adjacent);
      pair += p.Omega[i] * p.Delta[j] *
              detail::connected_march(env, i, t_sx[i], j, t_sz[j]);
      pair += p.Delta[i] * p.Omega[j] *
              detail::connected_march(env, i, t_sz[i], j, t_sx[j]);
      pair += p.Delta[i] * p.Delta[j] *
              detail::connected_march(env, i, t_sz[i], j, t_sz[j]);
      var += 2.0 * pair.real();
    }
  }
  out.variance = var / K;
  return out;
}

}  // namespace pxpdyn
