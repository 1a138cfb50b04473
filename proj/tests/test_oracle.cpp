#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/leakage.hpp"
#include "pxpdyn/oracle.hpp"
#include "pxpdyn/transfer.hpp"
#include "pxpdyn/validate.hpp"
#include "support/dense_spin.hpp"

using namespace pxpdyn;

namespace {

using densespin::Mat;

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Full-space Hamiltonian on an L-site ring by brute-force tensor products,
// with the projector dressing written out literally.
Mat ring_hamiltonian(const ModelParams& p, int L) {
  const double J = p.J;
  const int d = densespin::dim_of(J);
  const auto at = [&](const Mat& op, int site) {
    Mat acc = Mat::Identity(1, 1);
    for (int i = 0; i < L; ++i) acc = kron(acc, i == site ? op : densespin::identity(J));
    return acc;
  };
  const int full = static_cast<int>(std::round(std::pow(d, L)));
  Mat h = Mat::Zero(full, full);
  for (int i = 0; i < L; ++i) {
    h += p.Delta[i % p.K] * at(densespin::sz(J), i);
    h += p.Omega[i % p.K] * at(densespin::proj0(J), (i + L - 1) % L) *
         at(densespin::sx(J), i) * at(densespin::proj0(J), (i + 1) % L);
  }
  return h;
}

// Full-space index of a packed constrained word under the same MSB-first
// layout, for arbitrary local dimension d.
int full_index(const ConstrainedBasis& b, std::uint64_t w, int d) {
  int idx = 0;
  for (int i = 0; i < b.L; ++i) idx = idx * d + b.occupation(w, i);
  return idx;
}

}  // namespace

TEST_CASE("constrained dimensions match the transfer-count predictions") {
  CHECK(build_basis(4, 0.5).dimension() == 7);
  CHECK(build_basis(6, 0.5).dimension() == 18);
  CHECK(build_basis(8, 0.5).dimension() == 47);
  CHECK(build_basis(4, 1.0).dimension() == 17);
  CHECK(build_basis(12, 0.5).dimension() == 322);
  for (const int L : {3, 4, 5, 6, 7}) {
    for (const double J : {0.5, 1.0, 1.5}) {
      const auto b = build_basis(L, J);
      CHECK(b.dimension() == detail::constrained_dimension(L, b.two_j));
    }
  }
}

TEST_CASE("basis words are constrained, sorted, and addressable") {
  const auto b = build_basis(6, 1.5);
  for (std::size_t r = 0; r < b.dimension(); ++r) {
    const std::uint64_t w = b.words[r];
    for (int i = 0; i < b.L; ++i) {
      const int n = b.occupation(w, i);
      CHECK(n >= 0);
      CHECK(n <= b.two_j);
      if (n > 0) CHECK(b.occupation(w, (i + 1) % b.L) == 0);
    }
    if (r > 0) CHECK(b.words[r - 1] < w);
    CHECK(b.index_of(w) == static_cast<std::ptrdiff_t>(r));
  }
  // An adjacent-excited word is not in the basis.
  std::uint64_t bad = 0;
  bad = b.with_occupation(bad, 0, 1);
  bad = b.with_occupation(bad, 1, 1);
  CHECK(b.index_of(bad) == -1);
}

TEST_CASE("basis construction rejects unusable inputs") {
  CHECK_THROWS_AS(build_basis(2, 0.5), validation_error);
  CHECK_THROWS_AS(build_basis(8, 0.5, 10), validation_error);  // 47 > 10
  CHECK_THROWS_AS(build_basis(40, 1.5, static_cast<std::size_t>(-1)), validation_error);
}

TEST_CASE("sparse Hamiltonian equals the brute-force ring restriction") {
  detail::DrawBox box(137);
  for (const double J : {0.5, 1.0}) {
    const int L = 4;
    const ModelParams p = box.params(2, J);
    const auto b = build_basis(L, J);
    const Eigen::SparseMatrix<double> h = build_hamiltonian(b, p);
    const Mat full = ring_hamiltonian(p, L);
    const int d = densespin::dim_of(J);

    const Eigen::MatrixXd dense = Eigen::MatrixXd(h);
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    for (std::size_t r = 0; r < b.dimension(); ++r)
      for (std::size_t c = 0; c < b.dimension(); ++c) {
        const cplx want = full(full_index(b, b.words[r], d), full_index(b, b.words[c], d));
        CHECK(std::abs(want.imag()) < 1e-15);
        CHECK(dense(static_cast<int>(r), static_cast<int>(c)) ==
              Catch::Approx(want.real()).margin(1e-13));
      }

    // The dressed drive never leaves the constrained subspace.
    for (std::size_t c = 0; c < b.dimension(); ++c) {
      const Eigen::VectorXcd col = full.col(full_index(b, b.words[c], d));
      double outside = 0.0;
      for (int i = 0; i < col.size(); ++i) {
        bool constrained = true;
        int idx = i;
        std::vector<int> occ(L);
        for (int s = L - 1; s >= 0; --s) {
          occ[s] = idx % d;
          idx /= d;
        }
        for (int s = 0; s < L; ++s)
          if (occ[s] > 0 && occ[(s + 1) % L] > 0) constrained = false;
        if (!constrained) outside = std::max(outside, std::abs(col(i)));
      }
      CHECK(outside < 1e-14);
    }
  }
}

TEST_CASE("diagonal Hamiltonian for zero drive") {
  ModelParams p;
  p.K = 2;
  p.J = 1.0;
  p.Omega = {0.0, 0.0};
  p.Delta = {0.7, -0.4};
  const auto b = build_basis(6, 1.0);
  const Eigen::MatrixXd h = Eigen::MatrixXd(build_hamiltonian(b, p));
  for (std::size_t r = 0; r < b.dimension(); ++r) {
    double want = 0.0;
    for (int i = 0; i < b.L; ++i)
      want += p.Delta[i % 2] * (b.occupation(b.words[r], i) - p.J) / p.J;
    for (std::size_t c = 0; c < b.dimension(); ++c) {
      const double v = h(static_cast<int>(r), static_cast<int>(c));
      if (r == c) {
        CHECK(v == Catch::Approx(want).margin(1e-13));
      } else {
        CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("matrix-product amplitudes: polar pinning and ring norm") {
  ModelParams p;
  p.K = 2;
  p.J = 1.0;
  p.Omega = {1.0, 0.8};
  p.Delta = {0.1, -0.3};

  // theta = 0 pins every site to n = 0: only the empty word survives.
  VariationalState down;
  down.theta = {0.0, 0.0};
  down.phi = {0.4, -0.9};
  const DenseState pinned = mps_to_statevector(p, down, 6);
  for (std::size_t r = 0; r < pinned.basis.dimension(); ++r) {
    const double a = std::abs(pinned.amps(static_cast<Eigen::Index>(r)));
    if (pinned.basis.words[r] == 0) {
      CHECK(a == Catch::Approx(1.0).margin(1e-13));
    } else {
      CHECK(a < 1e-13);
    }
  }

  // Generic state: statevector norm equals the transfer-trace closed form.
  detail::DrawBox box(139);
  const VariationalState st = box.state(2, 0.4, pi - 0.4);
  const int L = 8;
  const DenseState ds = mps_to_statevector(p, st, L);
  const auto sites = derive_sites(p, st);
  Mat4 cell = Mat4::Identity();
  for (const auto& s : sites) cell *= site_transfer(s.x).mat;
  Mat4 pw = Mat4::Identity();
  for (int c = 0; c < L / p.K; ++c) pw *= cell;
  CHECK(ds.amps.squaredNorm() == Catch::Approx(pw.trace()).epsilon(1e-12));

  // Words violating the blockade have identically vanishing trace.
  const auto a1 = pxpdyn::detail::site_tensors(st.theta[0], st.phi[0], p.J);
  const Eigen::Matrix2cd adj = a1[1] * a1[1];
  CHECK(adj.cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(mps_to_statevector(p, st, 5), validation_error);  // L % K != 0
}

TEST_CASE("exact report limits: zero drive and zero Hamiltonian") {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {0.0, 0.0};
  p.Delta = {0.6, -0.2};
  detail::DrawBox box(149);
  const VariationalState st = box.state(2, 0.5, pi - 0.5);
  PhaseVelocity zero;
  zero.theta_dot.assign(2, 0.0);
  zero.phi_dot.assign(2, 0.0);

  // Omega = 0, frozen state: gamma2 reduces exactly to the energy variance.
  const ExactReport a = exact_report(p, st, 8, zero);
  CHECK(a.gamma2 == Catch::Approx(a.variance).margin(1e-13));

  // H = 0, frozen state: everything vanishes.
  p.Delta = {0.0, 0.0};
  const ExactReport b = exact_report(p, st, 8, zero);
  CHECK(b.energy == 0.0);
  CHECK(std::abs(b.variance) < 1e-14);
  CHECK(std::abs(b.gamma2) < 1e-14);
}

TEST_CASE("finite-ring error shrinks geometrically with the ring length") {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {1.0, 0.9};
  p.Delta = {0.5, -0.5};
  VariationalState st;
  st.theta = {1.7, 1.2};
  st.phi = {0.3, -0.2};
  const double g2 = leakage_rate(p, st).gamma2;
  const PhaseVelocity vel = eom_exact(p, st);
  const double e6 = std::abs(exact_report(p, st, 6, vel).gamma2 - g2);
  const double e12 = std::abs(exact_report(p, st, 12, vel).gamma2 - g2);
  CHECK(e12 < std::max(0.5 * e6, 1e-13));
}

TEST_CASE("finite-ring tangent sum matches central differences of amplitudes") {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {1.0, 1.0};
  p.Delta = {0.5, -0.5};
  VariationalState st;
  st.theta = {0.5 * pi, 0.5 * pi};
  st.phi = {0.3, -0.2};
  const int L = 10;

  const PhaseVelocity vel = eom_exact(p, st);
  const ConstrainedBasis b = build_basis(L, p.J, 2000000);
  const Eigen::SparseMatrix<double> h = build_hamiltonian(b, p);
  const Eigen::VectorXcd psi = mps_amplitudes(p, st, b);

  // Velocity-weighted tangent sum by central differences in every angle.
  const double step = 1e-6;
  Eigen::VectorXcd dpsi = Eigen::VectorXcd::Zero(psi.size());
  for (int k = 0; k < p.K; ++k) {
    for (const bool is_phi : {false, true}) {
      VariationalState sp = st, sm = st;
      double* up = is_phi ? &sp.phi[k] : &sp.theta[k];
      double* um = is_phi ? &sm.phi[k] : &sm.theta[k];
      *up += step;
      *um -= step;
      const double w = is_phi ? vel.phi_dot[k] : vel.theta_dot[k];
      dpsi += w / (2.0 * step) * (mps_amplitudes(p, sp, b) - mps_amplitudes(p, sm, b));
    }
  }
  const double norm = psi.squaredNorm();
  const Eigen::VectorXcd w = dpsi + cplx(0.0, 1.0) * (h * psi);
  const cplx overlap = psi.dot(w);
  const double g2_fd = (w.squaredNorm() / norm - std::norm(overlap) / (norm * norm)) / L;

  const ExactReport ed = exact_report(p, st, L, vel);
  CHECK(ed.gamma2 == Catch::Approx(g2_fd).margin(1e-10));
}

TEST_CASE("numeric environment reproduces every closed-form block at one point") {
  ModelParams p;
  p.K = 3;
  p.J = 1.0;
  p.Omega = {1.0, -0.7, 1.3};
  p.Delta = {0.4, 0.1, -0.6};
  VariationalState st;
  st.theta = {1.1, 1.9, 0.8};
  st.phi = {0.5, -1.2, 2.1};

  const auto sites = derive_sites(p, st);
  const auto bundles = site_bundles(p, sites);
  const GramBundle g = gram_blocks(p, sites);
  const auto env = numeric_environment(p, st);

  CHECK(detail::rel_err(g.g_tt, env.g_tt) < 1e-9);
  CHECK(detail::rel_err(g.g_tp, env.g_tp) < 1e-9);
  CHECK(detail::rel_err(g.g_pt, env.g_pt) < 1e-9);
  CHECK(detail::rel_err(g.g_pp, env.g_pp) < 1e-9);

  const auto res = residuals(p, sites, bundles);
  const auto drive = detail::phi_drive(p, sites, bundles);
  Eigen::VectorXd d(p.K);
  for (int i = 0; i < p.K; ++i) d(i) = drive[i];
  const Eigen::VectorXd imtp_d = g.g_tp.imag() * d;
  const Eigen::VectorXd gpp_d = g.g_pp.real() * d;
  const double scale = env.dh_theta.cwiseAbs().maxCoeff();
  for (int i = 0; i < p.K; ++i) {
    CHECK(std::abs((res.R_theta[i] - imtp_d(i)) - env.dh_theta(i).real()) < 1e-9 * scale);
    CHECK(std::abs(res.R_phi[i] - env.dh_phi(i).real()) < 1e-9 * scale);
    CHECK(std::abs(res.I_theta[i] - env.dh_theta(i).imag()) < 1e-9 * scale);
    CHECK(std::abs((res.I_phi[i] + gpp_d(i)) - env.dh_phi(i).imag()) < 1e-9 * scale);
  }

  CHECK(detail::rel_err(energy_variance(p, st).total, env.variance) < 1e-9);
}
