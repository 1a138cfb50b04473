#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pxpdyn/oracle.hpp"
#include "pxpdyn/transfer.hpp"
#include "pxpdyn/validate.hpp"
#include "support/dense_spin.hpp"

using namespace pxpdyn;

TEST_CASE("closed-form block equals the ordered product of site transfers") {
  detail::DrawBox box(21);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = box.pick(1, 9);
    std::vector<double> xs(n);
    for (auto& x : xs) x = detail::site_x(box.uni(0.05, pi - 0.05), box.pick(1, 4));
    Mat4 prod = Mat4::Identity();
    for (const double x : xs) prod *= site_transfer(x).mat;
    const TransferBlock blk = block_transfer(xs, 3);
    CHECK((blk.mat - prod).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(blk.span.first == 3);
    CHECK(blk.span.second == 3 + n - 1);

    double beta = 1.0;
    for (const double x : xs) beta *= -1.0 + x * x;
    CHECK(blk.beta == Catch::Approx(beta).margin(1e-14));
  }
}

TEST_CASE("block spectrum is {1, beta, 0, 0}") {
  detail::DrawBox box(23);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = box.pick(1, 6);
    std::vector<double> xs(n);
    for (auto& x : xs) x = detail::site_x(box.uni(0.2, pi - 0.2), box.pick(1, 4));
    const TransferBlock blk = block_transfer(xs);

    Eigen::EigenSolver<Mat4> es(blk.mat);
    std::vector<double> mags(4);
    for (int i = 0; i < 4; ++i) mags[i] = std::abs(es.eigenvalues()(i));
    std::sort(mags.begin(), mags.end());
    CHECK(mags[0] < 1e-12);
    CHECK(mags[1] < 1e-12);
    CHECK(mags[2] == Catch::Approx(std::abs(blk.beta)).margin(1e-12));
    CHECK(mags[3] == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("subleading eigenvectors of a block") {
  detail::DrawBox box(29);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = box.pick(1, 5);
    std::vector<double> xs(n);
    for (auto& x : xs) x = detail::site_x(box.uni(0.3, pi - 0.3), box.pick(1, 3));
    const TransferBlock blk = block_transfer(xs);
    const auto [r2, l2] = subleading_pair(blk, xs.front());
    CHECK((blk.mat * r2 - blk.beta * r2).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((l2 * blk.mat - blk.beta * l2).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("dominant pair reduces blocks from either side") {
  detail::DrawBox box(31);
  for (int rep = 0; rep < 25; ++rep) {
    const int K = box.pick(1, 6);
    const ModelParams p = box.params(K, box.spin(2.0));
    const VariationalState st = box.state(K, 0.2, pi - 0.3);
    const auto sites = derive_sites(p, st);
    for (int i = 0; i < K; ++i) {
      const int len = box.pick(1, K);
      std::vector<double> xs(len);
      for (int m = 0; m < len; ++m) xs[m] = sites[(i + m) % K].x;
      const int nxt = (i + len) % K;
      const TransferBlock blk = block_transfer(xs, i);
      const auto li = dominant_pair(sites[i].x, sites[i].eta);
      const auto ln = dominant_pair(sites[nxt].x, sites[nxt].eta);
      const auto [lr, rr] = reduction_check(li.l, blk, ln.r);
      CHECK((lr - ln.l).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((rr - li.r).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("operator-decorated closed forms match tensor contractions") {
  detail::DrawBox box(37);
  for (int rep = 0; rep < 40; ++rep) {
    const double J = box.spin(2.5);
    const double th = box.uni(0.2, pi - 0.2);
    const double ph = box.uni(-pi, pi);
    const ExpectationBundle e = expectations(th, ph, J, 0.0, 0.0);
    const double x = detail::site_x(th, static_cast<int>(std::lround(2.0 * J)));
    const auto A = pxpdyn::detail::site_tensors(th, ph, J);

    for (const SiteOp q :
         {SiteOp::identity, SiteOp::P, SiteOp::sx, SiteOp::sz, SiteOp::sp, SiteOp::sm}) {
      const Mat4c closed = operator_transfer(e, q, x);
      const Eigen::Matrix4cd dense =
          pxpdyn::detail::decorated_transfer(A, A, densespin::site_op(J, q));
      CHECK((closed - dense).cwiseAbs().maxCoeff() < 1e-13);
    }
    // Identity decoration reproduces the undecorated site transfer.
    const Eigen::Matrix4cd plain =
        pxpdyn::detail::decorated_transfer(A, A, densespin::identity(J));
    CHECK((site_transfer(x).mat.cast<cplx>() - plain).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("derivative-decorated closed forms match tensor contractions") {
  detail::DrawBox box(41);
  for (int rep = 0; rep < 40; ++rep) {
    const double J = box.spin(2.5);
    const double th = box.uni(0.25, pi - 0.25);
    const double ph = box.uni(-pi, pi);
    const double dt = box.uni(-1.0, 1.0), dp = box.uni(-1.0, 1.0);
    const double nt = box.uni(-1.0, 1.0), np = box.uni(-1.0, 1.0);
    const ExpectationBundle e = expectations(th, ph, J, dt, dp, nt, np);
    const double x = detail::site_x(th, static_cast<int>(std::lround(2.0 * J)));

    const auto A = pxpdyn::detail::site_tensors(th, ph, J);
    const auto cth = coherent_coefficients_dtheta(th, ph, J);
    const auto cph = coherent_coefficients_dphi(th, ph, J);
    std::vector<cplx> dmu(cth.size()), dnu(cth.size());
    for (std::size_t n = 0; n < cth.size(); ++n) {
      dmu[n] = dt * cth[n] + dp * cph[n];
      dnu[n] = nt * cth[n] + np * cph[n];
    }
    const auto dA_mu = pxpdyn::detail::site_tensors_deriv(dmu);
    const auto dA_nu = pxpdyn::detail::site_tensors_deriv(dnu);
    const auto id = densespin::identity(J);

    CHECK((derivative_transfer(DerivKind::dT, e, x) -
           pxpdyn::detail::decorated_transfer(A, dA_mu, id))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((derivative_transfer(DerivKind::dbarT, e, x) -
           pxpdyn::detail::decorated_transfer(dA_mu, A, id))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((derivative_transfer(DerivKind::dbar_dT, e, x) -
           pxpdyn::detail::decorated_transfer(dA_mu, dA_nu, id))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (const SiteOp q : {SiteOp::identity, SiteOp::sx, SiteOp::sz}) {
      CHECK((derivative_transfer(DerivKind::dT_q, e, x, q) -
             pxpdyn::detail::decorated_transfer(A, dA_mu, densespin::site_op(J, q)))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
}
