#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pxpdyn/model.hpp"
#include "pxpdyn/validate.hpp"

using namespace pxpdyn;

TEST_CASE("ipow matches std::pow for integer exponents") {
  CHECK(ipow(0.7, 0) == 1.0);
  CHECK(ipow(0.7, 1) == 0.7);
  CHECK(ipow(-0.3, 3) == Catch::Approx(std::pow(-0.3, 3)).epsilon(1e-15));
  CHECK(ipow(1.3, 7) == Catch::Approx(std::pow(1.3, 7)).epsilon(1e-14));
}

TEST_CASE("parameter validation rejects malformed inputs") {
  ModelParams p;
  p.K = 2;
  p.J = 1.0;
  p.Omega = {1.0, 0.5};
  p.Delta = {0.0, 0.0};
  REQUIRE_NOTHROW(validate(p));

  auto bad = p;
  bad.K = 0;
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = p;
  bad.J = 0.3;  // not a half-integer
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = p;
  bad.J = -0.5;
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = p;
  bad.Omega = {1.0};  // wrong length
  CHECK_THROWS_AS(validate(bad), validation_error);

  bad = p;
  bad.Delta[1] = std::nan("");
  CHECK_THROWS_AS(validate(bad), validation_error);

  VariationalState st;
  st.theta = {0.5, 1.0};
  st.phi = {0.0, 0.0};
  REQUIRE_NOTHROW(validate_state(p, st));
  st.phi = {0.0};
  CHECK_THROWS_AS(validate_state(p, st), validation_error);
  st.phi = {0.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(validate_state(p, st), validation_error);
}

TEST_CASE("theta reduction uses period 2 pi for integer J, 4 pi otherwise") {
  for (const double th : {0.3, 2.9, -1.2, 5.0}) {
    CHECK(reduce_theta(th + 2.0 * pi, 2) == Catch::Approx(reduce_theta(th, 2)).margin(1e-12));
    CHECK(reduce_theta(th + 4.0 * pi, 1) == Catch::Approx(reduce_theta(th, 1)).margin(1e-12));
    // Half-integer spins: one winding lands on the second sheet, not back.
    CHECK(std::abs(reduce_theta(th + 2.0 * pi, 1) - reduce_theta(th, 1)) > 1.0);
  }
  CHECK(reduce_theta(-0.3, 2) >= 0.0);
  CHECK(reduce_theta(-0.3, 2) < 2.0 * pi);
}

TEST_CASE("derived site monomials satisfy their defining identities") {
  detail::DrawBox box(7);
  for (int rep = 0; rep < 50; ++rep) {
    const int K = box.pick(1, 6);
    const double J = box.spin(2.0);
    const ModelParams p = box.params(K, J);
    const VariationalState st = box.state(K, 0.15, pi - 0.15);
    const auto sites = derive_sites(p, st);
    REQUIRE(static_cast<int>(sites.size()) == K);
    for (const auto& s : sites) {
      const int two_j = p.two_j();
      CHECK(s.sh2 == Catch::Approx(s.sh * s.sh).margin(1e-15));
      CHECK(s.sin_t == Catch::Approx(2.0 * s.sh * s.ch).margin(1e-14));
      CHECK(s.cos_t == Catch::Approx(s.ch2 - s.sh2).margin(1e-14));
      CHECK(s.x == Catch::Approx(ipow(s.ch, two_j)).margin(1e-14));
      CHECK(s.z == Catch::Approx(s.x2 - 1.0).margin(1e-14));
      CHECK(s.xt == Catch::Approx(s.x * s.t).epsilon(1e-12));
      CHECK(s.x2t == Catch::Approx(s.x2 * s.t).epsilon(1e-12));
      CHECK(s.x2t2 == Catch::Approx(s.x2 * s.t * s.t).epsilon(1e-12));
      CHECK(s.x2_c2 == Catch::Approx(s.x2 / s.ch2).epsilon(1e-12));
      CHECK(std::abs(s.tau - s.t * std::exp(std::complex<double>(0.0, -s.phi))) < 1e-12);
      // Band parameter: -1 + (2J tan^2(theta/2) + 1) x^2, in (-1, 0].
      CHECK(s.ctilde ==
            Catch::Approx(-1.0 + (2.0 * J * s.t * s.t + 1.0) * s.x2).margin(1e-12));
      CHECK(s.ctilde <= 1e-15);
      CHECK(s.ctilde > -1.0);
      if (two_j == 1) CHECK(std::abs(s.ctilde) < 1e-13);
    }
    // Cell eigenvalue: product of site subleading eigenvalues.
    double prod = 1.0;
    for (const auto& s : sites) prod *= s.z;
    CHECK(cell_beta(sites) == Catch::Approx(prod).margin(1e-13));
    CHECK(one_minus_cell_beta(sites) == Catch::Approx(1.0 - prod).epsilon(1e-11));
  }
}

TEST_CASE("eta closed forms: K = 1 row and the cyclic closure recursion") {
  detail::DrawBox box(11);
  for (int rep = 0; rep < 50; ++rep) {
    {
      const ModelParams p = box.params(1, box.spin(2.0));
      const VariationalState st = box.state(1, 0.1, pi - 0.1);
      const auto sites = derive_sites(p, st);
      CHECK(sites[0].eta == Catch::Approx(1.0 / (2.0 - sites[0].x2)).epsilon(1e-13));
    }
    {
      const int K = box.pick(2, 8);
      const ModelParams p = box.params(K, box.spin(2.0));
      const VariationalState st = box.state(K, 0.1, pi - 0.1);
      const auto sites = derive_sites(p, st);
      for (int i = 0; i < K; ++i) {
        const auto& cur = sites[i];
        const auto& nxt = sites[(i + 1) % K];
        CHECK(nxt.eta == Catch::Approx(1.0 - cur.eta * (1.0 - cur.x2)).margin(1e-12));
      }
    }
  }
}

TEST_CASE("degenerate cell eigenvalue detection") {
  ModelParams p;
  p.K = 2;
  p.J = 0.5;
  p.Omega = {1.0, 1.0};
  p.Delta = {0.0, 0.0};
  VariationalState st;
  st.theta = {pi, pi};  // both site eigenvalues -1, cell beta = +1
  st.phi = {0.0, 0.0};
  CHECK_THROWS_AS(derive_sites(p, st), degenerate_error);

  // Odd cells flip the sign: beta -> -1 leaves 1 - beta = 2, perfectly regular.
  ModelParams p1 = p;
  p1.K = 1;
  p1.Omega = {1.0};
  p1.Delta = {0.0};
  VariationalState st1;
  st1.theta = {pi};
  st1.phi = {0.0};
  CHECK_NOTHROW(derive_sites(p1, st1));
}
