#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "forch/bounds.hpp"
#include "forch/solver.hpp"

using namespace forch;

namespace {

// closed forms the two-term gas law (a = lambda = 1/2) admits
struct GasClosed {
  double r_star, theta, mu1, r_tilde, theta_tilde, mu1_tilde, kappa, m;
};

GasClosed gas_closed(int n, double r1, double alpha, double r) {
  GasClosed c;
  c.r_star = (n == 2 ? 7.0 / 4.0 : 3.0 / 2.0) - 1.0 / r1;
  c.theta = (alpha + 2.0 * r) / (alpha * (1.0 + c.r_star));
  c.mu1 = r * (1.0 + c.r_star) * alpha / (c.r_star * alpha - 2.0 * r);
  c.r_tilde = 3.0 * r;
  c.theta_tilde = (alpha + 6.0 * r) / (alpha * (1.0 + c.r_star));
  c.mu1_tilde = 3.0 * r * (1.0 + c.r_star) * alpha / (c.r_star * alpha - 6.0 * r);
  c.kappa = 1.0 + c.r_star / 2.0;
  c.m = 2.0 * alpha / 3.0;
  return c;
}

ExponentBook gas_book(int n, double r1, double r, double alpha0, double kt) {
  return build_exponents(n, 0.5, 0.5, r1, r, alpha0, kt);
}

template <class Fn>
std::string admissibility_message(Fn&& fn) {
  try {
    fn();
  } catch (const AdmissibilityError& e) {
    return e.what();
  }
  return "";
}

EmbeddingConstants pinned_constants(double r1) {
  EmbeddingConstants ec;
  ec.p = 1.5;
  ec.r1 = r1;
  ec.c1 = 1.1;
  ec.c2 = 2.0;
  ec.c3 = 2.0;
  ec.c4 = 2.0;
  ec.c5 = 8.0;
  ec.c6 = 1.3;
  ec.c7 = 1.7;
  return ec;
}

// the all-ones square scenario: unit box, unit coefficients, so every weight
// field is spatially constant and each integral collapses to a power
struct AllOnes {
  Grid g;
  SpatialField ones;
  ForchheimerLaw law;
  WeightFields W;
  BoundaryField psi0;

  AllOnes()
      : g(Grid::make(2, {8, 8, 1}, {0, 0, 0}, {1, 1, 1})),
        ones(SpatialField::constant(g, 1.0)),
        law(preset_law("two_term", g, {ones, ones})),
        W(compute_weights(law)),
        psi0(BoundaryField::constant(g, 0.0)) {}
};

}  // namespace

TEST_CASE("gas law exponents at the reference instance match hand values") {
  for (auto [n, r1] :
       {std::pair<int, double>{2, 2.0 / 3.0}, std::pair<int, double>{3, 0.8}}) {
    const auto b = gas_book(n, r1, 1.0, 40.0 / 1.03, 1.03);
    CHECK(b.alpha == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(b.p == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(b.s == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(b.r_star == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(b.theta == doctest::Approx(0.84).epsilon(1e-13));
    CHECK(b.mu1 == doctest::Approx(6.25).epsilon(1e-13));
    CHECK(b.r_tilde == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(b.theta_tilde == doctest::Approx(0.92).epsilon(1e-13));
    CHECK(b.mu1_tilde == doctest::Approx(37.5).epsilon(1e-13));
    CHECK(b.mu_max == doctest::Approx(37.5).epsilon(1e-13));
    CHECK(b.mu_min == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(b.kappa == doctest::Approx(1.125).epsilon(1e-13));
    CHECK(b.m == doctest::Approx(80.0 / 3.0).epsilon(1e-13));
    CHECK(b.h1 == 1.5);
    CHECK(b.h2 == 0.0);
    CHECK(b.h3 == 0.0);
  }
}

TEST_CASE("inadmissible parameters are rejected with the violated condition") {
  CHECK(admissibility_message([] { gas_book(3, 0.5, 1.0, 40.0, 1.03); })
            .find("r1_window") != std::string::npos);
  CHECK(admissibility_message([] { gas_book(2, 2.0 / 3.0, 0.0, 40.0, 1.03); })
            .find("r_lower") != std::string::npos);
  CHECK(admissibility_message([] { gas_book(3, 0.8, 1.0, 40.0, 1.2); })
            .find("kappa_tilde_window") != std::string::npos);
  CHECK(admissibility_message([] { gas_book(3, 0.8, 1.0, 1.0, 1.03); })
            .find("alpha_interior") != std::string::npos);
  CHECK(admissibility_message([] {
          build_exponents(3, 0.5, 0.5, 0.8, 1.0, 40.0, 1.03,
                          std::array<double, 5>{1.2, 1.015, 1.0075, 1.0075, 1.005});
        }).find("holder_chain") != std::string::npos);
  // negative r_tilde: lambda < 1/2 with r barely above the floor
  CHECK(admissibility_message([] {
          build_exponents(3, 0.5, 0.25, 0.8, 0.05, 40.0, 1.03);
        }).find("r_tilde_positive") != std::string::npos);
  CHECK_THROWS_AS(build_exponents(4, 0.5, 0.5, 0.8, 1.0, 40.0, 1.03),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_exponents(3, 1.2, 0.5, 0.8, 1.0, 40.0, 1.03),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_exponents(3, 0.5, 0.7, 0.8, 1.0, 40.0, 1.03),
                  std::invalid_argument);
}

TEST_CASE("conjugate exponents, recorded conditions, and the beta ladder") {
  const auto b = gas_book(3, 0.8, 1.0, 40.0 / 1.03, 1.03);
  CHECK(1.0 / b.p1 + 1.0 / b.q1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(1.0 / b.p2 + 1.0 / b.q2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(1.0 / b.p3 + 1.0 / b.q3 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(1.0 / b.p4 + 1.0 / b.q4 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(1.0 / b.p5 + 1.0 / b.q5 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.p1 < b.kappa_tilde);
  CHECK(b.p3 * b.p4 < b.kappa_tilde);
  CHECK(b.p6 == doctest::Approx(b.p5 * (b.p3 * 1.5 - 1.0) / 0.5).epsilon(1e-14));
  CHECK(b.p6 < b.kappa_tilde);
  CHECK(b.m == doctest::Approx((b.alpha + 1.0 - b.lambda - b.a) / (2.0 - b.a))
                   .epsilon(1e-15));
  CHECK(b.h1 == b.lambda + 1.0);
  for (const auto& c : b.conditions) {
    INFO(c.id);
    CHECK(c.ok);
  }
  REQUIRE(b.beta.size() >= 3);
  for (std::size_t j = 0; j < b.beta.size(); ++j)
    CHECK(b.beta[j] ==
          doctest::Approx(b.alpha0 * std::pow(b.kappa_tilde, double(j))).epsilon(1e-13));
  CHECK(b.nu1 == doctest::Approx(b.ladder_lower(b.alpha)).epsilon(1e-15));
  CHECK(b.nu2 == doctest::Approx(b.ladder_upper(b.alpha)).epsilon(1e-15));
  CHECK(b.nu1 < b.alpha);
  CHECK(b.nu2 > b.alpha);
  CHECK(!b.products_ready());
  CHECK(moser_products(b).products_ready());
}

TEST_CASE("random gas instances match the closed forms") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = (rng() % 2) ? 2 : 3;
    const double r1 = 0.68 + 0.27 * U(rng);
    const double rs = (n == 2 ? 1.75 : 1.5) - 1.0 / r1;
    const double r = 0.05 + 1.95 * U(rng);
    const double kt_hi = std::sqrt(1.0 + rs / 2.0);
    const double kt = 1.0 + (0.25 + 0.5 * U(rng)) * (kt_hi - 1.0);
    const double alpha0 = 1.5 * std::max(1.5, 6.0 * r / (kt * rs));
    const auto b = gas_book(n, r1, r, alpha0, kt);
    const auto c = gas_closed(n, r1, b.alpha, r);
    CHECK(b.r_star == doctest::Approx(c.r_star).epsilon(1e-12));
    CHECK(b.theta == doctest::Approx(c.theta).epsilon(1e-12));
    CHECK(b.mu1 == doctest::Approx(c.mu1).epsilon(1e-12));
    CHECK(b.r_tilde == doctest::Approx(c.r_tilde).epsilon(1e-12));
    CHECK(b.theta_tilde == doctest::Approx(c.theta_tilde).epsilon(1e-12));
    CHECK(b.mu1_tilde == doctest::Approx(c.mu1_tilde).epsilon(1e-12));
    CHECK(b.mu_max == doctest::Approx(c.mu1_tilde).epsilon(1e-12));
    CHECK(b.kappa == doctest::Approx(c.kappa).epsilon(1e-12));
    CHECK(b.m == doctest::Approx(c.m).epsilon(1e-12));
    const auto tab = example_gas_tables(n, r1, alpha0, r, kt);
    INFO("trial " << trial << " n=" << n << " r1=" << r1 << " r=" << r << " kt=" << kt);
    CHECK(tab.pass);
    CHECK(tab.rows.size() >= 20);
  }
}

TEST_CASE("data integrals on the all-ones box reduce to closed powers") {
  AllOnes s;
  const auto b = moser_products(gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03));
  CHECK(s.W.W1[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.W.W3[0] == doctest::Approx(0.5 + std::sqrt(2.0)).epsilon(1e-13));

  const auto d =
      compute_data_integrals(b, s.ones, s.W, s.ones, s.psi0, 1.0, b.alpha, b.r);
  CHECK(d.K1.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.K2.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.K3.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.K4.value() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(d.K5.lg == doctest::Approx(41.0 * std::log(0.5 + std::sqrt(2.0))).epsilon(1e-13));
  const double k6_exp =
      -1.0 / (0.5 * (1.0 - b.theta_tilde) * (1.0 + b.mu1_tilde / b.alpha));
  CHECK(d.K6.lg == doctest::Approx(k6_exp * std::log(0.5)).epsilon(1e-13));
  CHECK(d.Psi_T.value() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.Phi_star.value() == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(d.N2.value() ==
        doctest::Approx(std::pow(std::pow(4.0, 1.0 / 3.0) + 1.0, 1.5)).epsilon(1e-12));
  const double W3 = 0.5 + std::sqrt(2.0);
  const double n1 =
      2.0 * (3.0 + W3 + std::pow(0.5, -1.0 / (1.5 * b.p3 - 1.0)));
  CHECK(d.N1.value() == doctest::Approx(n1).epsilon(1e-12));
  CHECK(d.N3.lg == doctest::Approx(std::max(d.N1.lg, d.N2.lg)).epsilon(1e-15));
  CHECK(!d.warn_volume_weights);
  CHECK(!d.warn_parabolic_weights);

  // zero phi cell: negative powers of phi are pinned as errors, not inf
  auto bad_phi = s.ones;
  bad_phi[5] = 0.0;
  CHECK_THROWS_AS(
      compute_data_integrals(b, bad_phi, s.W, s.ones, s.psi0, 1.0, b.alpha, b.r),
      std::invalid_argument);
  CHECK_THROWS_AS(
      compute_data_integrals(b, s.ones, s.W, s.ones, s.psi0, 0.0, b.alpha, b.r),
      std::invalid_argument);
  CHECK_THROWS_AS(
      compute_data_integrals(b, s.ones, s.W, s.ones, s.psi0, 1.0, b.alpha + 0.1, b.r),
      std::invalid_argument);
}

TEST_CASE("a near-degenerate weight cell raises the resolution warning") {
  AllOnes s;
  const auto b = moser_products(gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03));
  auto spiky = s.ones;
  spiky[9] = 1e-30;
  const auto d =
      compute_data_integrals(b, spiky, s.W, s.ones, s.psi0, 1.0, b.alpha, b.r);
  CHECK(d.warn_volume_weights);
  CHECK(d.warn_parabolic_weights);
  CHECK(!d.warning_note.empty());
}

TEST_CASE("boundary forcing series integrates the negative part only") {
  AllOnes s;
  // psi >= 0 contributes nothing
  auto M0 = boundary_forcing_series(s.psi0, 3.0, 1.0, 1.0);
  for (double v : M0.v) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  // psi = -2 on the whole perimeter (length 4): M = 1 + 2^q * 4, q = 4
  auto psin = BoundaryField::constant(s.g, -2.0);
  auto M1 = boundary_forcing_series(psin, 3.0, 1.0, 1.0);
  for (double v : M1.v) CHECK(v == doctest::Approx(1.0 + 16.0 * 4.0).epsilon(1e-13));

  // time-dependent: psi = -t, M(t) = 1 + 4 t^4 at the sample stamps
  auto psit = BoundaryField::from(
      s.g, {0.0, 1.0}, [](std::array<double, 3>, double t) { return -t; });
  auto M2 = boundary_forcing_series(psit, 3.0, 1.0, 1.0);
  CHECK(M2.v.front() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(M2.at(1.0) == doctest::Approx(5.0).epsilon(1e-13));

  CHECK_THROWS_AS(boundary_forcing_series(s.psi0, 3.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(boundary_forcing_series(s.psi0, 3.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("weighted power agrees with the norm and rejects bad fields") {
  AllOnes s;
  auto u = SpatialField::from(
      s.g, [](std::array<double, 3> x) { return 0.3 + x[0] * x[0] + 0.5 * x[1]; });
  const double alpha = 7.0;
  const Mag e = phi_weighted_power(s.ones, u, alpha);
  CHECK(e.value() ==
        doctest::Approx(std::pow(weighted_lp_norm(u, s.ones, alpha), alpha))
            .epsilon(1e-12));

  auto uz = SpatialField::constant(s.g, 0.0);
  CHECK(phi_weighted_power(s.ones, uz, alpha).is_zero());
  uz[3] = 2.0;  // single support cell
  CHECK(phi_weighted_power(s.ones, uz, alpha).value() ==
        doctest::Approx(std::pow(2.0, alpha) / 64.0).epsilon(1e-13));

  auto un = s.ones;
  un[0] = -1.0;
  CHECK_THROWS_AS(phi_weighted_power(s.ones, un, alpha), std::invalid_argument);
  auto pz = s.ones;
  pz[0] = 0.0;
  CHECK_THROWS_AS(phi_weighted_power(pz, u, alpha), std::invalid_argument);
}

TEST_CASE("the assembled constant chain matches a straight-line recomputation") {
  AllOnes s;
  const auto b = moser_products(gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03));
  const auto d =
      compute_data_integrals(b, s.ones, s.W, s.ones, s.psi0, 1.0, b.alpha, b.r);
  const auto ec = pinned_constants(2.0 / 3.0);
  const double C_Z = std::pow(2.0, -0.5);  // makes C1 = 1 exactly
  auto pc = compute_Zstar(b, d, C_Z, ec);
  CHECK(pc.C1 == doctest::Approx(1.0).epsilon(1e-14));

  const double a = 0.5, lam = 0.5, al = b.alpha, r = b.r, p = 1.5;
  const double th = b.theta, tt = b.theta_tilde, mt = b.mu1_tilde;
  const double m = b.m, r1 = b.r1;
  const double K2 = 1.0, K3 = 1.0, K4 = 4.0;
  const double K5 = std::pow(0.5 + std::sqrt(2.0), 41.0);
  const double K6 = std::pow(0.5, -1.0 / (0.5 * (1.0 - tt) * (1.0 + mt / al)));
  const double c0 = std::pow(2.0, a - 1.0), C1 = 1.0;
  const double eps2 = c0 / 8.0, eps3 = c0 * (al - lam) / 24.0;
  const double C2 = std::pow(2.0 * C1, (al + r) / (r - lam * (3.0 - 2.0 * a) + 1.0));
  const double D1t = std::pow(ec.c4 * std::pow(2.0, m), th * p);
  const double D2t = std::pow(ec.c3 * m * std::pow(2.0, m), th * p / (1.0 - th));
  const double D1tt = std::pow(ec.c4 * std::pow(2.0, m), tt * p);
  const double D2tt = std::pow(ec.c3 * m * std::pow(2.0, m), tt * p / (1.0 - tt));
  const double Phi1 = std::pow(K2, th * (al * 0.5 - 0.5 + 0.5) / al);  // K1 = 1
  const double Phi2 = std::pow(K4, th * (1.0 - r1) / (r1 * (1.0 - th)));
  const double Phi5 = std::pow(K6, 1.0 + mt / al);
  const double Phi6 =
      std::pow(K2, tt * (al * 0.5) / al) * std::pow(Phi5, 1.0 - tt);
  const double Phi7 = std::pow(K4, tt * (1.0 - r1) / (r1 * (1.0 - tt))) * Phi5;
  const double Z1 =
      std::max(D1t * Phi1, std::pow(eps2, -th / (1.0 - th)) * D2t * Phi2);
  const double Z2 = std::pow(K3, (lam + 1.0) / al);
  const double c6ar = ec.c6 * (al + r);
  const double t1 = ec.c5 * D1t * Phi1;
  const double t2 = std::pow(eps3, -th / (1.0 - th)) *
                    std::pow(ec.c5, 1.0 / (1.0 - th)) * D2t * Phi2;
  const double t3 = std::pow(eps3, -1.0 / (1.0 - a)) *
                    std::pow(c6ar, (2.0 - a) / (1.0 - a)) * D1tt * Phi6;
  const double t4 =
      std::pow(eps3, -(1.0 / (1.0 - a) + (2.0 - a) / (1.0 - a) * tt / (1.0 - tt))) *
      std::pow(c6ar, (2.0 - a) / ((1.0 - a) * (1.0 - tt))) * D2tt * Phi7;
  const double Z3 = std::max({t1, t2, t3, t4});
  const double Z4 = 2.0 * ((al - lam) * Z1 + Z3) + 0.5 * (al - lam) * Z2 + 2.0 * Z3;
  const double Zs = (al / lam) * std::max({1.0, Z4, C2 * (al - lam) * K5});

  CHECK(pc.Z1.lg == doctest::Approx(std::log(Z1)).epsilon(1e-12));
  CHECK(pc.Z2.lg == doctest::Approx(std::log(Z2)).epsilon(1e-12));
  CHECK(pc.Z3.lg == doctest::Approx(std::log(Z3)).epsilon(1e-12));
  CHECK(pc.Z4.lg == doctest::Approx(std::log(Z4)).epsilon(1e-12));
  CHECK(pc.C2.lg == doctest::Approx(std::log(C2)).epsilon(1e-12));
  CHECK(pc.Zstar.lg == doctest::Approx(std::log(Zs)).epsilon(1e-12));
  CHECK(pc.Zstar.lg >= std::log(al / lam) - 1e-12);

  const double c10 =
      20.0 * std::max({2.0 * C1, 4.0 * lam, std::pow(ec.c5, 1.0 / b.p3),
                       std::pow(4.0 * std::pow(2.0 * ec.c6 * b.p3, 1.5),
                                1.0 / (1.5 * b.p3 - 1.0))});
  CHECK(pc.c10.lg == doctest::Approx(std::log(c10)).epsilon(1e-13));
  const double c11_lg = (4.0 + b.r_star) * std::log(2.0) +
                        std::log(std::max(1.0, std::pow(ec.c7, 1.5))) +
                        (1.0 + b.r_star / 2.0) * std::log(8.0 * c10);
  CHECK(pc.c11.lg == doctest::Approx(c11_lg).epsilon(1e-12));

  // mismatched calibration is refused
  auto ec_bad = ec;
  ec_bad.p = 1.7;
  CHECK_THROWS_AS(compute_Zstar(b, d, C_Z, ec_bad), std::invalid_argument);
  CHECK_THROWS_AS(compute_Zstar(b, d, -1.0, ec), std::invalid_argument);
}

TEST_CASE("bound curve threshold and values from a hand-checkable instance") {
  const auto b = gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03);
  ProofConstants pc;
  pc.Zstar = Mag::from(80.0);
  TimeSeries M;
  M.push(0.0, 1.0);

  auto rep = alpha_bound_curve(b, pc, Mag::one(), M);
  // alpha/(3 Zstar mu_max) = 40/9000 with V0 = 1
  CHECK(rep.T_threshold == doctest::Approx(40.0 / 9000.0).epsilon(1e-14));
  CHECK(bound_value_at(rep, 0.0).value() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(bound_value_at(rep, rep.T_threshold / 2.0).value() ==
        doctest::Approx(std::pow(2.0, 16.0 / 15.0)).epsilon(1e-12));
  REQUIRE(rep.t.size() == rep.V.size());
  REQUIRE(rep.t.size() > 260);
  CHECK(rep.t.front() == 0.0);
  CHECK(rep.V.front().value() == doctest::Approx(1.0).epsilon(1e-13));
  for (std::size_t i = 1; i < rep.V.size(); ++i) {
    CHECK(rep.t[i] > rep.t[i - 1]);
    CHECK(rep.V[i].lg >= rep.V[i - 1].lg - 1e-12);
  }
  // past the threshold the curve is +infinity: huge log, not representable
  const Mag beyond = bound_value_at(rep, rep.T_threshold * 1.000001);
  CHECK(!beyond.representable());
  CHECK(beyond.lg >= 1e17);

  // V(0) = V0 exactly through the log-space round trip
  auto rep2 = alpha_bound_curve(b, pc, Mag::from(2.0), M);
  CHECK(bound_value_at(rep2, 0.0).value() == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(rep2.T_threshold < rep.T_threshold);  // larger V0, earlier threshold

  // input validation
  TimeSeries bad;
  bad.push(0.0, 0.5);
  CHECK_THROWS_AS(alpha_bound_curve(b, pc, Mag::one(), bad), std::invalid_argument);
  CHECK_THROWS_AS(alpha_bound_curve(b, pc, Mag::from(0.5), M), std::invalid_argument);
  ProofConstants empty;
  CHECK_THROWS_AS(alpha_bound_curve(b, empty, Mag::one(), M), std::invalid_argument);
  CHECK_THROWS_AS(alpha_bound_curve(b, pc, Mag::one(), M, 50.0, nullptr),
                  std::invalid_argument);
}

TEST_CASE("bound curve agrees with direct integration of its Bernoulli ODE") {
  // V' = 3 Zstar M(t) V^(1 + mu_max/alpha), V(0) = V0, same closed form
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double al = 5.0 + 95.0 * U(rng);
    const double mu = al * (0.05 + 0.9 * U(rng));
    const double Z = std::pow(10.0, 3.0 * U(rng));
    const double V0 = 1.0 + 9.0 * U(rng);
    const double c = 2.0 * U(rng), w = 1.0 + 20.0 * U(rng), dd = U(rng);

    BoundReport rep;
    rep.alpha = al;
    rep.mu_max = mu;
    rep.Zstar = Mag::from(Z);
    rep.V0 = Mag::from(V0);
    const double rhs = al / (3.0 * Z * mu) * std::pow(V0, -mu / al);
    const int S = 2000;
    for (int i = 0; i <= S; ++i) {
      const double tt = 1.2 * rhs * i / S;
      rep.M.push(tt, 1.0 + c * std::fabs(std::sin(w * tt)) + dd * tt);
    }
    double lo = 0.0, hi = 1.2 * rhs;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (rep.M.integral_to(mid) < rhs ? lo : hi) = mid;
    }
    const double Tq = 0.9 * 0.5 * (lo + hi);

    double V = V0;
    const int steps = 20000;
    const double h = Tq / steps;
    auto f = [&](double tt, double v) {
      return 3.0 * Z * rep.M.at(tt) * std::pow(v, 1.0 + mu / al);
    };
    for (int k = 0; k < steps; ++k) {
      const double tt = k * h;
      const double k1 = f(tt, V);
      const double k2 = f(tt + h / 2, V + h / 2 * k1);
      const double k3 = f(tt + h / 2, V + h / 2 * k2);
      const double k4 = f(tt + h, V + h * k3);
      V += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    INFO("trial " << trial << " alpha=" << al << " mu=" << mu << " Z=" << Z);
    CHECK(bound_value_at(rep, Tq).value() == doctest::Approx(V).epsilon(1e-5));
  }
}

TEST_CASE("the unweighted curve is the weighted one to the power beta/alpha") {
  AllOnes s;
  const auto b = gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03);
  ProofConstants pc;
  pc.Zstar = Mag::from(80.0);
  TimeSeries M;
  M.push(0.0, 1.0);
  // phi = 1: C_{alpha,beta} = 1 and U_beta = V^(beta/alpha)
  auto rep = alpha_bound_curve(b, pc, Mag::from(2.0), M, b.alpha / 2.0, &s.ones);
  CHECK(rep.beta == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(rep.C_alpha_beta.value() == doctest::Approx(1.0).epsilon(1e-13));
  REQUIRE(rep.U_beta.size() == rep.V.size());
  for (std::size_t i = 0; i < rep.V.size(); ++i)
    CHECK(rep.U_beta[i].lg == doctest::Approx(0.5 * rep.V[i].lg).epsilon(1e-12));
  CHECK_THROWS_AS(alpha_bound_curve(b, pc, Mag::from(2.0), M, b.alpha, &s.ones),
                  std::invalid_argument);
}

TEST_CASE("iteration products: stability, tail control, and closed sums") {
  // enormous alpha0: every factor is 1 + O(1/alpha0), products collapse to 1
  const auto huge = moser_products(gas_book(3, 0.8, 1.0, 1e9, 1.03));
  CHECK(std::fabs(huge.mu_tilde - 1.0) < 1e-6);
  CHECK(std::fabs(huge.nu_tilde - 1.0) < 1e-6);

  const auto bk = moser_products(gas_book(3, 0.8, 1.0, 40.0 / 1.03, 1.03));
  // direct product over 2000 rungs (far past the truncation point)
  const double cc = 1.0 + bk.r_star / 2.0;
  double lmu = 0.0, lnu = 0.0, ssum = 0.0;
  for (int j = 0; j < 2000; ++j) {
    const double bj = bk.alpha0 * std::pow(bk.kappa_tilde, double(j));
    lmu += std::log((1.0 - bk.h1 / bj) / (1.0 + 1.0 / (bj * cc)));
    lnu += std::log((1.0 + bk.h3 / bj) / (1.0 - bk.lambda / (bj * cc)));
    ssum += (j + 1.0) / bj;
  }
  CHECK(bk.mu_tilde == doctest::Approx(std::exp(lmu)).epsilon(1e-12));
  CHECK(bk.nu_tilde == doctest::Approx(std::exp(lnu)).epsilon(1e-12));
  CHECK(std::fabs(std::log(bk.nu_tilde) - lnu) <= bk.moser_tail_bound + 1e-15);
  CHECK(bk.sum_j_over_beta == doctest::Approx(ssum).epsilon(1e-12));
  CHECK(bk.sum_j_over_beta ==
        doctest::Approx(1.0 / (bk.alpha0 * std::pow(1.0 - 1.0 / bk.kappa_tilde, 2.0)))
            .epsilon(1e-13));
  // explicit cap: every factor obeys 1/(1-x_j) <= exp(x_j/(1-x_0)) with
  // x_j = 1/(beta_j(2+r*)), so nu_tilde <= exp{x_0/((1-x_0)(1-1/kappa_tilde))}
  const double x0 = 1.0 / (bk.alpha0 * (2.0 + bk.r_star));
  CHECK(bk.nu_tilde <=
        std::exp(x0 / ((1.0 - x0) * (1.0 - 1.0 / bk.kappa_tilde))) * (1.0 + 1e-12));
  CHECK(bk.moser_terms > 100);
  CHECK(bk.moser_terms < 100000);
  CHECK(bk.omega1 == doctest::Approx((2.0 + bk.r_star / 2.0) * bk.omega).epsilon(1e-14));
  CHECK(bk.omega2 == doctest::Approx((1.0 + bk.r_star / 2.0) * bk.omega).epsilon(1e-14));
  CHECK(bk.omega3 == doctest::Approx((3.0 + bk.r_star / 2.0) * bk.omega).epsilon(1e-14));

  // tightening the truncation tolerance does not move the products
  const auto b16 = moser_products(gas_book(3, 0.8, 1.0, 40.0 / 1.03, 1.03), 1e-16);
  CHECK(std::fabs(b16.mu_tilde - bk.mu_tilde) < 1e-12);
  CHECK(std::fabs(b16.nu_tilde - bk.nu_tilde) < 1e-12);
  CHECK(b16.moser_terms >= bk.moser_terms);
}

TEST_CASE("iteration bound on the exact doubling family") {
  std::vector<double> kap, rr, ss, om;
  for (int j = 0; j < 30; ++j) {
    kap.push_back(std::pow(2.0, j + 1));
    rr.push_back(kap.back());
    ss.push_back(kap.back());
    om.push_back(1.0);
  }
  const auto res = genn_bound(2.0, 1.0, kap, rr, ss, om, 30);
  // y_j = 2^(2 - 2^(1-j)) climbs to exactly the bound (2A)^alpha_bar = 4
  CHECK(res.bound.value() == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(res.G == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(res.beta_bar == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.gamma_bar == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.alpha_bar == doctest::Approx(1.0 - std::pow(2.0, -30.0)).epsilon(1e-13));
  REQUIRE(res.iterates.size() == 31);
  CHECK(res.iterates.back().lg ==
        doctest::Approx((2.0 - std::pow(2.0, -29.0)) * std::log(2.0)).epsilon(1e-12));
  CHECK(res.verified);

  // zero start stays at zero
  const auto z = genn_bound(2.0, 0.0, kap, rr, ss, om, 30);
  CHECK(z.bound.is_zero());
  CHECK(z.iterates.back().is_zero());
  CHECK(z.verified);
}

TEST_CASE("iteration bound dominates direct iteration on random families") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int len = 200;
    const double base = 1.0 + 3.0 * U(rng);
    const double growth = 1.5 + 1.5 * U(rng);
    const double shrink = 0.3 + 0.7 * U(rng);
    std::vector<double> kap(len), rr(len), ss(len), om(len);
    double gamma_tail = 1.0;
    for (int j = 0; j < len; ++j) {
      kap[j] = base * std::pow(growth, j);
      const double gamma_j = 1.0 + 0.3 * std::pow(0.7, j);
      ss[j] = gamma_j * kap[j];
      rr[j] = shrink * gamma_j * kap[j];
      om[j] = j + 1.0;
      if (j >= 1) gamma_tail *= gamma_j;
    }
    const double A = 1.0 + 49.0 * U(rng);
    const double y0 = 0.2 + 2.8 * U(rng);
    const auto res = genn_bound(A, y0, kap, rr, ss, om, len);
    INFO("trial " << trial << " A=" << A << " y0=" << y0);
    CHECK(res.verified);
    CHECK(res.G == doctest::Approx(gamma_tail).epsilon(1e-12));
    CHECK(res.iterates.back().lg <= res.bound.lg + 1e-9);
  }
}

TEST_CASE("iteration bound on the actual sup-norm ladder family") {
  const auto bk = moser_products(gas_book(3, 0.8, 1.0, 40.0 / 1.03, 1.03));
  const int len = 800;
  std::vector<double> kap(len), rr(len), ss(len), om(len);
  for (int j = 0; j < len; ++j) {
    const double bj = bk.alpha0 * std::pow(bk.kappa_tilde, double(j));
    kap[j] = bj;
    om[j] = j + 1.0;
    rr[j] = bk.ladder_lower(bj);
    ss[j] = bk.ladder_upper(bj);
  }
  const auto res = genn_bound(5.0, 2.0, kap, rr, ss, om, len);
  CHECK(res.verified);
  CHECK(res.alpha_bar == doctest::Approx(bk.sum_j_over_beta).epsilon(1e-6));
  CHECK(res.G == doctest::Approx(bk.G).epsilon(1e-8));
  CHECK(res.gamma_bar == doctest::Approx(bk.nu_tilde).epsilon(1e-8));
  CHECK(res.beta_bar == doctest::Approx(bk.mu_tilde).epsilon(1e-8));
}

TEST_CASE("iteration bound rejects families outside the lemma hypotheses") {
  std::vector<double> kap{2, 4}, rr{2, 4}, ss{2, 4}, om{1, 1};
  CHECK_THROWS_AS(genn_bound(0.9, 1.0, kap, rr, ss, om, 2), std::invalid_argument);
  CHECK_THROWS_AS(genn_bound(2.0, -1.0, kap, rr, ss, om, 2), std::invalid_argument);
  CHECK_THROWS_AS(genn_bound(2.0, 1.0, kap, rr, ss, {1, 1, 1}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(genn_bound(2.0, 1.0, kap, rr, ss, om, 5), std::invalid_argument);
  std::vector<double> s_small{1.0, 4};
  CHECK_THROWS_AS(genn_bound(2.0, 1.0, kap, rr, s_small, om, 2), std::invalid_argument);
  std::vector<double> om_small{0.5, 1};
  CHECK_THROWS_AS(genn_bound(2.0, 1.0, kap, rr, ss, om_small, 2), std::invalid_argument);
  // omega_j/kappa_j = 1 forever: the exponent sum diverges
  std::vector<double> flat(50, 1.0);
  CHECK(admissibility_message([&] { genn_bound(2.0, 1.0, flat, flat, flat, flat, 0); })
            .find("divergent") != std::string::npos);
}

TEST_CASE("sup bound assembly, certification, and epsilon scaling") {
  AllOnes s;
  const auto bk = moser_products(gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03));
  const auto d =
      compute_data_integrals(bk, s.ones, s.W, s.ones, s.psi0, 1.0, bk.alpha, bk.r);
  const auto ec = pinned_constants(2.0 / 3.0);
  auto pc = compute_Zstar(bk, d, std::pow(2.0, -0.5), ec);

  const auto M = boundary_forcing_series(s.psi0, bk.alpha, bk.r, 1.0);
  const Mag E0 = phi_weighted_power(s.ones, s.ones, bk.alpha);  // = 1
  const Mag V0 = Mag::add(Mag::one(), E0);                      // = 2
  const Mag u0n = E0.pow(1.0 / bk.alpha);                       // = 1
  auto partial = alpha_bound_curve(bk, pc, V0, M);
  REQUIRE(partial.T_threshold > 0.0);

  const double T = 0.5 * partial.T_threshold;
  const double eps = T / 4.0;
  auto rep = linfty_bound(bk, d, pc, partial, T, eps, u0n);
  CHECK(rep.certified);
  // M = 1: delta_T = T / T_threshold = 1/2 by construction
  CHECK(rep.delta_T.value() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.Linf_bound.lg > 0.0);

  // independent assembly of the same bound in plain log arithmetic
  const double ln2 = std::log(2.0);
  const double lg_inner = (2.0 + bk.r_star / 2.0) * ln2 + pc.c11.lg +
                          6.0 * std::log(bk.kappa_tilde * bk.alpha0);
  const double lg_chat0 = bk.omega * lg_inner;
  const double lg_chat1 = bk.omega2 * ln2 + lg_chat0;
  const double lg_chat2 = bk.nu_tilde / bk.alpha * ln2 + lg_chat1;
  const double lg_bound = lg_chat2 - bk.omega2 * std::log(eps) +
                          (bk.omega1 + bk.nu_tilde / bk.alpha) * std::log1p(T) -
                          bk.nu_tilde / bk.mu_max * std::log1p(-rep.delta_T.value()) +
                          bk.omega3 * d.N3.lg + bk.omega2 * d.Psi_T.lg +
                          bk.nu_tilde * std::log1p(u0n.value());
  CHECK(pc.Chat0.lg == doctest::Approx(lg_chat0).epsilon(1e-12));
  CHECK(pc.Chat1.lg == doctest::Approx(lg_chat1).epsilon(1e-12));
  CHECK(pc.Chat2.lg == doctest::Approx(lg_chat2).epsilon(1e-12));
  CHECK(rep.Linf_bound.lg == doctest::Approx(lg_bound).epsilon(1e-10));

  // halving eps raises the bound by the factor 2^omega2 exactly
  auto rep_half = linfty_bound(bk, d, pc, partial, T, eps / 2.0, u0n);
  CHECK(std::fabs((rep_half.Linf_bound.lg - rep.Linf_bound.lg) - bk.omega2 * ln2) <
        1e-9);

  // longer certified horizon gives a larger bound
  auto rep_long = linfty_bound(bk, d, pc, partial, 1.5 * T, eps, u0n);
  CHECK(rep_long.certified);
  CHECK(rep_long.Linf_bound.lg > rep.Linf_bound.lg);

  // horizon past the threshold: uncertified, explained, no throw
  auto rep_far = linfty_bound(bk, d, pc, partial, 3.0 * T, eps, u0n);
  CHECK(!rep_far.certified);
  CHECK(!rep_far.note.empty());
  CHECK(!rep_far.Linf_bound.representable());

  // hypothesis violations throw
  CHECK_THROWS_AS(linfty_bound(bk, d, pc, partial, T, T, u0n), std::invalid_argument);
  CHECK_THROWS_AS(linfty_bound(bk, d, pc, partial, T, eps, Mag::from(5.0)),
                  std::invalid_argument);
  auto raw = gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03);
  CHECK_THROWS_AS(linfty_bound(raw, d, pc, partial, T, eps, u0n),
                  std::invalid_argument);
}

TEST_CASE("a computed solution stays inside its certified bounds") {
  const Grid g = Grid::make(3, {6, 6, 6}, {0, 0, 0}, {1, 1, 1});
  const auto ones = SpatialField::constant(g, 1.0);
  const auto law = preset_law("two_term", g, {ones, ones});
  const auto W = compute_weights(law);
  const auto psi = BoundaryField::constant(g, 0.0);
  const auto bk = moser_products(build_exponents(3, 0.5, 0.5, 0.8, 0.05, 7.6, 1.05));
  const auto d = compute_data_integrals(bk, ones, W, ones, psi, 1.0, bk.alpha, bk.r);
  auto pc = compute_Zstar(bk, d, 0.0, pinned_constants(0.8));

  const auto u0 = SpatialField::from(g, [](std::array<double, 3> x) {
    return 1.0 + 0.5 * std::cos(3.0 * x[0]) * std::cos(2.0 * x[1]);
  });
  const Mag E0 = phi_weighted_power(ones, u0, bk.alpha);
  const Mag V0 = Mag::add(Mag::one(), E0);
  const auto M = boundary_forcing_series(psi, bk.alpha, bk.r, 1.0);
  auto partial = alpha_bound_curve(bk, pc, V0, M);
  REQUIRE(partial.T_threshold > 0.0);

  const double T = 0.5 * partial.T_threshold;
  const double eps = T / 4.0;
  auto rep = linfty_bound(bk, d, pc, partial, T, eps, E0.pow(1.0 / bk.alpha));
  REQUIRE(rep.certified);

  Scenario scen;
  scen.grid = g;
  scen.law = law;
  scen.phi = ones;
  scen.lambda = 0.5;
  scen.psi = psi;
  scen.u0 = u0;
  scen.T_final = T;
  SolverConfig cfg;
  cfg.dt_initial = T / 16.0;
  cfg.dt_min = T * 1e-6;
  cfg.dt_max = T / 4.0;
  cfg.snapshot_cadence = 1;
  const auto trace = solve(scen, cfg, {bk.alpha});

  const auto mr = verify_solution_against_bounds(trace, rep, bk);
  CHECK(mr.weighted_pass);
  CHECK(mr.sup_pass);
  CHECK(mr.overall_pass);
  CHECK(mr.worst_log10_margin > 0.0);
  CHECK(mr.records.size() > 4);
  bool has_weighted = false, has_sup = false;
  for (const auto& rec : mr.records) {
    if (rec.kind == "weighted_power") has_weighted = true;
    if (rec.kind == "sup_norm") has_sup = true;
    CHECK(rec.pass);
  }
  CHECK(has_weighted);
  CHECK(has_sup);

  // a tampered trace is caught
  auto bad = trace;
  for (std::size_t i = 1; i < bad.weighted_power[0].v.size(); ++i)
    bad.weighted_power[0].v[i] *= 1e6;
  const auto mr_bad = verify_solution_against_bounds(bad, rep, bk);
  CHECK(!mr_bad.weighted_pass);
  CHECK(!mr_bad.overall_pass);

  // mismatched scenarios are refused rather than silently compared
  auto rep_other = rep;
  rep_other.V0 = rep.V0 * Mag::from(10.0);
  CHECK_THROWS_AS(verify_solution_against_bounds(trace, rep_other, bk),
                  std::invalid_argument);
  auto bk_lambda = bk;
  bk_lambda.lambda = 0.4;
  CHECK_THROWS_AS(verify_solution_against_bounds(trace, rep, bk_lambda),
                  std::invalid_argument);
  auto bk_alpha = bk;
  bk_alpha.alpha = 9.0;
  CHECK_THROWS_AS(verify_solution_against_bounds(trace, rep, bk_alpha),
                  std::invalid_argument);
}

TEST_CASE("the whole chain is deterministic") {
  auto run = [] {
    AllOnes s;
    const auto bk = moser_products(gas_book(2, 2.0 / 3.0, 1.0, 40.0 / 1.03, 1.03));
    const auto d =
        compute_data_integrals(bk, s.ones, s.W, s.ones, s.psi0, 1.0, bk.alpha, bk.r);
    auto pc = compute_Zstar(bk, d, std::pow(2.0, -0.5), pinned_constants(2.0 / 3.0));
    const auto M = boundary_forcing_series(s.psi0, bk.alpha, bk.r, 1.0);
    auto partial = alpha_bound_curve(bk, pc, Mag::from(2.0), M);
    auto rep = linfty_bound(bk, d, pc, partial, 0.5 * partial.T_threshold,
                            0.125 * partial.T_threshold, Mag::one());
    return std::tuple{bk.theta, bk.nu_tilde, d.N1.lg, pc.Zstar.lg,
                      partial.T_threshold, rep.Linf_bound.lg};
  };
  const auto first = run();
  const auto second = run();
  CHECK(std::get<0>(first) == std::get<0>(second));
  CHECK(std::get<1>(first) == std::get<1>(second));
  CHECK(std::get<2>(first) == std::get<2>(second));
  CHECK(std::get<3>(first) == std::get<3>(second));
  CHECK(std::get<4>(first) == std::get<4>(second));
  CHECK(std::get<5>(first) == std::get<5>(second));

  const auto t1 = example_gas_tables(3, 0.8, 40.0 / 1.03, 1.0, 1.03);
  const auto t2 = example_gas_tables(3, 0.8, 40.0 / 1.03, 1.0, 1.03);
  REQUIRE(t1.rows.size() == t2.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].generic == t2.rows[i].generic);
    CHECK(t1.rows[i].closed == t2.rows[i].closed);
  }
}
