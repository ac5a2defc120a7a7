// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Every tolerance is pinned here, next to the check that uses it.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "forch/bounds.hpp"
#include "forch/inequality.hpp"
#include "forch/solver.hpp"

using namespace forch;

namespace {

int failures = 0;
bool current = true;

void check(bool ok, const char* what) {
  if (!ok) {
    std::printf("    FAILED: %s\n", what);
    current = false;
  }
}

void finish(int k, const char* name) {
  std::printf("[%d/8] %-58s %s\n", k, name, current ? "PASS" : "FAIL");
  if (!current) ++failures;
  current = true;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Grid unit_cell() { return Grid::make(1, {1, 1, 1}, {0, 0, 0}, {1, 1, 1}); }
Grid grid1(long m) { return Grid::make(1, {m, 1, 1}, {0, 0, 0}, {1, 1, 1}); }
Grid grid2(long m) { return Grid::make(2, {m, m, 1}, {0, 0, 0}, {1, 1, 1}); }

ForchheimerLaw random_law(const Grid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_N(1, 4);
  std::uniform_real_distribution<double> exp_d(0.3, 4.0), coef_d(0.1, 10.0);
  const int N = pick_N(rng);
  std::vector<double> exps{0.0};
  std::vector<double> raw(N);
  for (auto& e : raw) e = exp_d(rng);
  std::sort(raw.begin(), raw.end());
  for (int i = 0; i < N; ++i) exps.push_back(raw[i] + 0.05 * (i + 1));
  ForchheimerLaw law;
  law.grid = g;
  law.exponents = exps;
  for (int i = 0; i <= N; ++i)
    law.coefficients.push_back(SpatialField::constant(g, coef_d(rng)));
  law.validate();
  return law;
}

ForchheimerLaw unit_two_term(const Grid& g) {
  return preset_law("two_term", g,
                    {SpatialField::constant(g, 1.0), SpatialField::constant(g, 1.0)});
}

SpatialField bump_field(const Grid& g) {
  SpatialField f = SpatialField::constant(g, 0.0, "u0");
  for (long c = 0; c < g.cell_count(); ++c) {
    const auto x = g.cell_center(c);
    const double dx = x[0] - 0.5, dy = x[1] - 0.5;
    f[c] = 0.1 + std::exp(-18.0 * (dx * dx + dy * dy));
  }
  return f;
}

Scenario flat_scenario(const Grid& g) {
  Scenario sc;
  sc.grid = g;
  sc.law = unit_two_term(g);
  sc.phi = SpatialField::constant(g, 1.0);
  sc.lambda = 0.5;
  sc.psi = BoundaryField::constant(g, 0.0);
  sc.u0 = bump_field(g);
  sc.T_final = 0.1;
  return sc;
}

// ---- criterion 1: constitutive sandwich bounds --------------------------------

void criterion_sandwich() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260819);
  const Grid g = unit_cell();
  const double slack = 1e-8;
  std::uniform_real_distribution<double> logxi(-6.0 * std::log(10.0),
                                               6.0 * std::log(10.0));
  for (int trial = 0; trial < 5; ++trial) {
    const ForchheimerLaw law = random_law(g, rng);
    const auto W = compute_weights(law);
    const double W1 = W.W1[0], W2 = W.W2[0];
    const double aN = law.coefficients.back()[0];
    const double a = law.degeneracy_a();
    bool lower_ok = true, upper_ok = true, energy_ok = true, flux_ok = true;
    for (int i = 0; i < 10000; ++i) {
      const double xi = std::exp(logxi(rng));
      const double K = eval_K(law, 0, xi);
      lower_ok &= 2.0 * W1 / (std::pow(xi, a) + std::pow(aN, a)) <= K * (1.0 + slack);
      upper_ok &= K <= W2 * std::pow(xi, -a) * (1.0 + slack);
      energy_ok &=
          W1 * std::pow(xi, 2.0 - a) - aN / 2.0 <= K * xi * xi * (1.0 + slack) + slack;
      const double frac = 2.0 * double(rng() >> 11) * 0x1.0p-53 - 1.0;
      const std::array<double, 3> y{xi * frac, xi * std::sqrt(1.0 - frac * frac), 0.0};
      const auto X = eval_X(law, 0, y);
      const double nX = std::hypot(X[0], X[1]);
      flux_ok &= nX <= W2 * std::pow(xi, 1.0 - a) * (1.0 + slack);
    }
    check(lower_ok, "lower kernel sandwich 2W1/(xi^a + aN^a) <= K");
    check(upper_ok, "upper kernel sandwich K <= W2 xi^-a");
    check(energy_ok, "energy floor W1 xi^(2-a) - aN/2 <= K xi^2");
    check(flux_ok, "flux growth |X| <= W2 |y|^(1-a)");
  }
  const double el = seconds_since(t0);
  check(el < 5.0, "sandwich sampling under 5 s");
  std::printf("    5 laws x 10000 samples in %.2f s\n", el);
  finish(1, "kernel sandwich bounds, 5 random laws x 1e4 samples");
}

// ---- criterion 2: root solve residuals -----------------------------------------

void criterion_root_solve() {
  std::mt19937_64 rng(414213562);
  const Grid g = unit_cell();
  std::uniform_real_distribution<double> logxi(-8.0 * std::log(10.0),
                                               8.0 * std::log(10.0));
  bool resid_ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    const ForchheimerLaw law = random_law(g, rng);
    std::vector<double> coeffs;
    for (const auto& f : law.coefficients) coeffs.push_back(f[0]);
    for (int i = 0; i < 2000; ++i) {
      const double xi = std::exp(logxi(rng));
      const double s = solve_s_at(law.exponents, coeffs, xi, 1e-14, false);
      const double resid = std::fabs(s * eval_g_at(law.exponents, coeffs, s) - xi);
      resid_ok &= resid <= 1e-14 * (1.0 + xi);
    }
  }
  check(resid_ok, "generic root residual |s g(s) - xi| <= 1e-14 (1 + xi)");

  std::uniform_real_distribution<double> coef_d(0.1, 10.0);
  bool closed_ok = true;
  for (int i = 0; i < 2000; ++i) {
    const double a0 = coef_d(rng), a1 = coef_d(rng);
    const double xi = std::exp(logxi(rng));
    // stable quadratic root of a1 s^2 + a0 s = xi
    const double s_closed = 2.0 * xi / (a0 + std::sqrt(a0 * a0 + 4.0 * a1 * xi));
    const double s_newton = solve_s_at({0.0, 1.0}, {a0, a1}, xi, 1e-14, false);
    const double s_fast = solve_s_at({0.0, 1.0}, {a0, a1}, xi, 1e-14, true);
    closed_ok &= std::fabs(s_newton - s_closed) <= 1e-12 * (1.0 + s_closed);
    closed_ok &= std::fabs(s_fast - s_closed) <= 1e-12 * (1.0 + s_closed);
  }
  check(closed_ok, "two-term root matches the quadratic closed form to 1e-12");
  finish(2, "nonlinear root solve residuals and closed form");
}

// ---- criterion 3: gas exponent tables -------------------------------------------

void criterion_gas_tables() {
  for (int n : {2, 3}) {
    const double r1 = (n == 3) ? 0.8 : 2.0 / 3.0;
    const auto tab = example_gas_tables(n, r1, 40.0 / 1.03, 1.0, 1.03);
    check(tab.pass, "gas table self-check");
    bool rows_ok = true;
    for (const auto& row : tab.rows) {
      if (row.name == "nu_tilde_exp_bound")  // one-sided cap, not an identity
        rows_ok &= row.generic <= row.closed * (1.0 + 1e-12);
      else
        rows_ok &=
            std::fabs(row.generic - row.closed) <= 1e-12 * (1.0 + std::fabs(row.closed));
    }
    check(rows_ok, "every generic value within 1e-12 of its closed form");
    std::printf("    n = %d: %zu rows, alpha = %.17g\n", n, tab.rows.size(),
                tab.book.alpha);
  }
  finish(3, "gas law exponent tables match closed forms to 1e-12");
}

// ---- criterion 4: functional inequality stress test -----------------------------

void criterion_inequalities() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g = grid2(64);
  TestFunctionFamily fam;
  fam.seed = 20260819;
  fam.count = 200;
  const double p = 1.5, r1 = 2.0 / 3.0;
  const auto consts = calibrate_constants(g, r1, p, fam, 2.0);

  std::vector<SobolevParams> params;
  for (double alpha : {15.0, 30.0, 40.0})
    for (double r : {0.5, 1.0})
      for (double eps : {0.1, 1.0}) {
        try {
          params.push_back(SobolevParams::make(2, p, r1, 1.5, r, alpha, eps, &consts));
        } catch (const AdmissibilityError&) {
          continue;
        }
      }
  check(params.size() >= 10, "at least 10 admissible parameter sets");

  const auto law = unit_two_term(g);
  const auto W = compute_weights(law);
  SuiteWeights weights{SpatialField::constant(g, 1.0), SpatialField::constant(g, 1.0),
                       W.W1};
  const auto rep = run_suite(g, fam, params, consts, weights, "");
  check(rep.all_pass, "every inequality record passes");
  bool margins_ok = true;
  for (const auto& rec : rep.records)
    margins_ok &= rec.margin >= -1e-6 * (1.0 + std::fabs(rec.rhs));
  check(margins_ok, "margins above -1e-6 relative");
  const double el = seconds_since(t0);
  check(el < 120.0, "64x64 suite under 2 minutes");
  std::printf("    %zu records over %zu parameter sets in %.1f s\n", rep.records.size(),
              params.size(), el);
  finish(4, "inequality suite, 200 functions at 64x64, safety 2");
}

// ---- criterion 5: solver invariants ----------------------------------------------

double mms_u(double x, double t) { return 1.0 + t * x * (1.0 - x); }

double s_unit(double xi) { return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * xi)); }

double mms_source(std::array<double, 3> x, double t) {
  const double xx = x[0];
  const double wt = 0.5 * xx * (1.0 - xx) / std::sqrt(mms_u(xx, t));
  const double slope = std::fabs(t * (1.0 - 2.0 * xx));
  return wt + 2.0 * t / (1.0 + 2.0 * s_unit(slope));
}

double mms_error(long cells, double T) {
  const Grid g = grid1(cells);
  Scenario sc;
  sc.grid = g;
  sc.law = unit_two_term(g);
  sc.phi = SpatialField::constant(g, 1.0);
  sc.lambda = 0.5;
  sc.u0 = SpatialField::constant(g, 1.0);
  sc.T_final = T;
  std::vector<double> times(400);
  for (int i = 0; i < 400; ++i) times[i] = T * 1.01 * i / 399.0;
  sc.psi = BoundaryField::from(g, times,
                               [](std::array<double, 3>, double t) { return s_unit(t); });
  sc.source = mms_source;
  SolverConfig cfg;
  const double h = g.h[0];
  cfg.dt_initial = 0.15 * h * h;
  cfg.dt_max = cfg.dt_initial;
  cfg.picard_tol = 1e-9;
  cfg.snapshot_cadence = 1 << 30;
  const SolutionTrace tr = solve(sc, cfg, {});
  const SpatialField& u = tr.snapshots.back();
  const double t_end = tr.snapshot_times.back();
  double acc = 0.0;
  for (long c = 0; c < g.cell_count(); ++c) {
    const double d = u[c] - mms_u(g.cell_center(c)[0], t_end);
    acc += d * d;
  }
  return std::sqrt(g.cell_volume() * acc);
}

void criterion_solver() {
  // constant data stays constant on a fully heterogeneous medium
  {
    const Grid g = grid2(16);
    Scenario sc;
    sc.grid = g;
    ForchheimerLaw law;
    law.grid = g;
    law.exponents = {0.0, 1.0};
    SpatialField a0 = SpatialField::constant(g, 0.0), a1 = SpatialField::constant(g, 0.0);
    SpatialField phi = SpatialField::constant(g, 0.0);
    for (long c = 0; c < g.cell_count(); ++c) {
      const auto x = g.cell_coords(c);
      const auto xc = g.cell_center(c);
      a0[c] = 0.5 + ((x[0] + x[1]) % 2);
      a1[c] = 1.0 + 0.8 * std::exp(-8.0 * (xc[0] - 0.4) * (xc[0] - 0.4));
      phi[c] = 0.75 + 0.5 * ((x[0] + x[1]) % 2);
    }
    law.coefficients = {a0, a1};
    sc.law = law;
    sc.phi = phi;
    sc.lambda = 0.5;
    sc.psi = BoundaryField::constant(g, 0.0);
    sc.u0 = SpatialField::constant(g, 0.7);
    sc.T_final = 0.1;
    SolverConfig cfg;
    cfg.dt_initial = 1e-3;
    cfg.dt_max = 1e-3;
    cfg.snapshot_cadence = 1 << 30;
    const auto tr = solve(sc, cfg, {});
    check(tr.steps.size() == 100, "fixed step count lands exactly on T");
    double dev = 0.0;
    for (long c = 0; c < g.cell_count(); ++c)
      dev = std::max(dev, std::fabs(tr.snapshots.back()[c] - 0.7));
    check(dev <= 1e-12, "constant preserved to 1e-12 over 100 steps");
  }

  // mass balance and weighted-power monotonicity on a no-flux bump
  {
    Scenario sc = flat_scenario(grid2(16));
    SolverConfig cfg;
    cfg.dt_initial = 1e-3;
    cfg.dt_max = 2e-3;
    const auto tr = solve(sc, cfg, {2.0, 40.0});
    const auto mb = mass_balance_report(tr, sc);
    check(!mb.clamped_any, "no clamping on smooth data");
    check(mb.worst <= 1e-10, "mass residual within 1e-10 per step");
    for (double alpha : {2.0, 40.0}) {
      const auto mc = monotonicity_check(tr, alpha);
      check(mc.pass, "int phi u^alpha nonincreasing (slack 1e-10)");
    }
  }

  // manufactured solution: order of spatial convergence
  {
    const double e32 = mms_error(32, 0.25);
    const double e64 = mms_error(64, 0.25);
    const double order = std::log(e32 / e64) / std::log(2.0);
    std::printf("    MMS errors e32 = %.4e, e64 = %.4e, order = %.2f\n", e32, e64,
                order);
    check(e64 < e32, "error decreases under refinement");
    check(order >= 1.0, "convergence order at least 1.0");
  }
  finish(5, "solver invariants: constants, mass, monotonicity, MMS");
}

// ---- criterion 6: certified bounds dominate computed solutions -------------------

struct PipelineOut {
  ExponentBook book;
  BoundReport report;
};

PipelineOut certify(const Scenario& sc, double r1, double alpha0,
                    const std::optional<std::array<double, 5>>& p_over = {}) {
  PipelineOut out;
  out.book = moser_products(build_exponents(sc.grid.n, sc.law.degeneracy_a(), sc.lambda,
                                            r1, 1.0, alpha0, 1.03, p_over));
  const auto W = compute_weights(sc.law);
  TestFunctionFamily fam;
  fam.seed = 11;
  fam.count = 16;
  const auto consts = calibrate_constants(sc.grid, out.book.r1, out.book.p, fam, 2.0);
  const Mag int_u0 = phi_weighted_power(sc.phi, sc.u0, out.book.alpha);
  const Mag V0 = Mag::add(Mag::one(), int_u0);
  const Mag u0_norm = int_u0.pow(1.0 / out.book.alpha);
  const double t_hint = std::max(1.0, sc.psi.times.back());
  const TimeSeries M =
      boundary_forcing_series(sc.psi, out.book.alpha, out.book.r, t_hint);
  auto ints = compute_data_integrals(out.book, sc.phi, W, sc.law.coefficients.back(),
                                     sc.psi, t_hint, out.book.alpha, out.book.r);
  auto proof = compute_Zstar(out.book, ints, sc.z.C_Z, consts);
  const BoundReport partial = alpha_bound_curve(out.book, proof, V0, M, {}, &sc.phi);
  const double T = 0.5 * partial.T_threshold;
  ints = compute_data_integrals(out.book, sc.phi, W, sc.law.coefficients.back(), sc.psi,
                                T, out.book.alpha, out.book.r);
  proof = compute_Zstar(out.book, ints, sc.z.C_Z, consts);
  out.report = linfty_bound(out.book, ints, proof, partial, T, T / 4.0, u0_norm, 0);
  return out;
}

void run_certified_scenario(const char* name, Scenario sc, double r1, double alpha0,
                            const std::optional<std::array<double, 5>>& p_over = {}) {
  const auto pl = certify(sc, r1, alpha0, p_over);
  check(pl.report.certified, "bound certified at half the threshold");
  sc.T_final = pl.report.T;
  SolverConfig cfg;
  cfg.dt_initial = pl.report.T / 64.0;
  cfg.dt_max = pl.report.T / 8.0;
  cfg.dt_min = pl.report.T * 1e-9;
  cfg.snapshot_cadence = 8;
  const auto tr = solve(sc, cfg, {pl.book.alpha});
  const auto mr = verify_solution_against_bounds(tr, pl.report, pl.book);
  check(mr.weighted_pass, "every snapshot of int phi u^alpha under the curve");
  check(mr.sup_pass, "max u on (eps, T] under the sup bound");
  std::printf("    %-28s %3zu records, worst log10 margin %+.3f\n", name,
              mr.records.size(), mr.worst_log10_margin);
}

void criterion_certified_scenarios() {
  {
    Scenario sc = flat_scenario(grid2(16));
    run_certified_scenario("homogeneous two-term:", sc, 2.0 / 3.0, 40.0 / 1.03);
  }
  {
    const Grid g = grid2(16);
    Scenario sc = flat_scenario(g);
    ForchheimerLaw law;
    law.grid = g;
    law.exponents = {0.0, 1.0};
    SpatialField a0 = SpatialField::constant(g, 0.0), a1 = SpatialField::constant(g, 0.0);
    SpatialField phi = SpatialField::constant(g, 0.0);
    for (long c = 0; c < g.cell_count(); ++c) {
      const auto x = g.cell_coords(c);
      const auto xc = g.cell_center(c);
      a0[c] = 0.6 + 0.8 * ((x[0] + x[1]) % 2);
      a1[c] = 0.7 + std::exp(-10.0 * (xc[0] - 0.5) * (xc[0] - 0.5));
      phi[c] = 0.8 + 0.4 * std::sin(3.0 * xc[0]) * std::sin(3.0 * xc[1]) * 0.5 + 0.2;
    }
    law.coefficients = {a0, a1};
    sc.law = law;
    sc.phi = phi;
    run_certified_scenario("heterogeneous medium:", sc, 2.0 / 3.0, 40.0 / 1.03);
  }
  {
    const Grid g = grid2(12);
    Scenario sc;
    sc.grid = g;
    sc.law = preset_law("three_term", g,
                        {SpatialField::constant(g, 1.0), SpatialField::constant(g, 1.0),
                         SpatialField::constant(g, 1.0)});
    sc.phi = SpatialField::constant(g, 1.0);
    sc.lambda = 0.5;
    sc.psi = BoundaryField::constant(g, -0.05);  // inward forcing, M > 1
    sc.u0 = SpatialField::constant(g, 1.0);
    sc.T_final = 0.1;
    // tight Hoelder exponents: the degeneracy a = 2/3 narrows the p6 window
    run_certified_scenario("three-term, inflow:", sc, 0.85, 60.0,
                           std::array<double, 5>{1.001, 1.001, 1.0015, 1.0015, 1.002});
  }
  finish(6, "certified bounds dominate solutions on 3 scenarios");
}

// ---- criterion 7: threshold ODE cross-check --------------------------------------

void criterion_ode() {
  std::mt19937_64 rng(732050808);
  std::uniform_real_distribution<double> alpha_d(10.0, 60.0), z_d(1.0, 50.0),
      v_d(1.5, 8.0), c_d(0.0, 2.0), w_d(0.5, 6.0), ph_d(0.0, 6.28);
  bool all_ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = alpha_d(rng);
    const double mu = 2.0 + (alpha - 2.0) * 0.9 * (double(rng() >> 11) * 0x1.0p-53);
    const double Zs = z_d(rng), V0v = v_d(rng);
    const double c = c_d(rng), w = w_d(rng), ph = ph_d(rng);
    TimeSeries M;
    const int S = 4001;
    for (int i = 0; i < S; ++i) {
      const double t = 20.0 * i / (S - 1);
      M.t.push_back(t);
      M.v.push_back(1.0 + c * (0.5 + 0.5 * std::sin(w * t + ph)));
    }
    ExponentBook bk;
    bk.alpha = alpha;
    bk.mu_max = mu;
    ProofConstants pc;
    pc.Zstar = Mag::from(Zs);
    const auto rep = alpha_bound_curve(bk, pc, Mag::from(V0v), M, {}, nullptr);
    const double T9 = 0.9 * rep.T_threshold;

    // classical RK4 on V' = 3 Zstar M(t) V^(1 + mu/alpha), V(0) = V0
    const double q = 1.0 + mu / alpha;
    auto f = [&](double t, double V) { return 3.0 * Zs * M.at(t) * std::pow(V, q); };
    const int steps = 40000;
    const double hstep = T9 / steps;
    double V = V0v, t = 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < steps; ++i) {
      const double k1 = f(t, V);
      const double k2 = f(t + hstep / 2, V + hstep / 2 * k1);
      const double k3 = f(t + hstep / 2, V + hstep / 2 * k2);
      const double k4 = f(t + hstep, V + hstep * k3);
      V += hstep / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      t += hstep;
      while (idx < rep.t.size() && rep.t[idx] <= t + 1e-12 * T9) {
        if (rep.t[idx] > 1e-6 * T9) {
          // compare at the library's own sample point via its closed form
          const double Vlib = bound_value_at(rep, t).value();
          const double rel = std::fabs(Vlib - V) / V;
          worst = std::max(worst, rel);
          all_ok &= rel <= 0.01;
        }
        ++idx;
      }
    }
    const double rel_end = std::fabs(bound_value_at(rep, T9).value() - V) / V;
    worst = std::max(worst, rel_end);
    all_ok &= rel_end <= 0.01;
  }
  check(all_ok, "closed-form curve within 1% of RK4 up to 0.9 T_threshold");
  std::printf("    worst relative deviation %.3e over 10 random tuples\n", worst);
  finish(7, "bound curve solves its comparison ODE (RK4 within 1%)");
}

// ---- criterion 8: iteration products and the generic lemma -----------------------

void criterion_iteration() {
  for (int n : {2, 3}) {
    const double r1 = (n == 3) ? 0.8 : 2.0 / 3.0;
    const double alpha0 = 40.0 / 1.03, kt = 1.03;
    const auto base = build_exponents(n, 0.5, 0.5, r1, 1.0, alpha0, kt, {});
    const auto b14 = moser_products(base, 1e-14);
    const auto b16 = moser_products(base, 1e-16);
    check(std::fabs(b14.mu_tilde - b16.mu_tilde) < 1e-12,
          "mu_tilde stable under truncation refinement");
    check(std::fabs(b14.nu_tilde - b16.nu_tilde) < 1e-12,
          "nu_tilde stable under truncation refinement");
    // each ladder factor obeys 1/(1-x_j) <= exp(x_j/(1-x_0)) with
    // x_j = 1/(beta_j(2 + r_star)), so the product closes geometrically
    const double x0 = 1.0 / (alpha0 * (2.0 + b14.r_star));
    const double cap = std::exp(x0 / ((1.0 - x0) * (1.0 - 1.0 / kt)));
    check(b14.nu_tilde <= cap * (1.0 + 1e-12), "nu_tilde under its exponential cap");
  }

  std::mt19937_64 rng(236067977);
  std::uniform_real_distribution<double> A_d(1.5, 100.0), y_d(0.2, 5.0),
      k_d(1.1, 2.0), gr_d(1.6, 2.0), f_d(0.5, 0.98), g_d(0.3, 1.0), o_d(1.0, 3.0);
  bool families_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int J = 40;
    const double A = A_d(rng), y0 = y_d(rng);
    const double base = k_d(rng), growth = gr_d(rng);
    std::vector<double> ks, rs, ss, os;
    for (int j = 0; j < J; ++j) {
      // geometric ladder keeps sum omega_j/kappa_j summable, as the lemma needs
      const double kappa = base * std::pow(growth, j);
      const double s = f_d(rng) * kappa;
      ks.push_back(kappa);
      ss.push_back(s);
      rs.push_back(g_d(rng) * s);
      os.push_back(o_d(rng));
    }
    const auto res = genn_bound(A, y0, ks, rs, ss, os, J);
    families_ok &= res.verified;
    // independent replay of the recursion in log space
    Mag y = Mag::from(y0);
    const Mag Am = Mag::from(A);
    for (int j = 0; j < J; ++j)
      y = Am.pow(os[j] / ks[j]) * Mag::add(y.pow(rs[j]), y.pow(ss[j])).pow(1.0 / ks[j]);
    families_ok &= y <= res.bound * Mag::from(1.0 + 1e-9);
    families_ok &= std::fabs(y.lg - res.iterates.back().lg) <=
                   1e-12 * (1.0 + std::fabs(y.lg));
  }
  check(families_ok, "20 random iteration families stay under the closed bound");
  finish(8, "iteration ladder stability, nu cap, and the generic lemma");
}

}  // namespace

int main() {
  std::printf("forchflow acceptance gate\n");
  const struct {
    void (*fn)();
    int k;
    const char* name;
  } gates[] = {
      {criterion_sandwich, 1, "kernel sandwich bounds, 5 random laws x 1e4 samples"},
      {criterion_root_solve, 2, "nonlinear root solve residuals and closed form"},
      {criterion_gas_tables, 3, "gas law exponent tables match closed forms to 1e-12"},
      {criterion_inequalities, 4, "inequality suite, 200 functions at 64x64, safety 2"},
      {criterion_solver, 5, "solver invariants: constants, mass, monotonicity, MMS"},
      {criterion_certified_scenarios, 6, "certified bounds dominate solutions on 3 scenarios"},
      {criterion_ode, 7, "bound curve solves its comparison ODE (RK4 within 1%)"},
      {criterion_iteration, 8, "iteration ladder stability, nu cap, and the generic lemma"},
  };
  for (const auto& gate : gates) {
    try {
      gate.fn();
    } catch (const std::exception& e) {
      std::printf("    THREW: %s\n", e.what());
      current = false;
      finish(gate.k, gate.name);
    }
  }
  if (failures == 0) {
    std::printf("all 8 criteria PASS\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", failures);
  return 1;
}
