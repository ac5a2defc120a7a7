#include "forch/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "forch/solver.hpp"

namespace forch {

namespace {

using ojson = nlohmann::ordered_json;

// ---- output plumbing ---------------------------------------------------------

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

/// First line of every CSV: the config hash and seed, so any artifact can be
/// traced back to the exact inputs that produced it.
void stamp(std::ofstream& out, const RunConfig& rc) {
  out << "# config_hash=" << rc.hash << " seed=" << rc.seed << '\n';
}

ojson mag_json(const Mag& m) {
  ojson j;
  if (m.is_zero()) {
    j["value"] = 0.0;
    j["log"] = nullptr;
  } else if (m.representable()) {
    j["value"] = m.value();
    j["log"] = m.lg;
  } else {
    j["value"] = "+inf";
    j["log"] = m.lg;
  }
  if (!m.is_zero()) j["log10"] = m.lg / std::log(10.0);
  return j;
}

ojson meta_json(const RunConfig& rc, const std::string& command) {
  ojson j;
  j["tool"] = "forchflow";
  j["command"] = command;
  j["config_hash"] = rc.hash;
  j["seed"] = rc.seed;
  return j;
}

// ---- formula provenance --------------------------------------------------------

/// Self-contained definitions of everything the reports emit; each value in
/// report.json can be recomputed from its entry here plus the configuration.
ojson formulas_json() {
  ojson f;
  f["a"] = "a = e_N/(e_N + 1) for the top law exponent e_N";
  f["p"] = "p = 2 - a";
  f["s"] = "s = lambda + 1";
  f["r_star"] = "r_star = 1 + (2-a)/n - 1/r1";
  f["alpha"] = "alpha = kappa_tilde * alpha0 (the first iteration rung)";
  f["m"] = "m = (alpha + 1 - lambda - a)/(2 - a)";
  f["theta"] = "theta = (alpha + 2r)/(alpha(1 + r_star) + 2(1 - a - lambda))";
  f["mu1"] = "mu1 = (r + theta(a + lambda - 1))/(1 - theta)";
  f["r_tilde"] = "r_tilde = r + (r + lambda + a - 1)/(1 - a)";
  f["theta_tilde"] =
      "theta_tilde = (alpha + 2 r_tilde)/(alpha(1 + r_star) + 2(1 - a - lambda))";
  f["mu1_tilde"] = "mu1_tilde = (r_tilde + theta_tilde(a + lambda - 1))/(1 - theta_tilde)";
  f["mu_min"] = "mu_min = max(lambda + 1, -mu1, -mu1_tilde)";
  f["mu_max"] = "mu_max = max(mu1, r_tilde, mu1_tilde)";
  f["p6"] = "p6 = p5(p3(2-a) - 1)/(1 - a); p1..p5 default or overridden";
  f["q_i"] = "q_i = p_i/(p_i - 1)";
  f["h1"] = "h1 = lambda + 1";
  f["h2"] = "h2 = max(0, 3(lambda - 2a) - 1, (a + lambda - 1)/(p3(2-a) - 1))";
  f["h3"] = "h3 = max(h2, 1 - a - lambda)";
  f["kappa"] = "kappa = 1 + r_star/2 + (1 - lambda - a)/alpha";
  f["nu1"] = "nu1 = (alpha - h1)/(1 + 1/(alpha(1 + r_star/2)))";
  f["nu2"] = "nu2 = (alpha + h3)/(1 - lambda/(alpha(1 + r_star/2)))";
  f["beta_ladder"] = "beta_j = kappa_tilde^j alpha0";
  f["mu_tilde"] = "mu_tilde = prod_j (1 - h1/beta_j)/(1 + 1/(beta_j(1 + r_star/2)))";
  f["nu_tilde"] = "nu_tilde = prod_j (1 + h3/beta_j)/(1 - lambda/(beta_j(1 + r_star/2)))";
  f["G"] = "G = prod_{j>=1} (1 + h3/beta_j)/(1 - lambda/(beta_j(1 + r_star/2)))";
  f["sum_j_over_beta"] = "sum_j (j+1)/beta_j = 1/(alpha0(1 - 1/kappa_tilde)^2)";
  f["omega"] = "omega = G * sum_j (j+1)/beta_j";
  f["omega1"] = "omega1 = (2 + r_star/2) omega";
  f["omega2"] = "omega2 = (1 + r_star/2) omega";
  f["omega3"] = "omega3 = (3 + r_star/2) omega";
  f["W1"] = "W1 = a_N^a/(2 N max_i a_i)";
  f["W2"] = "W2 = N max_i a_i/(a_N^(1-a) min(a_0, a_N))";
  f["W3"] = "W3 = W1 + W2^(2-a)/W1^(1-a)";
  f["K1"] = "K1 = int 1/phi dx";
  f["K2"] = "K2 = int phi^(-(alpha + 1 - lambda - a)/(alpha(1-a) - 1 + lambda + a)) dx";
  f["K3"] = "K3 = int a_N^(alpha/(lambda+1)) phi^(1 - alpha/(lambda+1)) dx";
  f["K4"] = "K4 = int W1^(-r1/(1-r1)) dx";
  f["K5"] = "K5 = int W3^((alpha + r)/(r + 1 - lambda(3-2a))) dx";
  f["K6"] =
      "K6 = int phi^(-1) W1^(-1/((1-a)(1-theta_tilde)(1 + mu1_tilde/alpha))) dx";
  f["N1"] =
      "N1 = (1 + int phi)(1 + (int W3^q1 phi^(-q1/p1))^(1/q1) + (int a_N^q2 "
      "phi^(-q2/p2))^(1/q2) + (int phi^(-q4/p4))^(1/(p3 q4)) + (int W1^(-q5/(1-a)) "
      "phi^(-q5/p5))^((1-a)/(q5(p3(2-a)-1))))";
  f["N2"] =
      "N2 = (int phi^(2/r_star - 1))^(r_star/2) ((int W1^(-r1/(1-r1)))^(1-r1) + "
      "(int phi^(-r1/(1-r1)))^(1-r1))^(1/r1)";
  f["N3"] = "N3 = max(N1, N2)";
  f["Psi_T"] =
      "Psi_T = 1 + (int_0^T int_Gamma max(0,-psi)^q3 dS dt)^(p3(2-a)/(q3(p3(2-a)-1)))";
  f["Phi_star"] = "Phi_star = 1 + int phi dx";
  f["c0"] = "c0 = 2^(a-1)";
  f["C1"] = "C1 = (2^(1-a) C_Z)^(2-a)";
  f["C2"] = "C2 = (2 C1)^((alpha + r)/(r - lambda(3-2a) + 1))";
  f["eps2"] = "eps2 = c0/8";
  f["eps3"] = "eps3 = c0(alpha - lambda)/24";
  f["D1_theta"] = "D1_theta = (c4 2^m)^(theta(2-a))";
  f["D2_theta"] = "D2_theta = (c3 m 2^m)^(theta(2-a)/(1-theta))";
  f["D1_theta_tilde"] = "D1_theta_tilde = (c4 2^m)^(theta_tilde(2-a))";
  f["D2_theta_tilde"] = "D2_theta_tilde = (c3 m 2^m)^(theta_tilde(2-a)/(1-theta_tilde))";
  f["Phi1"] = "Phi1 = K2^(theta(alpha(1-a) - 1 + lambda + a)/alpha) K1^((1-theta)(1 + mu1/alpha))";
  f["Phi2"] = "Phi2 = K4^(theta(1-r1)/(r1(1-theta))) K1^(1 + mu1/alpha)";
  f["Phi3"] = "Phi3 = Phi1";
  f["Phi4"] = "Phi4 = Phi2";
  f["Phi5"] = "Phi5 = K6^(1 + mu1_tilde/alpha)";
  f["Phi6"] = "Phi6 = K2^(theta_tilde(alpha(1-a) - 1 + lambda + a)/alpha) Phi5^(1 - theta_tilde)";
  f["Phi7"] = "Phi7 = K4^(theta_tilde(1-r1)/(r1(1-theta_tilde))) Phi5";
  f["Z1"] = "Z1 = max(D1_theta Phi1, eps2^(-theta/(1-theta)) D2_theta Phi2)";
  f["Z2"] = "Z2 = K3^((lambda+1)/alpha)";
  f["Z3"] =
      "Z3 = max(c5 D1_theta Phi3, eps3^(-theta/(1-theta)) c5^(1/(1-theta)) D2_theta Phi4, "
      "eps3^(-1/(1-a)) (c6(alpha+r))^((2-a)/(1-a)) D1_theta_tilde Phi6, "
      "eps3^(-(1/(1-a) + ((2-a)/(1-a)) theta_tilde/(1-theta_tilde))) "
      "(c6(alpha+r))^(((2-a)/(1-a))/(1-theta_tilde)) D2_theta_tilde Phi7)";
  f["Z4"] = "Z4 = 2((alpha - lambda) Z1 + Z3) + (alpha - lambda) Z2/2 + 2 Z3";
  f["Zstar"] = "Zstar = (alpha/lambda) max(1, Z4, C2(alpha - lambda) K5)";
  f["c10"] =
      "c10 = 20 max(2 C1, 4 lambda, c5^(1/p3), (4(2 c6 p3)^(2-a))^(1/(p3(2-a)-1)))";
  f["c8"] = "c8 = c10/lambda";
  f["c9"] = "c9 = 8 c10";
  f["c11"] = "c11 = 2^(4 + r_star) max(1, c7^(2-a)) max(c8, c9)^(1 + r_star/2)";
  f["Chat0"] = "Chat0 = (2^(2 + r_star/2) c11 (kappa_tilde alpha0)^(3(3-2a)/(2(1-a))))^omega";
  f["Chat1"] = "Chat1 = 2^omega2 Chat0";
  f["Chat2"] = "Chat2 = 2^(nu_tilde/alpha) Chat1";
  f["V0"] = "V0 = 1 + int phi u0^alpha dx";
  f["u0_norm"] = "u0_norm = (int phi u0^alpha dx)^(1/alpha)";
  f["M"] = "M(t) = 1 + int_Gamma max(0, -psi(t))^((alpha + r)/r) dS";
  f["T_threshold"] =
      "T_threshold solves (3 Zstar mu_max/alpha) int_0^T M dt = V0^(-mu_max/alpha)";
  f["V"] =
      "V(t) = (V0^(-mu_max/alpha) - (3 Zstar mu_max/alpha) int_0^t M dt)^(-alpha/mu_max)";
  f["C_alpha_beta"] = "C_alpha_beta = int phi^(-beta/(alpha - beta)) dx";
  f["U_beta"] = "U_beta(t) = C_alpha_beta^(1 - beta/alpha) (V0^(-mu_max/alpha) - "
                "(3 Zstar mu_max/alpha) int_0^t M dt)^(-beta/mu_max)";
  f["delta_T"] = "delta_T = (3 Zstar mu_max/alpha) V0^(mu_max/alpha) int_0^T M dt";
  f["Linf_bound"] =
      "Linf_bound = Chat2 eps^(-omega2) (1+T)^(omega1 + nu_tilde/alpha) "
      "(1 - delta_T)^(-nu_tilde/mu_max) N3^omega3 Psi_T^omega2 (1 + u0_norm)^nu_tilde";
  return f;
}

ojson book_json(const ExponentBook& b) {
  ojson j;
  j["n"] = b.n;
  j["a"] = b.a;
  j["lambda"] = b.lambda;
  j["r1"] = b.r1;
  j["r"] = b.r;
  j["alpha0"] = b.alpha0;
  j["kappa_tilde"] = b.kappa_tilde;
  j["p"] = b.p;
  j["s"] = b.s;
  j["r_star"] = b.r_star;
  j["r_tilde"] = b.r_tilde;
  j["alpha"] = b.alpha;
  j["m"] = b.m;
  j["theta"] = b.theta;
  j["mu1"] = b.mu1;
  j["theta_tilde"] = b.theta_tilde;
  j["mu1_tilde"] = b.mu1_tilde;
  j["mu_min"] = b.mu_min;
  j["mu_max"] = b.mu_max;
  j["p1"] = b.p1;
  j["p2"] = b.p2;
  j["p3"] = b.p3;
  j["p4"] = b.p4;
  j["p5"] = b.p5;
  j["p6"] = b.p6;
  j["q1"] = b.q1;
  j["q2"] = b.q2;
  j["q3"] = b.q3;
  j["q4"] = b.q4;
  j["q5"] = b.q5;
  j["h1"] = b.h1;
  j["h2"] = b.h2;
  j["h3"] = b.h3;
  j["kappa"] = b.kappa;
  j["nu1"] = b.nu1;
  j["nu2"] = b.nu2;
  j["beta_ladder"] = b.beta;
  j["mu_tilde"] = b.mu_tilde;
  j["nu_tilde"] = b.nu_tilde;
  j["G"] = b.G;
  j["omega"] = b.omega;
  j["omega1"] = b.omega1;
  j["omega2"] = b.omega2;
  j["omega3"] = b.omega3;
  j["sum_j_over_beta"] = b.sum_j_over_beta;
  j["moser_terms"] = b.moser_terms;
  j["moser_tol"] = b.moser_tol;
  j["moser_tail_bound"] = b.moser_tail_bound;
  ojson conds = ojson::array();
  for (const auto& c : b.conditions) {
    ojson e;
    e["id"] = c.id;
    e["requirement"] = c.requirement;
    e["ok"] = c.ok;
    conds.push_back(e);
  }
  j["conditions"] = conds;
  return j;
}

ojson consts_json(const EmbeddingConstants& c) {
  ojson j;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  j["c3"] = c.c3;
  j["c4"] = c.c4;
  j["c5"] = c.c5;
  j["c6"] = c.c6;
  j["c7"] = c.c7;
  j["p"] = c.p;
  j["r1"] = c.r1;
  j["safety_factor"] = c.safety_factor;
  j["provenance"] = c.provenance;
  j["seed"] = c.seed;
  j["family"] = c.family_note;
  return j;
}

ojson integrals_json(const DataIntegrals& d) {
  ojson j;
  j["K1"] = mag_json(d.K1);
  j["K2"] = mag_json(d.K2);
  j["K3"] = mag_json(d.K3);
  j["K4"] = mag_json(d.K4);
  j["K5"] = mag_json(d.K5);
  j["K6"] = mag_json(d.K6);
  j["N1"] = mag_json(d.N1);
  j["N2"] = mag_json(d.N2);
  j["N3"] = mag_json(d.N3);
  j["Psi_T"] = mag_json(d.Psi_T);
  j["Phi_star"] = mag_json(d.Phi_star);
  j["warn_volume_weights"] = d.warn_volume_weights;
  j["warn_parabolic_weights"] = d.warn_parabolic_weights;
  if (!d.warning_note.empty()) j["warning_note"] = d.warning_note;
  return j;
}

ojson proof_json(const ProofConstants& pc) {
  ojson j;
  j["c0"] = pc.c0;
  j["C1"] = pc.C1;
  j["eps2"] = pc.eps2;
  j["eps3"] = pc.eps3;
  j["C2"] = mag_json(pc.C2);
  j["D1_theta"] = mag_json(pc.D1_theta);
  j["D2_theta"] = mag_json(pc.D2_theta);
  j["D1_theta_tilde"] = mag_json(pc.D1_theta_tilde);
  j["D2_theta_tilde"] = mag_json(pc.D2_theta_tilde);
  j["Phi1"] = mag_json(pc.Phi1);
  j["Phi2"] = mag_json(pc.Phi2);
  j["Phi3"] = mag_json(pc.Phi3);
  j["Phi4"] = mag_json(pc.Phi4);
  j["Phi5"] = mag_json(pc.Phi5);
  j["Phi6"] = mag_json(pc.Phi6);
  j["Phi7"] = mag_json(pc.Phi7);
  j["Z1"] = mag_json(pc.Z1);
  j["Z2"] = mag_json(pc.Z2);
  j["Z3"] = mag_json(pc.Z3);
  j["Z4"] = mag_json(pc.Z4);
  j["Zstar"] = mag_json(pc.Zstar);
  j["c8"] = mag_json(pc.c8);
  j["c9"] = mag_json(pc.c9);
  j["c10"] = mag_json(pc.c10);
  j["c11"] = mag_json(pc.c11);
  j["Chat0"] = mag_json(pc.Chat0);
  j["Chat1"] = mag_json(pc.Chat1);
  j["Chat2"] = mag_json(pc.Chat2);
  return j;
}

ojson bound_json(const BoundReport& r) {
  ojson j;
  j["alpha"] = r.alpha;
  j["mu_max"] = r.mu_max;
  j["Zstar"] = mag_json(r.Zstar);
  j["V0"] = mag_json(r.V0);
  j["T_threshold"] = r.T_threshold;
  j["curve_samples"] = r.t.size();
  if (r.beta > 0) {
    j["beta"] = r.beta;
    j["C_alpha_beta"] = mag_json(r.C_alpha_beta);
  }
  j["T"] = r.T;
  j["eps"] = r.eps;
  j["delta_T"] = mag_json(r.delta_T);
  j["u0_norm"] = mag_json(r.u0_norm);
  j["Linf_bound"] = mag_json(r.Linf_bound);
  j["certified"] = r.certified;
  j["note"] = r.note;
  return j;
}

void write_bounds_csv(const std::string& path, const RunConfig& rc,
                      const BoundReport& r) {
  auto out = open_out(path);
  stamp(out, rc);
  out << (r.beta > 0 ? "t,V,log_V,U_beta,log_U_beta\n" : "t,V,log_V\n");
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    out << format_g17(r.t[i]) << ',' << format_g17(r.V[i].value()) << ','
        << format_g17(r.V[i].lg);
    if (r.beta > 0)
      out << ',' << format_g17(r.U_beta[i].value()) << ',' << format_g17(r.U_beta[i].lg);
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const RunConfig& rc,
                     const SolutionTrace& tr) {
  auto out = open_out(path);
  stamp(out, rc);
  out << "t,dt,picard_iters,clamped_cells,clamp_mass,mass,outflow,source,"
         "telescoping_error\n";
  out << format_g17(0.0) << ",0,0,0,0," << format_g17(tr.initial_mass) << ",0,0,0\n";
  for (const auto& st : tr.steps) {
    out << format_g17(st.t) << ',' << format_g17(st.dt) << ',' << st.picard_iters << ','
        << st.clamped_cells << ',' << format_g17(st.clamp_mass) << ','
        << format_g17(st.mass) << ',' << format_g17(st.outflow) << ','
        << format_g17(st.source) << ',' << format_g17(st.telescoping_error) << '\n';
  }
}

void write_series_csv(const std::string& path, const RunConfig& rc,
                      const SolutionTrace& tr) {
  auto out = open_out(path);
  stamp(out, rc);
  out << "t";
  for (double a : tr.alphas) out << ",phi_u_pow_" << format_g17(a);
  out << '\n';
  if (tr.weighted_power.empty()) return;
  const auto& base = tr.weighted_power.front();
  for (std::size_t i = 0; i < base.size(); ++i) {
    out << format_g17(base.t[i]);
    for (const auto& ts : tr.weighted_power) out << ',' << format_g17(ts.v[i]);
    out << '\n';
  }
}

void write_mass_csv(const std::string& path, const RunConfig& rc,
                    const MassBalanceReport& mb) {
  auto out = open_out(path);
  stamp(out, rc);
  out << "t,residual,source,clamp_mass,defect\n";
  for (std::size_t i = 0; i < mb.t.size(); ++i)
    out << format_g17(mb.t[i]) << ',' << format_g17(mb.residual[i]) << ','
        << format_g17(mb.source[i]) << ',' << format_g17(mb.clamp_mass[i]) << ','
        << format_g17(std::fabs(mb.residual[i] - mb.source[i])) << '\n';
}

void write_margins_csv(const std::string& path, const RunConfig& rc,
                       const MarginReport& mr) {
  auto out = open_out(path);
  stamp(out, rc);
  out << "kind,t,observed,log_observed,bound,log_bound,log10_margin,pass\n";
  for (const auto& rec : mr.records)
    out << rec.kind << ',' << format_g17(rec.t) << ',' << format_g17(rec.observed.value())
        << ',' << format_g17(rec.observed.lg) << ',' << format_g17(rec.bound.value())
        << ',' << format_g17(rec.bound.lg) << ',' << format_g17(rec.log10_margin) << ','
        << (rec.pass ? 1 : 0) << '\n';
}

void write_json(const std::string& path, const ojson& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ---- default [bounds] knobs ----------------------------------------------------

double default_r1(int n, double p) {
  const double lo = std::max(double(n) / (n + p), 1.0 / p);
  const double hi = std::min(1.0, double(n) / p);
  return 0.5 * (lo + hi);
}

double default_r(double lambda, double a) {
  return std::max(1.0, lambda * (3.0 - 2.0 * a) - 1.0 + 0.1);
}

double default_kappa_tilde(double r_star) {
  return 1.0 + 0.5 * (std::sqrt(1.0 + std::max(0.0, r_star) / 2.0) - 1.0);
}

/// Smallest admissible alpha0 (monotone growth then bisection), scaled by
/// 1.25 for headroom. The admissible set is upward closed in alpha0 for every
/// condition with 1 - lambda - a <= 0; the search assumes that shape.
double default_alpha0(int n, double a, double lambda, double r1, double r,
                      double kappa_tilde,
                      const std::optional<std::array<double, 5>>& po) {
  auto ok = [&](double a0) {
    try {
      build_exponents(n, a, lambda, r1, r, a0, kappa_tilde, po);
      return true;
    } catch (const AdmissibilityError&) {
      return false;
    }
  };
  double hi = 1.0 + lambda;
  int guard = 0;
  while (!ok(hi) && guard++ < 90) hi *= 1.3;
  if (!ok(hi)) build_exponents(n, a, lambda, r1, r, hi, kappa_tilde, po);  // throws
  double lo = hi / 1.3;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return 1.25 * hi;
}

}  // namespace

ExponentBook book_from_config(const RunConfig& rc) {
  const Scenario& sc = rc.scenario;
  const int n = rc.grid.n;
  const double a = sc.law.degeneracy_a();
  const double lambda = sc.lambda;
  const double p = 2.0 - a;
  const double r1 = rc.r1 > 0 ? rc.r1 : default_r1(n, p);
  const double r = rc.r >= 0 ? rc.r : default_r(lambda, a);
  const double r_star = 1.0 + p / n - 1.0 / r1;
  const double kt = rc.kappa_tilde > 0 ? rc.kappa_tilde : default_kappa_tilde(r_star);
  const double a0 =
      rc.alpha0 > 0 ? rc.alpha0 : default_alpha0(n, a, lambda, r1, r, kt, rc.p_overrides);
  return moser_products(build_exponents(n, a, lambda, r1, r, a0, kt, rc.p_overrides));
}

BoundsPipeline run_bounds_pipeline(const RunConfig& rc) {
  BoundsPipeline pl;
  const Scenario& sc = rc.scenario;
  pl.book = book_from_config(rc);
  pl.weights = compute_weights(sc.law);
  if (rc.user_constants) {
    pl.consts = *rc.user_constants;
    pl.consts.p = pl.book.p;
    pl.consts.r1 = pl.book.r1;
  } else {
    pl.consts =
        calibrate_constants(rc.grid, pl.book.r1, pl.book.p, rc.family, rc.safety_factor);
  }

  const Mag int_u0 = phi_weighted_power(sc.phi, sc.u0, pl.book.alpha);
  if (!int_u0.representable())
    throw ConfigError("initial data too large: int phi u0^alpha overflows at alpha = " +
                      format_g17(pl.book.alpha));
  const Mag V0 = Mag::add(Mag::one(), int_u0);
  const Mag u0_norm = int_u0.pow(1.0 / pl.book.alpha);

  const double t_hint = std::max(1.0, sc.psi.times.back());
  const TimeSeries M = boundary_forcing_series(sc.psi, pl.book.alpha, pl.book.r, t_hint);
  pl.integrals = compute_data_integrals(pl.book, sc.phi, pl.weights,
                                        sc.law.coefficients.back(), sc.psi, t_hint,
                                        pl.book.alpha, pl.book.r);
  pl.proof = compute_Zstar(pl.book, pl.integrals, sc.z.C_Z, pl.consts);
  BoundReport partial = alpha_bound_curve(pl.book, pl.proof, V0, M, rc.beta, &sc.phi);

  pl.T = rc.T_is_threshold_fraction ? rc.T_value * partial.T_threshold : rc.T_value;
  if (pl.T > 0 && pl.T != t_hint) {
    // Psi_T integrates the boundary data over the resolved horizon
    pl.integrals = compute_data_integrals(pl.book, sc.phi, pl.weights,
                                          sc.law.coefficients.back(), sc.psi, pl.T,
                                          pl.book.alpha, pl.book.r);
    pl.proof = compute_Zstar(pl.book, pl.integrals, sc.z.C_Z, pl.consts);
  }

  if (pl.T > 0) {
    pl.eps = rc.epsilon > 0 ? rc.epsilon : 0.25 * std::min(1.0, pl.T);
    pl.report = linfty_bound(pl.book, pl.integrals, pl.proof, partial, pl.T, pl.eps,
                             u0_norm, 0);
  } else {
    pl.report = partial;
    pl.eps = 0;
    if (pl.report.note.empty())
      pl.report.note = "horizon is zero; sup bound not evaluated";
  }
  return pl;
}

namespace {

/// Deterministic (r1, kappa_tilde) refinement when [bounds] optimize is on:
/// scans a 7x7 grid inside the admissible windows and keeps the tuple with
/// the largest certified threshold.
RunConfig optimize_knobs(const RunConfig& rc) {
  const int n = rc.grid.n;
  const double a = rc.scenario.law.degeneracy_a();
  const double p = 2.0 - a;
  const double r1_lo = std::max(double(n) / (n + p), 1.0 / p);
  const double r1_hi = std::min(1.0, double(n) / p);
  RunConfig best = rc;
  best.optimize = false;
  double best_T = -1.0;
  for (int i = 1; i <= 7; ++i) {
    RunConfig cand = rc;
    cand.optimize = false;
    cand.r1 = r1_lo + (r1_hi - r1_lo) * i / 8.0;
    const double r_star = 1.0 + p / n - 1.0 / cand.r1;
    if (!(r_star > 0)) continue;
    const double kt_hi = std::sqrt(1.0 + r_star / 2.0);
    for (int k = 1; k <= 7; ++k) {
      cand.kappa_tilde = 1.0 + (kt_hi - 1.0) * k / 8.0;
      try {
        const auto pl = run_bounds_pipeline(cand);
        if (pl.report.T_threshold > best_T) {
          best_T = pl.report.T_threshold;
          best = cand;
        }
      } catch (const std::invalid_argument&) {
        continue;  // inadmissible corner of the scan
      }
    }
  }
  if (best_T < 0)
    throw AdmissibilityError("optimize: no admissible (r1, kappa_tilde) on the scan grid");
  return best;
}

void apply_auto_dt(RunConfig& rc, double T) {
  if (rc.dt_initial_auto) rc.solver.dt_initial = T / 64.0;
  if (rc.dt_max_auto) rc.solver.dt_max = T / 8.0;
  if (rc.dt_min_auto) rc.solver.dt_min = T * 1e-9;
}

double resolve_horizon(const RunConfig& rc) {
  if (!rc.T_is_threshold_fraction) return rc.T_value;
  const auto pl = run_bounds_pipeline(rc);
  return pl.T;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_solve(RunConfig rc) {
  ensure_dir(rc.out_dir);
  const double T = resolve_horizon(rc);
  if (!(T > 0)) {
    std::cerr << "solve: resolved horizon is zero (threshold degenerate)\n";
    return kExitSolver;
  }
  rc.scenario.T_final = T;
  apply_auto_dt(rc, T);

  SolutionTrace trace;
  try {
    trace = solve(rc.scenario, rc.solver, rc.track_alphas);
  } catch (const std::runtime_error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }

  write_trace_csv(join(rc.out_dir, "trace.csv"), rc, trace);
  write_series_csv(join(rc.out_dir, "weighted_power.csv"), rc, trace);
  const auto mb = mass_balance_report(trace, rc.scenario);
  write_mass_csv(join(rc.out_dir, "mass_residuals.csv"), rc, mb);
  if (!trace.snapshots.empty())
    write_field_csv(join(rc.out_dir, "u_final.csv"), trace.snapshots.back());
  if (rc.write_fields)
    for (std::size_t i = 0; i < trace.snapshots.size(); ++i)
      write_field_csv(join(rc.out_dir, "u_snap_" + std::to_string(i) + ".csv"),
                      trace.snapshots[i]);

  ojson j = meta_json(rc, "solve");
  j["T_final"] = T;
  j["steps"] = trace.steps.size();
  j["initial_mass"] = trace.initial_mass;
  j["final_mass"] = trace.steps.empty() ? trace.initial_mass : trace.steps.back().mass;
  j["mass_worst_defect"] = mb.worst;
  j["clamped_any"] = mb.clamped_any;
  ojson mono = ojson::array();
  for (double a : rc.track_alphas) {
    const auto mc = monotonicity_check(trace, a);
    ojson e;
    e["alpha"] = mc.alpha;
    e["pass"] = mc.pass;
    e["worst_violation"] = mc.worst_violation;
    mono.push_back(e);
  }
  j["monotonicity"] = mono;
  j["files"] = {"trace.csv", "weighted_power.csv", "mass_residuals.csv", "u_final.csv"};
  write_json(join(rc.out_dir, "report.json"), j);
  return kExitOk;
}

ojson bounds_report_json(const RunConfig& rc, const BoundsPipeline& pl,
                         const std::string& command) {
  ojson j = meta_json(rc, command);
  j["exponents"] = book_json(pl.book);
  j["r_star"] = pl.book.r_star;  // headline value, duplicated for quick grep
  j["embedding_constants"] = consts_json(pl.consts);
  j["integrals"] = integrals_json(pl.integrals);
  j["proof_constants"] = proof_json(pl.proof);
  j["bound"] = bound_json(pl.report);
  j["formulas"] = formulas_json();
  return j;
}

int cmd_bounds(RunConfig rc) {
  ensure_dir(rc.out_dir);
  if (rc.optimize) rc = optimize_knobs(rc);
  const auto pl = run_bounds_pipeline(rc);
  write_bounds_csv(join(rc.out_dir, "bounds.csv"), rc, pl.report);
  ojson j = bounds_report_json(rc, pl, "bounds");
  j["files"] = {"bounds.csv"};
  write_json(join(rc.out_dir, "report.json"), j);
  return kExitOk;
}

int cmd_verify(RunConfig rc) {
  ensure_dir(rc.out_dir);
  if (rc.optimize) rc = optimize_knobs(rc);
  const auto pl = run_bounds_pipeline(rc);
  write_bounds_csv(join(rc.out_dir, "bounds.csv"), rc, pl.report);

  ojson j = bounds_report_json(rc, pl, "verify");
  if (!pl.report.certified) {
    j["verification"] = {{"performed", false},
                         {"reason", pl.report.note.empty()
                                        ? std::string("bound not certified on the horizon")
                                        : pl.report.note}};
    j["files"] = {"bounds.csv"};
    write_json(join(rc.out_dir, "report.json"), j);
    std::cerr << "verify: bound not certified for T = " << format_g17(pl.T)
              << " (threshold " << format_g17(pl.report.T_threshold) << ")\n";
    return kExitVerify;
  }

  rc.scenario.T_final = pl.T;
  apply_auto_dt(rc, pl.T);
  SolutionTrace trace;
  try {
    trace = solve(rc.scenario, rc.solver, {pl.book.alpha});
  } catch (const std::runtime_error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  write_trace_csv(join(rc.out_dir, "trace.csv"), rc, trace);

  const auto margins = verify_solution_against_bounds(trace, pl.report, pl.book);
  write_margins_csv(join(rc.out_dir, "margins.csv"), rc, margins);

  ojson v;
  v["performed"] = true;
  v["records"] = margins.records.size();
  v["weighted_pass"] = margins.weighted_pass;
  v["sup_pass"] = margins.sup_pass;
  v["overall_pass"] = margins.overall_pass;
  v["worst_log10_margin"] = margins.worst_log10_margin;
  if (!margins.note.empty()) v["note"] = margins.note;
  j["verification"] = v;
  j["files"] = {"bounds.csv", "trace.csv", "margins.csv"};
  write_json(join(rc.out_dir, "report.json"), j);

  if (!margins.overall_pass) {
    std::cerr << "verify: solution exceeded a certified bound (worst log10 margin "
              << format_g17(margins.worst_log10_margin) << ")\n";
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_check_inequalities(const RunConfig& rc) {
  ensure_dir(rc.out_dir);
  const double a = rc.scenario.law.degeneracy_a();
  const double p = 2.0 - a;
  const double r1 = rc.r1 > 0 ? rc.r1 : default_r1(rc.grid.n, p);

  const bool empty_family = make_family(rc.family, rc.grid).empty();
  EmbeddingConstants consts;
  if (rc.user_constants) {
    consts = *rc.user_constants;
  } else if (empty_family) {
    consts.p = p;  // nothing to calibrate against, and nothing to check
    consts.r1 = r1;
    consts.c1 = consts.c2 = consts.c3 = consts.c4 = 1.0;
    consts.c5 = consts.c6 = consts.c7 = 1.0;
    consts.provenance = "default (empty family)";
  } else {
    consts = calibrate_constants(rc.grid, r1, p, rc.family, rc.safety_factor);
  }
  if (rc.user_constants) {
    consts.p = p;
    consts.r1 = r1;
  }
  if (rc.sabotage) {
    consts.c1 /= 1e4;
    consts.c2 /= 1e4;
    consts.c3 /= 1e4;
    consts.c4 /= 1e4;
    consts.c5 /= 1e4;
    consts.c6 /= 1e4;
    consts.c7 /= 1e4;
    consts.provenance = "sabotaged";
  }

  std::vector<SobolevParams> params;
  if (!rc.param_tuples.empty()) {
    for (const auto& t : rc.param_tuples)
      params.push_back(
          SobolevParams::make(rc.grid.n, t[0], t[1], t[2], t[3], t[4], t[5], &consts));
  } else {
    const double s = 1.0 + rc.scenario.lambda;
    for (double alpha : {15.0, 30.0, 40.0})
      for (double r : {0.5, 1.0})
        for (double eps : {0.1, 1.0}) {
          try {
            params.push_back(
                SobolevParams::make(rc.grid.n, p, r1, s, r, alpha, eps, &consts));
          } catch (const AdmissibilityError&) {
            continue;  // drop inadmissible corners of the default grid
          }
        }
  }

  const auto W = compute_weights(rc.scenario.law);
  SuiteWeights weights{SpatialField::constant(rc.grid, 1.0, "omega"), rc.scenario.phi,
                       W.W1};
  const std::string csv = join(rc.out_dir, "margins.csv");
  const auto rep = run_suite(rc.grid, rc.family, params, consts, weights, csv);

  // prepend the provenance stamp the suite writer does not know about
  {
    std::ifstream in(csv);
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    auto out = open_out(csv);
    stamp(out, rc);
    out << body.str();
  }

  ojson j = meta_json(rc, "check-inequalities");
  j["embedding_constants"] = consts_json(consts);
  j["parameter_sets"] = params.size();
  j["family_size"] = rc.family.count;
  j["records"] = rep.records.size();
  j["all_pass"] = rep.all_pass;
  j["worst_margin"] = rep.records.empty() ? 0.0 : rep.worst_margin;
  j["resolution"] = rep.resolution;
  j["files"] = {"margins.csv"};
  write_json(join(rc.out_dir, "report.json"), j);

  if (!rep.all_pass) {
    std::cerr << "check-inequalities: " << rep.records.size()
              << " records, worst margin " << format_g17(rep.worst_margin) << '\n';
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_calibrate(const RunConfig& rc) {
  ensure_dir(rc.out_dir);
  const double a = rc.scenario.law.degeneracy_a();
  const double p = 2.0 - a;
  const double r1 = rc.r1 > 0 ? rc.r1 : default_r1(rc.grid.n, p);
  const auto consts = calibrate_constants(rc.grid, r1, p, rc.family, rc.safety_factor);

  ojson j = meta_json(rc, "calibrate");
  j["embedding_constants"] = consts_json(consts);
  j["files"] = {"constants.json"};
  write_json(join(rc.out_dir, "report.json"), j);
  write_json(join(rc.out_dir, "constants.json"), consts_json(consts));

  std::printf("calibrated constants (p = %.17g, r1 = %.17g, safety %.17g):\n", p, r1,
              consts.safety_factor);
  std::printf("  c1 = %.17g  c2 = %.17g\n", consts.c1, consts.c2);
  std::printf("  c3 = %.17g  c4 = %.17g\n", consts.c3, consts.c4);
  std::printf("  c5 = %.17g  c6 = %.17g\n", consts.c5, consts.c6);
  std::printf("  c7 = %.17g\n", consts.c7);
  return kExitOk;
}

int cmd_gas_example(int n, double r1, double alpha0, double r, double kappa_tilde,
                    const std::string& out_dir) {
  if (n != 2 && n != 3) {
    std::cerr << "gas-example: n must be 2 or 3\n";
    return kExitConfig;
  }
  if (r1 <= 0) r1 = (n == 3) ? 0.8 : 2.0 / 3.0;
  if (kappa_tilde <= 0) kappa_tilde = 1.03;
  if (alpha0 <= 0) alpha0 = 40.0 / kappa_tilde;  // puts the first rung at alpha = 40
  if (r < 0) r = 1.0;

  const auto tab = example_gas_tables(n, r1, alpha0, r, kappa_tilde);

  std::printf("two-term gas law closed forms, n = %d, r1 = %.17g, alpha = %.17g, "
              "r = %.17g, kappa_tilde = %.17g\n",
              n, r1, tab.book.alpha, r, kappa_tilde);
  std::printf("%-22s %24s %24s %12s %s\n", "name", "generic", "closed", "diff", "pass");
  for (const auto& row : tab.rows)
    std::printf("%-22s %24.17g %24.17g %12.3e %s\n", row.name.c_str(), row.generic,
                row.closed, row.diff, row.pass ? "yes" : "NO");
  std::printf("table %s\n", tab.pass ? "PASS" : "FAIL");

  ensure_dir(out_dir);
  auto out = open_out(join(out_dir, "gas_example.csv"));
  std::ostringstream argstr;
  argstr << "gas-example n=" << n << " r1=" << format_g17(r1)
         << " alpha0=" << format_g17(alpha0) << " r=" << format_g17(r)
         << " kappa_tilde=" << format_g17(kappa_tilde);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(argstr.str())));
  out << "# config_hash=" << hash << " seed=0\n";
  out << "name,generic,closed,diff,pass\n";
  for (const auto& row : tab.rows)
    out << row.name << ',' << format_g17(row.generic) << ',' << format_g17(row.closed)
        << ',' << format_g17(row.diff) << ',' << (row.pass ? 1 : 0) << '\n';

  return tab.pass ? kExitOk : kExitVerify;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"forchflow: heterogeneous Forchheimer gas flow with certified a-priori "
               "bounds"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--output", out_override, "override [output] directory");
  };

  auto* solve_cmd = app.add_subcommand("solve", "integrate the initial-boundary value problem");
  auto* bounds_cmd = app.add_subcommand("bounds", "assemble the certified bound curves");
  auto* verify_cmd =
      app.add_subcommand("verify", "solve, then check the solution against its bounds");
  auto* ineq_cmd = app.add_subcommand("check-inequalities",
                                      "stress-test the multi-weight inequalities");
  auto* calib_cmd = app.add_subcommand("calibrate", "calibrate embedding constants");
  add_common(solve_cmd);
  add_common(bounds_cmd);
  add_common(verify_cmd);
  add_common(ineq_cmd);
  add_common(calib_cmd);

  auto* gas_cmd = app.add_subcommand("gas-example",
                                     "closed-form cross-check table for the gas law");
  int gas_n = 3;
  double gas_r1 = 0, gas_alpha0 = 0, gas_r = -1, gas_kt = 0;
  std::string gas_out = "out";
  gas_cmd->add_option("--n", gas_n, "spatial dimension (2 or 3)");
  gas_cmd->add_option("--r1", gas_r1, "interpolation exponent r1");
  gas_cmd->add_option("--alpha0", gas_alpha0, "iteration base exponent");
  gas_cmd->add_option("--r", gas_r, "boundary exponent r");
  gas_cmd->add_option("--kappa-tilde", gas_kt, "ladder ratio");
  gas_cmd->add_option("--output", gas_out, "output directory for gas_example.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gas_cmd->parsed())
      return cmd_gas_example(gas_n, gas_r1, gas_alpha0, gas_r, gas_kt, gas_out);

    RunConfig rc = build_run_config(parse_config_file(config_path));
    if (!out_override.empty()) rc.out_dir = out_override;

    if (solve_cmd->parsed()) return cmd_solve(std::move(rc));
    if (bounds_cmd->parsed()) return cmd_bounds(std::move(rc));
    if (verify_cmd->parsed()) return cmd_verify(std::move(rc));
    if (ineq_cmd->parsed()) return cmd_check_inequalities(rc);
    if (calib_cmd->parsed()) return cmd_calibrate(rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AdmissibilityError& e) {
    std::cerr << "inadmissible parameters: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitConfig;
}

}  // namespace forch
