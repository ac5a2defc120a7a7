#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "forch/constitutive.hpp"
#include "forch/grid.hpp"
#include "forch/inequality.hpp"
#include "forch/numerics.hpp"
#include "forch/solver.hpp"

namespace forch {

/// One admissibility condition evaluated during exponent assembly.
struct Condition {
  std::string id;           // stable machine-readable name
  std::string requirement;  // human-readable restatement
  bool ok = false;
};

/// Every derived exponent of the a-priori estimate machinery for one choice
/// of (n, a, lambda, r1, r, alpha0, kappa_tilde). The working exponent is
/// alpha = beta1 = kappa_tilde * alpha0; the differential inequality and the
/// bound curve run at alpha, the iteration ladder runs over
/// beta_j = kappa_tilde^j * alpha0.
///
/// build_exponents computes all fields except the iteration products
/// (mu_tilde, nu_tilde, G, omega, omega1..3), which moser_products fills.
struct ExponentBook {
  // inputs
  int n = 0;
  double a = 0, lambda = 0;
  double r1 = 0, r = 0;
  double alpha0 = 0, kappa_tilde = 0;

  // derived for the differential inequality at alpha = beta1
  double p = 0, s = 0;      // p = 2 - a, s = 1 + lambda
  double r_star = 0;        // 1 + (2-a)/n - 1/r1
  double r_tilde = 0;       // r + (r + lambda + a - 1)/(1 - a)
  double alpha = 0;         // beta1 = kappa_tilde * alpha0
  double m = 0;             // (alpha - s + p)/p = (alpha + 1 - lambda - a)/(2 - a)
  double theta = 0, mu1 = 0;
  double theta_tilde = 0, mu1_tilde = 0;
  double mu_min = 0;        // max{lambda+1, -mu1, -mu1_tilde}
  double mu_max = 0;        // max{mu1, r_tilde, mu1_tilde}

  // Hoelder exponent chain and its conjugates
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0, p5 = 0, p6 = 0;
  double q1 = 0, q2 = 0, q3 = 0, q4 = 0, q5 = 0;

  // iteration bookkeeping
  double h1 = 0, h2 = 0, h3 = 0;
  double kappa = 0;         // 1 + r_star/2 + (1 - lambda - a)/alpha, at alpha = beta1
  double nu1 = 0, nu2 = 0;  // the ladder exponents evaluated at alpha = beta1
  std::vector<double> beta; // beta_j = kappa_tilde^j * alpha0, first entries

  // products, filled by moser_products (zero until then)
  double mu_tilde = 0, nu_tilde = 0;
  double G = 0, omega = 0;
  double omega1 = 0, omega2 = 0, omega3 = 0;
  double sum_j_over_beta = 0;     // sum (j+1)/beta_j, closed form
  int moser_terms = 0;            // factors actually multiplied
  double moser_tol = 0;
  double moser_tail_bound = 0;    // geometric estimate of the dropped log-mass

  std::vector<Condition> conditions;

  /// The ladder exponents as functions of the rung exponent:
  ///   lower(al) = (al - h1) / (1 + 1/(al (1 + r_star/2)))
  ///   upper(al) = (al + h3) / (1 - lambda/(al (1 + r_star/2)))
  double ladder_lower(double al) const;
  double ladder_upper(double al) const;

  bool products_ready() const { return omega > 0; }
};

/// Builds the full exponent book. Every admissibility condition is evaluated
/// and recorded; the first violated one is thrown as AdmissibilityError with
/// its id and requirement. p_overrides replaces the default choice of
/// p1..p5 (p6 is always derived from p3 and p5).
ExponentBook build_exponents(int n, double a, double lambda, double r1, double r,
                             double alpha0, double kappa_tilde,
                             const std::optional<std::array<double, 5>>& p_overrides = {});

/// Fills mu_tilde, nu_tilde, G, omega, omega1..3. Factors are multiplied
/// until |factor - 1| < truncation_tol for both ladders or 1e5 terms,
/// whichever first; the geometric tail estimate is recorded.
ExponentBook moser_products(const ExponentBook& book, double truncation_tol = 1e-14);

/// Data-dependent integrals of the weight fields and boundary data. All
/// values are carried in log space; huge is fine, zero is fine.
struct DataIntegrals {
  double alpha = 0, r = 0;  // copies of the book values they were built for
  Mag K1, K2, K3, K4, K5, K6;
  Mag N1, N2, N3;
  Mag Psi_T;
  Mag Phi_star;
  /// Heuristic resolution warnings: set when a single cell carries more than
  /// half of one of the reciprocal-weight integrals, the discrete shadow of a
  /// divergent continuum integral. Purely advisory.
  bool warn_volume_weights = false;    // the K and N1 ingredient integrals
  bool warn_parabolic_weights = false; // the N2 ingredient integrals
  std::string warning_note;
};

DataIntegrals compute_data_integrals(const ExponentBook& book, const SpatialField& phi,
                                     const WeightFields& weights, const SpatialField& aN,
                                     const BoundaryField& psi, double T, double alpha,
                                     double r);

/// Every constant of the differential-inequality chain and the sup-bound
/// chain. Chat0..2 are filled by linfty_bound, the rest by compute_Zstar.
struct ProofConstants {
  double c0 = 0;            // 2^(a-1)
  double C1 = 0;            // (2^(1-a) C_Z)^(2-a)
  double eps2 = 0, eps3 = 0;
  Mag C2;                   // (2 C1)^((alpha+r)/(r - lambda(3-2a) + 1))
  Mag D1_theta, D2_theta;   // D_{1,m,theta}, D_{2,m,theta}
  Mag D1_theta_tilde, D2_theta_tilde;
  Mag Phi1, Phi2, Phi3, Phi4, Phi5, Phi6, Phi7;
  Mag Z1, Z2, Z3, Z4;
  Mag Zstar;
  Mag c8, c9, c10, c11;
  Mag Chat0, Chat1, Chat2;
};

/// Assembles the full constant chain:
///   eps2 = c0/8, eps3 = c0 (alpha - lambda)/24,
///   Z1 = max{D1 Phi1, eps2^(-theta/(1-theta)) D2 Phi2},
///   Z2 = K3^((lambda+1)/alpha),
///   Z3 = max of the four trace terms,
///   Z4 = 2((alpha - lambda) Z1 + Z3) + (alpha - lambda) Z2 / 2 + 2 Z3,
///   Zstar = (alpha/lambda) max{1, Z4, C2 (alpha - lambda) K5},
/// plus c8 = c10/lambda, c9 = 8 c10,
///   c10 = 20 max{2 C1, 4 lambda, c5^(1/p3), [4 (2 c6 p3)^(2-a)]^(1/(p3(2-a)-1))},
///   c11 = 2^(4+r_star) max{1, c7^(2-a)} max{c8, c9}^(1+r_star/2).
/// consts must be calibrated at p = 2 - a with the book's r1.
ProofConstants compute_Zstar(const ExponentBook& book, const DataIntegrals& integrals,
                             double C_Z, const EmbeddingConstants& consts);

/// Certified bound data: the weighted L^alpha curve, its threshold, and
/// (after linfty_bound) the sup-norm bound.
struct BoundReport {
  // carried so the curve can be re-evaluated exactly at any time
  double alpha = 0, mu_max = 0;
  Mag Zstar;
  Mag V0;
  TimeSeries M;             // boundary forcing samples, M(t) >= 1

  double T_threshold = 0;   // equality time of the smallness condition
  std::vector<double> t;    // presentation samples of the curve
  std::vector<Mag> V;       // bound on int phi u^alpha at t

  double beta = 0;          // optional unweighted exponent, 0 when absent
  Mag C_alpha_beta;
  std::vector<Mag> U_beta;  // bound on int u^beta at t

  // filled by linfty_bound
  double T = 0, eps = 0;
  Mag delta_T;              // (3 Zstar mu_max / alpha) V0^(mu_max/alpha) int_0^T M
  Mag u0_norm;              // ||u0||_{L^alpha_phi}
  Mag Linf_bound;
  bool certified = false;
  std::string note;
};

/// The boundary forcing M(t) = 1 + int_Gamma (psi^-)^((alpha+r)/r) dS sampled
/// on psi's native time grid extended to cover [0, t_max].
TimeSeries boundary_forcing_series(const BoundaryField& psi, double alpha, double r,
                                   double t_max);

/// int phi u^alpha in log space (cells with u = 0 contribute zero).
Mag phi_weighted_power(const SpatialField& phi, const SpatialField& u, double alpha);

/// Solves the smallness condition for T_threshold by monotone bisection on
/// the cumulative trapezoid of M, then samples the curve
///   V(t) = (V0^(-mu_max/alpha) - (3 Zstar mu_max / alpha) int_0^t M)^(-alpha/mu_max)
/// on [0, T_threshold). With beta in (0, alpha) and phi supplied, also emits
///   U_beta(t) = C_{alpha,beta}^(1-beta/alpha) (same base)^(-beta/mu_max),
///   C_{alpha,beta} = int phi^(-beta/(alpha-beta)).
BoundReport alpha_bound_curve(const ExponentBook& book, const ProofConstants& proof,
                              Mag V0, const TimeSeries& M,
                              std::optional<double> beta = {},
                              const SpatialField* phi = nullptr);

/// The curve value at any time: exact re-evaluation, +inf (as a huge log)
/// at and beyond the threshold.
Mag bound_value_at(const BoundReport& report, double time);

/// Completes the report with the certified sup bound on U x (eps, T):
///   Chat0 = [2^(2+r_star/2) c11 (kappa_tilde alpha0)^(3(3-2a)/(2(1-a)))]^omega,
///   Chat1 = 2^omega2 Chat0,  Chat2 = 2^(nu_tilde/alpha) Chat1,
///   bound = Chat2 eps^(-omega2) (1+T)^(omega1 + nu_tilde/alpha)
///           (1 - delta_T)^(-nu_tilde/mu_max) N3^omega3 Psi_T^omega2
///           (1 + u0_norm)^nu_tilde.
/// Requires 0 < eps < min{1, T} and a book completed by moser_products. When
/// the smallness condition fails (delta_T >= 1) the report is returned
/// uncertified with the reason in `note`; nothing is thrown.
/// Writes Chat0..2 back into `proof`. verbosity > 0 prints the assembled
/// constants to stdout.
BoundReport linfty_bound(const ExponentBook& book, const DataIntegrals& integrals,
                         ProofConstants& proof, const BoundReport& partial, double T,
                         double eps, Mag u0_norm, int verbosity = 0);

/// Iteration-lemma evaluation for y_{j+1} <= A^(omega_j/kappa_j)
/// (y_j^{r_j} + y_j^{s_j})^(1/kappa_j): the closed bound
/// (2A)^(G alpha_bar) max{y0^beta_bar, y0^gamma_bar} together with the direct
/// iteration up to horizon_J as a cross-check.
struct GennResult {
  Mag bound;
  std::vector<Mag> iterates;  // y_0 .. y_J
  bool verified = false;      // y_J <= bound (1 + 1e-9)
  double alpha_bar = 0, G = 0, beta_bar = 0, gamma_bar = 0;
};

GennResult genn_bound(double A, double y0, const std::vector<double>& kappa_seq,
                      const std::vector<double>& r_seq, const std::vector<double>& s_seq,
                      const std::vector<double>& omega_seq, int horizon_J);

/// Margins of a computed solution against a certified report.
struct MarginRecord {
  std::string kind;  // "weighted_power" or "sup_norm"
  double t = 0;
  Mag observed, bound;
  double log10_margin = 0;  // log10(bound/observed), capped at 1e6 when observed = 0
  bool pass = false;
};

struct MarginReport {
  std::vector<MarginRecord> records;
  bool weighted_pass = true;
  bool sup_pass = true;
  bool overall_pass = true;
  double worst_log10_margin = 1e6;
  std::string note;
};

/// Checks every recorded sample of int phi u^alpha against the curve and the
/// max cell value over snapshots in (eps, T] against the sup bound. The trace
/// must record the book's working exponent and share its lambda.
MarginReport verify_solution_against_bounds(const SolutionTrace& trace,
                                            const BoundReport& report,
                                            const ExponentBook& book);

/// Golden cross-check for the two-term gas law (a = lambda = 1/2): the
/// generic pipeline values against the closed forms that case admits.
struct GasRow {
  std::string name;
  double generic = 0, closed = 0, diff = 0;
  bool pass = false;
};

struct GasTable {
  std::vector<GasRow> rows;
  bool pass = true;
  ExponentBook book;
};

GasTable example_gas_tables(int n, double r1, double alpha0, double r,
                            double kappa_tilde, double a = 0.5, double lambda = 0.5);

}  // namespace forch
