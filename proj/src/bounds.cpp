#include "forch/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace forch {

namespace {

// Sentinel log value standing in for "at or beyond the blow-up threshold".
constexpr double kBeyondThresholdLog = 1e18;

void record(std::vector<Condition>& list, const std::string& id,
            const std::string& requirement, bool ok) {
  list.push_back({id, requirement, ok});
}

// Records and throws immediately on failure: later stages may divide by
// quantities this condition keeps away from zero.
void gate(std::vector<Condition>& list, const std::string& id,
          const std::string& requirement, bool ok) {
  record(list, id, requirement, ok);
  if (!ok) throw AdmissibilityError(id + ": need " + requirement);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double ExponentBook::ladder_lower(double al) const {
  return (al - h1) / (1.0 + 1.0 / (al * (1.0 + r_star / 2.0)));
}

double ExponentBook::ladder_upper(double al) const {
  return (al + h3) / (1.0 - lambda / (al * (1.0 + r_star / 2.0)));
}

ExponentBook build_exponents(int n, double a, double lambda, double r1, double r,
                             double alpha0, double kappa_tilde,
                             const std::optional<std::array<double, 5>>& p_overrides) {
  if (n != 2 && n != 3) throw std::invalid_argument("build_exponents: n must be 2 or 3");
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("build_exponents: a must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda <= 0.5))
    throw std::invalid_argument("build_exponents: lambda must lie in (0, 1/2]");
  if (!(r1 > 0.0) || !(alpha0 > 0.0) || !(kappa_tilde > 0.0) || !std::isfinite(r))
    throw std::invalid_argument("build_exponents: parameters must be finite and positive");

  ExponentBook b;
  b.n = n;
  b.a = a;
  b.lambda = lambda;
  b.r1 = r1;
  b.r = r;
  b.alpha0 = alpha0;
  b.kappa_tilde = kappa_tilde;
  b.p = 2.0 - a;
  b.s = 1.0 + lambda;

  auto& cond = b.conditions;

  gate(cond, "r1_window",
       "n/(n+2-a) < r1 < 1 <= r1*(2-a) < n  (here n/(n+2-a) = " + fmt(n / (n + b.p)) + ")",
       r1 > n / (n + b.p) && r1 < 1.0 && r1 * b.p >= 1.0 && r1 * b.p < n);

  b.r_star = 1.0 + b.p / n - 1.0 / r1;
  record(cond, "r_star_window", "r_star in (0, 1)", b.r_star > 0.0 && b.r_star < 1.0);

  gate(cond, "kappa_tilde_window",
       "1 < kappa_tilde < sqrt(1 + r_star/2) = " + fmt(std::sqrt(1.0 + b.r_star / 2.0)),
       kappa_tilde > 1.0 && kappa_tilde < std::sqrt(1.0 + b.r_star / 2.0));

  const double r_floor = std::max(0.0, lambda * (3.0 - 2.0 * a) - 1.0);
  gate(cond, "r_lower", "r > max{0, lambda*(3-2a) - 1} = " + fmt(r_floor), r > r_floor);

  b.r_tilde = r + (r + lambda + a - 1.0) / (1.0 - a);
  gate(cond, "r_tilde_positive",
       "r_tilde = r + (r+lambda+a-1)/(1-a) > 0 (the boundary trace estimate is "
       "applied in its r_tilde > 0 form); got r_tilde = " + fmt(b.r_tilde),
       b.r_tilde > 0.0);

  b.alpha = kappa_tilde * alpha0;
  const double interior_floor =
      std::max(1.0 + lambda,
               2.0 * (2.0 - a) * (r + a + lambda - 1.0) / (b.r_star * (1.0 - a)));
  gate(cond, "alpha_interior",
       "alpha = kappa_tilde*alpha0 > max{1+lambda, 2(2-a)(r+a+lambda-1)/(r_star(1-a))} = " +
           fmt(interior_floor),
       b.alpha > interior_floor);

  const double ps = b.p - b.s;  // 1 - a - lambda
  auto theta_of = [&](double rr) {
    return (b.alpha + 2.0 * rr) / (b.alpha * (1.0 + b.r_star) + 2.0 * ps);
  };
  auto mu_of = [&](double rr, double th) { return (rr + th * (b.s - b.p)) / (1.0 - th); };
  b.theta = theta_of(r);
  b.mu1 = mu_of(r, b.theta);
  b.theta_tilde = theta_of(b.r_tilde);
  b.mu1_tilde = mu_of(b.r_tilde, b.theta_tilde);
  b.m = (b.alpha - b.s + b.p) / b.p;

  record(cond, "theta_window", "theta in (0, 1)", b.theta > 0.0 && b.theta < 1.0);
  record(cond, "theta_tilde_window", "theta_tilde in (0, 1)",
         b.theta_tilde > 0.0 && b.theta_tilde < 1.0);
  record(cond, "mu1_range", "mu1 > -alpha", b.mu1 > -b.alpha);
  record(cond, "mu1_tilde_range", "mu1_tilde > -alpha", b.mu1_tilde > -b.alpha);
  record(cond, "m_window", "m = (alpha-s+p)/p in [1, alpha)",
         b.m >= 1.0 && b.m < b.alpha);

  b.mu_min = std::max({lambda + 1.0, -b.mu1, -b.mu1_tilde});
  b.mu_max = std::max({b.mu1, b.r_tilde, b.mu1_tilde});
  record(cond, "mu_min_window", "mu_min in (0, alpha)",
         b.mu_min > 0.0 && b.mu_min < b.alpha);
  record(cond, "mu_max_positive", "mu_max > 0", b.mu_max > 0.0);

  // Hoelder chain. The defaults keep p1, p2 and the product p3*p4 strictly
  // inside (1, kappa_tilde); p3 is bisected toward 1 until the p5 interval
  // (1, kappa_tilde(1-a)/(p3(2-a)-1)) opens up, then p5 sits at its midpoint.
  if (p_overrides) {
    b.p1 = (*p_overrides)[0];
    b.p2 = (*p_overrides)[1];
    b.p3 = (*p_overrides)[2];
    b.p4 = (*p_overrides)[3];
    b.p5 = (*p_overrides)[4];
  } else {
    b.p1 = b.p2 = 0.5 * (1.0 + kappa_tilde);
    b.p3 = b.p4 = std::sqrt(0.5 * (1.0 + kappa_tilde));
    for (int i = 0; i < 200; ++i) {
      if (kappa_tilde * (1.0 - a) / (b.p3 * (2.0 - a) - 1.0) > 1.0) break;
      b.p3 = 0.5 * (1.0 + b.p3);
      b.p4 = b.p3;
    }
    const double p5_max = kappa_tilde * (1.0 - a) / (b.p3 * (2.0 - a) - 1.0);
    b.p5 = 0.5 * (1.0 + p5_max);
  }
  b.p6 = b.p5 * (b.p3 * (2.0 - a) - 1.0) / (1.0 - a);
  gate(cond, "holder_chain",
       "p1..p5 > 1, p1 < kappa_tilde, p2 < kappa_tilde, p3*p4 < kappa_tilde, "
       "p6 = p5(p3(2-a)-1)/(1-a) < kappa_tilde",
       b.p1 > 1.0 && b.p2 > 1.0 && b.p3 > 1.0 && b.p4 > 1.0 && b.p5 > 1.0 &&
           b.p1 < kappa_tilde && b.p2 < kappa_tilde && b.p3 * b.p4 < kappa_tilde &&
           b.p6 < kappa_tilde);
  b.q1 = b.p1 / (b.p1 - 1.0);
  b.q2 = b.p2 / (b.p2 - 1.0);
  b.q3 = b.p3 / (b.p3 - 1.0);
  b.q4 = b.p4 / (b.p4 - 1.0);
  b.q5 = b.p5 / (b.p5 - 1.0);

  b.h1 = lambda + 1.0;
  b.h2 = std::max({0.0, 3.0 * (lambda - 2.0 * a) - 1.0,
                   (a + lambda - 1.0) / (b.p3 * (2.0 - a) - 1.0)});
  b.h3 = std::max(b.h2, 1.0 - a - lambda);

  b.kappa = 1.0 + b.r_star / 2.0 + (1.0 - lambda - a) / b.alpha;
  record(cond, "kappa_above_one", "kappa(alpha) > 1", b.kappa > 1.0);
  const double kappa_at_alpha0 = 1.0 + b.r_star / 2.0 + (1.0 - lambda - a) / alpha0;
  record(cond, "ladder_gap", "kappa evaluated along the ladder stays above kappa_tilde^2",
         kappa_at_alpha0 > kappa_tilde * kappa_tilde);

  const double caccio_floor =
      std::max({lambda + 1.0,
                b.p1 * (lambda * (3.0 - 2.0 * a) - 1.0) / (kappa_tilde - b.p1),
                b.p5 * (a + lambda - 1.0) / ((1.0 - a) * (kappa_tilde - b.p6))});
  gate(cond, "alpha_caccioppoli",
       "alpha0 > max{lambda+1, p1(lambda(3-2a)-1)/(kappa_tilde-p1), "
       "p5(a+lambda-1)/((1-a)(kappa_tilde-p6))} = " + fmt(caccio_floor),
       alpha0 > caccio_floor);

  const double parabolic_floor =
      std::max(2.0 * (lambda + a - 1.0) / b.r_star,
               (1.0 - lambda - a) / (kappa_tilde - 1.0));
  gate(cond, "alpha_parabolic",
       "alpha0 > max{2(lambda+a-1)/r_star, (1-lambda-a)/(kappa_tilde-1)} = " +
           fmt(parabolic_floor),
       alpha0 > parabolic_floor);

  const double moser_floor = std::max(
      {lambda + 1.0, 2.0 * (lambda + a - 1.0) / b.r_star,
       (1.0 - lambda - a) / (kappa_tilde - 1.0),
       b.p1 * (lambda * (3.0 - 2.0 * a) - 1.0) / (kappa_tilde - b.p1),
       b.p5 * (a + lambda - 1.0) / ((1.0 - a) * (kappa_tilde - b.p6)),
       (lambda + a - 1.0) / (1.0 + b.r_star / 2.0 - kappa_tilde * kappa_tilde)});
  gate(cond, "alpha0_moser",
       "alpha0 > max{1+lambda, 2(lambda+a-1)/r_star, (1-lambda-a)/(kappa_tilde-1), "
       "p1(lambda(3-2a)-1)/(kappa_tilde-p1), p5(a+lambda-1)/((1-a)(kappa_tilde-p6)), "
       "(lambda+a-1)/(1+r_star/2-kappa_tilde^2)} = " + fmt(moser_floor),
       alpha0 > moser_floor);

  const double base_floor = 2.0 * (2.0 - a) * (r + a + lambda - 1.0) /
                            (kappa_tilde * b.r_star * (1.0 - a));
  gate(cond, "alpha0_base_step",
       "alpha0 > 2(2-a)(r+a+lambda-1)/(kappa_tilde r_star (1-a)) = " + fmt(base_floor),
       alpha0 > base_floor);

  b.nu1 = b.ladder_lower(b.alpha);
  b.nu2 = b.ladder_upper(b.alpha);
  record(cond, "ladder_window", "0 < lower-ladder(alpha)/alpha < 1 < upper-ladder(alpha)/alpha",
         b.nu1 > 0.0 && b.nu1 < b.alpha && b.nu2 > b.alpha);

  b.beta.resize(16);
  for (int j = 0; j < 16; ++j) b.beta[j] = alpha0 * std::pow(kappa_tilde, j);

  for (const auto& c : b.conditions)
    if (!c.ok) throw AdmissibilityError(c.id + ": need " + c.requirement);
  return b;
}

ExponentBook moser_products(const ExponentBook& book, double truncation_tol) {
  if (!(truncation_tol > 0.0))
    throw std::invalid_argument("moser_products: truncation tolerance must be positive");
  ExponentBook out = book;
  const double c = 1.0 + book.r_star / 2.0;
  const long j_cap = 100000;
  double log_mu = 0.0, log_nu = 0.0;
  double fr = 0.0, fs = 0.0;
  long terms = 0;
  for (long j = 0; j < j_cap; ++j) {
    const double bj = book.alpha0 * std::pow(book.kappa_tilde, static_cast<double>(j));
    fr = (1.0 - book.h1 / bj) / (1.0 + 1.0 / (bj * c));
    fs = (1.0 + book.h3 / bj) / (1.0 - book.lambda / (bj * c));
    if (!(fr > 0.0) || !(fs > 0.0))
      throw AdmissibilityError(
          "ladder_positive: need every iteration factor positive; rung " +
          std::to_string(j) + " gives " + fmt(fr) + ", " + fmt(fs) +
          " (alpha0 too small)");
    log_mu += std::log(fr);
    log_nu += std::log(fs);
    terms = j + 1;
    if (std::abs(fr - 1.0) < truncation_tol && std::abs(fs - 1.0) < truncation_tol) break;
  }
  out.moser_terms = static_cast<int>(terms);
  out.moser_tol = truncation_tol;
  out.moser_tail_bound =
      (std::abs(fr - 1.0) + std::abs(fs - 1.0)) / (book.kappa_tilde - 1.0);
  out.mu_tilde = std::exp(log_mu);
  out.nu_tilde = std::exp(log_nu);

  const double fs0 = (1.0 + book.h3 / book.alpha0) / (1.0 - book.lambda / (book.alpha0 * c));
  out.G = out.nu_tilde / fs0;
  const double q = 1.0 - 1.0 / book.kappa_tilde;
  out.sum_j_over_beta = 1.0 / (book.alpha0 * q * q);
  out.omega = out.G * out.sum_j_over_beta;
  out.omega1 = (2.0 + book.r_star / 2.0) * out.omega;
  out.omega2 = (1.0 + book.r_star / 2.0) * out.omega;
  out.omega3 = (3.0 + book.r_star / 2.0) * out.omega;
  return out;
}

namespace {

struct PowTerm {
  const SpatialField* f;
  double e;
  const char* name;
};

// integral of prod_i f_i^{e_i} dx in log space. top_frac receives the largest
// single-cell share of the total, the discrete symptom of a divergent
// continuum integral.
Mag log_integral(const Grid& g, std::initializer_list<PowTerm> terms,
                 double* top_frac = nullptr) {
  Mag acc = Mag::zero();
  double top = -std::numeric_limits<double>::infinity();
  const double lv = std::log(g.cell_volume());
  for (long c = 0; c < g.cell_count(); ++c) {
    double lg = lv;
    bool zero_cell = false;
    for (const auto& t : terms) {
      if (t.e == 0.0) continue;
      const double v = (*t.f)[c];
      if (!(v > 0.0)) {
        if (v == 0.0 && t.e > 0.0) {
          zero_cell = true;
          break;
        }
        throw std::invalid_argument(std::string("data integral: field '") + t.name +
                                    "' must be positive where power " + fmt(t.e) +
                                    " is taken, cell " + std::to_string(c));
      }
      lg += t.e * std::log(v);
    }
    if (zero_cell) continue;
    top = std::max(top, lg);
    acc = Mag::add(acc, Mag::from_log(lg));
  }
  if (top_frac)
    *top_frac = acc.is_zero() ? 0.0 : std::exp(top - acc.lg);
  return acc;
}

}  // namespace

DataIntegrals compute_data_integrals(const ExponentBook& book, const SpatialField& phi,
                                     const WeightFields& weights, const SpatialField& aN,
                                     const BoundaryField& psi, double T, double alpha,
                                     double r) {
  if (std::abs(alpha - book.alpha) > 1e-12 * std::max(1.0, std::abs(book.alpha)) ||
      std::abs(r - book.r) > 1e-12 * std::max(1.0, std::abs(book.r)))
    throw std::invalid_argument(
        "compute_data_integrals: the exponent book was built for different (alpha, r)");
  if (!phi.grid.same_layout(weights.W1.grid) || !phi.grid.same_layout(weights.W3.grid) ||
      !phi.grid.same_layout(aN.grid) || !phi.grid.same_layout(psi.grid))
    throw std::invalid_argument("compute_data_integrals: fields live on different grids");
  if (!(T > 0.0)) throw std::invalid_argument("compute_data_integrals: T must be positive");

  const Grid& g = phi.grid;
  const double a = book.a, lambda = book.lambda, r1 = book.r1;
  DataIntegrals d;
  d.alpha = book.alpha;
  d.r = book.r;

  std::vector<std::pair<std::string, double>> fracs_volume, fracs_parabolic;
  auto take = [&](std::vector<std::pair<std::string, double>>& sink, const char* name,
                  std::initializer_list<PowTerm> terms) {
    double frac = 0.0;
    const Mag v = log_integral(g, terms, &frac);
    sink.emplace_back(name, frac);
    return v;
  };

  d.K1 = take(fracs_volume, "K1", {{&phi, -1.0, "phi"}});
  d.K2 = take(fracs_volume, "K2",
              {{&phi, -(alpha + 1.0 - lambda - a) / (alpha * (1.0 - a) - 1.0 + lambda + a),
                "phi"}});
  d.K3 = take(fracs_volume, "K3",
              {{&aN, alpha / (lambda + 1.0), "a_N"},
               {&phi, 1.0 - alpha / (lambda + 1.0), "phi"}});
  d.K4 = take(fracs_volume, "K4", {{&weights.W1, -r1 / (1.0 - r1), "W1"}});
  d.K5 = take(fracs_volume, "K5",
              {{&weights.W3, (alpha + r) / (r + 1.0 - lambda * (3.0 - 2.0 * a)), "W3"}});
  d.K6 = take(fracs_volume, "K6",
              {{&phi, -1.0, "phi"},
               {&weights.W1,
                -1.0 / ((1.0 - a) * (1.0 - book.theta_tilde) *
                        (1.0 + book.mu1_tilde / alpha)),
                "W1"}});

  const Mag int_phi = log_integral(g, {{&phi, 1.0, "phi"}});
  d.Phi_star = Mag::add(Mag::one(), int_phi);

  const Mag n1a =
      take(fracs_volume, "N1:W3",
           {{&weights.W3, book.q1, "W3"}, {&phi, -book.q1 / book.p1, "phi"}})
          .pow(1.0 / book.q1);
  const Mag n1b = take(fracs_volume, "N1:a_N",
                       {{&aN, book.q2, "a_N"}, {&phi, -book.q2 / book.p2, "phi"}})
                      .pow(1.0 / book.q2);
  const Mag n1c = take(fracs_volume, "N1:phi", {{&phi, -book.q4 / book.p4, "phi"}})
                      .pow(1.0 / (book.p3 * book.q4));
  const Mag n1d =
      take(fracs_volume, "N1:W1",
           {{&weights.W1, -book.q5 / (1.0 - a), "W1"}, {&phi, -book.q5 / book.p5, "phi"}})
          .pow((1.0 - a) / (book.q5 * (book.p3 * (2.0 - a) - 1.0)));
  d.N1 = d.Phi_star *
         Mag::add(Mag::add(Mag::add(Mag::add(Mag::one(), n1a), n1b), n1c), n1d);

  const Mag n2a = take(fracs_parabolic, "N2:phi^(2/r*-1)",
                       {{&phi, 2.0 / book.r_star - 1.0, "phi"}});
  double frac_k4 = 0.0;
  const Mag n2b = log_integral(g, {{&weights.W1, -r1 / (1.0 - r1), "W1"}}, &frac_k4);
  fracs_parabolic.emplace_back("N2:W1", frac_k4);
  const Mag n2c =
      take(fracs_parabolic, "N2:phi^-", {{&phi, -r1 / (1.0 - r1), "phi"}});
  take(fracs_parabolic, "N2:phi^(-1/(1-a))", {{&phi, -1.0 / (1.0 - a), "phi"}});
  d.N2 = n2a.pow(book.r_star / 2.0) *
         Mag::add(n2b.pow(1.0 - r1), n2c.pow(1.0 - r1)).pow(1.0 / r1);
  d.N3 = Mag::max(d.N1, d.N2);

  // boundary forcing ingredient of Psi_T, trapezoid on psi's native grid
  std::set<double> stamps{0.0, T};
  for (double tt : psi.times)
    if (tt > 0.0 && tt < T) stamps.insert(tt);
  TimeSeries surf;
  for (double tt : stamps)
    surf.push(tt, integrate_boundary(psi.grid, [&](long ord) {
                const double v = psi.value(ord, tt);
                return v < 0.0 ? std::pow(-v, book.q3) : 0.0;
              }));
  const double psi_int = surf.integral_to(T);
  d.Psi_T = Mag::add(Mag::one(),
                     Mag::from(psi_int).pow(book.p3 * (2.0 - a) /
                                            (book.q3 * (book.p3 * (2.0 - a) - 1.0))));

  std::ostringstream note;
  const bool coarse = g.cell_count() >= 64;
  for (const auto& [name, frac] : fracs_volume)
    if (coarse && frac > 0.5) {
      d.warn_volume_weights = true;
      note << name << " carries " << fmt(100.0 * frac) << "% in one cell; ";
    }
  for (const auto& [name, frac] : fracs_parabolic)
    if (coarse && frac > 0.5) {
      d.warn_parabolic_weights = true;
      note << name << " carries " << fmt(100.0 * frac) << "% in one cell; ";
    }
  if (d.warn_volume_weights || d.warn_parabolic_weights)
    d.warning_note = "possible weight blow-up unresolved by the grid: " + note.str();
  return d;
}

TimeSeries boundary_forcing_series(const BoundaryField& psi, double alpha, double r,
                                   double t_max) {
  if (!(t_max > 0.0))
    throw std::invalid_argument("boundary_forcing_series: t_max must be positive");
  if (!(r > 0.0) || !(alpha > 0.0))
    throw std::invalid_argument("boundary_forcing_series: alpha and r must be positive");
  const double q = (alpha + r) / r;
  std::set<double> stamps{0.0, t_max};
  for (double tt : psi.times)
    if (tt > 0.0 && tt < t_max) stamps.insert(tt);
  TimeSeries M;
  for (double tt : stamps)
    M.push(tt, 1.0 + integrate_boundary(psi.grid, [&](long ord) {
                 const double v = psi.value(ord, tt);
                 return v < 0.0 ? std::pow(-v, q) : 0.0;
               }));
  return M;
}

Mag phi_weighted_power(const SpatialField& phi, const SpatialField& u, double alpha) {
  if (!phi.grid.same_layout(u.grid))
    throw std::invalid_argument("phi_weighted_power: fields live on different grids");
  if (!(alpha > 0.0))
    throw std::invalid_argument("phi_weighted_power: alpha must be positive");
  Mag acc = Mag::zero();
  const double lv = std::log(phi.grid.cell_volume());
  for (long c = 0; c < phi.grid.cell_count(); ++c) {
    const double uv = u[c], pv = phi[c];
    if (!(pv > 0.0))
      throw std::invalid_argument("phi_weighted_power: phi must be positive, cell " +
                                  std::to_string(c));
    if (uv < 0.0)
      throw std::invalid_argument("phi_weighted_power: u must be nonnegative, cell " +
                                  std::to_string(c));
    if (uv == 0.0) continue;
    acc = Mag::add(acc, Mag::from_log(lv + std::log(pv) + alpha * std::log(uv)));
  }
  return acc;
}

ProofConstants compute_Zstar(const ExponentBook& book, const DataIntegrals& integrals,
                             double C_Z, const EmbeddingConstants& consts) {
  if (std::abs(integrals.alpha - book.alpha) > 1e-12 * std::max(1.0, book.alpha) ||
      std::abs(integrals.r - book.r) > 1e-12 * std::max(1.0, std::abs(book.r)))
    throw std::invalid_argument(
        "compute_Zstar: integrals were computed for different (alpha, r)");
  if (std::abs(consts.p - book.p) > 1e-9 || std::abs(consts.r1 - book.r1) > 1e-9)
    throw std::invalid_argument(
        "compute_Zstar: embedding constants were calibrated at different (p, r1)");
  if (!(C_Z >= 0.0)) throw std::invalid_argument("compute_Zstar: C_Z must be nonnegative");

  const double a = book.a, lambda = book.lambda, alpha = book.alpha, r = book.r;
  const double p = book.p;
  ProofConstants pc;
  pc.c0 = std::pow(2.0, a - 1.0);
  pc.C1 = std::pow(std::pow(2.0, 1.0 - a) * C_Z, 2.0 - a);
  pc.eps2 = pc.c0 / 8.0;
  pc.eps3 = pc.c0 * (alpha - lambda) / 24.0;
  pc.C2 = Mag::from(2.0 * pc.C1).pow((alpha + r) / (r - lambda * (3.0 - 2.0 * a) + 1.0));

  const double th = book.theta, tt = book.theta_tilde, m = book.m;
  const Mag base1 = Mag::from(consts.c4) * Mag::from_log(m * std::log(2.0));
  const Mag base2 = Mag::from(consts.c3 * m) * Mag::from_log(m * std::log(2.0));
  pc.D1_theta = base1.pow(th * p);
  pc.D2_theta = base2.pow(th * p / (1.0 - th));
  pc.D1_theta_tilde = base1.pow(tt * p);
  pc.D2_theta_tilde = base2.pow(tt * p / (1.0 - tt));

  const double g1_exp = th * (alpha * (1.0 - a) - 1.0 + lambda + a) / alpha;
  const double g1_exp_t = tt * (alpha * (1.0 - a) - 1.0 + lambda + a) / alpha;
  pc.Phi1 = integrals.K2.pow(g1_exp) * integrals.K1.pow((1.0 - th) * (1.0 + book.mu1 / alpha));
  pc.Phi2 = integrals.K4.pow(th * (1.0 - book.r1) / (book.r1 * (1.0 - th))) *
            integrals.K1.pow(1.0 + book.mu1 / alpha);
  pc.Phi3 = pc.Phi1;
  pc.Phi4 = pc.Phi2;
  pc.Phi5 = integrals.K6.pow(1.0 + book.mu1_tilde / alpha);
  pc.Phi6 = integrals.K2.pow(g1_exp_t) * pc.Phi5.pow(1.0 - tt);
  pc.Phi7 = integrals.K4.pow(tt * (1.0 - book.r1) / (book.r1 * (1.0 - tt))) * pc.Phi5;

  pc.Z1 = Mag::max(pc.D1_theta * pc.Phi1,
                   Mag::from(pc.eps2).pow(-th / (1.0 - th)) * pc.D2_theta * pc.Phi2);
  pc.Z2 = integrals.K3.pow((lambda + 1.0) / alpha);

  const Mag e3 = Mag::from(pc.eps3);
  const Mag c6ar = Mag::from(consts.c6 * (alpha + r));
  const Mag t1 = Mag::from(consts.c5) * pc.D1_theta * pc.Phi3;
  const Mag t2 = e3.pow(-th / (1.0 - th)) *
                 Mag::from(consts.c5).pow(1.0 / (1.0 - th)) * pc.D2_theta * pc.Phi4;
  const Mag t3 = e3.pow(-1.0 / (1.0 - a)) * c6ar.pow((2.0 - a) / (1.0 - a)) *
                 pc.D1_theta_tilde * pc.Phi6;
  const Mag t4 = e3.pow(-(1.0 / (1.0 - a) + (2.0 - a) / (1.0 - a) * tt / (1.0 - tt))) *
                 c6ar.pow((2.0 - a) / ((1.0 - a) * (1.0 - tt))) * pc.D2_theta_tilde *
                 pc.Phi7;
  pc.Z3 = Mag::max(Mag::max(t1, t2), Mag::max(t3, t4));

  const Mag al = Mag::from(alpha - lambda);
  pc.Z4 = Mag::add(
      Mag::add(Mag::from(2.0) * Mag::add(al * pc.Z1, pc.Z3), Mag::from(0.5) * al * pc.Z2),
      Mag::from(2.0) * pc.Z3);
  pc.Zstar = Mag::from(alpha / lambda) *
             Mag::max(Mag::one(), Mag::max(pc.Z4, pc.C2 * al * integrals.K5));

  const double c10 = 20.0 * std::max({2.0 * pc.C1, 4.0 * lambda,
                                      std::pow(consts.c5, 1.0 / book.p3),
                                      std::pow(4.0 * std::pow(2.0 * consts.c6 * book.p3, 2.0 - a),
                                               1.0 / (book.p3 * (2.0 - a) - 1.0))});
  pc.c10 = Mag::from(c10);
  pc.c8 = Mag::from(c10 / lambda);
  pc.c9 = Mag::from(8.0 * c10);
  pc.c11 = Mag::from_log((4.0 + book.r_star) * std::log(2.0)) *
           Mag::from(std::max(1.0, std::pow(consts.c7, 2.0 - a))) *
           Mag::max(pc.c8, pc.c9).pow(1.0 + book.r_star / 2.0);
  return pc;
}

BoundReport alpha_bound_curve(const ExponentBook& book, const ProofConstants& proof,
                              Mag V0, const TimeSeries& M, std::optional<double> beta,
                              const SpatialField* phi) {
  if (proof.Zstar.is_zero())
    throw std::invalid_argument("alpha_bound_curve: proof constants are empty");
  if (V0 < Mag::one())
    throw std::invalid_argument("alpha_bound_curve: V0 = 1 + weighted initial power is >= 1");
  if (M.size() < 1)
    throw std::invalid_argument("alpha_bound_curve: forcing series is empty");
  for (double v : M.v)
    if (!(v >= 1.0 - 1e-12))
      throw std::invalid_argument("alpha_bound_curve: forcing samples must be at least 1");

  BoundReport rep;
  rep.alpha = book.alpha;
  rep.mu_max = book.mu_max;
  rep.Zstar = proof.Zstar;
  rep.V0 = V0;
  rep.M = M;

  // Equality time of the smallness condition: cumulative integral of M equals
  // alpha/(3 Zstar mu_max) V0^(-mu_max/alpha). The right side never exceeds
  // lambda/(3 mu_max) because Zstar >= alpha/lambda, so it fits a double.
  const Mag rhs_mag = Mag::from(book.alpha / (3.0 * book.mu_max)) / proof.Zstar *
                      V0.pow(-book.mu_max / book.alpha);
  const double rhs = rhs_mag.value();
  if (!(rhs > 0.0)) {
    rep.T_threshold = 0.0;
    rep.note = "certified window below time resolution (constants too large)";
    return rep;
  }
  double hi = M.t.back();
  const double I_last = M.integral_to(hi);
  if (I_last < rhs) hi += (rhs - I_last) / M.v.back();
  // M >= 1 pins the threshold inside [rhs / max M, hi]; the constants can push
  // rhs hundreds of orders of magnitude below the forcing span, so bisect the
  // logarithm of t to keep relative resolution.
  const double m_max = *std::max_element(M.v.begin(), M.v.end());
  double llo = std::log(std::min(rhs / m_max, hi));
  double lhi = std::log(hi);
  for (int it = 0; it < 200 && llo < lhi; ++it) {
    const double lmid = 0.5 * (llo + lhi);
    (M.integral_to(std::exp(lmid)) < rhs ? llo : lhi) = lmid;
  }
  rep.T_threshold = std::exp(0.5 * (llo + lhi));

  if (beta) {
    if (!phi)
      throw std::invalid_argument("alpha_bound_curve: the unweighted curve needs phi");
    if (!(*beta > 0.0 && *beta < book.alpha))
      throw std::invalid_argument("alpha_bound_curve: beta must lie in (0, alpha)");
    rep.beta = *beta;
    rep.C_alpha_beta =
        log_integral(phi->grid, {{phi, -*beta / (book.alpha - *beta), "phi"}});
  }

  std::vector<double> ts;
  const int K = 256;
  for (int i = 0; i < K; ++i) ts.push_back(rep.T_threshold * i / K);
  for (int k = 3; k <= 9; ++k) {
    const double tt = rep.T_threshold * (1.0 - std::pow(10.0, -k));
    if (tt > ts.back()) ts.push_back(tt);
  }
  for (double tt : ts) {
    rep.t.push_back(tt);
    rep.V.push_back(bound_value_at(rep, tt));
    if (rep.beta > 0.0) {
      const Mag base = V0.pow(-book.mu_max / book.alpha);
      const Mag term = rep.Zstar * Mag::from(3.0 * book.mu_max / book.alpha) *
                       Mag::from(M.integral_to(tt));
      rep.U_beta.push_back(
          term.lg < base.lg
              ? rep.C_alpha_beta.pow(1.0 - rep.beta / book.alpha) *
                    Mag::sub(base, term).pow(-rep.beta / book.mu_max)
              : Mag::from_log(kBeyondThresholdLog));
    }
  }
  return rep;
}

Mag bound_value_at(const BoundReport& report, double time) {
  if (!(time >= 0.0))
    throw std::invalid_argument("bound_value_at: time must be nonnegative");
  const Mag base = report.V0.pow(-report.mu_max / report.alpha);
  const Mag term = report.Zstar * Mag::from(3.0 * report.mu_max / report.alpha) *
                   Mag::from(report.M.integral_to(time));
  if (!(term.lg < base.lg)) return Mag::from_log(kBeyondThresholdLog);
  return Mag::sub(base, term).pow(-report.alpha / report.mu_max);
}

BoundReport linfty_bound(const ExponentBook& book, const DataIntegrals& integrals,
                         ProofConstants& proof, const BoundReport& partial, double T,
                         double eps, Mag u0_norm, int verbosity) {
  if (!book.products_ready())
    throw std::invalid_argument(
        "linfty_bound: the exponent book is missing the iteration products; run "
        "moser_products first");
  if (std::abs(integrals.alpha - book.alpha) > 1e-12 * std::max(1.0, book.alpha))
    throw std::invalid_argument("linfty_bound: integrals built for a different alpha");
  if (std::abs(partial.alpha - book.alpha) > 1e-12 * std::max(1.0, book.alpha))
    throw std::invalid_argument("linfty_bound: report built for a different alpha");
  if (!(T > 0.0)) throw std::invalid_argument("linfty_bound: T must be positive");
  if (!(eps > 0.0 && eps < std::min(1.0, T)))
    throw std::invalid_argument("linfty_bound: eps must lie in (0, min{1, T})");

  // The report's V0 must be 1 + u0_norm^alpha; anything else means the caller
  // mixed data from two scenarios.
  const Mag V0_check = Mag::add(Mag::one(), u0_norm.pow(book.alpha));
  if (std::abs(V0_check.lg - partial.V0.lg) >
      1e-9 * (1.0 + std::abs(partial.V0.lg)))
    throw std::invalid_argument(
        "linfty_bound: u0 norm inconsistent with the report's V0");

  BoundReport rep = partial;
  rep.T = T;
  rep.eps = eps;
  rep.u0_norm = u0_norm;

  rep.delta_T = Mag::from(3.0 * book.mu_max / book.alpha) * rep.Zstar *
                rep.V0.pow(book.mu_max / book.alpha) * Mag::from(rep.M.integral_to(T));

  proof.Chat0 = (Mag::from_log((2.0 + book.r_star / 2.0) * std::log(2.0)) * proof.c11 *
                 Mag::from(book.kappa_tilde * book.alpha0)
                     .pow(3.0 * (3.0 - 2.0 * book.a) / (2.0 * (1.0 - book.a))))
                    .pow(book.omega);
  proof.Chat1 = Mag::from_log(book.omega2 * std::log(2.0)) * proof.Chat0;
  proof.Chat2 = Mag::from_log(book.nu_tilde / book.alpha * std::log(2.0)) * proof.Chat1;

  if (!(rep.delta_T.lg < 0.0)) {
    rep.certified = false;
    rep.note =
        "not certified: the time horizon violates the smallness condition "
        "(delta_T >= 1); shrink T or the boundary forcing";
    rep.Linf_bound = Mag::from_log(kBeyondThresholdLog);
    return rep;
  }

  const Mag one_minus = Mag::sub(Mag::one(), rep.delta_T);
  rep.Linf_bound = proof.Chat2 * Mag::from(eps).pow(-book.omega2) *
                   Mag::from(1.0 + T).pow(book.omega1 + book.nu_tilde / book.alpha) *
                   one_minus.pow(-book.nu_tilde / book.mu_max) *
                   integrals.N3.pow(book.omega3) * integrals.Psi_T.pow(book.omega2) *
                   Mag::add(Mag::one(), u0_norm).pow(book.nu_tilde);
  rep.certified = true;
  rep.note = "certified on (eps, T]";

  if (verbosity > 0) {
    auto show = [](const char* name, Mag v) {
      std::printf("  %-12s log = %.12g, value = %.6g\n", name, v.lg, v.value());
    };
    std::printf("sup-bound constants:\n");
    show("Chat0", proof.Chat0);
    show("Chat1", proof.Chat1);
    show("Chat2", proof.Chat2);
    show("delta_T", rep.delta_T);
    show("bound", rep.Linf_bound);
  }
  return rep;
}

GennResult genn_bound(double A, double y0, const std::vector<double>& kappa_seq,
                      const std::vector<double>& r_seq, const std::vector<double>& s_seq,
                      const std::vector<double>& omega_seq, int horizon_J) {
  const std::size_t len = kappa_seq.size();
  if (r_seq.size() != len || s_seq.size() != len || omega_seq.size() != len || len == 0)
    throw std::invalid_argument("genn_bound: sequences must share a nonzero length");
  if (!(A >= 1.0)) throw std::invalid_argument("genn_bound: A must be at least 1");
  if (!(y0 >= 0.0)) throw std::invalid_argument("genn_bound: y0 must be nonnegative");
  if (horizon_J < 0 || static_cast<std::size_t>(horizon_J) > len)
    throw std::invalid_argument("genn_bound: horizon exceeds the provided sequences");
  for (std::size_t j = 0; j < len; ++j) {
    if (!(kappa_seq[j] > 0.0) || !(r_seq[j] > 0.0) || !(s_seq[j] >= r_seq[j]) ||
        !(omega_seq[j] >= 1.0))
      throw std::invalid_argument(
          "genn_bound: need kappa_j > 0, 0 < r_j <= s_j, omega_j >= 1 at term " +
          std::to_string(j));
  }

  GennResult res;
  double alpha_bar = 0.0, log_beta = 0.0, log_gamma = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    alpha_bar += omega_seq[j] / kappa_seq[j];
    log_beta += std::log(r_seq[j] / kappa_seq[j]);
    log_gamma += std::log(s_seq[j] / kappa_seq[j]);
  }
  if (!(omega_seq[len - 1] / kappa_seq[len - 1] <= 1e-8 * (1.0 + alpha_bar)))
    throw AdmissibilityError(
        "divergent_sum: the partial sums of omega_j/kappa_j have not stagnated; "
        "supply more terms or a summable family");
  res.alpha_bar = alpha_bar;
  res.beta_bar = std::exp(log_beta);
  res.gamma_bar = std::exp(log_gamma);

  // G = max{1, sup of contiguous products gamma_m..gamma_n with m >= 1},
  // which collapses to prod_{j>=1} gamma_j when every gamma_j >= 1.
  double best = 0.0, run = 0.0;
  for (std::size_t j = 1; j < len; ++j) {
    const double lg = std::log(s_seq[j] / kappa_seq[j]);
    run = std::max(lg, run + lg);
    best = std::max(best, run);
  }
  res.G = std::exp(best);

  const Mag y0m = Mag::from(y0);
  res.bound = Mag::from(2.0 * A).pow(res.G * res.alpha_bar) *
              Mag::max(y0m.pow(res.beta_bar), y0m.pow(res.gamma_bar));

  Mag y = y0m;
  res.iterates.push_back(y);
  for (int j = 0; j < horizon_J; ++j) {
    const Mag inner = Mag::add(y.pow(r_seq[j]), y.pow(s_seq[j]));
    y = Mag::from(A).pow(omega_seq[j] / kappa_seq[j]) * inner.pow(1.0 / kappa_seq[j]);
    res.iterates.push_back(y);
  }
  res.verified = res.iterates.back().lg <= res.bound.lg + std::log1p(1e-9);
  return res;
}

MarginReport verify_solution_against_bounds(const SolutionTrace& trace,
                                            const BoundReport& report,
                                            const ExponentBook& book) {
  if (std::abs(trace.lambda - book.lambda) > 1e-12)
    throw std::invalid_argument(
        "verify_solution_against_bounds: trace lambda differs from the book");
  std::size_t idx = trace.alphas.size();
  for (std::size_t i = 0; i < trace.alphas.size(); ++i)
    if (std::abs(trace.alphas[i] - book.alpha) <= 1e-9 * std::max(1.0, book.alpha))
      idx = i;
  if (idx == trace.alphas.size())
    throw std::invalid_argument(
        "verify_solution_against_bounds: the trace does not record the working "
        "exponent alpha = " + fmt(book.alpha));
  if (report.M.size() == 0)
    throw std::invalid_argument("verify_solution_against_bounds: report has no forcing");
  const TimeSeries& E = trace.weighted_power[idx];
  if (E.size() == 0)
    throw std::invalid_argument("verify_solution_against_bounds: trace has no samples");

  const Mag V0_trace = Mag::add(Mag::one(), Mag::from(E.v.front()));
  if (std::abs(V0_trace.lg - report.V0.lg) > 1e-6 * (1.0 + std::abs(report.V0.lg)))
    throw std::invalid_argument(
        "verify_solution_against_bounds: initial weighted power disagrees with the "
        "report (mismatched scenarios)");

  constexpr double kMarginCap = 1e6;
  const double slack = std::log1p(1e-9);
  MarginReport out;
  auto push = [&](const std::string& kind, double t, Mag obs, Mag bound) {
    MarginRecord rec;
    rec.kind = kind;
    rec.t = t;
    rec.observed = obs;
    rec.bound = bound;
    rec.pass = obs.lg <= bound.lg + slack;
    rec.log10_margin =
        obs.is_zero() ? kMarginCap
                      : std::min(kMarginCap, (bound.lg - obs.lg) / std::log(10.0));
    out.worst_log10_margin = std::min(out.worst_log10_margin, rec.log10_margin);
    out.records.push_back(rec);
    return rec.pass;
  };

  for (std::size_t i = 0; i < E.size(); ++i) {
    const double t = E.t[i];
    if (!(t < report.T_threshold)) continue;
    if (!push("weighted_power", t, Mag::from(E.v[i]), bound_value_at(report, t)))
      out.weighted_pass = false;
  }

  if (report.certified) {
    int checked = 0;
    for (std::size_t i = 0; i < trace.snapshot_times.size(); ++i) {
      const double t = trace.snapshot_times[i];
      if (!(t > report.eps && t <= report.T)) continue;
      double umax = 0.0;
      for (double v : trace.snapshots[i].values) umax = std::max(umax, v);
      if (!push("sup_norm", t, Mag::from(umax), report.Linf_bound)) out.sup_pass = false;
      ++checked;
    }
    if (checked == 0) out.note = "no snapshot falls inside (eps, T]; sup check vacuous";
  } else {
    out.note = "sup bound not certified; sup check skipped";
  }
  out.overall_pass = out.weighted_pass && out.sup_pass;
  return out;
}

GasTable example_gas_tables(int n, double r1, double alpha0, double r,
                            double kappa_tilde, double a, double lambda) {
  if (a != 0.5 || lambda != 0.5)
    throw std::invalid_argument("example_gas_tables: requires a = 1/2 and lambda = 1/2");
  GasTable tab;
  tab.book = moser_products(build_exponents(n, a, lambda, r1, r, alpha0, kappa_tilde));
  const ExponentBook& b = tab.book;

  const double rs = (n == 2) ? 7.0 / 4.0 - 1.0 / r1 : 3.0 / 2.0 - 1.0 / r1;
  const double alpha = b.alpha;
  const double theta = (alpha + 2.0 * r) / (alpha * (1.0 + rs));
  const double mu1 = r * (1.0 + rs) * alpha / (rs * alpha - 2.0 * r);
  const double rt = 3.0 * r;
  const double theta_t = (alpha + 6.0 * r) / (alpha * (1.0 + rs));
  const double mu1_t = 3.0 * r * (1.0 + rs) * alpha / (rs * alpha - 6.0 * r);
  const double denom = 2.0 + rs;  // n = 2: 15/4 - 1/r1, n = 3: 7/2 - 1/r1

  // closed-form ladder products, truncated by the same rule as the pipeline
  double log_mu = 0.0, log_nu = 0.0;
  for (long j = 0; j < 100000; ++j) {
    const double bj = alpha0 * std::pow(kappa_tilde, static_cast<double>(j));
    const double fr = (1.0 - 1.5 / bj) / (1.0 + 2.0 / (bj * denom));
    const double fs = 1.0 / (1.0 - 1.0 / (bj * denom));
    log_mu += std::log(fr);
    log_nu += std::log(fs);
    if (std::abs(fr - 1.0) < b.moser_tol && std::abs(fs - 1.0) < b.moser_tol) break;
  }
  const double nu_closed = std::exp(log_nu);
  const double mu_closed = std::exp(log_mu);
  const double G_closed = nu_closed * (1.0 - 1.0 / (alpha0 * denom));
  const double qk = 1.0 - 1.0 / kappa_tilde;
  const double omega_closed = G_closed / (alpha0 * qk * qk);
  const double f1 = (n == 2) ? 23.0 / 8.0 - 1.0 / (2.0 * r1) : 11.0 / 4.0 - 1.0 / (2.0 * r1);
  const double f2 = (n == 2) ? 15.0 / 8.0 - 1.0 / (2.0 * r1) : 7.0 / 4.0 - 1.0 / (2.0 * r1);
  const double f3 = (n == 2) ? 31.0 / 8.0 - 1.0 / (2.0 * r1) : 15.0 / 4.0 - 1.0 / (2.0 * r1);

  auto row = [&](const std::string& name, double generic, double closed) {
    GasRow rr{name, generic, closed, std::abs(generic - closed), false};
    rr.pass = rr.diff <= 1e-12 * std::max(1.0, std::abs(closed));
    tab.pass = tab.pass && rr.pass;
    tab.rows.push_back(rr);
  };
  row("r_star", b.r_star, rs);
  row("theta", b.theta, theta);
  row("mu1", b.mu1, mu1);
  row("r_tilde", b.r_tilde, rt);
  row("theta_tilde", b.theta_tilde, theta_t);
  row("mu1_tilde", b.mu1_tilde, mu1_t);
  row("mu_max", b.mu_max, mu1_t);
  row("kappa", b.kappa, 1.0 + rs / 2.0);
  row("m", b.m, 2.0 * alpha / 3.0);
  row("h1", b.h1, 1.5);
  row("h2", b.h2, 0.0);
  row("h3", b.h3, 0.0);
  row("mu_tilde", b.mu_tilde, mu_closed);
  row("nu_tilde", b.nu_tilde, nu_closed);
  row("G", b.G, G_closed);
  row("omega", b.omega, omega_closed);
  row("omega1", b.omega1, f1 * omega_closed);
  row("omega2", b.omega2, f2 * omega_closed);
  row("omega3", b.omega3, f3 * omega_closed);

  // upper bound on nu_tilde, an inequality rather than an identity:
  // each ladder factor obeys 1/(1-x_j) <= exp(x_j/(1-x_0)) with
  // x_j = 1/(beta_j(2+r*)) <= x_0, and the geometric sum of x_j closes the cap
  const double x0 = 1.0 / (alpha0 * denom);
  const double nu_cap = std::exp(x0 / ((1.0 - x0) * qk));
  GasRow cap{"nu_tilde_exp_bound", b.nu_tilde, nu_cap, nu_cap - b.nu_tilde, false};
  cap.pass = b.nu_tilde <= nu_cap * (1.0 + 1e-12);
  tab.pass = tab.pass && cap.pass;
  tab.rows.push_back(cap);
  return tab;
}

}  // namespace forch
