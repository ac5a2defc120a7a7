#include "forch/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace forch {

// ---- validation ---------------------------------------------------------------

void ForchheimerLaw::validate() const {
  if (exponents.size() < 2)
    throw std::invalid_argument("law: need at least two terms (N >= 1)");
  if (exponents.front() != 0.0)
    throw std::invalid_argument("law: first exponent must be zero");
  for (std::size_t i = 1; i < exponents.size(); ++i)
    if (!(exponents[i] > exponents[i - 1]))
      throw std::invalid_argument("law: exponents must increase strictly");
  if (coefficients.size() != exponents.size())
    throw std::invalid_argument("law: coefficient count must match exponent count");
  for (const auto& c : coefficients) {
    if (!c.grid.same_layout(grid))
      throw std::invalid_argument("law: coefficient field grid mismatch");
    for (double v : c.values)
      if (!(v >= 0.0)) throw std::invalid_argument("law: coefficients must be nonnegative");
  }
  for (double v : coefficients.front().values)
    if (!(v > 0.0)) throw std::invalid_argument("law: a_0 must be strictly positive");
  for (double v : coefficients.back().values)
    if (!(v > 0.0)) throw std::invalid_argument("law: a_N must be strictly positive");
}

// ---- kernels -------------------------------------------------------------------

double eval_g_at(const std::vector<double>& exps, const std::vector<double>& coeffs,
                 double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("eval_g: s must be nonnegative");
  double g = coeffs[0];
  for (std::size_t i = 1; i < exps.size(); ++i)
    if (coeffs[i] != 0.0) g += coeffs[i] * std::pow(s, exps[i]);
  return g;
}

namespace {

// d/ds [s g(s)] = sum_i a_i (1 + e_i) s^(e_i) >= a_0 > 0.
double sg_prime(const std::vector<double>& exps, const std::vector<double>& coeffs,
                double s) {
  double d = coeffs[0];
  for (std::size_t i = 1; i < exps.size(); ++i)
    if (coeffs[i] != 0.0) d += coeffs[i] * (1.0 + exps[i]) * std::pow(s, exps[i]);
  return d;
}

}  // namespace

double solve_s_at(const std::vector<double>& exps, const std::vector<double>& coeffs,
                  double xi, double tol, bool fast) {
  if (!(xi >= 0.0)) throw std::invalid_argument("solve_s: xi must be nonnegative");
  if (xi == 0.0) return 0.0;
  const double a0 = coeffs.front(), aN = coeffs.back();

  if (fast && exps.size() == 2 && exps[1] == 1.0) {
    // s (a0 + a1 s) = xi, stable quadratic root
    return 2.0 * xi / (a0 + std::sqrt(a0 * a0 + 4.0 * coeffs[1] * xi));
  }

  // s g(s) >= a0 s and s g(s) >= aN s^(e_N + 1) make both candidates upper bounds.
  double lo = 0.0;
  double hi = std::min(xi / a0, std::pow(xi / aN, 1.0 / (exps.back() + 1.0)));
  double s = hi;
  for (int it = 0; it < 200; ++it) {
    const double f = s * eval_g_at(exps, coeffs, s) - xi;
    if (std::abs(f) <= tol * (1.0 + xi)) return s;
    if (f > 0)
      hi = s;
    else
      lo = s;
    const double step = f / sg_prime(exps, coeffs, s);
    double next = s - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (next == s) return s;  // bracket exhausted at machine precision
    s = next;
  }
  throw std::runtime_error("solve_s: no convergence");
}

// ---- cell-indexed wrappers -----------------------------------------------------

namespace {

std::vector<double> gather(const ForchheimerLaw& law, long cell) {
  std::vector<double> c(law.coefficients.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = law.coefficients[i].values[cell];
  return c;
}

}  // namespace

double eval_g(const ForchheimerLaw& law, long cell, double s) {
  return eval_g_at(law.exponents, gather(law, cell), s);
}

double solve_s(const ForchheimerLaw& law, long cell, double xi, double tol, bool fast) {
  return solve_s_at(law.exponents, gather(law, cell), xi, tol, fast);
}

double eval_K(const ForchheimerLaw& law, long cell, double xi) {
  const auto coeffs = gather(law, cell);
  const double s = solve_s_at(law.exponents, coeffs, xi);
  return 1.0 / eval_g_at(law.exponents, coeffs, s);
}

std::array<double, 3> eval_X(const ForchheimerLaw& law, long cell,
                             std::array<double, 3> y) {
  const double mag = std::hypot(y[0], y[1], y[2]);
  const double K = eval_K(law, cell, mag);
  return {K * y[0], K * y[1], K * y[2]};
}

// ---- weights -------------------------------------------------------------------

WeightFields compute_weights(const ForchheimerLaw& law) {
  law.validate();
  const Grid& g = law.grid;
  const double a = law.degeneracy_a();
  const double N = law.N();
  WeightFields w{SpatialField::constant(g, 0, "Mstar"), SpatialField::constant(g, 0, "mstar"),
                 SpatialField::constant(g, 0, "W1"), SpatialField::constant(g, 0, "W2"),
                 SpatialField::constant(g, 0, "W3")};
  for (long c = 0; c < g.cell_count(); ++c) {
    double M = 0.0;
    for (const auto& f : law.coefficients) M = std::max(M, f.values[c]);
    const double a0 = law.coefficients.front().values[c];
    const double aN = law.coefficients.back().values[c];
    const double m = std::min(a0, aN);
    const double W1 = std::pow(aN, a) / (2.0 * N * M);
    const double W2 = N * M / (std::pow(aN, 1.0 - a) * m);
    w.Mstar[c] = M;
    w.mstar[c] = m;
    w.W1[c] = W1;
    w.W2[c] = W2;
    w.W3[c] = W1 + std::pow(W2, 2.0 - a) / std::pow(W1, 1.0 - a);
  }
  return w;
}

// ---- presets -------------------------------------------------------------------

ForchheimerLaw preset_law(const std::string& name, const Grid& grid,
                          const std::vector<SpatialField>& coeffs, double m) {
  ForchheimerLaw law;
  law.grid = grid;
  if (name == "two_term") {
    law.exponents = {0.0, 1.0};
  } else if (name == "three_term") {
    law.exponents = {0.0, 1.0, 2.0};
  } else if (name == "power_law") {
    if (!(m > 1.0 && m < 2.0))
      throw std::invalid_argument("power_law preset needs exponent m in (1, 2)");
    law.exponents = {0.0, m - 1.0};
  } else {
    throw std::invalid_argument("unknown law preset: " + name);
  }
  if (coeffs.size() != law.exponents.size())
    throw std::invalid_argument("preset " + name + " expects " +
                                std::to_string(law.exponents.size()) + " coefficient fields");
  law.coefficients = coeffs;
  law.validate();
  return law;
}

double lambda_from_gamma(double gamma) {
  if (!(gamma >= 1.0)) throw std::invalid_argument("gamma must be at least 1");
  return 1.0 / (gamma + 1.0);
}

}  // namespace forch
