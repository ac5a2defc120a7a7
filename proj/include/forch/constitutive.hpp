#pragma once

#include <array>
#include <string>
#include <vector>

#include "forch/grid.hpp"

namespace forch {

/// Heterogeneous Forchheimer-type momentum law
///   g(x, s) = sum_i a_i(x) s^(e_i),  e_0 = 0 < e_1 < ... < e_N,
/// with a_0, a_N strictly positive and every a_i nonnegative. The flux
/// magnitude s and the driving-gradient magnitude xi are linked through
/// s g(x, s) = xi, which has exactly one nonnegative root since s g is
/// strictly increasing.
struct ForchheimerLaw {
  Grid grid;
  std::vector<double> exponents;
  std::vector<SpatialField> coefficients;

  int N() const { return static_cast<int>(exponents.size()) - 1; }

  /// Degeneracy exponent a = e_N / (e_N + 1), in (0, 1).
  double degeneracy_a() const { return exponents.back() / (exponents.back() + 1.0); }

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// Pointwise weight fields derived from the law's coefficient envelope:
///   Mstar = max_i a_i,  mstar = min(a_0, a_N),
///   W1 = a_N^a / (2 N Mstar),
///   W2 = N Mstar / (a_N^(1-a) mstar),
///   W3 = W1 + W2^(2-a) / W1^(1-a).
/// These satisfy 2 W1 / (xi^a + a_N^a) <= K(xi) <= W2 xi^(-a) pointwise.
struct WeightFields {
  SpatialField Mstar, mstar, W1, W2, W3;
};

// ---- per-point kernels (coefficients supplied by the caller) ----------------

double eval_g_at(const std::vector<double>& exps, const std::vector<double>& coeffs,
                 double s);

/// Unique nonnegative root of s g(s) = xi. `fast` enables the closed form for
/// the two-term law with unit exponent; the generic path is a safeguarded
/// Newton iteration on the bracket [0, min(xi/a_0, (xi/a_N)^(1/(e_N+1)))].
double solve_s_at(const std::vector<double>& exps, const std::vector<double>& coeffs,
                  double xi, double tol = 1e-14, bool fast = true);

// ---- cell-indexed wrappers ---------------------------------------------------

double eval_g(const ForchheimerLaw& law, long cell, double s);
double solve_s(const ForchheimerLaw& law, long cell, double xi, double tol = 1e-14,
               bool fast = true);

/// K(x, xi) = 1 / g(x, s(x, xi)); K(x, 0) = 1 / a_0.
double eval_K(const ForchheimerLaw& law, long cell, double xi);

/// X(x, y) = K(x, |y|) y.
std::array<double, 3> eval_X(const ForchheimerLaw& law, long cell,
                             std::array<double, 3> y);

WeightFields compute_weights(const ForchheimerLaw& law);

/// Named presets: "two_term" (exponents 0, 1), "three_term" (0, 1, 2), and
/// "power_law" (0, m-1 for m in (1, 2)). The coefficient fields are passed in
/// positional order a_0 .. a_N.
ForchheimerLaw preset_law(const std::string& name, const Grid& grid,
                          const std::vector<SpatialField>& coeffs, double m = 0.0);

/// lambda = 1 / (gamma + 1) for the isentropic exponent gamma >= 1.
double lambda_from_gamma(double gamma);

}  // namespace forch
