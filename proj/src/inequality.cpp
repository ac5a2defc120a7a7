#include "forch/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>

namespace forch {

// ==== test-function family ====================================================

namespace {

struct TrigData {
  int n = 2;
  std::array<double, 3> lo{}, len{};
  std::vector<std::array<int, 3>> modes;
  std::vector<double> coeff;
  std::vector<std::array<double, 3>> phase;
};

double trig_value(const TrigData& d, std::array<double, 3> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d.modes.size(); ++k) {
    double prod = d.coeff[k];
    for (int i = 0; i < d.n; ++i) {
      const double t = (x[i] - d.lo[i]) / d.len[i];
      prod *= std::cos(M_PI * d.modes[k][i] * t + d.phase[k][i]);
    }
    acc += prod;
  }
  return acc;
}

std::array<double, 3> trig_gradient(const TrigData& d, std::array<double, 3> x) {
  std::array<double, 3> g{0, 0, 0};
  for (std::size_t k = 0; k < d.modes.size(); ++k) {
    for (int j = 0; j < d.n; ++j) {
      double prod = d.coeff[k] * (-M_PI * d.modes[k][j] / d.len[j]);
      for (int i = 0; i < d.n; ++i) {
        const double t = (x[i] - d.lo[i]) / d.len[i];
        const double arg = M_PI * d.modes[k][i] * t + d.phase[k][i];
        prod *= (i == j) ? std::sin(arg) : std::cos(arg);
      }
      g[j] += prod;
    }
  }
  return g;
}

}  // namespace

std::vector<AnalyticFn> make_family(const TestFunctionFamily& fam, const Grid& g) {
  std::vector<AnalyticFn> out;
  const std::array<double, 3> lo = g.lo;
  std::array<double, 3> len{1, 1, 1};
  for (int i = 0; i < g.n; ++i) len[i] = g.hi[i] - g.lo[i];

  if (fam.include_constant && static_cast<int>(out.size()) < fam.count)
    out.push_back({"const", [](std::array<double, 3>) { return 1.0; },
                   [](std::array<double, 3>) { return std::array<double, 3>{0, 0, 0}; }});
  if (fam.include_linear && static_cast<int>(out.size()) < fam.count)
    out.push_back({"linear",
                   [lo, len](std::array<double, 3> x) { return (x[0] - lo[0]) / len[0]; },
                   [len](std::array<double, 3>) {
                     return std::array<double, 3>{1.0 / len[0], 0, 0};
                   }});
  if (fam.include_bump && static_cast<int>(out.size()) < fam.count) {
    std::array<double, 3> c{0, 0, 0};
    double minlen = len[0];
    for (int i = 0; i < g.n; ++i) {
      c[i] = 0.5 * (g.lo[i] + g.hi[i]);
      minlen = std::min(minlen, len[i]);
    }
    const double sig = minlen / 8.0;
    const int n = g.n;
    out.push_back({"bump",
                   [c, sig, n](std::array<double, 3> x) {
                     double d2 = 0;
                     for (int i = 0; i < n; ++i) d2 += (x[i] - c[i]) * (x[i] - c[i]);
                     return std::exp(-d2 / (2 * sig * sig));
                   },
                   [c, sig, n](std::array<double, 3> x) {
                     double d2 = 0;
                     for (int i = 0; i < n; ++i) d2 += (x[i] - c[i]) * (x[i] - c[i]);
                     const double v = std::exp(-d2 / (2 * sig * sig));
                     std::array<double, 3> gr{0, 0, 0};
                     for (int i = 0; i < n; ++i) gr[i] = -v * (x[i] - c[i]) / (sig * sig);
                     return gr;
                   }});
  }

  // mode lattice shared by all trig members, first axis fastest
  std::vector<std::array<int, 3>> modes;
  const int mf = fam.max_freq;
  for (int k2 = 0; k2 <= (g.n > 2 ? mf : 0); ++k2)
    for (int k1 = 0; k1 <= (g.n > 1 ? mf : 0); ++k1)
      for (int k0 = 0; k0 <= mf; ++k0) modes.push_back({k0, k1, k2});

  std::mt19937_64 rng(fam.seed);
  std::uniform_real_distribution<double> C(-1, 1), P(0, 2 * M_PI);
  int serial = 0;
  while (static_cast<int>(out.size()) < fam.count) {
    auto d = std::make_shared<TrigData>();
    d->n = g.n;
    d->lo = lo;
    d->len = len;
    d->modes = modes;
    d->coeff.resize(modes.size());
    d->phase.resize(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const double norm1 = modes[k][0] + modes[k][1] + modes[k][2];
      d->coeff[k] = C(rng) / std::pow(1.0 + norm1, fam.decay);
      for (int i = 0; i < 3; ++i) d->phase[k][i] = P(rng);
    }
    char id[32];
    std::snprintf(id, sizeof id, "trig%03d", serial++);
    out.push_back({id, [d](std::array<double, 3> x) { return trig_value(*d, x); },
                   [d](std::array<double, 3> x) { return trig_gradient(*d, x); }});
  }
  return out;
}

// ==== calibration =============================================================

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw AdmissibilityError(msg);
}

void check_r1(int n, double p, double r1) {
  require(p > 1.0, "p must exceed 1");
  require(r1 > n / (n + p) && r1 < 1.0,
          "r1 out of range: need n/(n+p) < r1 < 1");
  require(r1 * p >= 1.0, "r1 out of range: need r1*p >= 1");
  require(r1 * p < n, "r1 out of range: need r1*p < n");
}

double lp_norm_of(const Grid& g, const SpatialField& f, double q) {
  return std::pow(integrate_volume(g, [&](long c) {
                    return std::pow(std::abs(f.values[c]), q);
                  }),
                  1.0 / q);
}

}  // namespace

EmbeddingConstants calibrate_constants(const Grid& g, double r1, double p,
                                       const TestFunctionFamily& fam,
                                       double safety_factor) {
  const int n = g.n;
  check_r1(n, p, r1);
  require(p < n, "p must be below the dimension for the critical exponent");
  require(safety_factor >= 1.0, "safety factor must be at least 1");

  const double pstar = n * p / (n - p);
  const double pbar = r1 * p;
  const double pbstar = n * pbar / (n - pbar);

  struct Row {
    double A, B, C, T, D, A2, B2, E2;
    bool zero_grad;
  };
  std::vector<Row> rows;
  for (const auto& fn : make_family(fam, g)) {
    const SpatialField v = SpatialField::from(g, fn.value);
    const SpatialField gm = SpatialField::from(g, [&](std::array<double, 3> x) {
      const auto gr = fn.gradient(x);
      return std::hypot(gr[0], gr[1], gr[2]);
    });
    Row r;
    r.A = lp_norm_of(g, v, pstar);
    r.B = lp_norm_of(g, gm, p);
    r.C = integrate_volume(g, [&](long c) { return std::abs(v.values[c]); });
    r.D = integrate_volume(gm);
    r.A2 = lp_norm_of(g, v, pbstar);
    r.B2 = lp_norm_of(g, gm, pbar);
    r.E2 = std::pow(std::pow(r.B2, pbar) + std::pow(lp_norm_of(g, v, pbar), pbar), 1.0 / pbar);
    const FaceSet faces(g);
    r.T = integrate_boundary(g, [&](long b) {
      return std::abs(fn.value(faces.center(faces.boundary_face(b))));
    });
    r.zero_grad = r.B <= 1e-13 * (1.0 + r.C);
    rows.push_back(r);
  }

  bool any_mass = false;
  for (const auto& r : rows) any_mass = any_mass || r.C > 0;
  if (!any_mass) throw std::invalid_argument("calibrate: degenerate family (all zero)");

  // zero-gradient constants first, gradient constants absorb the residual
  auto zero_grad_max = [&](auto num) {
    double best = 0.0;
    bool found = false;
    for (const auto& r : rows)
      if (r.zero_grad && r.C > 0) {
        best = std::max(best, num(r) / r.C);
        found = true;
      }
    if (!found)
      for (const auto& r : rows)
        if (r.C > 0) best = std::max(best, num(r) / r.C);
    return best;
  };
  const double c2 = zero_grad_max([](const Row& r) { return r.A; });
  const double c4 = zero_grad_max([](const Row& r) { return r.A2; });
  const double c5 = zero_grad_max([](const Row& r) { return r.T; });

  auto residual_max = [&](auto num, auto den, double offset_const, auto offset_num) {
    double best = 1e-12;
    for (const auto& r : rows)
      if (!r.zero_grad && den(r) > 0)
        best = std::max(best, std::max(0.0, num(r) - offset_const * offset_num(r)) / den(r));
    return best;
  };
  const double c1 = residual_max([](const Row& r) { return r.A; },
                                 [](const Row& r) { return r.B; }, c2,
                                 [](const Row& r) { return r.C; });
  const double c3 = residual_max([](const Row& r) { return r.A2; },
                                 [](const Row& r) { return r.B2; }, c4,
                                 [](const Row& r) { return r.C; });
  const double c6 = residual_max([](const Row& r) { return r.T; },
                                 [](const Row& r) { return r.D; }, c5,
                                 [](const Row& r) { return r.C; });

  double c7 = 1e-12;
  for (const auto& r : rows)
    if (r.E2 > 0) c7 = std::max(c7, r.A2 / r.E2);

  EmbeddingConstants out;
  out.p = p;
  out.r1 = r1;
  out.c1 = c1 * safety_factor;
  out.c2 = c2 * safety_factor;
  out.c3 = c3 * safety_factor;
  out.c4 = c4 * safety_factor;
  out.c5 = c5 * safety_factor;
  out.c6 = c6 * safety_factor;
  out.c7 = c7 * safety_factor;
  out.safety_factor = safety_factor;
  out.provenance = "calibrated";
  out.seed = fam.seed;
  char note[128];
  std::snprintf(note, sizeof note, "%d functions, max_freq %d, decay %g", fam.count,
                fam.max_freq, fam.decay);
  out.family_note = note;
  return out;
}

// ==== parameter bookkeeping ===================================================

SobolevParams SobolevParams::make(int n, double p, double r1, double s, double r,
                                  double alpha, double epsilon,
                                  const EmbeddingConstants* consts) {
  SobolevParams q;
  q.n = n;
  q.p = p;
  q.r1 = r1;
  q.s = s;
  q.r = r;
  q.alpha = alpha;
  q.epsilon = epsilon;

  check_r1(n, p, r1);
  require(r >= 0.0, "r must be nonnegative");
  require(epsilon > 0.0, "epsilon must be positive");

  q.r_star = 1.0 + p / n - 1.0 / r1;
  require(q.r_star > 0.0 && q.r_star < 1.0, "r_star out of (0,1)");

  require(alpha >= s, "alpha must be at least s");
  require(alpha * (p - 1.0) > p - s,
          "alpha too small against the conjugate exponent: need alpha > (p-s)/(p-1)");
  require(alpha > 2.0 * (r + s - p) / q.r_star,
          "alpha too small for the chosen r: need alpha > 2(r+s-p)/r_star");

  q.m = (alpha - s + p) / p;
  require(q.m >= 1.0 && q.m < alpha, "m out of [1, alpha)");

  q.theta = (alpha + 2.0 * r) / (alpha * (1.0 + q.r_star) + 2.0 * (p - s));
  require(q.theta > 0.0 && q.theta < 1.0, "theta out of (0,1)");
  q.mu1 = (r + q.theta * (s - p)) / (1.0 - q.theta);
  require(q.mu1 > -alpha, "mu1 must exceed -alpha");

  q.r_tilde = r + (r + s - p) / (p - 1.0);
  q.rtilde_negative = q.r_tilde < 0.0;
  if (q.rtilde_negative) {
    require(alpha > -q.r_tilde, "alpha must exceed |r_tilde| on the negative branch");
  } else {
    require(alpha > 2.0 * (q.r_tilde + s - p) / q.r_star,
            "alpha too small for the trace exponent: need alpha > 2(r_tilde+s-p)/r_star");
    q.theta_tilde =
        (alpha + 2.0 * q.r_tilde) / (alpha * (1.0 + q.r_star) + 2.0 * (p - s));
    require(q.theta_tilde > 0.0 && q.theta_tilde < 1.0, "theta_tilde out of (0,1)");
    q.mu1_tilde = (q.r_tilde + q.theta_tilde * (s - p)) / (1.0 - q.theta_tilde);
    require(q.mu1_tilde > -alpha, "mu1_tilde must exceed -alpha");
  }

  q.kappa = 1.0 + q.r_star / 2.0 + (p - s) / alpha;
  require(q.kappa > 1.0, "kappa must exceed 1");
  q.theta0_interp = (alpha - s + p) * (alpha + 2.0 * r) /
                    ((alpha + r) * (alpha * (1.0 + q.r_star) + 2.0 * (p - s)));
  q.theta0_time = 1.0 / (1.0 + q.r_star * alpha / (2.0 * (alpha - s + p)));
  require(q.theta0_interp > 0.0 && q.theta0_interp < 1.0, "theta0 out of (0,1)");
  require(q.theta0_time > 0.0 && q.theta0_time < 1.0, "theta0 out of (0,1)");

  if (consts) {
    const Mag two_m = Mag::from(2.0).pow(q.m);
    q.D1 = (Mag::from(consts->c4) * two_m).pow(q.theta * p).value();
    q.D2 = (Mag::from(consts->c3) * Mag::from(q.m) * two_m)
               .pow(q.theta * p / (1.0 - q.theta))
               .value();
    const Mag D1m = (Mag::from(consts->c4) * two_m).pow(q.theta * p);
    const Mag D2m = (Mag::from(consts->c3) * Mag::from(q.m) * two_m)
                        .pow(q.theta * p / (1.0 - q.theta));
    const Mag z3 = Mag::from(consts->c6 * (alpha + r)).pow(p / (p - 1.0));
    q.z1 = (Mag::from(consts->c5) * D1m).value();
    q.z2 = (Mag::from(consts->c5).pow(1.0 / (1.0 - q.theta)) * D2m).value();
    q.z3 = z3.value();
    if (!q.rtilde_negative) {
      const Mag D1t = (Mag::from(consts->c4) * two_m).pow(q.theta_tilde * p);
      const Mag D2t = (Mag::from(consts->c3) * Mag::from(q.m) * two_m)
                          .pow(q.theta_tilde * p / (1.0 - q.theta_tilde));
      q.z4 = (z3 * D1t).value();
      q.z5 = (z3.pow(1.0 / (1.0 - q.theta_tilde)) * D2t).value();
    }
  }
  return q;
}

std::string SobolevParams::id() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "a%g_r%g_e%g", alpha, r, epsilon);
  return buf;
}

// ==== check machinery =========================================================

namespace {

struct PowTerm {
  const SpatialField* f;
  double e;
  bool take_abs = false;
};

// log-space integral of a product of field powers; factors below 1e-300 under
// a negative exponent are floored and flagged as possibly divergent
Mag pow_integral(const Grid& g, const std::vector<PowTerm>& terms, bool& flagged) {
  bool flag = false;
  const Mag out = integrate_volume_log(g, [&](long c) {
    double acc = 0.0;
    for (const auto& t : terms) {
      if (t.e == 0.0) continue;
      double v = t.f->values[c];
      if (t.take_abs) v = std::abs(v);
      if (v <= 0.0) {
        if (t.e > 0.0) return -std::numeric_limits<double>::infinity();
        flag = true;
        v = 1e-300;
      } else if (v < 1e-300 && t.e < 0.0) {
        flag = true;
        v = 1e-300;
      }
      acc += t.e * std::log(v);
    }
    return acc;
  });
  flagged = flagged || flag;
  return out;
}

void require_positive(const SpatialField& f, const char* name) {
  for (double v : f.values)
    if (!(v > 0.0)) throw AdmissibilityError(std::string(name) + " must be strictly positive");
}

void require_nonnegative(const SpatialField& f, const char* name) {
  for (double v : f.values)
    if (!(v >= 0.0)) throw AdmissibilityError(std::string(name) + " must be nonnegative");
}

Mag D1_of(double c4, double m, double eta, double p) {
  return (Mag::from(c4) * Mag::from(2.0).pow(m)).pow(eta * p);
}

Mag D2_of(double c3, double m, double eta, double p) {
  return (Mag::from(c3) * Mag::from(m) * Mag::from(2.0).pow(m)).pow(eta * p / (1.0 - eta));
}

CheckRecord finish(const char* name, Mag lhs, Mag rhs, bool degenerate,
                   const std::string& branch = "") {
  CheckRecord rec;
  rec.check_name = name;
  rec.lhs = lhs.value();
  rec.rhs = rhs.value();
  rec.margin = rec.rhs - rec.lhs;
  rec.pass = rec.margin >= -std::abs(rec.rhs) * 1e-6;
  rec.degenerate = degenerate;
  rec.branch = branch;
  return rec;
}

std::string res_string(const Grid& g) {
  std::string s = std::to_string(g.cells[0]);
  for (int k = 1; k < g.n; ++k) s += "x" + std::to_string(g.cells[k]);
  return s;
}

}  // namespace

void CheckReport::absorb(const CheckRecord& rec) {
  records.push_back(rec);
  all_pass = all_pass && rec.pass;
  worst_margin = std::min(worst_margin, rec.margin);
}

void CheckReport::absorb(const CheckReport& other) {
  for (const auto& r : other.records) absorb(r);
}

CheckReport check_weighted_sobolev(const SpatialField& u, const SpatialField& omega,
                                   const SpatialField& phi, const SpatialField& W,
                                   const SobolevParams& q,
                                   const EmbeddingConstants& consts) {
  const Grid& g = u.grid;
  require_positive(phi, "phi");
  require_nonnegative(omega, "omega");
  require_nonnegative(W, "W");
  const double alpha = q.alpha, p = q.p, s = q.s, r = q.r;

  bool flagged = false;
  const Mag lhs = pow_integral(g, {{&u, alpha + r, true}, {&omega, 1.0}}, flagged);
  const Mag I1 = pow_integral(g, {{&u, alpha, true}, {&phi, 1.0}}, flagged);
  const GradEnergy ge = grad_energy(u, W, alpha, s, p, FaceSet(g));

  const double denom = alpha * (p - 1.0) + s - p;
  const Mag G1 = pow_integral(g, {{&phi, -(alpha - s + p) / denom}}, flagged).pow(denom / alpha);
  const Mag G2 =
      pow_integral(g, {{&W, -q.r1 / (1.0 - q.r1)}}, flagged).pow((1.0 - q.r1) / q.r1);
  const Mag G3 = pow_integral(g,
                              {{&phi, -1.0},
                               {&omega, 1.0 / ((1.0 - q.theta) * (1.0 + q.mu1 / alpha))}},
                              flagged)
                     .pow(1.0 + q.mu1 / alpha);
  const Mag Phi1 = G1.pow(q.theta) * G3.pow(1.0 - q.theta);
  const Mag Phi2 = G2.pow(q.theta / (1.0 - q.theta)) * G3;

  const Mag D1 = D1_of(consts.c4, q.m, q.theta, p);
  const Mag D2 = D2_of(consts.c3, q.m, q.theta, p);
  const Mag eps = Mag::from(q.epsilon);

  Mag rhs = eps * Mag::from(ge.value);
  rhs = Mag::add(rhs, D1 * Phi1 * I1.pow(1.0 + r / alpha));
  rhs = Mag::add(rhs, eps.pow(-q.theta / (1.0 - q.theta)) * D2 * Phi2 *
                          I1.pow(1.0 + q.mu1 / alpha));

  CheckReport rep;
  rep.resolution = res_string(g);
  rep.absorb(finish("weighted_sobolev", lhs, rhs, flagged || ge.degenerate));
  return rep;
}

CheckReport check_trace_simple(const SpatialField& u, const SpatialField& W,
                               double alpha, double s, double p, double epsilon,
                               const EmbeddingConstants& consts) {
  const Grid& g = u.grid;
  require(p > 1.0, "p must exceed 1");
  require(epsilon > 0.0, "epsilon must be positive");
  require(alpha >= s && alpha >= (p - s) / (p - 1.0),
          "alpha must be at least max(s, (p-s)/(p-1))");
  require_nonnegative(W, "W");

  bool flagged = false;
  const Mag lhs = Mag::from(integrate_boundary_trace(
      u, [&](double uv, long) { return std::pow(std::abs(uv), alpha); }));
  const GradEnergy ge = grad_energy(u, W, alpha, s, p, FaceSet(g));
  const Mag ia = pow_integral(g, {{&u, alpha, true}}, flagged);
  const Mag tail = pow_integral(
      g, {{&u, alpha + (s - p) / (p - 1.0), true}, {&W, -1.0 / (p - 1.0)}}, flagged);

  Mag rhs = Mag::from(epsilon) * Mag::from(ge.value);
  rhs = Mag::add(rhs, Mag::from(consts.c5) * ia);
  rhs = Mag::add(rhs, Mag::from(consts.c6 * alpha).pow(p / (p - 1.0)) *
                          Mag::from(epsilon).pow(-1.0 / (p - 1.0)) * tail);

  CheckReport rep;
  rep.resolution = res_string(g);
  rep.absorb(finish("trace_simple", lhs, rhs, flagged || ge.degenerate));
  return rep;
}

CheckReport check_trace_two_weight(const SpatialField& u, const SpatialField& phi,
                                   const SpatialField& W, const SobolevParams& q,
                                   const EmbeddingConstants& consts) {
  const Grid& g = u.grid;
  require_positive(phi, "phi");
  require_nonnegative(W, "W");
  const double alpha = q.alpha, p = q.p, s = q.s, r = q.r;

  bool flagged = false;
  const Mag lhs = Mag::from(integrate_boundary_trace(
      u, [&](double uv, long) { return std::pow(std::abs(uv), alpha + r); }));
  const Mag I1 = pow_integral(g, {{&u, alpha, true}, {&phi, 1.0}}, flagged);
  const GradEnergy ge = grad_energy(u, W, alpha, s, p, FaceSet(g));

  const double denom = alpha * (p - 1.0) + s - p;
  const Mag G1 = pow_integral(g, {{&phi, -(alpha - s + p) / denom}}, flagged).pow(denom / alpha);
  const Mag G2 =
      pow_integral(g, {{&W, -q.r1 / (1.0 - q.r1)}}, flagged).pow((1.0 - q.r1) / q.r1);
  const Mag G4 = pow_integral(g, {{&phi, -1.0}}, flagged).pow(1.0 + q.mu1 / alpha);
  const Mag Phi3 = G1.pow(q.theta) * G4.pow(1.0 - q.theta);
  const Mag Phi4 = G2.pow(q.theta / (1.0 - q.theta)) * G4;

  const Mag z1 = Mag::from(consts.c5) * D1_of(consts.c4, q.m, q.theta, p);
  const Mag z2 = Mag::from(consts.c5).pow(1.0 / (1.0 - q.theta)) *
                 D2_of(consts.c3, q.m, q.theta, p);
  const Mag z3 = Mag::from(consts.c6 * (alpha + r)).pow(p / (p - 1.0));
  const Mag eps = Mag::from(q.epsilon);
  const Mag grad = Mag::from(ge.value);

  Mag rhs;
  std::string branch;
  if (q.rtilde_negative) {
    branch = "negative_rtilde";
    const Mag Phi5 = pow_integral(g,
                                  {{&W, alpha / ((p - 1.0) * q.r_tilde)},
                                   {&phi, (alpha + q.r_tilde) / q.r_tilde}},
                                  flagged)
                         .pow(-q.r_tilde / alpha);
    rhs = Mag::from(2.0 * q.epsilon) * grad;
    rhs = Mag::add(rhs, z1 * Phi3 * I1.pow(1.0 + r / alpha));
    rhs = Mag::add(rhs, eps.pow(-q.theta / (1.0 - q.theta)) * z2 * Phi4 *
                            I1.pow(1.0 + q.mu1 / alpha));
    rhs = Mag::add(rhs, eps.pow(-1.0 / (p - 1.0)) * z3 * Phi5 *
                            I1.pow(1.0 + q.r_tilde / alpha));
  } else {
    branch = "nonnegative_rtilde";
    const Mag G5 =
        pow_integral(g,
                     {{&phi, -1.0},
                      {&W, -1.0 / ((p - 1.0) * (1.0 - q.theta_tilde) *
                                   (1.0 + q.mu1_tilde / alpha))}},
                     flagged)
            .pow(1.0 + q.mu1_tilde / alpha);
    const Mag Phi6 = G1.pow(q.theta_tilde) * G5.pow(1.0 - q.theta_tilde);
    const Mag Phi7 = G2.pow(q.theta_tilde / (1.0 - q.theta_tilde)) * G5;
    const Mag z4 = z3 * D1_of(consts.c4, q.m, q.theta_tilde, p);
    const Mag z5 = z3.pow(1.0 / (1.0 - q.theta_tilde)) *
                   D2_of(consts.c3, q.m, q.theta_tilde, p);
    rhs = Mag::from(3.0 * q.epsilon) * grad;
    rhs = Mag::add(rhs, z1 * Phi3 * I1.pow(1.0 + r / alpha));
    rhs = Mag::add(rhs, eps.pow(-q.theta / (1.0 - q.theta)) * z2 * Phi4 *
                            I1.pow(1.0 + q.mu1 / alpha));
    rhs = Mag::add(rhs, eps.pow(-1.0 / (p - 1.0)) * z4 * Phi6 *
                            I1.pow(1.0 + q.r_tilde / alpha));
    rhs = Mag::add(rhs,
                   eps.pow(-(1.0 / (p - 1.0) +
                             (p / (p - 1.0)) * q.theta_tilde / (1.0 - q.theta_tilde))) *
                       z5 * Phi7 * I1.pow(1.0 + q.mu1_tilde / alpha));
  }

  CheckReport rep;
  rep.resolution = res_string(g);
  rep.absorb(finish("trace_two_weight", lhs, rhs, flagged || ge.degenerate, branch));
  return rep;
}

CheckReport check_parabolic_sobolev(const std::vector<SpatialField>& u_of_t,
                                    const std::vector<double>& times,
                                    const SpatialField& phi, const SpatialField& W,
                                    const SobolevParams& q,
                                    const EmbeddingConstants& consts) {
  if (u_of_t.size() < 2 || u_of_t.size() != times.size())
    throw std::invalid_argument("parabolic check: need at least two matched time samples");
  require_positive(phi, "phi");
  require_nonnegative(W, "W");
  const Grid& g = phi.grid;
  const double alpha = q.alpha, p = q.p, s = q.s;
  const double ka = q.kappa * alpha;

  bool flagged = false;
  std::vector<double> snorm(times.size()), energy(times.size()), anorm(times.size());
  const FaceSet faces(g);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const SpatialField& ui = u_of_t[i];
    snorm[i] = pow_integral(g, {{&ui, ka, true}, {&phi, 1.0}}, flagged).value();
    const GradEnergy ge = grad_energy(ui, W, alpha, s, p, faces);
    flagged = flagged || ge.degenerate;
    energy[i] =
        ge.value + pow_integral(g, {{&ui, alpha - s + p, true}, {&phi, 1.0}}, flagged).value();
    anorm[i] = std::pow(pow_integral(g, {{&ui, alpha, true}, {&phi, 1.0}}, flagged).value(),
                        1.0 / alpha);
    if (!std::isfinite(snorm[i]) || !std::isfinite(energy[i]))
      throw std::runtime_error("parabolic check: sample integral overflow");
  }

  const Mag lhs = Mag::from(trapezoid(times, snorm)).pow(1.0 / ka);
  const Mag Phi8 =
      pow_integral(g, {{&phi, 2.0 / q.r_star - 1.0}}, flagged).pow(q.r_star / 2.0) *
      Mag::add(pow_integral(g, {{&W, -q.r1 / (1.0 - q.r1)}}, flagged).pow(1.0 - q.r1),
               pow_integral(g, {{&phi, -q.r1 / (1.0 - q.r1)}}, flagged).pow(1.0 - q.r1))
          .pow(1.0 / q.r1);
  const Mag rhs = (Mag::from(consts.c7).pow(p) * Mag::from(q.m).pow(1.0 / q.r1) * Phi8)
                      .pow(1.0 / ka) *
                  Mag::from(trapezoid(times, energy)).pow(1.0 / ka) *
                  Mag::from(*std::max_element(anorm.begin(), anorm.end()))
                      .pow(1.0 - q.theta0_time);

  CheckReport rep;
  rep.resolution = res_string(g);
  rep.absorb(finish("parabolic_sobolev", lhs, rhs, flagged));
  return rep;
}

// ==== suite ===================================================================

CheckReport run_suite(const Grid& g, const TestFunctionFamily& fam,
                      const std::vector<SobolevParams>& parameter_grid,
                      const EmbeddingConstants& consts, const SuiteWeights& weights,
                      const std::string& csv_path) {
  CheckReport total;
  total.resolution = res_string(g);

  const auto members = make_family(fam, g);
  std::vector<SpatialField> sampled;
  sampled.reserve(members.size());
  for (const auto& fn : members) sampled.push_back(SpatialField::from(g, fn.value));

  const std::vector<double> ptimes{0.0, 0.25, 0.5, 0.75, 1.0};

  for (const auto& q : parameter_grid) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      const SpatialField& u = sampled[i];
      auto tag = [&](CheckReport rep) {
        for (auto& rec : rep.records) {
          rec.function_id = members[i].id;
          rec.param_id = q.id();
        }
        total.absorb(rep);
      };
      tag(check_weighted_sobolev(u, weights.omega, weights.phi, weights.W, q, consts));
      tag(check_trace_simple(u, weights.W, q.alpha, q.s, q.p, q.epsilon, consts));
      tag(check_trace_two_weight(u, weights.phi, weights.W, q, consts));

      std::vector<SpatialField> u_t;
      u_t.reserve(ptimes.size());
      for (double t : ptimes) {
        SpatialField ut = u;
        const double c = 1.0 + 0.25 * std::sin(2.0 * M_PI * t);
        for (auto& v : ut.values) v *= c;
        u_t.push_back(std::move(ut));
      }
      tag(check_parabolic_sobolev(u_t, ptimes, weights.phi, weights.W, q, consts));
    }
  }

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("run_suite: cannot open " + csv_path);
    out << "check_name,function_id,param_id,lhs,rhs,margin,pass\n";
    char buf[128];
    for (const auto& rec : total.records) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", rec.lhs, rec.rhs, rec.margin);
      out << rec.check_name << ',' << rec.function_id << ',' << rec.param_id << ','
          << buf << ',' << (rec.pass ? 1 : 0) << '\n';
    }
  }
  return total;
}

}  // namespace forch
