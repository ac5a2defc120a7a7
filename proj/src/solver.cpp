#include "forch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace forch {

namespace {

double weighted_power_of_w(const Grid& g, const std::vector<double>& wv,
                           const SpatialField& phi, double exponent) {
  std::vector<double> tmp(wv.size());
  for (size_t c = 0; c < wv.size(); ++c) tmp[c] = phi[(long)c] * std::pow(wv[c], exponent);
  return g.cell_volume() * pairwise_sum(tmp);
}

}  // namespace

void Scenario::validate() const {
  law.validate();
  if (!law.grid.same_layout(grid))
    throw std::invalid_argument("scenario: law grid does not match the domain grid");
  if (!phi.grid.same_layout(grid))
    throw std::invalid_argument("scenario: phi grid does not match the domain grid");
  if (!u0.grid.same_layout(grid))
    throw std::invalid_argument("scenario: u0 grid does not match the domain grid");
  if (!psi.grid.same_layout(grid))
    throw std::invalid_argument("scenario: psi grid does not match the domain grid");
  if (!(lambda > 0.0) || lambda > 0.5)
    throw std::invalid_argument("scenario: lambda must lie in (0, 1/2]");
  if (!(T_final > 0.0)) throw std::invalid_argument("scenario: T_final must be positive");
  if (!(z.C_Z >= 0.0)) throw std::invalid_argument("scenario: C_Z must be nonnegative");
  if (z.C_Z > 0.0) {
    const double n2 = z.dir[0] * z.dir[0] + z.dir[1] * z.dir[1] + z.dir[2] * z.dir[2];
    if (!(n2 > 0.0))
      throw std::invalid_argument("scenario: drift direction must be nonzero when C_Z > 0");
  }
  for (long c = 0; c < grid.cell_count(); ++c) {
    if (!(phi[c] > 0.0)) throw std::invalid_argument("scenario: phi must be positive everywhere");
    if (!(u0[c] >= 0.0)) throw std::invalid_argument("scenario: u0 must be nonnegative");
  }
}

StepResult step(const SpatialField& w, double t, double dt, const Scenario& scen,
                const SolverConfig& cfg) {
  const Grid& g = scen.grid;
  if (!w.grid.same_layout(g))
    throw std::invalid_argument("step: state grid does not match the scenario grid");
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");

  const FaceSet faces(g);
  const long nc = g.cell_count();
  const long nf = faces.face_count();
  const double vol = g.cell_volume();
  const double inv_lambda = 1.0 / scen.lambda;
  const double two_lambda = 2.0 * scen.lambda;
  const double tn = t + dt;

  std::array<double, 3> zdir{0, 0, 0};
  const double zmag = scen.z.C_Z;
  if (zmag > 0.0) {
    const double nn = std::sqrt(scen.z.dir[0] * scen.z.dir[0] + scen.z.dir[1] * scen.z.dir[1] +
                                scen.z.dir[2] * scen.z.dir[2]);
    for (int k = 0; k < 3; ++k) zdir[k] = scen.z.dir[k] / nn;
  }

  const long nb = faces.boundary_count();
  std::vector<double> psi_n(nb);
  for (long b = 0; b < nb; ++b) psi_n[b] = scen.psi.value(b, tn);

  std::vector<double> src;
  double source_int = 0.0;
  if (scen.source) {
    src.resize(nc);
    for (long c = 0; c < nc; ++c) src[c] = scen.source(g.cell_center(c), tn);
    source_int = vol * pairwise_sum(src);
  }

  // Face-averaged law coefficients; boundary faces never query the law.
  const auto& exps = scen.law.exponents;
  const int terms = static_cast<int>(exps.size());
  std::vector<double> fc(static_cast<size_t>(nf) * terms);
  for (long f = 0; f < nf; ++f) {
    const long L = faces.cell_lo(f), R = faces.cell_hi(f);
    if (L < 0 || R < 0) continue;
    for (int i = 0; i < terms; ++i)
      fc[(size_t)f * terms + i] =
          0.5 * (scen.law.coefficients[i][L] + scen.law.coefficients[i][R]);
  }

  SpatialField u{g, std::vector<double>(nc), "u"};
  std::vector<double> w_cur = w.values;
  std::vector<double> w_nxt(nc);
  std::vector<double> div(nc);
  std::vector<double> coeffs(terms);

  StepResult out;
  for (int m = 0; m < cfg.picard_max; ++m) {
    for (long c = 0; c < nc; ++c) u.values[c] = std::pow(w_cur[c], inv_lambda);
    const auto grad = discrete_gradient(u, faces);

    std::fill(div.begin(), div.end(), 0.0);
    double outflow = 0.0;
    double absflux = 0.0;
    for (long f = 0; f < nf; ++f) {
      const int k = faces.axis_of(f);
      const double A = faces.area(k);
      const long L = faces.cell_lo(f), R = faces.cell_hi(f);
      if (L < 0 || R < 0) {
        const long adj = L < 0 ? R : L;
        const long b = faces.boundary_ordinal(f);
        // Wall trace of w: linear extrapolation from the two nearest cells,
        // floored at zero; falls back to the cell value on one-cell axes.
        double w_face = w_cur[adj];
        if (g.cells[k] >= 2) {
          auto ic = g.cell_coords(adj);
          ic[k] -= faces.boundary_sign(f);
          w_face = std::max(0.0, 1.5 * w_cur[adj] - 0.5 * w_cur[g.cell_index(ic)]);
        }
        const double out_n = -psi_n[b] * w_face;  // X.nu = -psi u^lambda
        div[adj] += out_n * A;
        outflow += psi_n[b] * w_face * A;
        absflux += std::abs(out_n * A);
        continue;
      }
      std::array<double, 3> G = grad[f];
      if (zmag > 0.0) {
        const double uf = 0.5 * (u.values[L] + u.values[R]);
        const double zf = zmag * std::pow(uf, two_lambda);
        for (int j = 0; j < 3; ++j) G[j] -= zf * zdir[j];
      }
      const double xi = std::sqrt(G[0] * G[0] + G[1] * G[1] + G[2] * G[2]);
      double Fn = 0.0;
      if (xi > 0.0) {
        for (int i = 0; i < terms; ++i) coeffs[i] = fc[(size_t)f * terms + i];
        const double s = solve_s_at(exps, coeffs, xi);
        Fn = (s / xi) * G[k];  // K(xi) xi = s
      }
      div[L] += Fn * A;
      div[R] -= Fn * A;
      absflux += std::abs(Fn * A);
    }

    out.clamped_cells = 0;
    out.clamp_mass = 0.0;
    double dmax = 0.0, wmax = 0.0;
    bool finite = true;
    for (long c = 0; c < nc; ++c) {
      double v = w.values[c] +
                 dt * (div[c] / vol + (src.empty() ? 0.0 : src[c])) / scen.phi[c];
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
      if (v < 0.0) {
        ++out.clamped_cells;
        out.clamp_mass += scen.phi[c] * (-v) * vol;
        v = 0.0;
      }
      w_nxt[c] = v;
      dmax = std::max(dmax, std::abs(v - w_cur[c]));
      wmax = std::max(wmax, std::abs(v));
    }
    out.iters = m + 1;
    if (!finite) {
      // the sweep blew through the floating range: a hard non-convergence,
      // reported with the last finite iterate left in place
      out.clamped_cells = 0;
      out.clamp_mass = 0.0;
      break;
    }
    out.outflow = outflow;
    out.telescoping_error = std::abs(pairwise_sum(div) + outflow) / (1.0 + absflux);
    std::swap(w_cur, w_nxt);
    if (dmax < cfg.picard_tol * (wmax + 1e-30)) {
      out.converged = true;
      break;
    }
  }
  out.source_used = source_int;
  out.w.grid = g;
  out.w.label = w.label;
  out.w.values = std::move(w_cur);
  return out;
}

SolutionTrace solve(const Scenario& scen, const SolverConfig& cfg,
                    const std::vector<double>& alpha_list) {
  scen.validate();
  if (!(cfg.dt_min > 0.0) || !(cfg.dt_initial >= cfg.dt_min) || !(cfg.dt_max >= cfg.dt_initial))
    throw std::invalid_argument("solve: need 0 < dt_min <= dt_initial <= dt_max");
  if (!(cfg.picard_tol > 0.0) || cfg.picard_max < 1 || cfg.snapshot_cadence < 1)
    throw std::invalid_argument("solve: invalid Picard or cadence settings");
  for (double a : alpha_list)
    if (!(a > 0.0)) throw std::invalid_argument("solve: alpha values must be positive");

  const Grid& g = scen.grid;
  const long nc = g.cell_count();
  SpatialField wf{g, std::vector<double>(nc), "w"};
  for (long c = 0; c < nc; ++c) wf.values[c] = std::pow(scen.u0[c], scen.lambda);

  SolutionTrace tr;
  tr.lambda = scen.lambda;
  tr.alphas = alpha_list;
  tr.initial_mass = weighted_power_of_w(g, wf.values, scen.phi, 1.0);
  tr.weighted_power.resize(alpha_list.size());
  const auto record_series = [&](double tt) {
    for (size_t i = 0; i < alpha_list.size(); ++i)
      tr.weighted_power[i].push(
          tt, weighted_power_of_w(g, wf.values, scen.phi, alpha_list[i] / scen.lambda));
  };
  const auto snap = [&](double tt) {
    SpatialField uu{g, std::vector<double>(nc), "u"};
    for (long c = 0; c < nc; ++c) uu.values[c] = std::pow(wf.values[c], 1.0 / scen.lambda);
    tr.snapshot_times.push_back(tt);
    tr.snapshots.push_back(std::move(uu));
  };
  record_series(0.0);
  snap(0.0);

  const double T = scen.T_final;
  double t = 0.0;
  double dt = cfg.dt_initial;
  int easy = 0;
  long accepted = 0;
  while (t < T * (1.0 - 1e-12)) {
    const double dt_try = std::min(dt, T - t);
    StepResult r = step(wf, t, dt_try, scen, cfg);
    if (!r.converged) {
      dt = dt_try * 0.5;
      easy = 0;
      if (dt < cfg.dt_min)
        throw std::runtime_error(
            "solve: Picard iteration failed to converge with dt reduced to dt_min");
      continue;
    }
    t += dt_try;
    wf.values = std::move(r.w.values);
    ++accepted;

    StepStats st;
    st.t = t;
    st.dt = dt_try;
    st.picard_iters = r.iters;
    st.clamped_cells = r.clamped_cells;
    st.clamp_mass = r.clamp_mass;
    st.mass = weighted_power_of_w(g, wf.values, scen.phi, 1.0);
    st.outflow = r.outflow;
    st.source = r.source_used;
    st.telescoping_error = r.telescoping_error;
    tr.steps.push_back(st);
    record_series(t);
    if (accepted % cfg.snapshot_cadence == 0) snap(t);

    if (r.iters <= 10) {
      if (++easy >= 3) {
        dt = std::min(dt * 1.2, cfg.dt_max);
        easy = 0;
      }
    } else {
      easy = 0;
    }
  }
  if (tr.snapshot_times.empty() || tr.snapshot_times.back() != t) snap(t);
  return tr;
}

MassBalanceReport mass_balance_report(const SolutionTrace& trace, const Scenario&) {
  MassBalanceReport rep;
  double prev = trace.initial_mass;
  for (const auto& st : trace.steps) {
    const double resid = (st.mass - prev) / st.dt + st.outflow;
    rep.t.push_back(st.t);
    rep.residual.push_back(resid);
    rep.source.push_back(st.source);
    rep.clamp_mass.push_back(st.clamp_mass);
    if (st.clamp_mass > 0.0)
      rep.clamped_any = true;
    else
      rep.worst = std::max(rep.worst, std::abs(resid - st.source));
    prev = st.mass;
  }
  return rep;
}

MonotonicityReport monotonicity_check(const SolutionTrace& trace, double alpha) {
  size_t idx = trace.alphas.size();
  for (size_t i = 0; i < trace.alphas.size(); ++i)
    if (trace.alphas[i] == alpha) idx = i;
  if (idx == trace.alphas.size())
    throw std::invalid_argument("monotonicity_check: alpha was not recorded by solve");

  const TimeSeries& s = trace.weighted_power[idx];
  MonotonicityReport rep;
  rep.alpha = alpha;
  for (size_t k = 1; k < s.v.size(); ++k) {
    const double rise = s.v[k] - s.v[k - 1];
    if (rise > 1e-10 * (1.0 + std::abs(s.v[k - 1]))) rep.pass = false;
    rep.worst_violation = std::max(rep.worst_violation, std::max(0.0, rise));
  }
  return rep;
}

}  // namespace forch
