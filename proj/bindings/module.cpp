// Python bindings for the forchflow core: grids, constitutive kernels,
// exponent books, bound curves, the inequality harness, and the solver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "forch/bounds.hpp"
#include "forch/inequality.hpp"
#include "forch/solver.hpp"

namespace py = pybind11;
using namespace forch;

namespace {

SpatialField field_from_array(const Grid& g, py::array_t<double> values,
                              const std::string& label) {
  auto buf = values.request();
  if (buf.size != g.cell_count())
    throw std::invalid_argument("field size does not match the grid cell count");
  SpatialField f = SpatialField::constant(g, 0.0, label);
  const double* src = static_cast<const double*>(buf.ptr);
  std::copy(src, src + buf.size, f.values.begin());
  return f;
}

py::array_t<double> field_to_array(const SpatialField& f) {
  py::array_t<double> out(f.values.size());
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

py::dict mag_dict(const Mag& m) {
  py::dict d;
  d["value"] = m.value();
  d["log"] = m.lg;
  d["is_zero"] = m.is_zero();
  return d;
}

py::dict book_dict(const ExponentBook& b) {
  py::dict d;
  d["n"] = b.n;
  d["a"] = b.a;
  d["lambda"] = b.lambda;
  d["r1"] = b.r1;
  d["r"] = b.r;
  d["alpha0"] = b.alpha0;
  d["kappa_tilde"] = b.kappa_tilde;
  d["p"] = b.p;
  d["s"] = b.s;
  d["r_star"] = b.r_star;
  d["r_tilde"] = b.r_tilde;
  d["alpha"] = b.alpha;
  d["m"] = b.m;
  d["theta"] = b.theta;
  d["mu1"] = b.mu1;
  d["theta_tilde"] = b.theta_tilde;
  d["mu1_tilde"] = b.mu1_tilde;
  d["mu_min"] = b.mu_min;
  d["mu_max"] = b.mu_max;
  d["h1"] = b.h1;
  d["h2"] = b.h2;
  d["h3"] = b.h3;
  d["kappa"] = b.kappa;
  d["mu_tilde"] = b.mu_tilde;
  d["nu_tilde"] = b.nu_tilde;
  d["G"] = b.G;
  d["omega"] = b.omega;
  d["omega1"] = b.omega1;
  d["omega2"] = b.omega2;
  d["omega3"] = b.omega3;
  py::list conds;
  for (const auto& c : b.conditions) {
    py::dict e;
    e["id"] = c.id;
    e["requirement"] = c.requirement;
    e["ok"] = c.ok;
    conds.append(e);
  }
  d["conditions"] = conds;
  return d;
}

ForchheimerLaw make_law(const Grid& g, const std::string& preset,
                        const std::vector<py::array_t<double>>& coeffs) {
  std::vector<SpatialField> fields;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    fields.push_back(field_from_array(g, coeffs[i], "a" + std::to_string(i)));
  return preset_law(preset, g, fields);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "forchflow core: Forchheimer flow solver and certified a-priori bounds";

  py::class_<Grid>(mod, "Grid")
      .def(py::init([](int n, std::array<long, 3> cells, std::array<double, 3> lo,
                       std::array<double, 3> hi) { return Grid::make(n, cells, lo, hi); }),
           py::arg("n"), py::arg("cells"), py::arg("lo") = std::array<double, 3>{0, 0, 0},
           py::arg("hi") = std::array<double, 3>{1, 1, 1})
      .def_readonly("n", &Grid::n)
      .def_readonly("cells", &Grid::cells)
      .def_readonly("h", &Grid::h)
      .def_property_readonly("cell_count", &Grid::cell_count)
      .def("cell_center", &Grid::cell_center);

  py::class_<SpatialField>(mod, "Field")
      .def_static("constant",
                  [](const Grid& g, double v, const std::string& label) {
                    return SpatialField::constant(g, v, label);
                  },
                  py::arg("grid"), py::arg("value"), py::arg("label") = "")
      .def_static("from_array", &field_from_array, py::arg("grid"), py::arg("values"),
                  py::arg("label") = "")
      .def("to_array", &field_to_array)
      .def_readonly("label", &SpatialField::label);

  py::class_<ForchheimerLaw>(mod, "Law")
      .def(py::init(&make_law), py::arg("grid"), py::arg("preset"), py::arg("coeffs"))
      .def_readonly("exponents", &ForchheimerLaw::exponents)
      .def_property_readonly("degeneracy_a", &ForchheimerLaw::degeneracy_a)
      .def("solve_s", [](const ForchheimerLaw& law, long cell,
                         double xi) { return solve_s(law, cell, xi); })
      .def("eval_K", [](const ForchheimerLaw& law, long cell,
                        double xi) { return eval_K(law, cell, xi); })
      .def("eval_g", [](const ForchheimerLaw& law, long cell,
                        double s) { return eval_g(law, cell, s); });

  mod.def("weights",
          [](const ForchheimerLaw& law) {
            const auto W = compute_weights(law);
            py::dict d;
            d["W1"] = field_to_array(W.W1);
            d["W2"] = field_to_array(W.W2);
            d["W3"] = field_to_array(W.W3);
            return d;
          },
          py::arg("law"), "sandwich weight fields W1, W2, W3 as numpy arrays");

  mod.def("weighted_lp_norm", &weighted_lp_norm, py::arg("u"), py::arg("phi"),
          py::arg("p"));

  mod.def("exponent_book",
          [](int n, double a, double lambda, double r1, double r, double alpha0,
             double kappa_tilde) {
            return book_dict(
                moser_products(build_exponents(n, a, lambda, r1, r, alpha0, kappa_tilde, {})));
          },
          py::arg("n"), py::arg("a"), py::arg("lambda"), py::arg("r1"), py::arg("r"),
          py::arg("alpha0"), py::arg("kappa_tilde"),
          "all derived exponents, iteration products, and admissibility conditions");

  mod.def("gas_table",
          [](int n, double r1, double alpha0, double r, double kappa_tilde) {
            const auto tab = example_gas_tables(n, r1, alpha0, r, kappa_tilde);
            py::list rows;
            for (const auto& row : tab.rows) {
              py::dict e;
              e["name"] = row.name;
              e["generic"] = row.generic;
              e["closed"] = row.closed;
              e["diff"] = row.diff;
              e["pass"] = row.pass;
              rows.append(e);
            }
            py::dict d;
            d["rows"] = rows;
            d["pass"] = tab.pass;
            return d;
          },
          py::arg("n"), py::arg("r1") = 0.8, py::arg("alpha0") = 40.0 / 1.03,
          py::arg("r") = 1.0, py::arg("kappa_tilde") = 1.03,
          "closed-form cross-check rows for the two-term gas law");

  mod.def("calibrate",
          [](const Grid& g, double r1, double p, int count, unsigned long seed,
             double safety) {
            TestFunctionFamily fam;
            fam.count = count;
            fam.seed = seed;
            const auto c = calibrate_constants(g, r1, p, fam, safety);
            py::dict d;
            d["c1"] = c.c1;
            d["c2"] = c.c2;
            d["c3"] = c.c3;
            d["c4"] = c.c4;
            d["c5"] = c.c5;
            d["c6"] = c.c6;
            d["c7"] = c.c7;
            d["provenance"] = c.provenance;
            return d;
          },
          py::arg("grid"), py::arg("r1"), py::arg("p"), py::arg("count") = 32,
          py::arg("seed") = 42, py::arg("safety") = 2.0);

  mod.def("solve_ibvp",
          [](const Grid& g, const ForchheimerLaw& law, const SpatialField& phi,
             double lambda, double C_Z, double psi_const, const SpatialField& u0,
             double T, double dt, std::vector<double> track_alphas) {
            Scenario sc;
            sc.grid = g;
            sc.law = law;
            sc.phi = phi;
            sc.lambda = lambda;
            sc.z.C_Z = C_Z;
            sc.psi = BoundaryField::constant(g, psi_const);
            sc.u0 = u0;
            sc.T_final = T;
            SolverConfig cfg;
            cfg.dt_initial = dt;
            cfg.dt_max = dt;
            const auto tr = solve(sc, cfg, track_alphas);
            py::dict d;
            std::vector<double> t{0.0}, mass{tr.initial_mass};
            for (const auto& st : tr.steps) {
              t.push_back(st.t);
              mass.push_back(st.mass);
            }
            d["t"] = t;
            d["mass"] = mass;
            d["u_final"] = field_to_array(tr.snapshots.back());
            py::list wp;
            for (std::size_t k = 0; k < tr.alphas.size(); ++k) {
              py::dict e;
              e["alpha"] = tr.alphas[k];
              e["t"] = tr.weighted_power[k].t;
              e["values"] = tr.weighted_power[k].v;
              wp.append(e);
            }
            d["weighted_power"] = wp;
            return d;
          },
          py::arg("grid"), py::arg("law"), py::arg("phi"), py::arg("lambda"),
          py::arg("C_Z"), py::arg("psi"), py::arg("u0"), py::arg("T"), py::arg("dt"),
          py::arg("track_alphas") = std::vector<double>{},
          "integrate the IBVP with static scalar boundary data; returns the mass "
          "history, tracked weighted powers, and the final field");

  mod.def("alpha_bound",
          [](double alpha, double mu_max, double Zstar, double V0, double T) {
            ExponentBook bk;
            bk.alpha = alpha;
            bk.mu_max = mu_max;
            ProofConstants pc;
            pc.Zstar = Mag::from(Zstar);
            TimeSeries M;
            M.t = {0.0, std::max(T, 1.0)};
            M.v = {1.0, 1.0};
            const auto rep = alpha_bound_curve(bk, pc, Mag::from(V0), M, {}, nullptr);
            py::dict d;
            d["T_threshold"] = rep.T_threshold;
            py::list t, V;
            for (std::size_t i = 0; i < rep.t.size(); ++i) {
              t.append(rep.t[i]);
              V.append(mag_dict(rep.V[i]));
            }
            d["t"] = t;
            d["V"] = V;
            return d;
          },
          py::arg("alpha"), py::arg("mu_max"), py::arg("Zstar"), py::arg("V0"),
          py::arg("T") = 1.0,
          "energy bound curve and threshold for unit boundary forcing");
}
