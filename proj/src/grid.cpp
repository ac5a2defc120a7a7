#include "forch/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace forch {

// ---- Grid -------------------------------------------------------------------

Grid Grid::make(int n, std::array<long, 3> cells,
                std::array<double, 3> lo, std::array<double, 3> hi) {
  if (n < 1 || n > 3) throw std::invalid_argument("Grid: dimension must be 1, 2, or 3");
  Grid g;
  g.n = n;
  for (int k = 0; k < 3; ++k) {
    if (k < n) {
      if (cells[k] < 1) throw std::invalid_argument("Grid: cell counts must be positive");
      if (!(hi[k] > lo[k])) throw std::invalid_argument("Grid: extents must have hi > lo");
      g.cells[k] = cells[k];
      g.lo[k] = lo[k];
      g.hi[k] = hi[k];
      g.h[k] = (hi[k] - lo[k]) / static_cast<double>(cells[k]);
    } else {
      g.cells[k] = 1;
      g.lo[k] = 0.0;
      g.hi[k] = 1.0;
      g.h[k] = 1.0;
    }
  }
  return g;
}

// ---- FaceSet ----------------------------------------------------------------

FaceSet::FaceSet(const Grid& g) : grid(g) {
  long off = 0;
  for (int k = 0; k < 3; ++k) {
    axis_offset[k] = off;
    if (k < g.n) {
      trans_count[k] = g.cell_count() / g.cells[k];
      off += (g.cells[k] + 1) * trans_count[k];
    } else {
      trans_count[k] = 0;
    }
  }
  total = off;
}

int FaceSet::axis_of(long f) const {
  for (int k = 2; k >= 0; --k)
    if (k < grid.n && f >= axis_offset[k]) return k;
  throw std::out_of_range("FaceSet: bad face id");
}

long FaceSet::plane_of(long f) const {
  const int k = axis_of(f);
  return (f - axis_offset[k]) / trans_count[k];
}

long FaceSet::transverse_of(long f) const {
  const int k = axis_of(f);
  return (f - axis_offset[k]) % trans_count[k];
}

bool FaceSet::is_boundary(long f) const {
  const int k = axis_of(f);
  const long j = plane_of(f);
  return j == 0 || j == grid.cells[k];
}

namespace {
// Remaining axes of `axis` in ascending order; lowest axis is the fast index
// of the transverse ordinal.
std::array<int, 2> other_axes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}
}  // namespace

long FaceSet::cell_lo(long f) const {
  const int k = axis_of(f);
  const long j = plane_of(f);
  if (j == 0) return -1;
  const auto oa = other_axes(k);
  const long t = transverse_of(f);
  std::array<long, 3> i{0, 0, 0};
  i[k] = j - 1;
  i[oa[0]] = t % grid.cells[oa[0]];
  i[oa[1]] = t / grid.cells[oa[0]];
  return grid.cell_index(i);
}

long FaceSet::cell_hi(long f) const {
  const int k = axis_of(f);
  const long j = plane_of(f);
  if (j == grid.cells[k]) return -1;
  const auto oa = other_axes(k);
  const long t = transverse_of(f);
  std::array<long, 3> i{0, 0, 0};
  i[k] = j;
  i[oa[0]] = t % grid.cells[oa[0]];
  i[oa[1]] = t / grid.cells[oa[0]];
  return grid.cell_index(i);
}

double FaceSet::area(int axis) const {
  double a = 1.0;
  for (int m = 0; m < 3; ++m)
    if (m != axis) a *= grid.h[m];
  return a;
}

std::array<double, 3> FaceSet::center(long f) const {
  const int k = axis_of(f);
  const long j = plane_of(f);
  const auto oa = other_axes(k);
  const long t = transverse_of(f);
  std::array<double, 3> x{0.5, 0.5, 0.5};
  x[k] = grid.lo[k] + j * grid.h[k];
  const long i0 = t % grid.cells[oa[0]];
  const long i1 = t / grid.cells[oa[0]];
  x[oa[0]] = grid.lo[oa[0]] + (i0 + 0.5) * grid.h[oa[0]];
  x[oa[1]] = grid.lo[oa[1]] + (i1 + 0.5) * grid.h[oa[1]];
  return x;
}

long FaceSet::boundary_count() const {
  long c = 0;
  for (int k = 0; k < grid.n; ++k) c += 2 * trans_count[k];
  return c;
}

long FaceSet::boundary_face(long ordinal) const {
  long b = ordinal;
  for (int k = 0; k < grid.n; ++k) {
    if (b < 2 * trans_count[k]) {
      const long side = b / trans_count[k];  // 0 = low, 1 = high
      const long t = b % trans_count[k];
      const long j = side == 0 ? 0 : grid.cells[k];
      return axis_offset[k] + j * trans_count[k] + t;
    }
    b -= 2 * trans_count[k];
  }
  throw std::out_of_range("FaceSet: bad boundary ordinal");
}

long FaceSet::boundary_ordinal(long f) const {
  const int k = axis_of(f);
  const long j = plane_of(f);
  if (j != 0 && j != grid.cells[k]) return -1;
  long base = 0;
  for (int m = 0; m < k; ++m) base += 2 * trans_count[m];
  return base + (j == 0 ? 0 : trans_count[k]) + transverse_of(f);
}

int FaceSet::boundary_sign(long f) const { return plane_of(f) == 0 ? -1 : 1; }

long FaceSet::boundary_cell(long f) const {
  return plane_of(f) == 0 ? cell_hi(f) : cell_lo(f);
}

// ---- fields -----------------------------------------------------------------

SpatialField SpatialField::constant(const Grid& g, double v, std::string label) {
  SpatialField f;
  f.grid = g;
  f.values.assign(g.cell_count(), v);
  f.label = std::move(label);
  return f;
}

SpatialField SpatialField::from(const Grid& g,
                                const std::function<double(std::array<double, 3>)>& fn,
                                std::string label) {
  SpatialField f;
  f.grid = g;
  f.values.resize(g.cell_count());
  for (long c = 0; c < g.cell_count(); ++c) f.values[c] = fn(g.cell_center(c));
  f.label = std::move(label);
  return f;
}

BoundaryField BoundaryField::constant(const Grid& g, double v, std::string label) {
  BoundaryField f;
  f.grid = g;
  f.times = {0.0};
  f.samples = {std::vector<double>(FaceSet(g).boundary_count(), v)};
  f.label = std::move(label);
  return f;
}

BoundaryField BoundaryField::from(
    const Grid& g, const std::vector<double>& times,
    const std::function<double(std::array<double, 3>, double)>& fn, std::string label) {
  if (times.empty()) throw std::invalid_argument("BoundaryField: need at least one sample time");
  BoundaryField f;
  f.grid = g;
  f.times = times;
  f.label = std::move(label);
  const FaceSet faces(g);
  const long nb = faces.boundary_count();
  f.samples.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    f.samples[i].resize(nb);
    for (long b = 0; b < nb; ++b)
      f.samples[i][b] = fn(faces.center(faces.boundary_face(b)), times[i]);
  }
  return f;
}

double BoundaryField::value(long ordinal, double t) const {
  if (times.size() == 1) return samples[0][ordinal];
  if (t <= times.front()) return samples.front()[ordinal];
  if (t >= times.back()) return samples.back()[ordinal];
  std::size_t i = 1;
  while (times[i] < t) ++i;
  const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return samples[i - 1][ordinal] + w * (samples[i][ordinal] - samples[i - 1][ordinal]);
}

// ---- quadrature -------------------------------------------------------------

double integrate_volume(const Grid& g, const std::function<double(long)>& cell_expr) {
  std::vector<double> terms(g.cell_count());
  for (long c = 0; c < g.cell_count(); ++c) {
    terms[c] = cell_expr(c);
    if (!std::isfinite(terms[c]))
      throw std::runtime_error("integrate_volume: integrand not finite at cell " +
                               std::to_string(c));
  }
  return g.cell_volume() * pairwise_sum(terms);
}

double integrate_volume(const SpatialField& f) {
  return integrate_volume(f.grid, [&](long c) { return f.values[c]; });
}

Mag integrate_volume_log(const Grid& g, const std::function<double(long)>& cell_log_expr) {
  std::vector<double> lg(g.cell_count());
  double peak = -std::numeric_limits<double>::infinity();
  for (long c = 0; c < g.cell_count(); ++c) {
    lg[c] = cell_log_expr(c);
    if (std::isnan(lg[c]) || lg[c] == std::numeric_limits<double>::infinity())
      throw std::runtime_error("integrate_volume_log: integrand not finite at cell " +
                               std::to_string(c));
    peak = std::max(peak, lg[c]);
  }
  if (std::isinf(peak)) return Mag::zero();
  std::vector<double> scaled(lg.size());
  for (std::size_t c = 0; c < lg.size(); ++c) scaled[c] = std::exp(lg[c] - peak);
  return Mag::from_log(peak + std::log(pairwise_sum(scaled)) + std::log(g.cell_volume()));
}

double integrate_boundary(const Grid& g, const std::function<double(long)>& face_expr) {
  const FaceSet faces(g);
  const long nb = faces.boundary_count();
  std::vector<double> terms(nb);
  for (long b = 0; b < nb; ++b) {
    const long f = faces.boundary_face(b);
    terms[b] = faces.area(faces.axis_of(f)) * face_expr(b);
    if (!std::isfinite(terms[b]))
      throw std::runtime_error("integrate_boundary: integrand not finite at boundary face " +
                               std::to_string(b));
  }
  return pairwise_sum(terms);
}

double integrate_boundary(const BoundaryField& f, double t) {
  return integrate_boundary(f.grid, [&](long b) { return f.value(b, t); });
}

double integrate_boundary_trace(const SpatialField& u,
                                const std::function<double(double, long)>& transform) {
  const FaceSet faces(u.grid);
  return integrate_boundary(u.grid, [&](long b) {
    const long c = faces.boundary_cell(faces.boundary_face(b));
    return transform(u.values[c], b);
  });
}

double weighted_lp_norm(const SpatialField& u, const SpatialField& phi, double p) {
  if (!(p > 0)) throw std::invalid_argument("weighted_lp_norm: p must be positive");
  const double s = integrate_volume(u.grid, [&](long c) {
    return phi.values[c] * std::pow(std::abs(u.values[c]), p);
  });
  return std::pow(s, 1.0 / p);
}

// ---- discrete derivatives ---------------------------------------------------

namespace {

// Central difference along axis m at cell c, one-sided at domain edges.
double cell_difference(const SpatialField& u, long c, int m) {
  const Grid& g = u.grid;
  if (g.cells[m] < 2) return 0.0;
  auto i = g.cell_coords(c);
  const double h = g.h[m];
  if (i[m] == 0) {
    auto ip = i;
    ip[m] = 1;
    return (u.values[g.cell_index(ip)] - u.values[c]) / h;
  }
  if (i[m] == g.cells[m] - 1) {
    auto im = i;
    im[m] = i[m] - 1;
    return (u.values[c] - u.values[g.cell_index(im)]) / h;
  }
  auto ip = i, im = i;
  ip[m] = i[m] + 1;
  im[m] = i[m] - 1;
  return (u.values[g.cell_index(ip)] - u.values[g.cell_index(im)]) / (2.0 * h);
}

}  // namespace

std::vector<std::array<double, 3>> discrete_gradient(const SpatialField& u,
                                                     const FaceSet& faces) {
  const Grid& g = u.grid;
  std::vector<std::array<double, 3>> grad(faces.face_count(), {0.0, 0.0, 0.0});
  for (long f = 0; f < faces.face_count(); ++f) {
    const int k = faces.axis_of(f);
    const long cl = faces.cell_lo(f), ch = faces.cell_hi(f);

    // Normal component: two-point difference, one-sided at the boundary.
    if (cl >= 0 && ch >= 0) {
      grad[f][k] = (u.values[ch] - u.values[cl]) / g.h[k];
    } else if (g.cells[k] > 1) {
      const long c = cl >= 0 ? cl : ch;
      auto i = g.cell_coords(c);
      auto j = i;
      if (cl >= 0)
        j[k] = i[k] - 1;  // high boundary, step into the domain
      else
        j[k] = i[k] + 1;  // low boundary
      const long cn = g.cell_index(j);
      grad[f][k] = (cl >= 0 ? (u.values[c] - u.values[cn]) : (u.values[cn] - u.values[c])) / g.h[k];
    }

    // Tangential components: average the adjacent cells' differences.
    for (int m = 0; m < g.n; ++m) {
      if (m == k) continue;
      double acc = 0.0;
      int cnt = 0;
      if (cl >= 0) {
        acc += cell_difference(u, cl, m);
        ++cnt;
      }
      if (ch >= 0) {
        acc += cell_difference(u, ch, m);
        ++cnt;
      }
      grad[f][m] = cnt ? acc / cnt : 0.0;
    }
  }
  return grad;
}

GradEnergy grad_energy(const SpatialField& u, const SpatialField& W, double alpha,
                       double s, double p, const FaceSet& faces) {
  if (!u.grid.same_layout(W.grid))
    throw std::invalid_argument("grad_energy: field grids differ");
  const auto grad = discrete_gradient(u, faces);
  const Grid& g = u.grid;
  std::vector<double> terms(faces.face_count());
  GradEnergy out;
  for (long f = 0; f < faces.face_count(); ++f) {
    const int k = faces.axis_of(f);
    const long cl = faces.cell_lo(f), ch = faces.cell_hi(f);
    const bool interior = cl >= 0 && ch >= 0;
    const double meas = faces.area(k) * g.h[k] * (interior ? 1.0 : 0.5);

    double uf, wf;
    if (interior) {
      uf = 0.5 * (std::abs(u.values[cl]) + std::abs(u.values[ch]));
      wf = 0.5 * (W.values[cl] + W.values[ch]);
    } else {
      const long c = cl >= 0 ? cl : ch;
      uf = std::abs(u.values[c]);
      wf = W.values[c];
    }
    const double gn = std::hypot(grad[f][0], grad[f][1], grad[f][2]);

    // Zero factors short-circuit so a degenerate |u|^(alpha-s) never produces
    // inf * 0.
    if (wf == 0.0 || (gn == 0.0 && p > 0)) {
      terms[f] = 0.0;
      continue;
    }
    double upow;
    if (alpha == s) {
      upow = 1.0;
    } else if (alpha > s) {
      upow = std::pow(uf, alpha - s);
    } else {
      if (uf < 1e-300) {
        uf = 1e-300;
        out.degenerate = true;
      }
      upow = std::pow(uf, alpha - s);
    }
    terms[f] = meas * upow * std::pow(gn, p) * wf;
    if (!std::isfinite(terms[f]))
      throw std::runtime_error("grad_energy: integrand not finite at face " + std::to_string(f));
  }
  out.value = pairwise_sum(terms) / g.n;
  return out;
}

// ---- CSV I/O ----------------------------------------------------------------

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(std::ofstream& out, const Grid& g, const std::string& label,
                  bool boundary) {
  out << "# dims:";
  if (boundary) out << " boundary";
  out << ' ' << g.n;
  for (int k = 0; k < g.n; ++k) out << ' ' << g.cells[k];
  out << "\n# extents:";
  for (int k = 0; k < g.n; ++k) out << ' ' << fmt17(g.lo[k]) << ' ' << fmt17(g.hi[k]);
  out << "\n# label: " << label << "\n";
}

struct Header {
  Grid grid;
  std::string label;
  bool boundary = false;
};

Header read_header(std::ifstream& in, const std::string& path) {
  std::string l1, l2, l3;
  if (!std::getline(in, l1) || !std::getline(in, l2) || !std::getline(in, l3))
    throw std::runtime_error("field csv: truncated header in " + path);
  if (l1.rfind("# dims:", 0) != 0 || l2.rfind("# extents:", 0) != 0 ||
      l3.rfind("# label:", 0) != 0)
    throw std::runtime_error("field csv: malformed header in " + path);

  Header h;
  std::istringstream d(l1.substr(7));
  std::string tok;
  d >> tok;
  if (tok == "boundary") {
    h.boundary = true;
    d >> tok;
  }
  const int n = std::stoi(tok);
  std::array<long, 3> cells{1, 1, 1};
  for (int k = 0; k < n; ++k)
    if (!(d >> cells[k])) throw std::runtime_error("field csv: bad dims line in " + path);

  std::istringstream e(l2.substr(10));
  std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};
  for (int k = 0; k < n; ++k)
    if (!(e >> lo[k] >> hi[k])) throw std::runtime_error("field csv: bad extents line in " + path);

  h.grid = Grid::make(n, cells, lo, hi);
  h.label = l3.size() > 9 ? l3.substr(9) : "";
  return h;
}

}  // namespace

void write_field_csv(const std::string& path, const SpatialField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("field csv: cannot open " + path + " for writing");
  const Grid& g = f.grid;
  write_header(out, g, f.label, false);
  for (long i2 = 0; i2 < g.cells[2]; ++i2)
    for (long i1 = 0; i1 < g.cells[1]; ++i1) {
      for (long i0 = 0; i0 < g.cells[0]; ++i0) {
        if (i0) out << ',';
        out << fmt17(f.values[g.cell_index({i0, i1, i2})]);
      }
      out << '\n';
    }
}

SpatialField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("field csv: cannot open " + path);
  const Header h = read_header(in, path);
  if (h.boundary) throw std::runtime_error("field csv: " + path + " holds a boundary field");
  SpatialField f;
  f.grid = h.grid;
  f.label = h.label;
  f.values.resize(h.grid.cell_count());
  const Grid& g = h.grid;
  std::string line;
  for (long i2 = 0; i2 < g.cells[2]; ++i2)
    for (long i1 = 0; i1 < g.cells[1]; ++i1) {
      if (!std::getline(in, line))
        throw std::runtime_error("field csv: missing row in " + path);
      std::istringstream row(line);
      std::string cellTok;
      for (long i0 = 0; i0 < g.cells[0]; ++i0) {
        if (!std::getline(row, cellTok, ','))
          throw std::runtime_error("field csv: short row in " + path);
        f.values[g.cell_index({i0, i1, i2})] = std::stod(cellTok);
      }
    }
  return f;
}

void write_boundary_csv(const std::string& path, const BoundaryField& f) {
  if (f.times.size() != 1)
    throw std::runtime_error("boundary csv: only static fields are serialized");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("boundary csv: cannot open " + path + " for writing");
  write_header(out, f.grid, f.label, true);
  for (double v : f.samples[0]) out << fmt17(v) << '\n';
}

BoundaryField read_boundary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("boundary csv: cannot open " + path);
  const Header h = read_header(in, path);
  if (!h.boundary) throw std::runtime_error("boundary csv: " + path + " holds a cell field");
  BoundaryField f;
  f.grid = h.grid;
  f.label = h.label;
  f.times = {0.0};
  const long nb = FaceSet(h.grid).boundary_count();
  f.samples.resize(1);
  f.samples[0].resize(nb);
  std::string line;
  for (long b = 0; b < nb; ++b) {
    if (!std::getline(in, line)) throw std::runtime_error("boundary csv: short file " + path);
    f.samples[0][b] = std::stod(line);
  }
  return f;
}

}  // namespace forch
