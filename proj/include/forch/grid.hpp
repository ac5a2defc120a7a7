#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "forch/numerics.hpp"

namespace forch {

/// Uniform tensor-product grid on a box in 1, 2, or 3 dimensions.
///
/// Cells are addressed by a linear index with the first axis fastest:
///   c = i0 + cells[0]*(i1 + cells[1]*i2).
/// Unused axes have one cell and unit extent so volume factors stay trivial.
struct Grid {
  int n = 0;
  std::array<long, 3> cells{1, 1, 1};
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{1, 1, 1};
  std::array<double, 3> h{1, 1, 1};

  static Grid make(int n, std::array<long, 3> cells,
                   std::array<double, 3> lo, std::array<double, 3> hi);

  long cell_count() const { return cells[0] * cells[1] * cells[2]; }
  double cell_volume() const { return h[0] * h[1] * h[2]; }

  std::array<long, 3> cell_coords(long c) const {
    return {c % cells[0], (c / cells[0]) % cells[1], c / (cells[0] * cells[1])};
  }
  long cell_index(std::array<long, 3> i) const {
    return i[0] + cells[0] * (i[1] + cells[1] * i[2]);
  }
  std::array<double, 3> cell_center(long c) const {
    const auto i = cell_coords(c);
    return {lo[0] + (i[0] + 0.5) * h[0], lo[1] + (i[1] + 0.5) * h[1],
            lo[2] + (i[2] + 0.5) * h[2]};
  }

  bool same_layout(const Grid& o) const {
    return n == o.n && cells == o.cells && lo == o.lo && hi == o.hi;
  }
};

/// Enumeration of the axis-normal faces of a Grid.
///
/// Faces are grouped by axis. Within axis k they are ordered plane-major:
/// plane j in 0..cells[k], then the transverse cell index (remaining axes in
/// ascending order, lowest axis fastest). Boundary faces get a separate
/// canonical ordinal: axis ascending, low side before high side, transverse
/// ascending. That ordinal is the storage order of BoundaryField.
struct FaceSet {
  Grid grid;
  std::array<long, 3> trans_count{1, 1, 1};  // faces per plane, by axis
  std::array<long, 3> axis_offset{0, 0, 0};  // first global id, by axis
  long total = 0;

  explicit FaceSet(const Grid& g);

  long face_count() const { return total; }
  int axis_of(long f) const;
  long plane_of(long f) const;
  long transverse_of(long f) const;
  bool is_boundary(long f) const;

  /// Cell on the low side of the face, -1 outside the domain.
  long cell_lo(long f) const;
  /// Cell on the high side of the face, -1 outside the domain.
  long cell_hi(long f) const;

  double area(int axis) const;
  std::array<double, 3> center(long f) const;

  long boundary_count() const;
  long boundary_face(long ordinal) const;
  /// Canonical boundary ordinal of a face, -1 for interior faces.
  long boundary_ordinal(long f) const;
  /// Outward normal axis sign of a boundary face: -1 on the low side, +1 high.
  int boundary_sign(long f) const;
  /// The single cell adjacent to a boundary face.
  long boundary_cell(long f) const;
};

/// One scalar value per cell.
struct SpatialField {
  Grid grid;
  std::vector<double> values;
  std::string label;

  static SpatialField constant(const Grid& g, double v, std::string label = "");
  static SpatialField from(const Grid& g,
                           const std::function<double(std::array<double, 3>)>& f,
                           std::string label = "");

  double& operator[](long c) { return values[c]; }
  double operator[](long c) const { return values[c]; }
};

/// One scalar value per boundary face, optionally sampled in time.
/// A single sample means the field is static; otherwise values interpolate
/// linearly between samples and clamp outside the sampled range.
struct BoundaryField {
  Grid grid;
  std::vector<double> times;                 // strictly increasing, size >= 1
  std::vector<std::vector<double>> samples;  // samples[i][ordinal]
  std::string label;

  static BoundaryField constant(const Grid& g, double v, std::string label = "");
  static BoundaryField from(
      const Grid& g, const std::vector<double>& times,
      const std::function<double(std::array<double, 3>, double)>& f,
      std::string label = "");

  double value(long ordinal, double t) const;
};

// ---- quadrature -------------------------------------------------------------

/// Midpoint-rule volume integral of a per-cell expression.
/// Throws if the integrand is not finite, naming the cell.
double integrate_volume(const Grid& g, const std::function<double(long)>& cell_expr);
double integrate_volume(const SpatialField& f);

/// Volume integral in log space: cell_log_expr returns log of a nonnegative
/// integrand (-inf for zero). Immune to overflow of the pointwise values.
Mag integrate_volume_log(const Grid& g, const std::function<double(long)>& cell_log_expr);

/// Midpoint-rule boundary integral of a per-boundary-face expression.
double integrate_boundary(const Grid& g, const std::function<double(long)>& face_expr);
double integrate_boundary(const BoundaryField& f, double t);
/// Boundary integral of a cell field, using adjacent-cell values as the trace.
double integrate_boundary_trace(const SpatialField& u,
                                const std::function<double(double, long)>& transform);

/// (integral of phi * |u|^p)^(1/p).
double weighted_lp_norm(const SpatialField& u, const SpatialField& phi, double p);

// ---- discrete derivatives ---------------------------------------------------

/// Per-face gradient vectors. The normal component is the two-point difference
/// across the face (one-sided at the boundary); tangential components average
/// the parallel differences available in the two adjacent cells.
std::vector<std::array<double, 3>> discrete_gradient(const SpatialField& u,
                                                     const FaceSet& faces);

struct GradEnergy {
  double value = 0;
  /// True when alpha < s forced a floor on a vanishing |u| factor, meaning the
  /// integrand was evaluated at the degenerate limit.
  bool degenerate = false;
};

/// integral over U of |u|^(alpha-s) |grad u|^p W, assembled from face values.
/// Face measure is face area times h_axis (halved on the boundary) over n, so
/// constant integrands reproduce the box volume exactly.
GradEnergy grad_energy(const SpatialField& u, const SpatialField& W, double alpha,
                       double s, double p, const FaceSet& faces);

// ---- CSV I/O ----------------------------------------------------------------

/// Cell-field CSV: three header lines (dims, extents, label), then one
/// comma-separated row of cells[0] values per (i1, i2) pair, i1 fastest.
void write_field_csv(const std::string& path, const SpatialField& f);
SpatialField read_field_csv(const std::string& path);

/// Boundary-field CSV: same header shape with a "boundary" marker, then one
/// value per line in canonical boundary order (static fields only).
void write_boundary_csv(const std::string& path, const BoundaryField& f);
BoundaryField read_boundary_csv(const std::string& path);

}  // namespace forch
