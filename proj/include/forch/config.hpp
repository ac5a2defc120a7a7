#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forch/inequality.hpp"
#include "forch/solver.hpp"

namespace forch {

/// Thrown for any defect in a run configuration: parse errors, unknown keys,
/// malformed values, or inconsistent combinations. The message names the
/// offending key (and line where available). Maps to process exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Layered key = value text with bracketed [section] headers, '#' comments,
/// and insertion order preserved so a parse -> serialize -> parse round trip
/// is the identity on structure.
struct RawConfig {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  std::vector<Section> sections;

  bool has(const std::string& section, const std::string& key) const;
  const std::string* find(const std::string& section, const std::string& key) const;

  bool operator==(const RawConfig& o) const;
};

RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::string& path);

/// Canonical text form: "[section]" headers and "key = value" lines in
/// stored order, one blank line between sections. Hash input and round-trip
/// representative.
std::string serialize_config(const RawConfig& cfg);

/// FNV-1a, 64 bit; the config hash stamped on every output is the hash of
/// the canonical serialization.
std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash_hex(const RawConfig& cfg);

/// Renders a double with 17 significant digits (round-trip exact).
std::string format_g17(double v);

// ---- field specs -------------------------------------------------------------

/// A field spec is one of
///   constant:<v>
///   csv:<path>
///   preset:one | preset:linear_x | preset:gauss_bump(cx,cy,sigma,amp,base)
///     | preset:checker(v0,v1)
/// gauss_bump measures distance in the first min(n,2) coordinates; checker
/// alternates v0/v1 by cell-index parity.
SpatialField make_spatial_field(const Grid& g, const std::string& spec,
                                const std::string& key, const std::string& label);

/// Boundary fields accept the same grammar, evaluated at boundary face
/// centers (csv: uses the boundary CSV layout). Specs are static in time.
BoundaryField make_boundary_field(const Grid& g, const std::string& spec,
                                  const std::string& key, const std::string& label);

// ---- typed run configuration ---------------------------------------------------

/// Fully validated run configuration. Everything a subcommand needs is built
/// here so that the CLI layer is pure dispatch. Unknown sections or keys are
/// ConfigErrors naming the offender.
struct RunConfig {
  RawConfig raw;
  std::string hash;
  std::uint64_t seed = 42;

  Grid grid;
  Scenario scenario;  // law, phi, lambda, z, psi, u0; T_final resolved below

  /// T_final is either an absolute time or "threshold:<frac>", a fraction of
  /// the certified threshold computed by the bounds pipeline.
  double T_value = 1.0;
  bool T_is_threshold_fraction = false;

  // [bounds]
  double r1 = 0.0;  // 0 = derive the window midpoint
  double r = -1.0;  // <0 = default max(1, lambda(3-2a)-1+0.1)
  double alpha0 = 0.0;  // 0 = 1.25x the smallest admissible value
  double kappa_tilde = 0.0;  // 0 = midpoint of (1, sqrt(1+r_star/2))
  std::optional<std::array<double, 5>> p_overrides;
  double epsilon = -1.0;  // <0 = 0.25*min(1, T)
  bool optimize = false;
  std::optional<double> beta;  // extra unweighted curve exponent
  std::optional<EmbeddingConstants> user_constants;
  double safety_factor = 2.0;

  SolverConfig solver;
  bool dt_initial_auto = true, dt_min_auto = true, dt_max_auto = true;
  std::vector<double> track_alphas{2.0};

  TestFunctionFamily family;
  bool sabotage = false;
  /// Harness parameter tuples (p, r1, s, r, alpha, epsilon); empty = built-in
  /// admissible default grid.
  std::vector<std::array<double, 6>> param_tuples;

  std::string out_dir = "out";
  int snapshot_cadence_out = 0;  // 0 = solver cadence
  bool write_fields = false;
};

RunConfig build_run_config(const RawConfig& raw);

}  // namespace forch
