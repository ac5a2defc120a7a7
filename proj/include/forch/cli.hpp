#pragma once

#include <string>
#include <vector>

#include "forch/bounds.hpp"
#include "forch/config.hpp"

namespace forch {

/// Public exit-code taxonomy. 1 covers everything wrong with the inputs
/// (parse errors, unknown keys, inadmissible parameters), 2 a solver that
/// failed to integrate, 3 a verification or certification that did not hold.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerify = 3;

/// Everything the bounds pipeline produces for one configuration, kept
/// together so solve/bounds/verify share one code path.
struct BoundsPipeline {
  ExponentBook book;
  WeightFields weights;
  EmbeddingConstants consts;
  DataIntegrals integrals;
  ProofConstants proof;
  BoundReport report;   // completed (threshold, curve, sup bound)
  double T = 0;         // resolved horizon
  double eps = 0;       // resolved interior offset
};

/// Builds the exponent book from a run configuration, deriving any [bounds]
/// knob left unset: r1 = admissible-window midpoint, r = max(1,
/// lambda(3-2a)-1+0.1), kappa_tilde = window midpoint, alpha0 = 1.25x the
/// smallest admissible value (monotone search). Throws AdmissibilityError or
/// ConfigError.
ExponentBook book_from_config(const RunConfig& rc);

/// Runs book -> weights -> constants -> integrals -> Zstar -> threshold ->
/// sup bound, resolving "threshold:<frac>" horizons along the way.
BoundsPipeline run_bounds_pipeline(const RunConfig& rc);

/// Command entry point used by main(); argv follows the usual conventions.
int run_cli(int argc, const char* const* argv);

}  // namespace forch
