#pragma once

#include <stdexcept>
#include <string>

namespace pxpdyn {

// Base class for all engine errors. Subtypes distinguish recoverable
// configuration mistakes from numeric events hit during evaluation.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid ModelParams / state (length mismatch, non-half-integer spin, ...).
struct validation_error : error {
  using error::error;
};

// Some theta_i too close to {0, pi}: 1/sin(theta), 1/(1-cos(theta)) or the
// closed-form Gram inverse is singular there.
struct pole_error : error {
  using error::error;
};

// Dominant transfer eigenvalue not unique (all theta_i = pi): the manifold
// parametrization degenerates, |lambda_2| = 1.
struct degenerate_error : error {
  using error::error;
};

// The geometric resummation denominator 1 - prod_m ctilde_m vanished.
struct resonance_error : error {
  using error::error;
};

// Iterative environment solve or series evaluation failed to converge.
struct convergence_error : error {
  using error::error;
};

// A J-specialized entry point was called with the wrong spin.
struct wrong_spin_error : error {
  using error::error;
};

// CLI / config-file problems (maps to exit code 2 in the driver).
struct config_error : error {
  using error::error;
};

struct io_error : error {
  using error::error;
};

}  // namespace pxpdyn
