#pragma once

// Exactly solvable model instances used by the experiments and tests.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cutofflab/hamiltonian.hpp"
#include "cutofflab/spectral_model.hpp"

namespace cutofflab::models {

/// H(t) = -d^2/dx^2 + a sin(2 pi t) cos x on the circle, period 1, mu = 2.
inline HamiltonianFamily driven_circle(double amplitude = 1.0, const std::string& drive = "sin_2pi") {
  auto model = build_model(ModelKind::fourier_circle);
  return assemble_family(model, {{"laplacian", make_coefficient("const", 1.0)},
                                 {"cos_x", make_coefficient(drive, amplitude)}},
                         1.0, 2.0);
}

/// Free circle H(t) = -d^2/dx^2 (V = 0 control).
inline HamiltonianFamily free_circle() {
  auto model = build_model(ModelKind::fourier_circle);
  return assemble_family(model, {{"laplacian", make_coefficient("const", 1.0)}}, 1.0, 2.0);
}

/// H(t) = (H0 - 1) + f(t) x on the line.
inline HamiltonianFamily driven_oscillator(CoefficientFn f, std::optional<double> period = 1.0) {
  auto model = build_model(ModelKind::hermite_line);
  return assemble_family(model, {{"oscillator", make_coefficient("const", 1.0)}, {"position", std::move(f)}}, period,
                         1.0);
}

/// lambda_j = j with Pauli matrices on modes 1, 2.
inline ModelPtr two_level_model() {
  ModelParams params;
  params.unit_linear = true;
  params.terms.push_back(sparse_term("sigma_x", {{1, 2, 1.0}, {2, 1, 1.0}}));
  params.terms.push_back(sparse_term("sigma_y", {{1, 2, cplx(0.0, -1.0)}, {2, 1, cplx(0.0, 1.0)}}));
  params.terms.push_back(sparse_term("sigma_z", {{1, 1, 1.0}, {2, 2, -1.0}}));
  return build_model(ModelKind::explicit_diagonal, std::move(params));
}

/// Cut-off holding exactly the two spin modes.
inline constexpr double two_level_cutoff = 2.5;

/// H(t) = (omega/2) sigma_z + g c(t) sigma_x with c = sin(2 pi t) or cos(2 pi t).
inline HamiltonianFamily spin_model(double omega = 1.0, double g = 1.0, const std::string& drive = "sin_2pi") {
  return assemble_family(two_level_model(), {{"sigma_z", make_coefficient("const", omega / 2.0)},
                                             {"sigma_x", make_coefficient(drive, g)}},
                         1.0, 0.0);
}

/// H(t) = (1 + t) D with D = h0_diag on lambda_j = j; commuting, aperiodic.
inline HamiltonianFamily commuting_ramp() {
  ModelParams params;
  params.unit_linear = true;
  auto model = build_model(ModelKind::explicit_diagonal, std::move(params));
  return assemble_family(model, {{"h0_diag", make_coefficient("const", 1.0)},
                                 {"h0_diag", make_coefficient("ramp", 1.0)}});
}

}  // namespace cutofflab::models
