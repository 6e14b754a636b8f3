#pragma once

// Regularized traces: sharp cut-off traces Tr(P_N A P_N), heat-regularized
// traces Tr(exp(-eps H0) A) with finite-part extraction, zeta values on the
// lambda_j = j track, trace defects of commutators, and the heat-regularized
// real-time amplitude Tr(exp(-eps H0) U(t, s)).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cutofflab/core.hpp"
#include "cutofflab/fit.hpp"
#include "cutofflab/hamiltonian.hpp"
#include "cutofflab/propagator.hpp"
#include "cutofflab/spectral_model.hpp"

namespace cutofflab {

// ---------------------------------------------------------------------------
// Banded (not necessarily Hermitian) operators.

inline OperatorTerm identity_operator() {
  return {"identity", [](index_t j, index_t k) -> cplx { return j == k ? cplx(1.0) : cplx{}; }, 0};
}

inline OperatorTerm zero_operator() {
  return {"zero", [](index_t, index_t) -> cplx { return {}; }, 0};
}

/// Unilateral shift S e_j = e_{j+1}.
inline OperatorTerm unilateral_shift() {
  return {"shift", [](index_t j, index_t k) -> cplx { return j == k + 1 ? cplx(1.0) : cplx{}; }, 1};
}

inline OperatorTerm shift_adjoint() {
  return {"shift_adjoint", [](index_t j, index_t k) -> cplx { return k == j + 1 ? cplx(1.0) : cplx{}; }, 1};
}

inline OperatorTerm diagonal_operator(std::string name, std::function<cplx(index_t)> diag) {
  return {std::move(name), [d = std::move(diag)](index_t j, index_t k) -> cplx { return j == k ? d(j) : cplx{}; }, 0};
}

/// alpha A + beta B
inline OperatorTerm linear_combination(cplx alpha, const OperatorTerm& a, cplx beta, const OperatorTerm& b) {
  return {a.name + "+" + b.name,
          [alpha, beta, ea = a.element, eb = b.element](index_t j, index_t k) {
            return alpha * ea(j, k) + beta * eb(j, k);
          },
          std::max(a.bandwidth, b.bandwidth)};
}

/// (A B)_{jk} over the full index range k >= 1.
inline cplx product_element(const OperatorTerm& a, const OperatorTerm& b, index_t j, index_t k) {
  cplx acc{};
  const index_t lo = std::max<index_t>({1, j - a.bandwidth, k - b.bandwidth});
  const index_t hi = std::min(j + a.bandwidth, k + b.bandwidth);
  for (index_t m = lo; m <= hi; ++m) acc += a.element(j, m) * b.element(m, k);
  return acc;
}

// ---------------------------------------------------------------------------

/// Tr_N(A) = sum_{j <= d_N} A_jj
inline cplx cutoff_trace(const CutoffSpace& space, const OperatorTerm& a) {
  cplx acc{};
  for (index_t j = 1; j <= space.dim; ++j) acc += a.element(j, j);
  return acc;
}

inline cplx cutoff_trace(const CutoffSpace& space, const Matrix& a) {
  if (a.rows() != static_cast<Index>(space.dim) || a.cols() != static_cast<Index>(space.dim))
    throw error(errc::insufficient_window, "matrix does not cover the cut-off space");
  return a.trace();
}

struct HeatTrace {
  cplx value{};
  index_t terms = 0;  // truncation index
  double tail_bound = 0.0;
};

struct HeatTraceOptions {
  double tail_tol = 1e-14;
  // Guaranteed growth g with lambda_{j+i} >= lambda_j + g (i - 1); defaults
  // are known for the built-in models, explicit generators must declare it.
  std::optional<double> growth;
  index_t max_terms = 100'000'000;
};

inline double default_growth(const SpectralModel& model) {
  switch (model.kind()) {
    case ModelKind::fourier_circle: return 1.0;
    case ModelKind::hermite_line: return 2.0;
    case ModelKind::explicit_diagonal: return model.unit_linear() ? 1.0 : 0.0;
  }
  return 0.0;
}

/// Tr(exp(-eps H0) A) = sum_j exp(-eps lambda_j) A_jj, truncated once the
/// geometric tail bound drops below tail_tol. |A_jj| is assumed bounded by
/// its running maximum.
inline HeatTrace heat_trace(const SpectralModel& model, const std::optional<OperatorTerm>& a, double eps,
                            const HeatTraceOptions& options = {}) {
  if (!(eps > 0.0)) throw error(errc::invalid_parameters, "heat_trace needs eps > 0");
  const double g = options.growth.value_or(default_growth(model));
  if (!(g > 0.0)) throw error(errc::tail_unreachable, "no linear eigenvalue growth declared for this model");
  const double geometric = std::exp(eps * g) / (-std::expm1(-eps * g));
  HeatTrace out;
  double sup_diag = 0.0;
  for (index_t j = 1;; ++j) {
    const cplx ajj = a ? a->element(j, j) : cplx(1.0);
    sup_diag = std::max(sup_diag, std::abs(ajj));
    out.value += std::exp(-eps * model.eigenvalue(j)) * ajj;
    out.terms = j;
    out.tail_bound = std::exp(-eps * model.eigenvalue(j + 1)) * geometric * sup_diag;
    if (out.tail_bound < options.tail_tol && (sup_diag > 0.0 || j >= 64)) break;
    if (j >= options.max_terms) throw error(errc::tail_unreachable, "heat trace tail did not fall below tolerance");
  }
  return out;
}

/// Geometric grid eps_0, eps_0 / 2, ... with `points` entries.
inline std::vector<double> geometric_grid(double first, int points, double ratio = 0.5) {
  std::vector<double> g;
  double e = first;
  for (int i = 0; i < points; ++i, e *= ratio) g.push_back(e);
  return g;
}

struct TraceFit {
  std::vector<double> grid;
  std::vector<cplx> values;
  std::vector<double> betas;  // eps^{-beta} terms
  bool include_log = false;
  int correction_order = 0;  // eps^1 .. eps^K nuisance terms
  std::vector<cplx> singular;     // a_j for each beta
  cplx log_coefficient{};         // a_log
  cplx finite_part{};             // a_0
  std::vector<cplx> corrections;  // coefficients of eps^1 .. eps^K
  double residual = 0.0;
  double condition = 0.0;

  cplx model_value(double eps) const {
    cplx v = finite_part;
    for (std::size_t i = 0; i < betas.size(); ++i) v += singular[i] * std::pow(eps, -betas[i]);
    if (include_log) v += log_coefficient * std::log(eps);
    for (std::size_t k = 0; k < corrections.size(); ++k) v += corrections[k] * std::pow(eps, double(k + 1));
    return v;
  }
};

/// Least-squares fit of values ~ sum_j a_j eps^{-beta_j} + a_log log eps + a_0
/// + sum_{k=1}^K c_k eps^k. The positive powers absorb the regular part of
/// the expansion so that a_0 is not biased by it.
inline TraceFit fit_finite_part(const std::vector<double>& grid, const std::vector<cplx>& values,
                                const std::vector<double>& betas, bool include_log, int correction_order = 1) {
  if (grid.size() != values.size()) throw error(errc::invalid_parameters, "grid and values differ in length");
  if (correction_order < 0) throw error(errc::invalid_parameters, "correction order must be >= 0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw error(errc::invalid_parameters, "regularization parameters must be positive");
    if (i > 0 && !(grid[i] < grid[i - 1])) throw error(errc::invalid_parameters, "grid must decrease strictly");
  }
  for (double b : betas)
    if (!(b > 0.0)) throw error(errc::invalid_parameters, "declared exponents must be positive");
  const std::size_t basis = betas.size() + (include_log ? 1 : 0) + 1 + static_cast<std::size_t>(correction_order);
  if (grid.size() < basis + 2)
    throw error(errc::invalid_parameters, "need at least " + std::to_string(basis + 2) + " grid points");

  Eigen::MatrixXd design(static_cast<Index>(grid.size()), static_cast<Index>(basis));
  Eigen::VectorXcd y(static_cast<Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double e = grid[i];
    Index c = 0;
    const auto r = static_cast<Index>(i);
    for (double b : betas) design(r, c++) = std::pow(e, -b);
    if (include_log) design(r, c++) = std::log(e);
    design(r, c++) = 1.0;
    for (int k = 1; k <= correction_order; ++k) design(r, c++) = std::pow(e, double(k));
    y(r) = values[i];
  }
  // Column scaling keeps the reported condition number about the basis, not units.
  Eigen::VectorXd scale = design.colwise().norm().transpose();
  for (Index c = 0; c < design.cols(); ++c) design.col(c) /= scale(c);
  const LinearFit lf = least_squares(design, y);
  if (lf.condition > 1e12) throw error(errc::ill_conditioned, "design matrix condition number " + fmt(lf.condition));

  TraceFit fit;
  fit.grid = grid;
  fit.values = values;
  fit.betas = betas;
  fit.include_log = include_log;
  fit.correction_order = correction_order;
  fit.residual = lf.residual;
  fit.condition = lf.condition;
  Index c = 0;
  for (std::size_t i = 0; i < betas.size(); ++i, ++c) fit.singular.push_back(lf.coefficients(c) / scale(c));
  if (include_log) {
    fit.log_coefficient = lf.coefficients(c) / scale(c);
    ++c;
  }
  fit.finite_part = lf.coefficients(c) / scale(c);
  ++c;
  for (int k = 0; k < correction_order; ++k, ++c) fit.corrections.push_back(lf.coefficients(c) / scale(c));
  return fit;
}

/// Diagonal A = diag(lambda_j^{-power}); power 0 is the identity.
struct DiagonalPower {
  double power = 0.0;
};

/// Tr(A H0^{-z}) on the lambda_j = j track, i.e. the Riemann zeta value at
/// z + power, by Euler-Maclaurin summation with `order` Bernoulli corrections.
/// The same formula continues the Dirichlet series to Re(z + power) <= 1.
inline cplx zeta_value(const SpectralModel& model, DiagonalPower a, cplx z, int order = 4) {
  if (!model.unit_linear())
    throw error(errc::unsupported, "zeta continuation is only available for lambda_j = j");
  if (order < 1 || order > 6) throw error(errc::invalid_parameters, "Euler-Maclaurin order must be in 1..6");
  const cplx s = z + a.power;
  if (std::abs(s - 1.0) < 1e-14) throw error(errc::unsupported, "zeta has a pole at z + power = 1");

  static constexpr double bernoulli[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0};
  const auto cutoff = static_cast<index_t>(10 + 2 * std::ceil(std::abs(s)));
  const double k = static_cast<double>(cutoff);

  cplx sum{};
  for (index_t n = cutoff - 1; n >= 1; --n) sum += std::pow(static_cast<double>(n), -s);
  sum += std::pow(k, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(k, -s);
  // B_{2m}/(2m)! * s (s+1) ... (s+2m-2) * K^{-s-2m+1}
  cplx rising = s;
  double factorial = 2.0;
  for (int m = 1; m <= order; ++m) {
    sum += bernoulli[m - 1] / factorial * rising * std::pow(k, -s - double(2 * m - 1));
    rising *= (s + double(2 * m - 1)) * (s + double(2 * m));
    factorial *= double(2 * m + 1) * double(2 * m + 2);
  }
  return sum;
}

struct TraceDefect {
  cplx cutoff_of_commutator{};     // Tr(P_N [A, B] P_N)
  cplx commutator_of_cutoffs{};    // Tr([P_N A P_N, P_N B P_N]), zero up to rounding
};

/// Contrasts the cut-off trace of a commutator with the trace of the
/// commutator of cut-offs. `available_up_to` bounds the indices on which the
/// operators' elements are known.
inline TraceDefect trace_defect(const CutoffSpace& space, const OperatorTerm& a, const OperatorTerm& b,
                                std::optional<index_t> available_up_to = std::nullopt) {
  if (available_up_to && space.dim + a.bandwidth + b.bandwidth > *available_up_to)
    throw error(errc::insufficient_window, "operator elements needed beyond the available window");
  TraceDefect out;
  for (index_t j = 1; j <= space.dim; ++j)
    out.cutoff_of_commutator += product_element(a, b, j, j) - product_element(b, a, j, j);
  if (space.dim > 0) {
    const Matrix pa = restrict_term(a, space);
    const Matrix pb = restrict_term(b, space);
    out.commutator_of_cutoffs = (pa * pb - pb * pa).trace();
  }
  return out;
}

struct AmplitudeOptions {
  double tol = 1e-10;
  double s = 0.0;
  int correction_order = 1;
  bool include_log = false;
  HeatTraceOptions heat{};
};

struct AmplitudeResult {
  TraceFit fit;
  std::vector<cplx> values;        // Z_eps for each grid point
  std::vector<double> bias_bounds; // sum_{lambda_j > N_ref} exp(-eps lambda_j)
  std::vector<double> heat_values; // Z_eps(0) = Tr exp(-eps H0)
  index_t dim = 0;
};

/// Z_eps(t, s) = Tr(exp(-eps H0) U(t, s)) with U replaced by U_{N_ref}; the
/// omitted modes contribute at most sum_{lambda_j > N_ref} exp(-eps lambda_j).
inline AmplitudeResult regularized_amplitude(const HamiltonianFamily& family, double n_ref, double t,
                                             const std::vector<double>& eps_grid, const std::vector<double>& betas,
                                             const AmplitudeOptions& options = {}) {
  const SpectralModel& model = *family.model;
  const CutoffSpace space = cutoff_space(family.model, n_ref);
  if (space.empty()) throw error(errc::empty_space, "regularized_amplitude on an empty cut-off space");
  if (eps_grid.empty()) throw error(errc::invalid_parameters, "empty regularization grid");
  const double eps_min = *std::min_element(eps_grid.begin(), eps_grid.end());

  const double boundary = std::exp(-eps_min * model.eigenvalue(space.dim + 1));
  const double leading = heat_trace(model, std::nullopt, eps_min, options.heat).value.real();
  if (!(boundary < 1e-3 * leading))
    throw error(errc::truncation_bias, "N_ref too small: boundary weight " + fmt(boundary) +
                                           " vs leading term " + fmt(leading));

  Vector diag;
  if (t == options.s) {
    diag = Vector::Ones(space.dim);
  } else {
    diag = cutoff_propagator(family, space, std::min(options.s, t), std::max(options.s, t), options.tol).matrix.diagonal();
    if (t < options.s) diag = diag.conjugate();
  }

  AmplitudeResult out;
  out.dim = space.dim;
  for (double eps : eps_grid) {
    cplx z{};
    for (index_t j = 1; j <= space.dim; ++j) z += std::exp(-eps * model.eigenvalue(j)) * diag(j - 1);
    const HeatTrace full = heat_trace(model, std::nullopt, eps, options.heat);
    double kept = 0.0;
    for (index_t j = 1; j <= space.dim; ++j) kept += std::exp(-eps * model.eigenvalue(j));
    out.values.push_back(z);
    out.heat_values.push_back(full.value.real());
    out.bias_bounds.push_back(std::max(0.0, full.value.real() - kept) + full.tail_bound);
  }
  out.fit = fit_finite_part(eps_grid, out.values, betas, options.include_log, options.correction_order);
  return out;
}

}  // namespace cutofflab
