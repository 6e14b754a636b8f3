#pragma once

// Cut-off propagators U_N(t, s) of i d/dt U = H_N(t) U.
//
// time_sliced_propagator builds the left-endpoint product
//   U_{N,M}(t, s) = exp(-i dt_{M-1} H_N(t_{M-1})) ... exp(-i dt_0 H_N(t_0)).
// cutoff_propagator returns its limit U_N by dyadic refinement. The limit
// does not depend on the slicing rule, so by default the refinement uses a
// fourth-order Magnus product (every factor still exp(-i h G) with G
// Hermitian), which reaches tight tolerances with a few thousand slices.
//
// The exact flow U(t, s) is represented by a large cut-off N_ref with a
// doubling self-check (the "Galerkin oracle").

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
#include "cutofflab/linalg.hpp"
#include "cutofflab/parallel.hpp"
#include "cutofflab/quadrature.hpp"
#include "cutofflab/spectral_model.hpp"

namespace cutofflab {

struct Partition {
  std::vector<double> nodes;  // s = t_0 < ... < t_M = t

  explicit Partition(std::vector<double> n) : nodes(std::move(n)) {
    if (nodes.size() < 2) throw error(errc::invalid_parameters, "partition needs at least one slice");
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1])) throw error(errc::invalid_parameters, "partition nodes must increase strictly");
  }

  static Partition uniform(double s, double t, index_t slices) {
    if (slices < 1) throw error(errc::invalid_parameters, "partition needs at least one slice");
    std::vector<double> n(static_cast<std::size_t>(slices) + 1);
    for (index_t j = 0; j <= slices; ++j) n[static_cast<std::size_t>(j)] = s + (t - s) * static_cast<double>(j) / slices;
    n.back() = t;
    return Partition(std::move(n));
  }

  index_t slices() const { return static_cast<index_t>(nodes.size()) - 1; }

  double mesh() const {
    double m = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) m = std::max(m, nodes[i] - nodes[i - 1]);
    return m;
  }
};

enum class SliceRule {
  left_endpoint,  // exp(-i dt H_N(t_j)), first order
  magnus4,        // two-point Gauss Magnus step, fourth order
};

inline const char* to_string(SliceRule rule) {
  return rule == SliceRule::left_endpoint ? "left_endpoint" : "magnus4";
}

struct PropagatorMatrix {
  Matrix matrix;
  CutoffSpace space;
  double s = 0.0;
  double t = 0.0;
  SliceRule rule = SliceRule::left_endpoint;
  index_t slices = 0;
  double unitarity_defect = 0.0;
  // Spectral-norm difference to the previous dyadic level (0 for a single product).
  double refinement_delta = 0.0;
};

namespace detail {

/// Hermitian generator G of one fourth-order Magnus step over [t, t + h]:
/// exp(-i h G) with G = (H1 + H2)/2 - i (sqrt(3)/12) h [H2, H1].
inline Matrix magnus4_generator(const CutoffHamiltonian& ch, double t, double h) {
  const double offset = std::sqrt(3.0) / 6.0;
  const Matrix h1 = ch.matrix_at(t + (0.5 - offset) * h);
  const Matrix h2 = ch.matrix_at(t + (0.5 + offset) * h);
  Matrix g = 0.5 * (h1 + h2) - cplx(0.0, std::sqrt(3.0) / 12.0 * h) * commutator(h2, h1);
  return symmetrize(g);
}

inline Matrix step_factor(const CutoffHamiltonian& ch, SliceRule rule, double t, double h) {
  if (rule == SliceRule::left_endpoint) return expm_step(ch.matrix_at(t), h);
  return expm_step(magnus4_generator(ch, t, h), h);
}

inline Matrix sliced_product(const CutoffHamiltonian& ch, SliceRule rule, const Partition& partition) {
  Matrix u = Matrix::Identity(ch.dim(), ch.dim());
  for (std::size_t j = 0; j + 1 < partition.nodes.size(); ++j) {
    const double t0 = partition.nodes[j];
    u = step_factor(ch, rule, t0, partition.nodes[j + 1] - t0) * u;
  }
  return u;
}

/// Propagates a dense vector over [a, b] with ceil((b - a)/h) equal steps.
inline Vector propagate_vector(const CutoffHamiltonian& ch, SliceRule rule, double a, double b, double h, Vector v) {
  if (b <= a) return v;
  const auto steps = std::max<index_t>(1, static_cast<index_t>(std::ceil((b - a) / h - 1e-9)));
  const double dt = (b - a) / static_cast<double>(steps);
  for (index_t j = 0; j < steps; ++j) v = step_factor(ch, rule, a + j * dt, dt) * v;
  return v;
}

}  // namespace detail

inline Matrix sliced_product(const HamiltonianFamily& family, const CutoffSpace& space, SliceRule rule,
                             const Partition& partition) {
  return detail::sliced_product(CutoffHamiltonian(family, space), rule, partition);
}

/// U_{N,M}(t, s), the left-endpoint product over the partition.
inline PropagatorMatrix time_sliced_propagator(const HamiltonianFamily& family, const CutoffSpace& space,
                                               const Partition& partition) {
  PropagatorMatrix out;
  out.matrix = sliced_product(family, space, SliceRule::left_endpoint, partition);
  out.space = space;
  out.s = partition.nodes.front();
  out.t = partition.nodes.back();
  out.rule = SliceRule::left_endpoint;
  out.slices = partition.slices();
  out.unitarity_defect = unitarity_defect(out.matrix);
  return out;
}

struct PropagatorOptions {
  SliceRule rule = SliceRule::magnus4;
  index_t initial_slices = 1;
  index_t max_slices = index_t{1} << 20;
};

/// U_N(t, s): uniform slicing refined M -> 2M until successive products
/// differ by less than `tol` in spectral norm.
inline PropagatorMatrix cutoff_propagator(const CutoffHamiltonian& ch, double s, double t, double tol,
                                          const PropagatorOptions& options = {}) {
  if (!(tol > 0.0)) throw error(errc::invalid_parameters, "tolerance must be positive");
  PropagatorMatrix out;
  out.space = ch.space();
  out.s = s;
  out.t = t;
  out.rule = options.rule;
  if (s == t) {
    out.matrix = Matrix::Identity(ch.dim(), ch.dim());
    return out;
  }
  if (t < s) throw error(errc::invalid_parameters, "cutoff_propagator expects s <= t");

  index_t m = std::max<index_t>(1, options.initial_slices);
  Matrix prev = detail::sliced_product(ch, options.rule, Partition::uniform(s, t, m));
  // Two consecutive small deltas guard against a coarse grid aliasing the drive.
  double prev_delta = std::numeric_limits<double>::infinity();
  while (true) {
    if (2 * m > options.max_slices)
      throw error(errc::refinement_limit, "no convergence to tol " + fmt(tol) + " within " +
                                              std::to_string(options.max_slices) + " slices");
    m *= 2;
    Matrix cur = detail::sliced_product(ch, options.rule, Partition::uniform(s, t, m));
    const double delta = spectral_norm(cur - prev);
    if (delta < tol && prev_delta < 64.0 * tol) {
      out.matrix = std::move(cur);
      out.slices = m;
      out.refinement_delta = delta;
      out.unitarity_defect = unitarity_defect(out.matrix);
      return out;
    }
    prev = std::move(cur);
    prev_delta = delta;
  }
}

inline PropagatorMatrix cutoff_propagator(const HamiltonianFamily& family, const CutoffSpace& space, double s,
                                          double t, double tol, const PropagatorOptions& options = {}) {
  return cutoff_propagator(CutoffHamiltonian(family, space), s, t, tol, options);
}

// ---------------------------------------------------------------------------
// Galerkin oracle for the exact flow.

struct ReferenceOptions {
  bool self_check = true;
  PropagatorOptions propagator{};
};

struct ReferenceTrajectory {
  CutoffSpace space;
  std::vector<double> times;
  std::vector<ScaleVector> states;
  index_t slices = 0;  // converged slice count over [s, max(times)]
};

inline void check_reference_support(const ScaleVector& u, double n_ref) {
  for (const auto& [j, v] : u.coeffs) {
    if (v != cplx{} && u.model->eigenvalue(j) > n_ref / 4.0)
      throw error(errc::support_too_close, "vector support reaches lambda = " +
                                               fmt(u.model->eigenvalue(j)) + " > N_ref/4");
  }
}

/// U_{N_ref}(tau, s) P_{N_ref} u at each requested time tau >= s. The step
/// size comes from the converged slicing of [s, max(times)] unless `step`
/// is given (e.g. reused from an earlier convergence run).
inline ReferenceTrajectory reference_trajectory(const HamiltonianFamily& family, double n_ref, double s,
                                                std::vector<double> times, const ScaleVector& u, double tol,
                                                const PropagatorOptions& options = {},
                                                std::optional<double> step = std::nullopt) {
  check_reference_support(u, n_ref);
  ReferenceTrajectory out;
  out.space = cutoff_space(family.model, n_ref);
  const CutoffHamiltonian ch(family, out.space);
  double t_max = s;
  for (double tau : times) {
    if (tau < s) throw error(errc::invalid_parameters, "reference times must be >= s");
    t_max = std::max(t_max, tau);
  }
  out.times = times;
  out.states.resize(times.size());
  if (t_max == s) {
    for (auto& st : out.states) st = project(out.space, u);
    return out;
  }
  double h = 0.0;
  if (step) {
    h = *step;
    out.slices = static_cast<index_t>(std::ceil((t_max - s) / h - 1e-9));
  } else {
    const PropagatorMatrix full = cutoff_propagator(ch, s, t_max, tol, options);
    out.slices = full.slices;
    h = (t_max - s) / static_cast<double>(full.slices);
  }

  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  Vector v = u.dense(out.space);
  double at = s;
  for (std::size_t i : order) {
    const double tau = times[i];
    v = detail::propagate_vector(ch, options.rule, at, tau, h, std::move(v));
    at = tau;
    out.states[i] = ScaleVector::from_dense(out.space, v);
  }
  return out;
}

struct ReferenceSolution {
  ScaleVector state;
  double self_check_delta = 0.0;  // ||result(N_ref) - result(2 N_ref)||, 0 when skipped
  index_t slices = 0;
  CutoffSpace space;
};

/// Oracle for U(t, s) u: U_{N_ref}(t, s) P_{N_ref} u at tolerance tol, with a
/// check that doubling N_ref moves the result by less than 10 tol.
inline ReferenceSolution reference_solution(const HamiltonianFamily& family, double n_ref, double s, double t,
                                            const ScaleVector& u, double tol, const ReferenceOptions& options = {}) {
  check_reference_support(u, n_ref);
  const CutoffSpace space = cutoff_space(family.model, n_ref);
  const PropagatorMatrix prop = cutoff_propagator(family, space, s, t, tol, options.propagator);
  ReferenceSolution out;
  out.space = space;
  out.slices = prop.slices;
  out.state = ScaleVector::from_dense(space, prop.matrix * u.dense(space));
  if (options.self_check) {
    const CutoffSpace doubled = cutoff_space(family.model, 2.0 * n_ref);
    const PropagatorMatrix fine = cutoff_propagator(family, doubled, s, t, tol, options.propagator);
    const ScaleVector check = ScaleVector::from_dense(doubled, fine.matrix * u.dense(doubled));
    out.self_check_delta = (check - out.state).dense(doubled).norm();
    if (!(out.self_check_delta < 10.0 * tol))
      throw error(errc::oracle_self_check, "doubling N_ref changed the reference by " +
                                               fmt(out.self_check_delta));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cut-off error diagnostics.

struct DuhamelResult {
  double error = 0.0;  // ||P_N U(t,s) u - U_N(t,s) P_N u||
  double bound = 0.0;  // int_s^t ||H(tau) (I - P_N) U(tau,s) u|| dtau
  int panels = 0;
};

struct DuhamelOptions {
  double tol = 1e-10;        // propagator tolerance
  double quad_tol = 1e-8;    // panel doubling stops when the bound moves less than this
  int max_panels = 256;
  PropagatorOptions propagator{};
};

/// Compares the cut-off error with the Duhamel integral of the
/// high-energy remainder, using U_{N_ref} as the exact flow.
inline DuhamelResult duhamel_bound(const HamiltonianFamily& family, double cutoff, double n_ref, const ScaleVector& u,
                                   double s, double t, int quad_points = 8, const DuhamelOptions& options = {}) {
  if (!(cutoff < n_ref / 4.0)) throw error(errc::invalid_parameters, "duhamel_bound needs N < N_ref/4");
  const CutoffSpace space = cutoff_space(family.model, cutoff);
  const index_t band = family.bandwidth();

  DuhamelResult out;
  const CutoffSpace ref_space = cutoff_space(family.model, n_ref);
  check_reference_support(u, n_ref);
  const PropagatorMatrix uref = cutoff_propagator(family, ref_space, s, t, options.tol, options.propagator);
  {
    const PropagatorMatrix un = cutoff_propagator(family, space, s, t, options.tol, options.propagator);
    const Vector lhs = (uref.matrix * u.dense(ref_space)).head(space.dim);
    out.error = (lhs - un.matrix * u.dense(space)).norm();
  }
  if (t == s) return out;
  const double step = (t - s) / static_cast<double>(uref.slices);

  const QuadratureRule base = gauss_legendre(quad_points);
  auto integrate = [&](int panels) {
    const QuadratureRule rule = composite(base, s, t, panels);
    const auto ref = reference_trajectory(family, n_ref, s, rule.nodes, u, options.tol, options.propagator, step);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      ScaleVector high = ref.states[i];
      for (auto it = high.coeffs.begin(); it != high.coeffs.end();) {
        it = space.contains(it->first) ? high.coeffs.erase(it) : std::next(it);
      }
      const ScaleVector image = apply_family(family, rule.nodes[i], high, band);
      acc += rule.weights[i] * sobolev_norm(image, 0.0);
    }
    return acc;
  };

  int panels = 1;
  double prev = integrate(panels);
  while (true) {
    if (2 * panels > options.max_panels)
      throw error(errc::quadrature_nonconvergence, "Duhamel quadrature did not settle");
    panels *= 2;
    const double cur = integrate(panels);
    if (std::abs(cur - prev) < options.quad_tol) {
      out.bound = cur;
      out.panels = panels;
      return out;
    }
    prev = cur;
  }
}

/// Best constant C with |<[W^{2r}, H_N(t)] v, v>| <= C ||v||_r^2 on the cut-off
/// space, W = diag(1 + lambda_j), maximized over `grid_points` uniform times
/// in [a, b] (endpoints included).
inline double commutator_constant(const HamiltonianFamily& family, const CutoffSpace& space, double r,
                                  int grid_points, double a, double b) {
  if (!(r >= 0.0)) throw error(errc::invalid_parameters, "commutator_constant needs r >= 0");
  if (grid_points < 2) throw error(errc::invalid_parameters, "grid_points must be >= 2");
  if (space.empty()) throw error(errc::empty_space, "commutator_constant on an empty space");
  if (r == 0.0) return 0.0;
  const RealVector w = scale_weights(space, r);
  const CutoffHamiltonian ch(family, space);
  // W^{-r} [W^{2r}, H] W^{-r} has entries H_jk (w_j / w_k - w_k / w_j).
  Eigen::MatrixXd factor(w.size(), w.size());
  for (Index j = 0; j < w.size(); ++j)
    for (Index k = 0; k < w.size(); ++k) factor(j, k) = w(j) / w(k) - w(k) / w(j);
  double best = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double t = a + (b - a) * i / (grid_points - 1);
    const Matrix m = ch.matrix_at(t).cwiseProduct(factor.cast<cplx>());
    best = std::max(best, hermitian_spectral_norm(cplx(0.0, 1.0) * m));
  }
  return best;
}

inline double commutator_constant(const HamiltonianFamily& family, const CutoffSpace& space, double r,
                                  int grid_points) {
  return commutator_constant(family, space, r, grid_points, 0.0, family.period.value_or(1.0));
}

struct EnergyStability {
  double max_ratio = 0.0;       // max_j ||U e_j||_r / ||e_j||_r
  double operator_ratio = 0.0;  // ||W^r U W^{-r}||, the sup over all v
  double bound = 1.0;           // exp(C |t - s| / 2)
};

inline EnergyStability energy_stability_check(const HamiltonianFamily& family, const CutoffSpace& space, double r,
                                              double s, double t, double c, double tol = 1e-11) {
  const PropagatorMatrix u = cutoff_propagator(family, space, s, t, tol);
  const RealVector w = scale_weights(space, r);
  const Matrix weighted = w.cast<cplx>().asDiagonal() * u.matrix * w.cwiseInverse().cast<cplx>().asDiagonal();
  EnergyStability out;
  for (Index j = 0; j < weighted.cols(); ++j) out.max_ratio = std::max(out.max_ratio, weighted.col(j).norm());
  out.operator_ratio = spectral_norm(weighted);
  out.bound = std::exp(c * std::abs(t - s) / 2.0);
  return out;
}

struct SweepPoint {
  double cutoff = 0.0;
  index_t dim = 0;
  double error = 0.0;
};

struct ConvergenceSweep {
  std::vector<SweepPoint> points;
  double oracle_delta = 0.0;
  index_t oracle_slices = 0;
};

/// error(N) = ||U_N(t,s) P_N u - U(t,s) u|| against the N_ref oracle.
inline ConvergenceSweep convergence_sweep_N(const HamiltonianFamily& family, const ScaleVector& u, double s, double t,
                                            const std::vector<double>& cutoffs, double n_ref, double tol = 1e-10,
                                            unsigned workers = 1) {
  for (double n : cutoffs)
    if (n > n_ref / 4.0) throw error(errc::invalid_parameters, "sweep cut-offs must stay below N_ref/4");
  const ReferenceSolution ref =
      at_point("N_ref=" + fmt(n_ref), [&] { return reference_solution(family, n_ref, s, t, u, tol); });
  ConvergenceSweep out;
  out.oracle_delta = ref.self_check_delta;
  out.oracle_slices = ref.slices;
  out.points = parallel_map(cutoffs.size(), workers, [&](std::size_t i) {
    return at_point("N=" + fmt(cutoffs[i]), [&] {
      const CutoffSpace space = cutoff_space(family.model, cutoffs[i]);
      SweepPoint p{cutoffs[i], space.dim, 0.0};
      Vector approx = Vector::Zero(ref.space.dim);
      if (!space.empty()) {
        const PropagatorMatrix un = cutoff_propagator(family, space, s, t, tol);
        approx.head(space.dim) = un.matrix * u.dense(space);
      }
      p.error = (approx - ref.state.dense(ref.space)).norm();
      return p;
    });
  });
  return out;
}

struct SlicingOrder {
  std::vector<std::pair<index_t, double>> errors;  // (M, ||U_{N,M} - oracle||)
  SlopeFit fit;                                   // slope of log error against log(1/M)
};

/// Convergence order of the left-endpoint product. Without an exact oracle
/// the reference is the Richardson extrapolation 2 U_{N,2M_max} - U_{N,M_max}.
inline SlicingOrder slicing_order_sweep(const HamiltonianFamily& family, const CutoffSpace& space, double s, double t,
                                        const std::vector<index_t>& slices,
                                        const std::optional<Matrix>& exact = std::nullopt, unsigned workers = 1) {
  if (slices.size() < 4) throw error(errc::invalid_parameters, "slicing_order_sweep needs at least 4 slice counts");
  for (std::size_t i = 1; i < slices.size(); ++i)
    if (slices[i] != 2 * slices[i - 1]) throw error(errc::invalid_parameters, "slice counts must be dyadic");
  const CutoffHamiltonian ch(family, space);
  auto product = [&](index_t m) {
    return detail::sliced_product(ch, SliceRule::left_endpoint, Partition::uniform(s, t, m));
  };
  const auto products = parallel_map(slices.size(), workers, [&](std::size_t i) {
    return at_point("M=" + std::to_string(slices[i]), [&] { return product(slices[i]); });
  });
  Matrix oracle;
  if (exact) {
    oracle = *exact;
  } else {
    oracle = 2.0 * product(2 * slices.back()) - products.back();
  }
  SlicingOrder out;
  std::vector<double> inv_m, err;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const double e = spectral_norm(products[i] - oracle);
    out.errors.emplace_back(slices[i], e);
    inv_m.push_back(1.0 / static_cast<double>(slices[i]));
    err.push_back(e);
  }
  // All errors at rounding level: the slices commute and the product is exact.
  out.fit = loglog_slope(inv_m, err, 1e-11);
  if (std::all_of(err.begin(), err.end(), [](double e) { return e < 1e-11; })) out.fit.degenerate = true;
  return out;
}

}  // namespace cutofflab
