#pragma once

// Periodic drives H^(T)(t) = H(t/T): monodromy, principal Floquet
// Hamiltonian, Floquet-Magnus coefficients and the stroboscopic error of
// the truncated effective Hamiltonians.
//
// Coefficient convention: U_N^(T)(T, 0) = exp(Omega) with
//   Omega = -i T sum_l T^l H^[l],
// i.e. H^[l] is the coefficient of T^l in (i/T) Omega. For i dU/dt = H U this
// gives
//   H^[0] = int_0^1 H(t1)
//   H^[1] = -(i/2) int_0^1 int_0^t1 [H(t1), H(t2)]
//   H^[2] = -(1/6) int_0^1 int_0^t1 int_0^t2 ([H1,[H2,H3]] + [H3,[H2,H1]]).

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cutofflab/core.hpp"
#include "cutofflab/hamiltonian.hpp"
#include "cutofflab/linalg.hpp"
#include "cutofflab/parallel.hpp"
#include "cutofflab/propagator.hpp"
#include "cutofflab/quadrature.hpp"
#include "cutofflab/spectral_model.hpp"

namespace cutofflab {

/// H^(T)(t) = H(t/T); the period scales by T.
inline HamiltonianFamily rescaled_family(const HamiltonianFamily& family, double T) {
  if (!family.period) throw error(errc::aperiodic_family, "rescaled_family needs a periodic family");
  if (!(T > 0.0)) throw error(errc::invalid_parameters, "rescaling period must be positive");
  HamiltonianFamily out = family;
  for (auto& term : out.terms) {
    term.coefficient = [c = term.coefficient, T](double t) { return c(t / T); };
  }
  out.period = *family.period * T;
  return out;
}

struct FloquetResult {
  Matrix monodromy;
  Matrix floquet_hamiltonian;  // principal branch, eigenphases in (-pi, pi]
  double period = 0.0;
  CutoffSpace space;
  int branch_ambiguous = 0;  // eigenphases pinned to +pi at the cut
  double unitarity_defect = 0.0;
  double reconstruction_defect = 0.0;  // ||exp(-i T H_F) - U||
};

inline FloquetResult floquet_from_unitary(const Matrix& u, double T, CutoffSpace space = {}) {
  FloquetResult out;
  out.monodromy = u;
  out.period = T;
  out.space = std::move(space);
  const UnitaryLog log = unitary_phases(u);
  out.branch_ambiguous = log.near_cut;
  out.floquet_hamiltonian = symmetrize(principal_generator(log, T));
  out.unitarity_defect = unitarity_defect(u);
  out.reconstruction_defect = spectral_norm(expm_step(out.floquet_hamiltonian, T) - u);
  return out;
}

/// U_N^(T)(T, 0) for the rescaled drive and its principal Floquet Hamiltonian.
inline FloquetResult monodromy(const HamiltonianFamily& family, const CutoffSpace& space, double T, double tol) {
  const HamiltonianFamily drive = rescaled_family(family, T);
  const PropagatorMatrix u = cutoff_propagator(drive, space, 0.0, T, tol);
  return floquet_from_unitary(u.matrix, T, space);
}

struct FmCoefficient {
  Matrix matrix;
  int order = 0;
  double symmetry_defect = 0.0;  // ||A - A^dagger|| before symmetrization
  int panels = 0;
};

namespace detail {

/// Scalar iterated integrals over the unit simplex for the term-sum
/// H(t) = sum_m c_m(t) O_m with composite Gauss-Legendre at a fixed panel count.
class SimplexIntegrals {
 public:
  SimplexIntegrals(const std::vector<CoefficientFn>& coeffs, int panels, const QuadratureRule& base)
      : coeffs_(coeffs), base_(base), panels_(panels) {}

  std::vector<double> single() const {
    const QuadratureRule rule = composite(base_, 0.0, 1.0, panels_);
    std::vector<double> out(coeffs_.size(), 0.0);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      for (std::size_t m = 0; m < coeffs_.size(); ++m) out[m] += rule.weights[i] * coeffs_[m](rule.nodes[i]);
    return out;
  }

  /// D[m][n] = int_0^1 c_m(t1) int_0^t1 c_n(t2) dt2 dt1
  std::vector<std::vector<double>> double_() const {
    const std::size_t n = coeffs_.size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
    const QuadratureRule outer = composite(base_, 0.0, 1.0, panels_);
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
      const double t1 = outer.nodes[i];
      const auto c1 = values(t1);
      const auto big = primitive(t1);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out[a][b] += outer.weights[i] * c1[a] * big[b];
    }
    return out;
  }

  /// T[a][b][c] = int_0^1 int_0^t1 (c_a(t1) c_b(t2) C_c(t2) + C_a(t2) c_b(t2) c_c(t1)) dt2 dt1,
  /// C_m(t) = int_0^t c_m, so that the triple integral of
  /// [H1,[H2,H3]] + [H3,[H2,H1]] is sum_abc T[a][b][c] [O_a,[O_b,O_c]].
  std::vector<std::vector<std::vector<double>>> triple() const {
    const std::size_t n = coeffs_.size();
    std::vector<std::vector<std::vector<double>>> out(
        n, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    const QuadratureRule outer = composite(base_, 0.0, 1.0, panels_);
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
      const double t1 = outer.nodes[i];
      const auto c1 = values(t1);
      const QuadratureRule inner = composite(base_, 0.0, t1, panels_);
      for (std::size_t k = 0; k < inner.nodes.size(); ++k) {
        const double t2 = inner.nodes[k];
        const double w = outer.weights[i] * inner.weights[k];
        const auto c2 = values(t2);
        const auto big2 = primitive(t2);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
              out[a][b][c] += w * (c1[a] * c2[b] * big2[c] + big2[a] * c2[b] * c1[c]);
      }
    }
    return out;
  }

 private:
  std::vector<double> values(double t) const {
    std::vector<double> v(coeffs_.size());
    for (std::size_t m = 0; m < v.size(); ++m) v[m] = coeffs_[m](t);
    return v;
  }

  std::vector<double> primitive(double t) const {
    std::vector<double> v(coeffs_.size(), 0.0);
    if (t == 0.0) return v;
    const QuadratureRule rule = composite(base_, 0.0, t, panels_);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      for (std::size_t m = 0; m < v.size(); ++m) v[m] += rule.weights[i] * coeffs_[m](rule.nodes[i]);
    return v;
  }

  const std::vector<CoefficientFn>& coeffs_;
  const QuadratureRule& base_;
  int panels_;
};

inline Matrix fm_unsymmetrized(const CutoffHamiltonian& ch, int order, int panels, const QuadratureRule& base) {
  const auto& ops = ch.term_matrices();
  const std::size_t n = ops.size();
  const SimplexIntegrals integrals(ch.coefficients(), panels, base);
  Matrix out = Matrix::Zero(ch.dim(), ch.dim());
  if (order == 0) {
    const auto avg = integrals.single();
    for (std::size_t m = 0; m < n; ++m) out += avg[m] * ops[m];
  } else if (order == 1) {
    const auto d = integrals.double_();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double w = d[a][b] - d[b][a];
        if (w != 0.0) out += w * commutator(ops[a], ops[b]);
      }
    out *= cplx(0.0, -0.5);
  } else {
    const auto tr = integrals.triple();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        if (b == c) continue;
        const Matrix inner = commutator(ops[b], ops[c]);
        for (std::size_t a = 0; a < n; ++a) {
          const double w = tr[a][b][c];
          if (w != 0.0) out += w * commutator(ops[a], inner);
        }
      }
    out *= -1.0 / 6.0;
  }
  return out;
}

}  // namespace detail

struct FmOptions {
  double quad_tol = 1e-12;
  int quad_points = 8;
  int max_panels = 64;
};

/// H^[order]_N for order in {0, 1, 2}; panels doubled until the matrix moves
/// by less than quad_tol (max entry).
inline FmCoefficient fm_coefficient(const CutoffHamiltonian& ch, int order, const FmOptions& options = {}) {
  if (order < 0 || order > 2) throw error(errc::invalid_parameters, "fm_coefficient supports orders 0, 1, 2");
  const QuadratureRule base = gauss_legendre(options.quad_points);
  int panels = 1;
  Matrix prev = detail::fm_unsymmetrized(ch, order, panels, base);
  while (true) {
    if (2 * panels > options.max_panels)
      throw error(errc::quadrature_nonconvergence, "Floquet-Magnus quadrature did not settle");
    panels *= 2;
    Matrix cur = detail::fm_unsymmetrized(ch, order, panels, base);
    const double change = (cur - prev).cwiseAbs().maxCoeff();
    if (change < options.quad_tol || cur.size() == 0) {
      FmCoefficient out;
      out.order = order;
      out.panels = panels;
      out.symmetry_defect = hermiticity_defect(cur);
      if (!(out.symmetry_defect < 10.0 * options.quad_tol))
        throw error(errc::non_hermitian, "Floquet-Magnus coefficient is not Hermitian before symmetrization");
      out.matrix = symmetrize(cur);
      return out;
    }
    prev = std::move(cur);
  }
}

inline FmCoefficient fm_coefficient(const HamiltonianFamily& family, const CutoffSpace& space, int order,
                                    const FmOptions& options = {}) {
  if (!family.period || std::abs(*family.period - 1.0) > 1e-15)
    throw error(errc::aperiodic_family, "fm_coefficient needs a family of period 1");
  return fm_coefficient(CutoffHamiltonian(family, space), order, options);
}

struct FMExpansion {
  std::vector<Matrix> coefficients;  // H^[0], ..., H^[L]
  CutoffSpace space;

  int order() const { return static_cast<int>(coefficients.size()) - 1; }

  /// H_FM,L,N^(T) = sum_l T^l H^[l]
  Matrix at(double T) const {
    Matrix h = coefficients.front();
    double power = 1.0;
    for (std::size_t l = 1; l < coefficients.size(); ++l) {
      power *= T;
      h += power * coefficients[l];
    }
    return h;
  }
};

inline FMExpansion fm_expansion(const HamiltonianFamily& family, const CutoffSpace& space, int order,
                                const FmOptions& options = {}) {
  if (order < 0 || order > 2) throw error(errc::invalid_parameters, "effective Hamiltonians support L in {0, 1, 2}");
  if (!family.period || std::abs(*family.period - 1.0) > 1e-15)
    throw error(errc::aperiodic_family, "fm_expansion needs a family of period 1");
  const CutoffHamiltonian ch(family, space);
  FMExpansion out;
  out.space = space;
  for (int l = 0; l <= order; ++l) out.coefficients.push_back(fm_coefficient(ch, l, options).matrix);
  return out;
}

inline Matrix effective_hamiltonian(const HamiltonianFamily& family, const CutoffSpace& space, int order, double T,
                                    const FmOptions& options = {}) {
  return fm_expansion(family, space, order, options).at(T);
}

/// ||U_N^(T)(qT, 0) - exp(-i q T H_FM,L,N^(T))|| with U_N^(T)(qT, 0) taken as
/// the q-th power of the monodromy.
inline double stroboscopic_error(const Matrix& monodromy_matrix, const Matrix& h_eff, double T, long q) {
  if (q == 0) throw error(errc::invalid_parameters, "stroboscopic_error needs q != 0");
  const Matrix lhs = unitary_power(monodromy_matrix, q);
  const Matrix rhs = expm_step(h_eff, static_cast<double>(q) * T);
  return spectral_norm(lhs - rhs);
}

inline double stroboscopic_error(const HamiltonianFamily& family, const CutoffSpace& space, int order, double T,
                                 long q, double tol, const FmOptions& options = {}) {
  const FloquetResult f = monodromy(family, space, T, tol);
  return stroboscopic_error(f.monodromy, effective_hamiltonian(family, space, order, T, options), T, q);
}

struct DeviationPoint {
  double cutoff = 0.0;
  index_t dim = 0;
  double deviation = 0.0;
};

namespace detail {

inline Vector embed(const Vector& v, Index dim) {
  Vector out = Vector::Zero(dim);
  out.head(v.size()) = v;
  return out;
}

}  // namespace detail

/// ||H^[l]_N P_N u - H^[l]_{N_ref} P_{N_ref} u|| for each N.
inline std::vector<DeviationPoint> fm_convergence_sweep(const HamiltonianFamily& family, int order,
                                                        const ScaleVector& u, const std::vector<double>& cutoffs,
                                                        double n_ref, const FmOptions& options = {},
                                                        unsigned workers = 1) {
  for (double n : cutoffs)
    if (n > n_ref) throw error(errc::invalid_parameters, "sweep cut-offs must not exceed N_ref");
  const CutoffSpace ref_space = cutoff_space(family.model, n_ref);
  const Vector ref = at_point("N_ref=" + fmt(n_ref), [&] {
    return Vector(fm_coefficient(family, ref_space, order, options).matrix * u.dense(ref_space));
  });
  return parallel_map(cutoffs.size(), workers, [&](std::size_t i) {
    return at_point("N=" + fmt(cutoffs[i]), [&] {
      const CutoffSpace space = cutoff_space(family.model, cutoffs[i]);
      DeviationPoint p{cutoffs[i], space.dim, 0.0};
      Vector image = Vector::Zero(0);
      if (!space.empty()) image = fm_coefficient(family, space, order, options).matrix * u.dense(space);
      p.deviation = (detail::embed(image, ref_space.dim) - ref).norm();
      return p;
    });
  });
}

/// ||exp(-i t H_FM,L,N^(T)) P_N u - exp(-i t H_FM,L,N_ref^(T)) P_{N_ref} u||,
/// a numerical proxy for strong convergence of the effective groups.
inline std::vector<DeviationPoint> effective_group_convergence(const HamiltonianFamily& family, int order, double T,
                                                               double t, const ScaleVector& u,
                                                               const std::vector<double>& cutoffs, double n_ref,
                                                               const FmOptions& options = {}, unsigned workers = 1) {
  for (double n : cutoffs)
    if (n > n_ref) throw error(errc::invalid_parameters, "sweep cut-offs must not exceed N_ref");
  const CutoffSpace ref_space = cutoff_space(family.model, n_ref);
  const Vector ref = at_point("N_ref=" + fmt(n_ref), [&] {
    return Vector(expm_step(effective_hamiltonian(family, ref_space, order, T, options), t) * u.dense(ref_space));
  });
  return parallel_map(cutoffs.size(), workers, [&](std::size_t i) {
    return at_point("N=" + fmt(cutoffs[i]), [&] {
      const CutoffSpace space = cutoff_space(family.model, cutoffs[i]);
      DeviationPoint p{cutoffs[i], space.dim, 0.0};
      Vector image = Vector::Zero(0);
      if (!space.empty())
        image = expm_step(effective_hamiltonian(family, space, order, T, options), t) * u.dense(space);
      p.deviation = (detail::embed(image, ref_space.dim) - ref).norm();
      return p;
    });
  });
}

}  // namespace cutofflab
