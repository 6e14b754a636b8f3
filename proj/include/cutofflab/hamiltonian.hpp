#pragma once

// Time-dependent Hamiltonians H(t) = sum_m c_m(t) O_m built from banded
// operator terms of a spectral model, their compressions H_N(t) = P_N H(t) P_N
// and the word operators H(t_m) ... H(t_1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutofflab/core.hpp"
#include "cutofflab/linalg.hpp"
#include "cutofflab/spectral_model.hpp"

namespace cutofflab {

using CoefficientFn = std::function<double(double)>;

/// Coefficient functions available to experiment configs.
inline const std::vector<std::string>& coefficient_registry() {
  static const std::vector<std::string> ids{"const", "sin_2pi", "cos_2pi", "ramp"};
  return ids;
}

inline bool is_registered_coefficient(const std::string& id) {
  const auto& ids = coefficient_registry();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

/// const: a; sin_2pi: a sin(2 pi t); cos_2pi: a cos(2 pi t); ramp: a t.
inline CoefficientFn make_coefficient(const std::string& id, double amplitude) {
  if (id == "const") return [amplitude](double) { return amplitude; };
  if (id == "sin_2pi") return [amplitude](double t) { return amplitude * std::sin(2.0 * pi * t); };
  if (id == "cos_2pi") return [amplitude](double t) { return amplitude * std::cos(2.0 * pi * t); };
  if (id == "ramp") return [amplitude](double t) { return amplitude * t; };
  throw error(errc::invalid_parameters, "unknown coefficient function '" + id + "'");
}

struct FamilyTerm {
  std::string name;  // operator term in the model
  CoefficientFn coefficient;
};

struct HamiltonianFamily {
  ModelPtr model;
  std::vector<FamilyTerm> terms;
  std::optional<double> period;
  double loss_order = 0.0;  // declared mapping loss mu, metadata only

  index_t bandwidth() const {
    index_t w = 0;
    for (const auto& t : terms) w = std::max(w, model->term(t.name).bandwidth);
    return w;
  }
};

inline void check_periodic(const HamiltonianFamily& family) {
  const double p = *family.period;
  constexpr int grid = 32;
  for (const auto& term : family.terms) {
    for (int i = 0; i < grid; ++i) {
      const double t = p * i / grid;
      const double a = term.coefficient(t);
      const double b = term.coefficient(t + p);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
        throw error(errc::invalid_parameters,
                    "coefficient of term '" + term.name + "' is not periodic with the declared period");
    }
  }
}

inline HamiltonianFamily assemble_family(ModelPtr model, std::vector<FamilyTerm> terms,
                                         std::optional<double> period = std::nullopt,
                                         double loss_order = 0.0) {
  for (const auto& t : terms) {
    if (!model->has_term(t.name)) throw error(errc::unresolved_term, "no operator term named '" + t.name + "'");
    if (!t.coefficient) throw error(errc::invalid_parameters, "term '" + t.name + "' has no coefficient");
  }
  if (period && !(*period > 0.0)) throw error(errc::invalid_parameters, "period must be positive");
  if (!(loss_order >= 0.0)) throw error(errc::invalid_parameters, "loss order must be >= 0");
  HamiltonianFamily family{std::move(model), std::move(terms), period, loss_order};
  if (family.period) check_periodic(family);
  return family;
}

/// Restriction of a single operator term to the cut-off space.
inline Matrix restrict_term(const OperatorTerm& term, const CutoffSpace& space) {
  const index_t d = space.dim;
  Matrix m = Matrix::Zero(d, d);
  for (index_t j = 1; j <= d; ++j) {
    const index_t lo = std::max<index_t>(1, j - term.bandwidth);
    const index_t hi = std::min<index_t>(d, j + term.bandwidth);
    for (index_t k = lo; k <= hi; ++k) m(j - 1, k - 1) = term.element(j, k);
  }
  return m;
}

/// H_N(t) = P_N H(t) P_N with the term matrices assembled once.
class CutoffHamiltonian {
 public:
  CutoffHamiltonian(const HamiltonianFamily& family, CutoffSpace space) : space_(std::move(space)) {
    if (space_.model != family.model) throw error(errc::model_mismatch, "family and space belong to different models");
    if (space_.empty()) throw error(errc::empty_space, "cut-off Hamiltonian on an empty space");
    for (const auto& t : family.terms) {
      terms_.push_back(restrict_term(family.model->term(t.name), space_));
      coefficients_.push_back(t.coefficient);
    }
  }

  const CutoffSpace& space() const { return space_; }
  Index dim() const { return static_cast<Index>(space_.dim); }
  const std::vector<Matrix>& term_matrices() const { return terms_; }
  const std::vector<CoefficientFn>& coefficients() const { return coefficients_; }

  Matrix combine(std::span<const double> weights) const {
    Matrix h = Matrix::Zero(dim(), dim());
    for (std::size_t m = 0; m < terms_.size(); ++m)
      if (weights[m] != 0.0) h += weights[m] * terms_[m];
    return h;
  }

  std::vector<double> coefficients_at(double t) const {
    std::vector<double> c(coefficients_.size());
    for (std::size_t m = 0; m < c.size(); ++m) c[m] = coefficients_[m](t);
    return c;
  }

  Matrix matrix_at(double t) const {
    const auto c = coefficients_at(t);
    return combine(c);
  }

 private:
  CutoffSpace space_;
  std::vector<Matrix> terms_;
  std::vector<CoefficientFn> coefficients_;
};

inline Matrix cutoff_matrix(const HamiltonianFamily& family, const CutoffSpace& space, double t) {
  const Matrix h = CutoffHamiltonian(family, space).matrix_at(t);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > 1e-14 * scale)
    throw error(errc::non_hermitian, "cut-off matrix failed the Hermiticity check");
  return h;
}

/// Max of ||H_N(t)|| over the uniform grid t_i = i P / n, i < n, of one
/// period. A lower estimate of sup_t ||H_N(t)||.
inline double operator_norm_bound(const HamiltonianFamily& family, const CutoffSpace& space, int grid_points) {
  if (!family.period) throw error(errc::aperiodic_family, "operator_norm_bound needs a periodic family");
  if (grid_points < 2) throw error(errc::invalid_parameters, "grid_points must be >= 2");
  const CutoffHamiltonian ch(family, space);
  double best = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double t = *family.period * i / grid_points;
    best = std::max(best, hermitian_spectral_norm(ch.matrix_at(t)));
  }
  return best;
}

/// H(t) u on a finitely supported vector, exact on the banded terms.
inline ScaleVector apply_family(const HamiltonianFamily& family, double t, const ScaleVector& u, index_t band) {
  if (u.model != family.model) throw error(errc::model_mismatch, "apply_family: vector from another model");
  if (band < family.bandwidth())
    throw error(errc::band_too_small, "band " + std::to_string(band) + " below coupling width " +
                                          std::to_string(family.bandwidth()));
  ScaleVector out{u.model, {}};
  for (const auto& term : family.terms) {
    const double c = term.coefficient(t);
    if (c == 0.0) continue;
    const OperatorTerm& op = family.model->term(term.name);
    for (const auto& [j, v] : u.coeffs) {
      for (index_t k = std::max<index_t>(1, j - op.bandwidth); k <= j + op.bandwidth; ++k) {
        const cplx e = op.element(k, j);
        if (e != cplx{}) out.coeffs[k] += c * e * v;
      }
    }
  }
  return out;
}

/// W_m u = H(t_m) ... H(t_1) u, or with a space the cut-off word
/// P_N H(t_m) P_N ... P_N H(t_1) P_N u.
inline ScaleVector word_apply(const HamiltonianFamily& family, std::span<const double> times, const ScaleVector& u,
                              const std::optional<CutoffSpace>& space = std::nullopt) {
  ScaleVector v = space ? project(*space, u) : u;
  const index_t band = family.bandwidth();
  for (const double t : times) {
    v = apply_family(family, t, v, band);
    if (space) v = project(*space, v);
  }
  return v;
}

}  // namespace cutofflab
