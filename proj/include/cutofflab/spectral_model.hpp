#pragma once

// Reference operators H0 with explicit eigen-decompositions, spectral
// cut-offs P_N, finitely supported vectors and the Hilbert-scale norms
// ||u||_s = ||(1 + H0)^s u||.
//
// Modes are indexed j = 1, 2, ... in nondecreasing eigenvalue order, so the
// cut-off space {j : lambda_j <= N} is always the prefix 1..d_N.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cutofflab/core.hpp"

namespace cutofflab {

/// Matrix elements <e_j, O e_k> of an operator that is banded in the mode
/// index: element(j, k) == 0 whenever |j - k| > bandwidth.
struct OperatorTerm {
  std::string name;
  std::function<cplx(index_t, index_t)> element;
  index_t bandwidth = 0;
};

/// Operator with finitely many nonzero matrix elements (j, k, value).
inline OperatorTerm sparse_term(std::string name,
                                const std::vector<std::tuple<index_t, index_t, cplx>>& entries) {
  auto table = std::make_shared<std::map<std::pair<index_t, index_t>, cplx>>();
  index_t width = 0;
  for (const auto& [j, k, v] : entries) {
    if (j < 1 || k < 1) throw error(errc::invalid_parameters, "sparse_term: indices start at 1");
    (*table)[{j, k}] += v;
    width = std::max(width, j > k ? j - k : k - j);
  }
  OperatorTerm term;
  term.name = std::move(name);
  term.bandwidth = width;
  term.element = [table](index_t j, index_t k) -> cplx {
    const auto it = table->find({j, k});
    return it == table->end() ? cplx{} : it->second;
  };
  return term;
}

enum class ModelKind { fourier_circle, hermite_line, explicit_diagonal };

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::fourier_circle: return "fourier_circle";
    case ModelKind::hermite_line: return "hermite_line";
    case ModelKind::explicit_diagonal: return "explicit_diagonal";
  }
  return "unknown";
}

struct ModelParams {
  // explicit_diagonal only. `unit_linear` fixes lambda_j = j and enables the
  // zeta continuation track; otherwise `eigenvalue` must be supplied.
  bool unit_linear = false;
  std::function<double(index_t)> eigenvalue;
  std::vector<OperatorTerm> terms;
  // Index window [1, check_window] on which monotonicity and Hermiticity of
  // user input are validated.
  index_t check_window = 64;
};

class SpectralModel;
using ModelPtr = std::shared_ptr<const SpectralModel>;

class SpectralModel {
 public:
  ModelKind kind() const { return kind_; }
  bool unit_linear() const { return unit_linear_; }

  double eigenvalue(index_t j) const {
    switch (kind_) {
      case ModelKind::fourier_circle: {
        const double k = static_cast<double>(label(j));
        return 1.0 + k * k;
      }
      case ModelKind::hermite_line:
        return 2.0 * static_cast<double>(j - 1) + 2.0;
      case ModelKind::explicit_diagonal:
        return unit_linear_ ? static_cast<double>(j) : eigenvalue_(j);
    }
    return 0.0;
  }

  /// Fourier wavenumber (order 0, +1, -1, +2, -2, ...), Hermite level n = j - 1,
  /// or the plain index.
  index_t label(index_t j) const {
    switch (kind_) {
      case ModelKind::fourier_circle:
        if (j == 1) return 0;
        return j % 2 == 0 ? j / 2 : -(j - 1) / 2;
      case ModelKind::hermite_line: return j - 1;
      case ModelKind::explicit_diagonal: return j;
    }
    return j;
  }

  index_t index_of_label(index_t label) const {
    switch (kind_) {
      case ModelKind::fourier_circle:
        if (label == 0) return 1;
        return label > 0 ? 2 * label : 2 * (-label) + 1;
      case ModelKind::hermite_line:
        if (label < 0) throw error(errc::invalid_parameters, "hermite level must be >= 0");
        return label + 1;
      case ModelKind::explicit_diagonal:
        if (label < 1) throw error(errc::invalid_parameters, "explicit index must be >= 1");
        return label;
    }
    return label;
  }

  bool has_term(const std::string& name) const { return terms_.count(name) > 0; }

  const OperatorTerm& term(const std::string& name) const {
    const auto it = terms_.find(name);
    if (it == terms_.end()) throw error(errc::unresolved_term, "no operator term named '" + name + "'");
    return it->second;
  }

  std::vector<std::string> term_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : terms_) names.push_back(name);
    return names;
  }

 private:
  friend ModelPtr build_model(ModelKind, ModelParams);
  SpectralModel() = default;

  ModelKind kind_ = ModelKind::explicit_diagonal;
  bool unit_linear_ = false;
  std::function<double(index_t)> eigenvalue_;
  std::map<std::string, OperatorTerm> terms_;
};

/// Constructs one of the built-in reference operators.
///
/// fourier_circle: H0 = 1 - d^2/dx^2 on the circle, terms "laplacian" and "cos_x".
/// hermite_line: H0 = 1 - d^2/dx^2 + x^2, terms "oscillator" and "position".
/// explicit_diagonal: user eigenvalues, term "h0_diag" plus user terms.
inline ModelPtr build_model(ModelKind kind, ModelParams params = {}) {
  std::shared_ptr<SpectralModel> model(new SpectralModel());
  model->kind_ = kind;
  auto add = [&](OperatorTerm t) {
    if (model->terms_.count(t.name))
      throw error(errc::invalid_parameters, "duplicate term name '" + t.name + "'");
    model->terms_.emplace(t.name, std::move(t));
  };

  switch (kind) {
    case ModelKind::fourier_circle: {
      const SpectralModel* self = model.get();
      add({"laplacian",
           [self](index_t j, index_t k) -> cplx {
             if (j != k) return {};
             const double kk = static_cast<double>(self->label(j));
             return kk * kk;
           },
           0});
      add({"cos_x",
           [self](index_t j, index_t k) -> cplx {
             const index_t d = self->label(j) - self->label(k);
             return (d == 1 || d == -1) ? cplx(0.5) : cplx{};
           },
           2});
      break;
    }
    case ModelKind::hermite_line:
      add({"oscillator",
           [](index_t j, index_t k) -> cplx {
             return j == k ? cplx(2.0 * static_cast<double>(j - 1) + 1.0) : cplx{};
           },
           0});
      add({"position",
           [](index_t j, index_t k) -> cplx {
             // <n|x|n+1> = sqrt((n+1)/2) with n = min(j, k) - 1
             if (j - k == 1 || k - j == 1) return std::sqrt(static_cast<double>(std::min(j, k)) / 2.0);
             return {};
           },
           1});
      break;
    case ModelKind::explicit_diagonal: {
      if (params.unit_linear) {
        model->unit_linear_ = true;
      } else {
        if (!params.eigenvalue)
          throw error(errc::invalid_parameters, "explicit_diagonal requires an eigenvalue generator");
        model->eigenvalue_ = params.eigenvalue;
        double prev = params.eigenvalue(1);
        if (!(prev >= 0.0)) throw error(errc::invalid_parameters, "eigenvalues must be nonnegative");
        for (index_t j = 2; j <= std::max<index_t>(params.check_window, 2); ++j) {
          const double cur = params.eigenvalue(j);
          if (!(cur >= prev))
            throw error(errc::invalid_parameters,
                        "eigenvalue generator is not nondecreasing at j = " + std::to_string(j));
          prev = cur;
        }
      }
      const SpectralModel* self = model.get();
      add({"h0_diag", [self](index_t j, index_t k) -> cplx { return j == k ? cplx(self->eigenvalue(j)) : cplx{}; },
           0});
      for (auto& t : params.terms) {
        if (!t.element) throw error(errc::invalid_parameters, "term '" + t.name + "' has no element function");
        const index_t window = params.check_window;
        for (index_t j = 1; j <= window; ++j) {
          for (index_t k = 1; k <= window; ++k) {
            const cplx v = t.element(j, k);
            const index_t dist = j > k ? j - k : k - j;
            if (dist > t.bandwidth && v != cplx{})
              throw error(errc::invalid_parameters, "term '" + t.name + "' exceeds its declared bandwidth");
            if (std::abs(v - std::conj(t.element(k, j))) > 1e-14 * std::max(1.0, std::abs(v)))
              throw error(errc::invalid_parameters, "term '" + t.name + "' is not Hermitian");
          }
        }
        add(std::move(t));
      }
      break;
    }
  }
  return model;
}

/// The spectral cut-off space P_N H: modes 1..dim.
struct CutoffSpace {
  ModelPtr model;
  double cutoff = 0.0;
  index_t dim = 0;

  bool contains(index_t j) const { return j >= 1 && j <= dim; }
  bool empty() const { return dim == 0; }

  std::vector<index_t> indices() const {
    std::vector<index_t> out(static_cast<std::size_t>(dim));
    for (index_t j = 1; j <= dim; ++j) out[static_cast<std::size_t>(j - 1)] = j;
    return out;
  }
};

inline constexpr index_t max_cutoff_dim = 10'000'000;

inline CutoffSpace cutoff_space(const ModelPtr& model, double cutoff) {
  if (!(cutoff >= 0.0)) throw error(errc::invalid_parameters, "cutoff must be >= 0");
  CutoffSpace space{model, cutoff, 0};
  while (model->eigenvalue(space.dim + 1) <= cutoff) {
    if (++space.dim > max_cutoff_dim) throw error(errc::invalid_parameters, "cutoff space too large");
  }
  return space;
}

/// Finitely supported vector sum_j u_j e_j.
struct ScaleVector {
  ModelPtr model;
  std::map<index_t, cplx> coeffs;

  static ScaleVector basis(ModelPtr model, index_t j, cplx value = 1.0) {
    ScaleVector v{std::move(model), {}};
    v.coeffs[j] = value;
    return v;
  }

  cplx operator[](index_t j) const {
    const auto it = coeffs.find(j);
    return it == coeffs.end() ? cplx{} : it->second;
  }

  index_t max_index() const { return coeffs.empty() ? 0 : coeffs.rbegin()->first; }

  ScaleVector& operator+=(const ScaleVector& other) {
    check_same(other);
    for (const auto& [j, v] : other.coeffs) coeffs[j] += v;
    return *this;
  }
  ScaleVector& operator-=(const ScaleVector& other) {
    check_same(other);
    for (const auto& [j, v] : other.coeffs) coeffs[j] -= v;
    return *this;
  }
  ScaleVector& operator*=(cplx a) {
    for (auto& [j, v] : coeffs) v *= a;
    return *this;
  }
  friend ScaleVector operator+(ScaleVector a, const ScaleVector& b) { return a += b; }
  friend ScaleVector operator-(ScaleVector a, const ScaleVector& b) { return a -= b; }
  friend ScaleVector operator*(cplx a, ScaleVector v) { return v *= a; }

  void check_same(const ScaleVector& other) const {
    if (model != other.model) throw error(errc::model_mismatch, "vectors belong to different models");
  }

  /// Coefficients on the cut-off space as a dense vector of length d_N.
  Vector dense(const CutoffSpace& space) const {
    if (model != space.model) throw error(errc::model_mismatch, "vector and space belong to different models");
    Vector out = Vector::Zero(space.dim);
    for (const auto& [j, v] : coeffs)
      if (space.contains(j)) out(j - 1) = v;
    return out;
  }

  static ScaleVector from_dense(const CutoffSpace& space, const Vector& values) {
    ScaleVector v{space.model, {}};
    for (index_t j = 1; j <= space.dim; ++j)
      if (values(j - 1) != cplx{}) v.coeffs[j] = values(j - 1);
    return v;
  }
};

inline ScaleVector project(const CutoffSpace& space, const ScaleVector& u) {
  if (u.model != space.model) throw error(errc::model_mismatch, "project: vector from another model");
  ScaleVector out{u.model, {}};
  for (const auto& [j, v] : u.coeffs)
    if (space.contains(j)) out.coeffs.emplace(j, v);
  return out;
}

/// ||u||_s = (sum_j (1 + lambda_j)^{2s} |u_j|^2)^{1/2}
inline double sobolev_norm(const SpectralModel& model, const ScaleVector& u, double s) {
  double acc = 0.0;
  for (const auto& [j, v] : u.coeffs) {
    const double w = s == 0.0 ? 1.0 : std::pow(1.0 + model.eigenvalue(j), 2.0 * s);
    acc += w * std::norm(v);
  }
  return std::sqrt(acc);
}

inline double sobolev_norm(const ScaleVector& u, double s) { return sobolev_norm(*u.model, u, s); }

/// ||(I - P_N) u||_s
inline double tail_norm(const SpectralModel& model, const ScaleVector& u, double cutoff, double s) {
  double acc = 0.0;
  for (const auto& [j, v] : u.coeffs) {
    const double lambda = model.eigenvalue(j);
    if (lambda <= cutoff) continue;
    acc += std::pow(1.0 + lambda, 2.0 * s) * std::norm(v);
  }
  return std::sqrt(acc);
}

/// Diagonal ((1 + lambda_j)^r) over the cut-off space.
inline RealVector scale_weights(const CutoffSpace& space, double r) {
  if (space.empty()) throw error(errc::empty_space, "scale_weights on an empty cut-off space");
  RealVector w(space.dim);
  for (index_t j = 1; j <= space.dim; ++j) w(j - 1) = std::pow(1.0 + space.model->eigenvalue(j), r);
  return w;
}

}  // namespace cutofflab
