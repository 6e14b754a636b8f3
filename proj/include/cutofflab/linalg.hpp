#pragma once

// Dense Hermitian/unitary helpers shared by the propagator and Floquet code.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cutofflab/core.hpp"

namespace cutofflab {

/// Largest entry of |A - A^dagger|.
inline double hermiticity_defect(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// Spectral norm via the largest eigenvalue of A^dagger A.
inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Matrix gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double hermitian_spectral_norm(const Matrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double unitarity_defect(const Matrix& u) {
  if (u.size() == 0) return 0.0;
  const Matrix id = Matrix::Identity(u.rows(), u.cols());
  return spectral_norm(u.adjoint() * u - id);
}

/// exp(-i dt H) for Hermitian H, through V diag(exp(-i dt lambda)) V^dagger.
inline Matrix expm_step(const Matrix& h, double dt) {
  if (h.rows() != h.cols()) throw error(errc::invalid_parameters, "expm_step: matrix not square");
  const Index n = h.rows();
  if (n == 0) return Matrix(0, 0);
  if (dt == 0.0) return Matrix::Identity(n, n);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > 1e-12 * scale)
    throw error(errc::non_hermitian, "expm_step: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& v = es.eigenvectors();
  Vector phases(n);
  for (Index k = 0; k < n; ++k) phases(k) = std::exp(cplx(0.0, -dt * es.eigenvalues()(k)));
  return v * phases.asDiagonal() * v.adjoint();
}

/// Eigenphases theta of a unitary U = V diag(exp(-i theta)) V^dagger with
/// theta in (-pi, pi]. Phases within `cut_tol` of the branch cut are pinned
/// to +pi and counted in `near_cut`.
struct UnitaryLog {
  Matrix vectors;
  RealVector phases;
  int near_cut = 0;
};

inline UnitaryLog unitary_phases(const Matrix& u, double cut_tol = 1e-10) {
  // A unitary matrix is normal, so its complex Schur form is diagonal and
  // the Schur vectors are an orthonormal eigenbasis even for degenerate phases.
  Eigen::ComplexSchur<Matrix> schur(u);
  UnitaryLog out;
  out.vectors = schur.matrixU();
  const Index n = u.rows();
  out.phases.resize(n);
  for (Index k = 0; k < n; ++k) {
    double theta = -std::arg(schur.matrixT()(k, k));
    if (std::abs(std::abs(theta) - pi) <= cut_tol) {
      theta = pi;
      ++out.near_cut;
    } else if (theta <= -pi) {
      theta += 2.0 * pi;
    }
    out.phases(k) = theta;
  }
  return out;
}

/// Hermitian G with exp(-i t G) = U on the principal branch.
inline Matrix principal_generator(const UnitaryLog& log, double t) {
  return log.vectors * (log.phases / t).cast<cplx>().asDiagonal() * log.vectors.adjoint();
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// U^q for unitary U; negative powers use the adjoint.
inline Matrix unitary_power(const Matrix& u, long q) {
  const Matrix base = q < 0 ? Matrix(u.adjoint()) : u;
  long n = q < 0 ? -q : q;
  Matrix result = Matrix::Identity(u.rows(), u.cols());
  Matrix p = base;
  while (n > 0) {
    if (n & 1) result = p * result;
    n >>= 1;
    if (n > 0) p = p * p;
  }
  return result;
}

}  // namespace cutofflab
