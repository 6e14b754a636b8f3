#pragma once

// Least-squares fits: log-log convergence slopes and general linear models.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SVD>

#include "cutofflab/core.hpp"

namespace cutofflab {

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();  // RMS misfit in log space
  bool degenerate = false;
};

/// Fits log(y) = intercept + slope * log(x). Points with y below `floor`
/// are dropped; fewer than two usable points give a degenerate fit.
inline SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor = 0.0) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (y[i] > floor && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  SlopeFit fit;
  if (lx.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

struct LinearFit {
  Eigen::VectorXcd coefficients;
  double residual = 0.0;  // RMS misfit
  double condition = 0.0; // 2-norm condition number of the design matrix
};

/// Complex least squares min ||X c - y|| via SVD of the real design matrix.
inline LinearFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXcd& values) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  LinearFit fit;
  fit.condition = sv.size() == 0 ? 0.0 : (sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                                    : std::numeric_limits<double>::infinity());
  const Eigen::VectorXd re = svd.solve(values.real());
  const Eigen::VectorXd im = svd.solve(values.imag());
  fit.coefficients = re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
  const Eigen::VectorXcd r = design.cast<cplx>() * fit.coefficients - values;
  fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(values.size()));
  return fit;
}

}  // namespace cutofflab
