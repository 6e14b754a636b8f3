#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cutofflab/models.hpp"
#include "cutofflab/propagator.hpp"

using namespace cutofflab;

namespace {

const cplx I{0.0, 1.0};

/// exp(-i int_s^t (1 + tau) dtau D) for D = diag(1, 2, ...).
Matrix ramp_closed_form(index_t dim, double s, double t) {
  const double integral = (t - s) + 0.5 * (t * t - s * s);
  Vector d(dim);
  for (index_t j = 1; j <= dim; ++j) d(j - 1) = std::exp(-I * (integral * static_cast<double>(j)));
  return d.asDiagonal();
}

Vector random_unit(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

}  // namespace

TEST(ExpmStep, Examples) {
  const Vector w = (Vector(3) << 1.0, -2.5, 4.0).finished();
  const Matrix d = w.asDiagonal();
  const Matrix e = expm_step(d, 0.3);
  for (Index k = 0; k < 3; ++k) EXPECT_LT(std::abs(e(k, k) - std::exp(-I * 0.3 * w(k))), 1e-15);

  const double g = 1.7;
  Matrix sx(2, 2);
  sx << 0, g, g, 0;
  EXPECT_LT((expm_step(sx, pi / g) + Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  // exp(-i theta sigma_x) = cos theta - i sin theta sigma_x
  const double theta = 0.4;
  Matrix expected = std::cos(theta) * Matrix::Identity(2, 2) - I * std::sin(theta) * sx / g;
  EXPECT_LT((expm_step(sx, theta / g) - expected).cwiseAbs().maxCoeff(), 1e-15);

  EXPECT_EQ(expm_step(sx, 0.0), Matrix::Identity(2, 2));

  Matrix bad(2, 2);
  bad << 0, 1, 0, 0;
  try {
    expm_step(bad, 1.0);
    FAIL();
  } catch (const error& err) {
    EXPECT_EQ(err.code(), errc::non_hermitian);
  }
}

TEST(Partition, Validation) {
  auto p = Partition::uniform(0.0, 1.0, 4);
  EXPECT_EQ(p.slices(), 4);
  EXPECT_DOUBLE_EQ(p.mesh(), 0.25);
  EXPECT_THROW(Partition({0.0, 0.5, 0.5, 1.0}), error);
  EXPECT_THROW(Partition({0.0}), error);
  EXPECT_DOUBLE_EQ(Partition({0.0, 0.1, 0.7, 1.0}).mesh(), 0.6);
}

TEST(TimeSliced, AutonomousIndependentOfPartition) {
  auto fam = models::driven_circle(0.9, "const");
  auto space = cutoff_space(fam.model, 26.0);
  const Matrix exact = expm_step(cutoff_matrix(fam, space, 0.0), 0.8);
  for (index_t m : {1, 3, 16}) {
    EXPECT_LT(spectral_norm(time_sliced_propagator(fam, space, Partition::uniform(0.2, 1.0, m)).matrix - exact), 1e-12);
  }
  auto uneven = time_sliced_propagator(fam, space, Partition({0.2, 0.25, 0.7, 1.0}));
  EXPECT_LT(spectral_norm(uneven.matrix - exact), 1e-12);
}

TEST(TimeSliced, SingleSlice) {
  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 10.0);
  auto p = time_sliced_propagator(fam, space, Partition::uniform(0.1, 0.3, 1));
  EXPECT_LT(spectral_norm(p.matrix - expm_step(cutoff_matrix(fam, space, 0.1), 0.2)), 1e-15);
  EXPECT_EQ(p.slices, 1);
  EXPECT_EQ(p.rule, SliceRule::left_endpoint);
}

TEST(TimeSliced, CommutingRampFirstOrder) {
  auto fam = models::commuting_ramp();
  auto space = cutoff_space(fam.model, 4.5);
  const Matrix exact = ramp_closed_form(space.dim, 0.0, 1.0);
  std::vector<double> inv, err;
  for (index_t m = 16; m <= 256; m *= 2) {
    inv.push_back(1.0 / m);
    err.push_back(spectral_norm(time_sliced_propagator(fam, space, Partition::uniform(0.0, 1.0, m)).matrix - exact));
  }
  const SlopeFit fit = loglog_slope(inv, err);
  EXPECT_NEAR(fit.slope, 1.0, 0.2);
}

TEST(CutoffPropagator, AutonomousConvergesImmediately) {
  auto fam = models::driven_circle(0.9, "const");
  auto space = cutoff_space(fam.model, 26.0);
  auto p = cutoff_propagator(fam, space, 0.0, 1.0, 1e-12);
  EXPECT_EQ(p.slices, 4);
  auto left = cutoff_propagator(fam, space, 0.0, 1.0, 1e-12, {SliceRule::left_endpoint});
  EXPECT_EQ(left.slices, 4);
}

TEST(CutoffPropagator, RampMatchesClosedForm) {
  auto fam = models::commuting_ramp();
  auto space = cutoff_space(fam.model, 6.5);
  auto p = cutoff_propagator(fam, space, 0.2, 1.3, 1e-10);
  EXPECT_LT(spectral_norm(p.matrix - ramp_closed_form(space.dim, 0.2, 1.3)), 1e-9);
  EXPECT_LE(p.unitarity_defect, 1e-10);
}

TEST(CutoffPropagator, RefinementLimit) {
  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 40.0);
  PropagatorOptions opts;
  opts.rule = SliceRule::left_endpoint;
  opts.max_slices = 64;
  try {
    cutoff_propagator(fam, space, 0.0, 1.0, 1e-10, opts);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::refinement_limit);
  }
}

TEST(CutoffPropagator, GroupProperties) {
  auto fam = models::driven_circle(1.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double tol = 1e-10;
  for (int trial = 0; trial < 6; ++trial) {
    auto space = cutoff_space(fam.model, 5.0 + 7.0 * trial);
    double a = unif(rng), b = unif(rng), c = unif(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const auto ts = cutoff_propagator(fam, space, a, c, tol);
    const auto tr = cutoff_propagator(fam, space, b, c, tol);
    const auto rs = cutoff_propagator(fam, space, a, b, tol);
    EXPECT_LE(spectral_norm(tr.matrix * rs.matrix - ts.matrix), 10 * tol);
    for (const auto* p : {&ts, &tr, &rs}) EXPECT_LE(p->unitarity_defect, 1e-10);
    const Vector v = random_unit(space.dim, rng);
    EXPECT_NEAR((ts.matrix * v).norm(), 1.0, 1e-10);
    EXPECT_EQ(cutoff_propagator(fam, space, b, b, tol).matrix, Matrix::Identity(space.dim, space.dim));
  }
}

TEST(Reference, FreeEvolutionIsPhase) {
  auto fam = models::free_circle();
  const index_t j = fam.model->index_of_label(3);
  auto u = ScaleVector::basis(fam.model, j);
  auto ref = reference_solution(fam, 200.0, 0.1, 0.9, u, 1e-10);
  EXPECT_EQ(ref.state.coeffs.size(), 1u);
  EXPECT_LT(std::abs(ref.state[j] - std::exp(-I * 9.0 * 0.8)), 1e-12);
}

TEST(Reference, NormAndStability) {
  auto fam = models::driven_circle(1.0);
  auto u = ScaleVector::basis(fam.model, 1, 0.6) + ScaleVector::basis(fam.model, 2, cplx(0.0, 0.8));
  auto ref = reference_solution(fam, 200.0, 0.0, 1.0, u, 1e-10);
  EXPECT_NEAR(sobolev_norm(ref.state, 0.0), 1.0, 1e-10);
  EXPECT_LT(ref.self_check_delta, 1e-9);

  auto far = ScaleVector::basis(fam.model, fam.model->index_of_label(8));
  try {
    reference_solution(fam, 200.0, 0.0, 1.0, far, 1e-10);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::support_too_close);
  }
}

TEST(Reference, ProjectedDynamicsResidual) {
  // i d/dt P_N U u = H_N P_N U u + P_N H (I - P_N) U u
  auto fam = models::driven_circle(1.0);
  auto u = ScaleVector::basis(fam.model, 1);
  auto space = cutoff_space(fam.model, 5.0);
  const double delta = 1e-3;
  const std::vector<double> centers{0.3, 0.55, 0.8};
  const std::vector<double> offsets{-2, -1, 0, 1, 2};
  std::vector<double> times;
  for (double c : centers)
    for (double o : offsets) times.push_back(c + o * delta);
  auto traj = reference_trajectory(fam, 100.0, 0.0, times, u, 1e-11);
  const CutoffHamiltonian hn(fam, space);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double t = centers[i];
    auto at = [&](std::size_t k) { return project(space, traj.states[5 * i + k]).dense(space); };
    const Vector derivative = (at(0) - 8.0 * at(1) + 8.0 * at(3) - at(4)) / (12.0 * delta);
    ScaleVector high = traj.states[5 * i + 2];
    for (index_t j = 1; j <= space.dim; ++j) high.coeffs.erase(j);
    const Vector remainder = project(space, apply_family(fam, t, high, 2)).dense(space);
    const Vector lhs = derivative + I * (hn.matrix_at(t) * at(2));
    EXPECT_GT(remainder.norm(), 1e-5);
    EXPECT_LT((lhs + I * remainder).norm(), 1e-4 * remainder.norm()) << "t=" << t;
  }
}

TEST(Duhamel, FreeControlIsExactZero) {
  auto fam = models::free_circle();
  auto u = ScaleVector::basis(fam.model, 1) + ScaleVector::basis(fam.model, 4);
  auto d = duhamel_bound(fam, 10.0, 100.0, u, 0.0, 1.0);
  EXPECT_EQ(d.bound, 0.0);
  EXPECT_LT(d.error, 1e-12);
}

TEST(Duhamel, BoundDominatesErrorAndDecays) {
  auto fam = models::driven_circle(1.0);
  auto u = ScaleVector::basis(fam.model, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double n : {10.0, 20.0, 40.0}) {
    auto d = duhamel_bound(fam, n, 200.0, u, 0.0, 1.0);
    EXPECT_LE(d.error, d.bound + 1e-8) << "N=" << n;
    EXPECT_LT(d.bound, prev);
    prev = d.bound;
  }
}

TEST(Commutator, Constants) {
  auto free = models::free_circle();
  EXPECT_EQ(commutator_constant(free, cutoff_space(free.model, 30.0), 1.0, 9), 0.0);
  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 20.0);
  EXPECT_EQ(commutator_constant(fam, space, 0.0, 9), 0.0);
  // Regression value for the driven circle, r = 1, N = 20, 33-point grid.
  EXPECT_NEAR(commutator_constant(fam, space, 1.0, 33), 1.1359162001338139, 1e-12);
}

TEST(Commutator, IsTheBestConstant) {
  // |<[W^2r, H] v, v>| <= C ||v||_r^2 with equality approached on the grid time.
  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 20.0);
  const double r = 1.0;
  const double c = commutator_constant(fam, space, r, 5, 0.25, 0.25);
  const RealVector w = scale_weights(space, r);
  const Matrix h = CutoffHamiltonian(fam, space).matrix_at(0.25);
  const Matrix w2 = w.cwiseProduct(w).cast<cplx>().asDiagonal();
  const Matrix comm = w2 * h - h * w2;
  std::mt19937_64 rng(4);
  double best = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vector v = random_unit(space.dim, rng);
    const double ratio = std::abs(v.dot(comm * v)) / (w.cast<cplx>().asDiagonal() * v).squaredNorm();
    EXPECT_LE(ratio, c * (1 + 1e-12));
    best = std::max(best, ratio);
  }
  // The maximizer is W^{-r} times an eigenvector of i W^{-r}[W^{2r},H]W^{-r}.
  const Matrix scaled = cplx(0.0, 1.0) * (w.cwiseInverse().cast<cplx>().asDiagonal() * comm *
                                         w.cwiseInverse().cast<cplx>().asDiagonal());
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
  Index arg = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&arg);
  const Vector v = w.cwiseInverse().cast<cplx>().asDiagonal() * es.eigenvectors().col(arg);
  const double attained = std::abs(v.dot(comm * v)) / (w.cast<cplx>().asDiagonal() * v).squaredNorm();
  EXPECT_NEAR(attained, c, 1e-12);
  EXPECT_LE(best, attained);
}

TEST(EnergyStability, Checks) {
  auto free = models::free_circle();
  auto fs = cutoff_space(free.model, 30.0);
  auto diag = energy_stability_check(free, fs, 1.0, 0.0, 1.0, commutator_constant(free, fs, 1.0, 9));
  EXPECT_NEAR(diag.max_ratio, 1.0, 1e-14);
  EXPECT_EQ(diag.bound, 1.0);

  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 20.0);
  auto r0 = energy_stability_check(fam, space, 0.0, 0.0, 1.0, 0.0);
  EXPECT_NEAR(r0.max_ratio, 1.0, 1e-12);
  const double c = commutator_constant(fam, space, 1.0, 33);
  auto r1 = energy_stability_check(fam, space, 1.0, 0.0, 1.0, c);
  EXPECT_LE(r1.max_ratio, r1.bound * (1 + 1e-8));
  EXPECT_LE(r1.operator_ratio, r1.bound * (1 + 1e-8));
  EXPECT_GT(r1.max_ratio, 1.0);
}

TEST(ConvergenceSweep, FreeAndSingleton) {
  auto free = models::free_circle();
  auto u = ScaleVector::basis(free.model, 1) + ScaleVector::basis(free.model, 6);
  auto sweep = convergence_sweep_N(free, u, 0.0, 1.0, {3.0, 10.0, 20.0}, 100.0);
  ASSERT_EQ(sweep.points.size(), 3u);
  // Mode 6 (k = -3, lambda = 10) is outside N = 3.
  EXPECT_NEAR(sweep.points[0].error, 1.0, 1e-12);
  EXPECT_LT(sweep.points[1].error, 1e-12);
  EXPECT_LT(sweep.points[2].error, 1e-12);

  auto single = convergence_sweep_N(free, u, 0.0, 0.5, {10.0}, 100.0);
  EXPECT_EQ(single.points.size(), 1u);
  EXPECT_THROW(convergence_sweep_N(free, u, 0.0, 1.0, {30.0}, 100.0), error);
}

TEST(ConvergenceSweep, DrivenCircleDecays) {
  auto fam = models::driven_circle(1.0);
  auto u = ScaleVector::basis(fam.model, 1);
  auto sweep = convergence_sweep_N(fam, u, 0.0, 1.0, {5.0, 10.0, 20.0, 40.0}, 200.0);
  for (std::size_t i = 1; i < sweep.points.size(); ++i) EXPECT_LT(sweep.points[i].error, sweep.points[i - 1].error);
  EXPECT_LT(sweep.points.back().error, 1e-6);
}

TEST(SlicingOrder, Sweeps) {
  auto autonomous = models::driven_circle(0.9, "const");
  auto as = cutoff_space(autonomous.model, 20.0);
  EXPECT_TRUE(slicing_order_sweep(autonomous, as, 0.0, 1.0, {4, 8, 16, 32}).fit.degenerate);

  auto fam = models::driven_circle(1.0);
  auto space = cutoff_space(fam.model, 20.0);
  auto order = slicing_order_sweep(fam, space, 0.0, 1.0, {32, 64, 128, 256});
  EXPECT_FALSE(order.fit.degenerate);
  EXPECT_NEAR(order.fit.slope, 1.0, 0.2);

  auto ramp = models::commuting_ramp();
  auto rs = cutoff_space(ramp.model, 5.5);
  auto closed = slicing_order_sweep(ramp, rs, 0.0, 1.0, {16, 32, 64, 128}, ramp_closed_form(rs.dim, 0.0, 1.0));
  EXPECT_NEAR(closed.fit.slope, 1.0, 0.2);
  EXPECT_THROW(slicing_order_sweep(fam, space, 0.0, 1.0, {32, 64, 100, 200}), error);
}
