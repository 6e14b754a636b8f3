#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cutofflab/hamiltonian.hpp"
#include "cutofflab/models.hpp"

using namespace cutofflab;

namespace {

ScaleVector random_vector(const ModelPtr& model, std::mt19937_64& rng, index_t max_index) {
  std::normal_distribution<double> gauss;
  ScaleVector u{model, {}};
  for (index_t j = 1; j <= max_index; ++j) u.coeffs[j] = cplx(gauss(rng), gauss(rng));
  return u;
}

double distance(const ScaleVector& a, const ScaleVector& b) { return sobolev_norm(a - b, 0.0); }

}  // namespace

TEST(Family, AssembleExamples) {
  auto circle = models::driven_circle(1.0);
  EXPECT_EQ(circle.terms.size(), 2u);
  EXPECT_EQ(circle.bandwidth(), 2);
  auto osc = models::driven_oscillator(make_coefficient("sin_2pi", 0.3));
  EXPECT_EQ(osc.bandwidth(), 1);

  ModelParams p;
  p.unit_linear = true;
  p.terms.push_back(sparse_term("block", {{1, 2, cplx(0.0, 0.5)}, {2, 1, cplx(0.0, -0.5)}, {3, 3, 1.0}}));
  auto kato = assemble_family(build_model(ModelKind::explicit_diagonal, p),
                              {{"h0_diag", make_coefficient("const", 1.0)}, {"block", make_coefficient("cos_2pi", 1.0)}},
                              1.0, 0.0);
  EXPECT_EQ(kato.bandwidth(), 1);
}

TEST(Family, Errors) {
  auto model = build_model(ModelKind::fourier_circle);
  try {
    assemble_family(model, {{"cos_y", make_coefficient("const", 1.0)}});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::unresolved_term);
  }
  EXPECT_THROW(assemble_family(model, {{"cos_x", make_coefficient("sin_2pi", 1.0)}}, 0.3), error);
  EXPECT_THROW(assemble_family(model, {{"cos_x", make_coefficient("ramp", 1.0)}}, 1.0), error);
  EXPECT_THROW(make_coefficient("exp", 1.0), error);
}

TEST(CutoffMatrix, FreeCircleIsDiagonal) {
  auto fam = models::free_circle();
  auto space = cutoff_space(fam.model, 17.5);
  const Matrix h = cutoff_matrix(fam, space, 0.3);
  for (index_t j = 1; j <= space.dim; ++j) {
    const double k = static_cast<double>(fam.model->label(j));
    EXPECT_EQ(h(j - 1, j - 1), cplx(k * k));
  }
  EXPECT_EQ((h - Matrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(CutoffMatrix, DrivenOscillatorTwoLevels) {
  auto fam = models::driven_oscillator(make_coefficient("const", 1.0), std::nullopt);
  auto space = cutoff_space(fam.model, 5.0);
  ASSERT_EQ(space.dim, 2);
  const Matrix h = cutoff_matrix(fam, space, 0.0);
  const double c = std::sqrt(0.5);
  EXPECT_EQ(h(0, 0), cplx(1.0));
  EXPECT_EQ(h(1, 1), cplx(3.0));
  EXPECT_DOUBLE_EQ(h(0, 1).real(), c);
  EXPECT_DOUBLE_EQ(h(1, 0).real(), c);
}

TEST(CutoffMatrix, DeterministicAndHermitian) {
  auto fam = models::driven_circle(1.3);
  auto space = cutoff_space(fam.model, 90.0);
  // sin(2 pi t) takes the same value at 0.1 and 0.4.
  EXPECT_EQ(cutoff_matrix(fam, space, 0.1), cutoff_matrix(fam, space, 0.1));
  EXPECT_LT((cutoff_matrix(fam, space, 0.1) - cutoff_matrix(fam, space, 0.4)).cwiseAbs().maxCoeff(), 1e-14);
  for (int i = 0; i < 20; ++i) {
    const Matrix h = cutoff_matrix(fam, space, 0.05 * i);
    EXPECT_LE(hermiticity_defect(h), 1e-14 * hermitian_spectral_norm(h));
  }
  EXPECT_THROW(cutoff_matrix(fam, cutoff_space(fam.model, 0.5), 0.0), error);
}

TEST(OperatorNormBound, Examples) {
  ModelParams p;
  p.unit_linear = true;
  auto lin = build_model(ModelKind::explicit_diagonal, p);
  auto diag = assemble_family(lin, {{"h0_diag", make_coefficient("const", 1.0)}}, 1.0);
  EXPECT_DOUBLE_EQ(operator_norm_bound(diag, cutoff_space(lin, 3.5), 8), 3.0);

  const double g = 0.7;
  auto sx = assemble_family(models::two_level_model(), {{"sigma_x", make_coefficient("sin_2pi", g)}}, 1.0);
  auto space = cutoff_space(sx.model, models::two_level_cutoff);
  EXPECT_NEAR(operator_norm_bound(sx, space, 4), g, 1e-15);

  auto circle = models::driven_circle(1.0);
  auto cs = cutoff_space(circle.model, 30.0);
  double prev = 0.0;
  for (int n = 3; n <= 96; n *= 2) {
    const double b = operator_norm_bound(circle, cs, n);
    EXPECT_GE(b, prev);
    prev = b;
  }
  auto aperiodic = models::commuting_ramp();
  EXPECT_THROW(operator_norm_bound(aperiodic, cutoff_space(aperiodic.model, 3.0), 4), error);
}

TEST(ApplyFamily, Examples) {
  auto free = models::free_circle();
  const index_t j = free.model->index_of_label(-3);
  auto out = apply_family(free, 0.2, ScaleVector::basis(free.model, j), 2);
  EXPECT_EQ(out.coeffs.size(), 1u);
  EXPECT_EQ(out[j], cplx(9.0));

  auto osc = assemble_family(build_model(ModelKind::hermite_line), {{"position", make_coefficient("const", 1.0)}});
  auto x0 = apply_family(osc, 0.0, ScaleVector::basis(osc.model, 1), 1);
  EXPECT_DOUBLE_EQ(x0[2].real(), std::sqrt(0.5));
  EXPECT_EQ(x0[1], cplx(0.0));

  auto circle = models::driven_circle();
  EXPECT_THROW(apply_family(circle, 0.0, ScaleVector::basis(circle.model, 1), 1), error);
}

TEST(ApplyFamily, Linearity) {
  auto circle = models::driven_circle(0.8);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto u = random_vector(circle.model, rng, 15);
    auto v = random_vector(circle.model, rng, 9);
    const double t = 0.037 * trial;
    auto lhs = apply_family(circle, t, u + v, 2);
    auto rhs = apply_family(circle, t, u, 2) + apply_family(circle, t, v, 2);
    EXPECT_LT(distance(lhs, rhs), 1e-12);
  }
}

TEST(ApplyFamily, MappingBound) {
  // ||H(t) u|| <= C ||u||_1 with H0 = 1 - d^2/dx^2: k^2 <= 1 + lambda and
  // ||cos x|| <= 1 give C = 2 for unit amplitude.
  constexpr double frozen_c = 2.0;
  auto circle = models::driven_circle(1.0);
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto u = random_vector(circle.model, rng, 1 + trial % 40);
    const double t = 0.25 + 0.001 * trial;
    worst = std::max(worst, sobolev_norm(apply_family(circle, t, u, 2), 0.0) / sobolev_norm(u, 1.0));
  }
  EXPECT_LE(worst, frozen_c);
  EXPECT_GT(worst, 0.5);
}

TEST(CutoffCompatibility, MatchesProjectedApplication) {
  auto circle = models::driven_circle(1.0);
  auto space = cutoff_space(circle.model, 50.0);
  const CutoffHamiltonian ch(circle, space);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    // Full support, including modes at the boundary.
    auto u = random_vector(circle.model, rng, space.dim);
    const double t = 0.05 * trial;
    const Vector lhs = ch.matrix_at(t) * u.dense(space);
    const Vector rhs = project(space, apply_family(circle, t, project(space, u), 2)).dense(space);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WordApply, Examples) {
  auto circle = models::driven_circle(1.0);
  auto space = cutoff_space(circle.model, 10.0);
  auto u = ScaleVector::basis(circle.model, 1) + ScaleVector::basis(circle.model, 30);
  auto w0 = word_apply(circle, {}, u, space);
  EXPECT_EQ(w0.coeffs, project(space, u).coeffs);

  auto free = models::free_circle();
  const index_t j = free.model->index_of_label(2);
  const double times[] = {0.3};
  auto e = ScaleVector::basis(free.model, j);
  auto with = word_apply(free, times, e, cutoff_space(free.model, 10.0));
  auto without = word_apply(free, times, e);
  EXPECT_EQ(with.coeffs, without.coeffs);
  EXPECT_EQ(with[j], cplx(4.0));
}

TEST(WordApply, CutoffWordsConverge) {
  // ||W_{m,N} u - W_m u|| decays and is exactly zero once the cut-off clears
  // the support plus m coupling widths.
  auto circle = models::driven_circle(1.0);
  auto u = ScaleVector::basis(circle.model, circle.model->index_of_label(0));
  const std::vector<std::vector<double>> words{{0.1}, {0.1, 0.35}, {0.1, 0.35, 0.8}};
  for (const auto& times : words) {
    const auto exact = word_apply(circle, times, u);
    double prev = std::numeric_limits<double>::infinity();
    for (double n : {1.5, 3.0, 10.0, 20.0, 40.0, 80.0}) {
      const double dev = distance(word_apply(circle, times, u, cutoff_space(circle.model, n)), exact);
      EXPECT_LE(dev, prev);
      prev = dev;
      const double needed = 1.0 + std::pow(static_cast<double>(times.size()), 2.0);
      if (n >= needed) {
        EXPECT_EQ(dev, 0.0) << "m=" << times.size() << " N=" << n;
      }
    }
    EXPECT_LT(prev, 1e-8);
  }
  // Truncating below the support radius changes the word.
  EXPECT_GT(distance(word_apply(circle, words[1], u, cutoff_space(circle.model, 1.5)), word_apply(circle, words[1], u)),
            0.0);
}
