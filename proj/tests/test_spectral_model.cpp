#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cutofflab/spectral_model.hpp"

using namespace cutofflab;

namespace {

ModelPtr linear_model() {
  ModelParams p;
  p.unit_linear = true;
  return build_model(ModelKind::explicit_diagonal, p);
}

ScaleVector random_vector(const ModelPtr& model, std::mt19937_64& rng, index_t max_index) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<index_t> count(1, 8), pick(1, max_index);
  ScaleVector u{model, {}};
  for (int i = count(rng); i > 0; --i) u.coeffs[pick(rng)] = cplx(gauss(rng), gauss(rng));
  return u;
}

}  // namespace

TEST(SpectralModel, FourierEigenvaluesAndLabels) {
  auto m = build_model(ModelKind::fourier_circle);
  const double expected[] = {1, 2, 2, 5, 5};
  const index_t labels[] = {0, 1, -1, 2, -2};
  for (index_t j = 1; j <= 5; ++j) {
    EXPECT_EQ(m->eigenvalue(j), expected[j - 1]);
    EXPECT_EQ(m->label(j), labels[j - 1]);
    EXPECT_EQ(m->index_of_label(labels[j - 1]), j);
  }
}

TEST(SpectralModel, HermiteAndExplicitEigenvalues) {
  auto h = build_model(ModelKind::hermite_line);
  auto e = linear_model();
  for (index_t j = 1; j <= 6; ++j) {
    EXPECT_EQ(h->eigenvalue(j), 2.0 * j);
    EXPECT_EQ(e->eigenvalue(j), static_cast<double>(j));
  }
  ModelParams p;
  p.eigenvalue = [](index_t j) { return 0.5 * j; };
  auto g = build_model(ModelKind::explicit_diagonal, p);
  EXPECT_EQ(g->eigenvalue(3), 1.5);
}

TEST(SpectralModel, EigenvaluesNondecreasingAndUnbounded) {
  for (auto kind : {ModelKind::fourier_circle, ModelKind::hermite_line}) {
    auto m = build_model(kind);
    for (index_t j = 1; j < 500; ++j) ASSERT_GE(m->eigenvalue(j + 1), m->eigenvalue(j));
    EXPECT_GT(m->eigenvalue(500), 200.0);
  }
}

TEST(SpectralModel, InvalidParameters) {
  ModelParams none;
  EXPECT_THROW(build_model(ModelKind::explicit_diagonal, none), error);

  ModelParams decreasing;
  decreasing.eigenvalue = [](index_t j) { return j == 5 ? 1.0 : static_cast<double>(j); };
  try {
    build_model(ModelKind::explicit_diagonal, decreasing);
    FAIL() << "expected invalid-parameters";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::invalid_parameters);
  }

  ModelParams skew;
  skew.unit_linear = true;
  skew.terms.push_back(sparse_term("skew", {{1, 2, 1.0}, {2, 1, -1.0}}));
  EXPECT_THROW(build_model(ModelKind::explicit_diagonal, skew), error);
}

TEST(SpectralModel, BuiltinTermsAreExactlyHermitian) {
  for (auto kind : {ModelKind::fourier_circle, ModelKind::hermite_line}) {
    auto m = build_model(kind);
    for (const auto& name : m->term_names()) {
      const auto& t = m->term(name);
      double worst = 0.0;
      for (index_t j = 1; j <= 64; ++j)
        for (index_t k = 1; k <= 64; ++k) worst = std::max(worst, std::abs(t.element(j, k) - std::conj(t.element(k, j))));
      EXPECT_EQ(worst, 0.0) << name;
    }
  }
}

TEST(SpectralModel, BuiltinTermElements) {
  auto f = build_model(ModelKind::fourier_circle);
  const auto& lap = f->term("laplacian");
  const auto& cosx = f->term("cos_x");
  EXPECT_EQ(lap.element(f->index_of_label(-3), f->index_of_label(-3)), cplx(9.0));
  EXPECT_EQ(cosx.element(f->index_of_label(2), f->index_of_label(1)), cplx(0.5));
  EXPECT_EQ(cosx.element(f->index_of_label(0), f->index_of_label(-1)), cplx(0.5));
  EXPECT_EQ(cosx.element(f->index_of_label(1), f->index_of_label(-1)), cplx(0.0));

  auto h = build_model(ModelKind::hermite_line);
  EXPECT_EQ(h->term("oscillator").element(3, 3), cplx(5.0));
  EXPECT_DOUBLE_EQ(h->term("position").element(1, 2).real(), std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(h->term("position").element(4, 3).real(), std::sqrt(1.5));
  EXPECT_THROW(h->term("momentum"), error);
}

TEST(CutoffSpace, Examples) {
  auto f = build_model(ModelKind::fourier_circle);
  auto s = cutoff_space(f, 5.0);
  EXPECT_EQ(s.dim, 5);
  for (index_t j : s.indices()) EXPECT_LE(std::abs(f->label(j)), 2);

  auto h = cutoff_space(build_model(ModelKind::hermite_line), 7.0);
  EXPECT_EQ(h.dim, 3);
  EXPECT_EQ(cutoff_space(linear_model(), 10.0).dim, 10);
  EXPECT_EQ(cutoff_space(linear_model(), 0.5).dim, 0);
  EXPECT_THROW(cutoff_space(f, -1.0), error);
}

TEST(CutoffSpace, MonotoneExhaustion) {
  auto f = build_model(ModelKind::fourier_circle);
  index_t prev = 0;
  for (double n = 0.0; n < 200.0; n += 0.7) {
    const auto s = cutoff_space(f, n);
    EXPECT_GE(s.dim, prev);
    for (index_t j = 1; j <= s.dim; ++j) ASSERT_LE(f->eigenvalue(j), n);
    EXPECT_GT(f->eigenvalue(s.dim + 1), n);
    prev = s.dim;
  }
}

TEST(ScaleVectorOps, Project) {
  auto m = linear_model();
  auto space = cutoff_space(m, 10.5);
  auto u = ScaleVector::basis(m, 1) + ScaleVector::basis(m, 100);
  auto p = project(space, u);
  EXPECT_EQ(p.coeffs.size(), 1u);
  EXPECT_EQ(p[1], cplx(1.0));
  auto inside = ScaleVector::basis(m, 3, cplx(0.0, 2.0));
  EXPECT_EQ(project(space, inside).coeffs, inside.coeffs);
  EXPECT_TRUE(project(space, ScaleVector{m, {}}).coeffs.empty());

  auto other = build_model(ModelKind::hermite_line);
  EXPECT_THROW(project(space, ScaleVector::basis(other, 1)), error);
}

TEST(ScaleVectorOps, SobolevNorm) {
  auto m = linear_model();
  EXPECT_DOUBLE_EQ(sobolev_norm(ScaleVector::basis(m, 4), 1.5), std::pow(5.0, 1.5));
  auto u = ScaleVector::basis(m, 1) + ScaleVector::basis(m, 2);
  // (1+1)^2 + (1+2)^2 = 13
  EXPECT_DOUBLE_EQ(sobolev_norm(u, 1.0), std::sqrt(13.0));
  EXPECT_DOUBLE_EQ(sobolev_norm(u, 0.0), std::sqrt(2.0));
}

TEST(ScaleVectorOps, TailNorm) {
  auto m = linear_model();
  auto u = ScaleVector::basis(m, 3, 2.0);
  EXPECT_EQ(tail_norm(*m, u, 5.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(tail_norm(*m, u, 2.5, 0.0), 2.0);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_vector(m, rng, 40);
    double prev = tail_norm(*m, v, 0.0, 1.0);
    for (double n = 0.5; n < 45.0; n += 1.0) {
      const double cur = tail_norm(*m, v, n, 1.0);
      EXPECT_LE(cur, prev);
      prev = cur;
    }
    EXPECT_EQ(tail_norm(*m, v, static_cast<double>(v.max_index()), 2.0), 0.0);
  }
}

TEST(ScaleVectorOps, ProjectionContracts) {
  auto m = build_model(ModelKind::fourier_circle);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto u = random_vector(m, rng, 60);
    auto space = cutoff_space(m, 0.5 + trial);
    for (double s : {0.0, 1.0, 2.0}) EXPECT_LE(sobolev_norm(project(space, u), s), sobolev_norm(u, s));
    auto pp = project(space, project(space, u));
    EXPECT_EQ(pp.coeffs, project(space, u).coeffs);
  }
}

TEST(ScaleWeights, Examples) {
  ModelParams p;
  p.eigenvalue = [](index_t j) { return j == 1 ? 1.0 : (j <= 3 ? 2.0 : static_cast<double>(j)); };
  auto m = build_model(ModelKind::explicit_diagonal, p);
  auto space = cutoff_space(m, 2.5);
  ASSERT_EQ(space.dim, 3);
  EXPECT_EQ(scale_weights(space, 0.0), RealVector::Ones(3));
  const RealVector w1 = scale_weights(space, 1.0);
  EXPECT_EQ(w1, (RealVector(3) << 2, 3, 3).finished());
  EXPECT_TRUE(scale_weights(space, -1.0).isApprox(w1.cwiseInverse()));
  EXPECT_THROW(scale_weights(cutoff_space(m, 0.1), 1.0), error);
}
