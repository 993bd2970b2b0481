#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/random_symplectic.hpp"
#include "tracelab/berry_tabor.hpp"

using namespace tracelab;

namespace {

const double kR2 = std::sqrt(2.0);

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PolynomialAction random_polynomial(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PolynomialCoefficients c;
  const Mat b = testkit::random_symmetric(n, 0.5, rng);
  c.quadratic = b * b.transpose() + 0.5 * Mat::Identity(n, n);
  c.linear = 0.3 * Vec::Random(n);
  c.quartic_diag = Vec(n);
  for (int j = 0; j < n; ++j) c.quartic_diag(j) = 0.1 * u(rng);
  c.quartic_radial = 0.05 * u(rng);
  return PolynomialAction(c, Vec::Constant(n, -3.0), Vec::Constant(n, 3.0));
}

class WrongHessian final : public ActionAngleSystem {
 public:
  WrongHessian() : ActionAngleSystem(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)) {}
  std::string name() const override { return "wrong"; }
  double energy(const Vec& a) const override { return 0.5 * a.squaredNorm(); }
  Vec frequencies(const Vec& a) const override { return a; }
  Mat hessian(const Vec&) const override { return 2.0 * Mat::Identity(2, 2); }
};

}  // namespace

TEST(FrequencyMap, FlatTorusAndLinear) {
  FlatTorus flat(2);
  const auto f = frequency_map(flat, vec({0.3, -1.2}));
  EXPECT_TRUE(f.w.isApprox(vec({0.3, -1.2})));
  EXPECT_TRUE(f.w_prime.isApprox(Mat::Identity(2, 2)));
  EXPECT_FALSE(f.degenerate);

  LinearAction lin(vec({1.0, kR2}));
  const auto g = frequency_map(lin, vec({0.5, 0.5}));
  EXPECT_TRUE(g.w.isApprox(vec({1.0, kR2})));
  EXPECT_EQ(g.w_prime.norm(), 0.0);
  EXPECT_TRUE(g.degenerate);
}

TEST(FrequencyMap, RandomPolynomialMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sys = random_polynomial(3, rng);
    const auto f = frequency_map(sys, Vec::Random(3));
    EXPECT_LT(f.fd_error, 1e-7);
  }
}

TEST(FrequencyMap, Errors) {
  FlatTorus flat(2, 1.0);
  try {
    frequency_map(flat, vec({2.0, 0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  try {
    frequency_map(WrongHessian(), vec({0.1, 0.2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolation);
  }
}

TEST(Predicates, NondegenerateAndIsochronous) {
  FlatTorus flat(2);
  const Vec i = vec({1.0, 1.0});  // E = 1
  EXPECT_NEAR(check_nondegenerate(flat, i).det, 1.0, 1e-15);
  EXPECT_TRUE(check_nondegenerate(flat, i).nondegenerate);
  EXPECT_NEAR(check_isochronous(flat, i).bracket, 2.0, 1e-14);
  EXPECT_TRUE(check_isochronous(flat, i).isochronous);

  LinearAction lin(vec({1.0, 1.0}));
  EXPECT_FALSE(check_nondegenerate(lin, vec({0.5, 0.5})).nondegenerate);
  try {
    check_isochronous(lin, vec({0.5, 0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDeterminant);
  }
}

TEST(Tori, FlatTorusCompleteness) {
  FlatTorus flat(2);
  const double t_max = 10.0;
  const auto res = enumerate_tori(flat, 1.0, 0.0, t_max, 3.0);
  EXPECT_TRUE(res.warnings.empty());
  int expected = 0;
  for (int a = -3; a <= 3; ++a) {
    for (int b = -3; b <= 3; ++b) {
      const double m = std::hypot(a, b);
      if (m > 0 && m <= 3 && 2 * M_PI * m / kR2 <= t_max) ++expected;
    }
  }
  ASSERT_EQ(static_cast<int>(res.tori.size()), expected);
  double last = 0.0;
  for (const auto& p : res.tori) {
    const double m = p.m_norm();
    EXPECT_GE(m, last);
    last = m;
    const Vec mv = vec({static_cast<double>(p.m_vec[0]), static_cast<double>(p.m_vec[1])});
    EXPECT_LE((p.action - kR2 * mv / m).norm(), 1e-8);
    EXPECT_NEAR(p.t, 2 * M_PI * m / kR2, 1e-8);
    EXPECT_LE(p.residual, 1e-10);
    EXPECT_NEAR(p.bracket, 2.0, 1e-10);
    EXPECT_NEAR(p.action_integral(), p.t * 2.0, 1e-9);
  }
  EXPECT_EQ(res.tori.front().m_vec, (std::vector<int>{-1, 0}));
}

TEST(Tori, DiagonalExampleAndEmptyWindow) {
  FlatTorus flat(2);
  const auto res = enumerate_tori(flat, 1.0, 6.0, 6.5, 2.0);
  ASSERT_EQ(res.tori.size(), 4u);
  EXPECT_EQ(res.tori[3].m_vec, (std::vector<int>{1, 1}));
  EXPECT_LE((res.tori[3].action - vec({1.0, 1.0})).norm(), 1e-10);
  EXPECT_NEAR(res.tori[3].t, 2 * M_PI, 1e-10);

  EXPECT_TRUE(enumerate_tori(flat, 1.0, 0.5, 4.0, 3.0).tori.empty());
}

TEST(Tori, BothSignsReportedAsMultipleSolutions) {
  FlatTorus flat(2);
  const auto res = enumerate_tori(flat, 1.0, -5.0, 5.0, 1.0);
  EXPECT_EQ(res.tori.size(), 8u);
  EXPECT_EQ(res.warnings.size(), 4u);
}

TEST(Tori, DegenerateSystemRejected) {
  LinearAction lin(vec({1.0, kR2}));
  try {
    enumerate_tori(lin, 1.0, 0.0, 10.0, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolation);
  }
}

TEST(Tori, DeterministicAcrossThreads) {
  std::mt19937_64 rng(12);
  const auto sys = random_polynomial(2, rng);
  TorusSearchOptions one, four;
  four.threads = 4;
  const auto a = enumerate_tori(sys, 1.0, 0.0, 12.0, 3.0, one);
  const auto b = enumerate_tori(sys, 1.0, 0.0, 12.0, 3.0, four);
  ASSERT_EQ(a.tori.size(), b.tori.size());
  ASSERT_FALSE(a.tori.empty());
  for (std::size_t i = 0; i < a.tori.size(); ++i) {
    EXPECT_EQ(a.tori[i].m_vec, b.tori[i].m_vec);
    EXPECT_EQ(a.tori[i].t, b.tori[i].t);
    EXPECT_EQ(a.tori[i].action, b.tori[i].action);
  }
}

TEST(Curvature, FlatTorusSphere) {
  FlatTorus flat2(2), flat3(3);
  const Vec i2 = vec({1.0, 1.0});
  EXPECT_NEAR(curvature_from_frequencies(flat2, i2), -1.0 / kR2, 1e-14);
  EXPECT_NEAR(curvature_from_parametrization(flat2, i2), -1.0 / kR2, 1e-6);
  const Vec i3 = vec({0.2, -1.0, 0.9});
  const double r2 = i3.squaredNorm();
  EXPECT_NEAR(curvature_from_frequencies(flat3, i3), 1.0 / r2, 1e-14);
  EXPECT_NEAR(curvature_from_parametrization(flat3, i3), 1.0 / r2, 1e-6);
}

TEST(Curvature, FlatDirection) {
  PolynomialCoefficients c;
  c.quadratic = Mat::Ones(2, 2);
  PolynomialAction sys(c, Vec::Constant(2, -3.0), Vec::Constant(2, 3.0));
  const Vec i = vec({0.4, 1.0});
  EXPECT_NEAR(curvature_from_frequencies(sys, i), 0.0, 1e-14);
  EXPECT_NEAR(curvature_from_parametrization(sys, i), 0.0, 1e-6);
}

TEST(Curvature, NullConeOfIndefiniteQuadratic) {
  PolynomialCoefficients c;
  c.quadratic = Mat::Zero(3, 3);
  c.quadratic.diagonal() << 1.0, 1.0, -2.0;
  PolynomialAction sys(c, Vec::Constant(3, -3.0), Vec::Constant(3, 3.0));
  const Vec i = vec({1.0, 1.0, 1.0});  // on the cone H = 0
  EXPECT_NEAR(check_isochronous(sys, i).bracket, 0.0, 1e-14);
  EXPECT_NEAR(curvature_from_frequencies(sys, i), 0.0, 1e-14);
  EXPECT_NEAR(curvature_from_parametrization(sys, i), 0.0, 1e-6);
}

TEST(Curvature, TwoRoutesAgreeOnRandomSystems) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 2;
    const auto sys = random_polynomial(n, rng);
    const Vec i = 1.5 * Vec::Random(n);
    const double kf = curvature_from_frequencies(sys, i);
    const double kp = curvature_from_parametrization(sys, i);
    EXPECT_LE(std::abs(kf - kp), 1e-4 * (1 + std::abs(kf))) << trial;
  }
}

TEST(Curvature, NormalFlipFlipsSignInEvenCodimension) {
  std::mt19937_64 rng(4);
  const auto sys = random_polynomial(2, rng);
  PolynomialCoefficients neg = sys.coefficients();
  neg.linear *= -1;
  neg.quadratic *= -1;
  neg.quartic_diag *= -1;
  neg.quartic_radial *= -1;
  PolynomialAction flipped(neg, sys.lower(), sys.upper());
  const Vec i = vec({0.7, -0.4});
  EXPECT_NEAR(curvature_from_frequencies(flipped, i), -curvature_from_frequencies(sys, i), 1e-12);
  EXPECT_NEAR(curvature_from_parametrization(flipped, i), -curvature_from_parametrization(sys, i), 1e-5);
  const auto a = bt_beta_candidates(2, curvature_from_frequencies(sys, i));
  const auto b = bt_beta_candidates(2, curvature_from_frequencies(flipped, i));
  EXPECT_EQ((a[0] + 2) % 4, b[0]);
}

TEST(Amplitude, FlatTorusModulusAndPhase) {
  FlatTorus flat(2);
  const auto res = enumerate_tori(flat, 1.0, 0.0, 9.0, 2.0);
  const PeriodicTorus* t10 = nullptr;
  const PeriodicTorus* t20 = nullptr;
  for (const auto& p : res.tori) {
    if (p.m_vec == std::vector<int>{1, 0}) t10 = &p;
    if (p.m_vec == std::vector<int>{2, 0}) t20 = &p;
  }
  ASSERT_TRUE(t10 && t20);
  EXPECT_EQ(bt_beta_candidates(2, -1.0), (std::array<int, 2>{3, 7}));
  const double h = 0.02;
  const Complex a = bt_amplitude(*t10, flat, 1.0, h, 7);
  EXPECT_NEAR(std::abs(a), 1.0 / (kR2 * std::pow(0.5, 0.25)) / std::sqrt(h), 1e-10);
  const Complex expected_phase = std::polar(1.0, 2 * M_PI * kR2 / h - M_PI / 4);
  EXPECT_LE(std::abs(a / std::abs(a) - expected_phase), 1e-9);
  EXPECT_NEAR(t10->action_integral(), t10->t * 2.0, 1e-10);

  EXPECT_NEAR(std::abs(bt_amplitude(*t20, flat, 1.0, h, 7)) / std::abs(a), 1.0 / kR2, 1e-10);
  for (double hh : {0.1, 0.01, 0.001}) {
    EXPECT_NEAR(std::abs(bt_amplitude(*t10, flat, 1.0, hh, 3)) * std::sqrt(hh), std::abs(a) * std::sqrt(h), 1e-12);
  }
  try {
    bt_amplitude(*t10, flat, 1.0, h, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolation);
  }
  try {
    bt_amplitude(*t10, flat, 1.0, h, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedPhase);
  }
}

TEST(IntNorm, FlatLinearAndRandom) {
  FlatTorus flat(2);
  const Vec i = vec({1.0, 1.0});
  const auto r = check_intnorm(flat, i, torus_model_monodromy(flat, i, 2 * M_PI));
  EXPECT_TRUE(r.w_prime_invertible);
  EXPECT_TRUE(r.kernel_is_angle_span);
  EXPECT_TRUE(*r.isochronous);
  EXPECT_TRUE(*r.jgrad_outside_image);
  EXPECT_TRUE(r.nilpotent);
  EXPECT_TRUE(r.first_equivalence() && r.second_equivalence());

  LinearAction lin(vec({1.0, 1.0}));
  const auto l = check_intnorm(lin, i, torus_model_monodromy(lin, i, 2 * M_PI));
  EXPECT_FALSE(l.w_prime_invertible);
  EXPECT_FALSE(l.kernel_is_angle_span);
  EXPECT_TRUE(l.first_equivalence());
  EXPECT_FALSE(l.isochronous.has_value());

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2;
    const auto sys = random_polynomial(n, rng);
    const Vec x = Vec::Random(n);
    const auto q = check_intnorm(sys, x, torus_model_monodromy(sys, x, 1.0 + trial));
    EXPECT_TRUE(q.w_prime_invertible && q.kernel_is_angle_span && q.nilpotent);
    EXPECT_TRUE(q.first_equivalence() && q.second_equivalence());
  }
}

TEST(IntNorm, ModelDensityMatchesCurvatureForm) {
  std::mt19937_64 rng(6);
  for (int n : {2, 3}) {
    const auto sys = random_polynomial(n, rng);
    const auto res = enumerate_tori(sys, 1.0, 0.0, 10.0, 2.0);
    ASSERT_FALSE(res.tori.empty());
    for (const auto& p : res.tori) {
      const Monodromy m = torus_model_monodromy(sys, p.action, p.t);
      const Vec grad = torus_model_gradient(sys, p.action);
      const Complex d2 = dg_density_general(invariant_split(m), grad, m).d_squared;
      const double k = curvature_from_frequencies(sys, p.action);
      const double w2 = sys.frequencies(p.action).squaredNorm();
      const Complex expected = std::pow(2 * M_PI, -(n - 1)) * std::pow(-1.0, n) * std::pow(Complex(0, 1), -(n + 1)) /
                               (w2 * k * std::pow(p.m_norm(), n - 1));
      EXPECT_LE(std::abs(d2 - expected), 1e-8 * std::abs(expected));

      const Mat tangent = torus_component_tangent(n);
      EXPECT_TRUE(clean_flow_check(m.matrix(), grad, tangent));
      EXPECT_FALSE(clean_flow_check(m.matrix(), grad, tangent.leftCols(n - 1)));
    }
  }
}
