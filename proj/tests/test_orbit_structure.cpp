#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tracelab/orbit_structure.hpp"

using namespace tracelab;

namespace {

const double kR2 = std::sqrt(2.0);

Monodromy quad_monodromy(const QuadraticHamiltonian& q, const Vec& z, double t) {
  return monodromy(q, z, t);
}

}  // namespace

TEST(Periods, NonResonantWindow) {
  const auto ps = enumerate_periods({1.0, kR2}, 5.0, 7.0);
  ASSERT_EQ(ps.entries.size(), 1u);
  EXPECT_NEAR(ps.entries[0].t, 2 * M_PI, 1e-15);
  EXPECT_EQ(ps.entries[0].resonant, std::vector<int>{0});
}

TEST(Periods, HalfPeriodOfFastMode) {
  const auto ps = enumerate_periods({1.0, 2.0}, 3.0, 4.0);
  ASSERT_EQ(ps.entries.size(), 1u);
  EXPECT_NEAR(ps.entries[0].t, M_PI, 1e-15);
  EXPECT_EQ(ps.entries[0].resonant, std::vector<int>{1});
}

TEST(Periods, EmptyBelowShortestPeriod) {
  EXPECT_TRUE(enumerate_periods({1.0, kR2}, 1e-9, 1.0).entries.empty());
}

TEST(Periods, SymmetricWindowMergesCoincidences) {
  const auto ps = enumerate_periods({1.0, 2.0}, -8.0, 8.0);
  // -2π, -π, 0, π, 2π  (2π shared by both modes)
  ASSERT_EQ(ps.entries.size(), 5u);
  EXPECT_EQ(ps.entries[2].t, 0.0);
  EXPECT_EQ(ps.entries[2].resonant, (std::vector<int>{0, 1}));
  EXPECT_EQ(ps.entries[4].resonant, (std::vector<int>{0, 1}));
  EXPECT_EQ(ps.entries[0].resonant, (std::vector<int>{0, 1}));
  for (std::size_t i = 1; i < ps.entries.size(); ++i) EXPECT_LT(ps.entries[i - 1].t, ps.entries[i].t);
}

TEST(Periods, NearMissIsWarned) {
  const auto ps = enumerate_periods({1.0, 1.0 + 1e-8}, 6.0, 6.5);
  EXPECT_FALSE(ps.warnings.empty());
}

TEST(Periods, InvalidWindow) { EXPECT_THROW(enumerate_periods({1.0}, 2.0, 1.0), Error); }

TEST(ResonantSubspace, Examples) {
  const Mat pi_sub = resonant_subspace({1.0, 2.0}, M_PI);
  ASSERT_EQ(pi_sub.cols(), 2);
  EXPECT_EQ(pi_sub(1, 0), 1.0);
  EXPECT_EQ(pi_sub(3, 1), 1.0);
  EXPECT_EQ(resonant_subspace({1.0, 2.0}, 2 * M_PI).cols(), 4);
  const Mat w1 = resonant_subspace({1.0, kR2}, 2 * M_PI);
  ASSERT_EQ(w1.cols(), 2);
  EXPECT_EQ(w1(0, 0), 1.0);
  EXPECT_EQ(w1(2, 1), 1.0);
  EXPECT_THROW(resonant_subspace({1.0, kR2}, 1.0), Error);
}

TEST(Components, QuadraticFamilies) {
  QuadraticHamiltonian q({1.0, 1.0, kR2});
  const auto comps = quadratic_components(q, 1.0, -0.1, 6.5);
  ASSERT_GE(comps.size(), 3u);
  EXPECT_EQ(comps[0].label, ComponentLabel::WeylZero);
  EXPECT_EQ(comps[0].dim, 5);
  // 2π/√2 then 2π.
  EXPECT_EQ(comps[1].label, ComponentLabel::NonDegenerateOrbit);
  EXPECT_EQ(comps[2].label, ComponentLabel::GroupTube);
  EXPECT_EQ(comps[2].dim, 3);
  EXPECT_NEAR(comps[2].action, 2 * M_PI, 1e-12);
  for (const auto& c : comps) {
    EXPECT_NEAR(q.energy(c.z), 1.0, 1e-12);
    if (c.t != 0.0) {
      EXPECT_LE((flow(q, c.z, c.t).final_state - c.z).norm(), 1e-10);
    }
  }
  EXPECT_NEAR(primitive_period({1.0, 2.0}, {0, 1}), 2 * M_PI, 1e-14);
  EXPECT_NEAR(primitive_period({1.0, 2.0}, {1}), M_PI, 1e-14);
}

TEST(Classify, NamedExamples) {
  EXPECT_EQ(classify_frequencies({1.0, kR2}).verdict, FrequencyClass::AllNonDegenerate);
  EXPECT_EQ(classify_frequencies({1.0, 2.0}).verdict, FrequencyClass::AllPeriodic);
  EXPECT_EQ(classify_frequencies({1.0, 1.0, kR2}).verdict, FrequencyClass::AllNDR);
  EXPECT_EQ(classify_frequencies({1.0, 1.0}).verdict, FrequencyClass::Isochronous);
  EXPECT_EQ(classify_frequencies({1.0, 2.0, kR2}).verdict, FrequencyClass::Mixed);
  EXPECT_EQ(classify_frequencies({3.0}).verdict, FrequencyClass::Isochronous);
}

TEST(Classify, ContinuedFractions) {
  const auto r = rational_ratio(0.75, 1.0);
  EXPECT_TRUE(r.rational);
  EXPECT_EQ(r.p, 3);
  EXPECT_EQ(r.q, 4);
  const auto s = rational_ratio(kR2, 1.0);
  EXPECT_FALSE(s.rational);
  // 1 + 1e-12: best convergent within the bound is 1/1, far from exact but within 1e-9.
  const auto b = rational_ratio(1.0 + 1e-12, 1.0);
  EXPECT_FALSE(b.rational);
  EXPECT_TRUE(b.borderline);
  EXPECT_TRUE(rational_ratio(355.0, 113.0).rational);
  EXPECT_FALSE(rational_ratio(M_PI, 1.0, 1000).rational);
}

TEST(Predicates, NonDegenerate) {
  QuadraticHamiltonian q({1.0, kR2});
  const Vec z = q.point_from_modes({1.0, 0.0}, {0.2, 0.0});
  auto split = invariant_split(quad_monodromy(q, z, 2 * M_PI));
  EXPECT_TRUE(is_nondegenerate(split));

  QuadraticHamiltonian h({1.0, 1.0});
  const Vec y = h.point_from_modes({0.5, 0.5}, {0.2, 0.9});
  EXPECT_FALSE(is_nondegenerate(invariant_split(quad_monodromy(h, y, 2 * M_PI))));

  QuadraticHamiltonian t({1.0, 1.0, kR2});
  const Vec x = t.point_from_modes({0.5, 0.5, 0.0}, {0.2, 0.9, 0.0});
  const auto s3 = invariant_split(quad_monodromy(t, x, 2 * M_PI));
  EXPECT_EQ(s3.dim_e1(), 4);
  EXPECT_FALSE(is_nondegenerate(s3));
}

TEST(Predicates, Ndr) {
  const std::vector<double> w{1.0, 1.0, kR2};
  QuadraticHamiltonian t(w);
  const Vec x = t.point_from_modes({0.4, 0.6, 0.0}, {0.2, 0.9, 0.0});
  const auto split = invariant_split(quad_monodromy(t, x, 2 * M_PI));
  EXPECT_TRUE(is_ndr(split, x, t.gradient(x), unitary_block_generators(w, {0, 1})));
  EXPECT_TRUE(is_ndr(split, x, t.gradient(x), equal_frequency_generators(w)));

  QuadraticHamiltonian q({1.0, kR2});
  const Vec z = q.point_from_modes({1.0, 0.0}, {0.2, 0.0});
  EXPECT_TRUE(is_ndr(invariant_split(quad_monodromy(q, z, 2 * M_PI)), z, q.gradient(z), {}));

  QuadraticHamiltonian h({1.0, 1.0});
  const Vec y = h.point_from_modes({0.5, 0.5}, {0.2, 0.9});
  EXPECT_FALSE(is_ndr(invariant_split(quad_monodromy(h, y, 2 * M_PI)), y, h.gradient(y), {}));

  Mat bad = Mat::Identity(6, 6);
  EXPECT_THROW(is_ndr(split, x, t.gradient(x), {bad}), Error);
}

TEST(Predicates, NormalCounterexample) {
  QuadraticHamiltonian q({1.0, 2.0});
  const Vec z = q.point_from_modes({0.0, 1.0}, {0.0, 0.4});  // z in Δ_π
  const Monodromy m = quad_monodromy(q, z, 2 * M_PI);
  const auto fam = component_energies(q);
  // ∇F_1 vanishes at z: dependent gradients by default.
  try {
    is_normal(m, z, q.gradient(z), fam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DependentGradients);
  }
  NormalityOptions prune;
  prune.prune_dependent = true;
  EXPECT_FALSE(is_normal(m, z, q.gradient(z), fam, prune));
  EXPECT_FALSE(is_sigma_normal(m, z, q.gradient(z), fam, prune));
}

TEST(Predicates, NormalGenericPoint) {
  QuadraticHamiltonian q({1.0, 2.0});
  const Vec z = q.point_from_modes({0.4, 0.6}, {0.3, 1.1});
  const Monodromy m = quad_monodromy(q, z, 2 * M_PI);
  // Component energies alone leave the 3-dim fixed space under-spanned.
  EXPECT_FALSE(is_normal(m, z, q.gradient(z), component_energies(q)));
  FirstIntegralFamily fam = component_energies(q);
  fam.integrals.push_back(resonant_monomial(q, 0, 1, 2, 1, false));
  EXPECT_TRUE(is_normal(m, z, q.gradient(z), fam));
  EXPECT_TRUE(is_sigma_normal(m, z, q.gradient(z), fam));
  NormalityOptions prune;
  prune.prune_dependent = true;
  EXPECT_TRUE(is_sigma_normal(m, z, q.gradient(z), resonant_integrals(q, {0, 1}), prune));
}

TEST(Predicates, NormalNonDegenerateWithEnergyOnly) {
  QuadraticHamiltonian q({1.0, kR2});
  const Vec z = q.point_from_modes({1.0, 0.0}, {0.2, 0.0});
  FirstIntegralFamily fam;
  fam.integrals.push_back({"H", [q](const Vec& v) { return q.energy(v); },
                           [q](const Vec& v) { return q.gradient(v); }});
  const Monodromy m = quad_monodromy(q, z, 2 * M_PI);
  EXPECT_TRUE(is_normal(m, z, q.gradient(z), fam));
  EXPECT_TRUE(is_sigma_normal(m, z, q.gradient(z), fam));
}

TEST(Predicates, NotFirstIntegralIsPrecondition) {
  QuadraticHamiltonian q({1.0, kR2});
  const Vec z = q.point_from_modes({0.5, 0.5}, {0.2, 0.3});
  FirstIntegralFamily fam;
  fam.integrals.push_back({"x1", [](const Vec& v) { return v(0); },
                           [](const Vec& v) { return Vec(Vec::Unit(v.size(), 0)); }});
  const Monodromy m = quad_monodromy(q, z, 2 * M_PI);
  EXPECT_THROW(is_normal(m, z, q.gradient(z), fam), Error);
}

TEST(Predicates, HypRc) {
  Mat id = Mat::Identity(4, 4);
  const Monodromy mid(id, Vec::Zero(4), 0.0);
  EXPECT_TRUE(check_hyp_rc(invariant_split(mid), id));
  for (auto w : {std::vector<double>{1.0, kR2}, {1.0, 2.0}, {1.0, 1.0, kR2}}) {
    QuadraticHamiltonian q(w);
    for (const auto& c : quadratic_components(q, 1.0, -8.0, 8.0)) {
      const Monodromy m = quad_monodromy(q, c.z, c.t);
      EXPECT_TRUE(check_hyp_rc(invariant_split(m), m.matrix()));
      EXPECT_TRUE(check_hyp_dg(m.matrix(), q.gradient(c.z)));
    }
  }
  // Jordan-type shear: E1 = ker(M-I)^2 also holds for a single block.
  Mat shear = Mat::Identity(2, 2);
  shear(0, 1) = 1.0;
  const Monodromy ms(shear, Vec::Zero(2), 1.0);
  EXPECT_TRUE(check_hyp_rc(invariant_split(ms), shear));
}

TEST(Predicates, CleanFlow) {
  QuadraticHamiltonian q({1.0, kR2});
  const Vec z = q.point_from_modes({1.0, 0.0}, {0.2, 0.0});
  const Mat m = q.flow_matrix(2 * M_PI);
  EXPECT_TRUE(clean_flow_check(m, q.gradient(z), quadratic_component_tangent(q.frequencies(), 2 * M_PI,
                                                                               q.gradient(z))));
  // T = 0: tangent {0} × T_zΣ_E.
  const Mat id = Mat::Identity(4, 4);
  EXPECT_TRUE(clean_flow_check(id, q.gradient(z), quadratic_component_tangent(q.frequencies(), 0.0,
                                                                                q.gradient(z))));
  // Non-normal counterexample: undersized candidate tangent {0} × (Δ_π ∩ T_zΣ_E).
  QuadraticHamiltonian r({1.0, 2.0});
  const Vec y = r.point_from_modes({0.0, 1.0}, {0.0, 0.4});
  const Mat cand = quadratic_component_tangent(r.frequencies(), M_PI, r.gradient(y));
  EXPECT_FALSE(clean_flow_check(r.flow_matrix(2 * M_PI), r.gradient(y), cand));
  EXPECT_TRUE(clean_flow_check(r.flow_matrix(2 * M_PI), r.gradient(y),
                               quadratic_component_tangent(r.frequencies(), 2 * M_PI, r.gradient(y))));
}

TEST(Predicates, FixedSpanContainsComponentFields) {
  for (auto w : {std::vector<double>{1.0, kR2}, {1.0, 2.0}, {1.0, 1.0}, {1.0, 1.0, kR2}}) {
    QuadraticHamiltonian q(w);
    const int n = q.dof();
    for (const auto& c : quadratic_components(q, 1.0, -8.0, 8.0)) {
      const Mat a = q.flow_matrix(c.t) - Mat::Identity(2 * n, 2 * n);
      for (int j : c.resonant) {
        const Vec v = symplectic_j(n) * q.mode_energy_gradient(j, c.z);
        EXPECT_LE((a * v).norm(), 1e-10);
        EXPECT_LE(std::abs(v.dot(q.gradient(c.z))), 1e-12);
      }
    }
  }
}

TEST(Predicates, SigmaNormalImpliesClean) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
  for (auto w : {std::vector<double>{1.0, kR2}, {1.0, 2.0}, {1.0, 1.0}, {1.0, 1.0, kR2}}) {
    QuadraticHamiltonian q(w);
    const int n = q.dof();
    for (const auto& c : quadratic_components(q, 1.0, -8.0, 8.0)) {
      for (int s = 0; s < 10; ++s) {
        std::vector<double> energies(static_cast<std::size_t>(n), 0.0), phases(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int j : c.resonant) total += (energies[static_cast<std::size_t>(j)] = 0.1 + u(rng));
        for (auto& e : energies) e /= total;
        for (auto& p : phases) p = u(rng);
        const Vec z = q.point_from_modes(energies, phases);
        const Monodromy m = quad_monodromy(q, z, c.t);
        NormalityOptions prune;
        prune.prune_dependent = true;
        const auto fam = resonant_integrals(q, c.resonant);
        const Mat tangent = quadratic_component_tangent(w, c.t, q.gradient(z));
        if (is_sigma_normal(m, z, q.gradient(z), fam, prune)) {
          EXPECT_TRUE(clean_flow_check(m.matrix(), q.gradient(z), tangent));
        }
        // Tangent of Z_T equals ker(M - I) ∩ T_zΣ_E.
        const Mat fixed = fixed_point_kernel(m.matrix(), q.gradient(z));
        EXPECT_TRUE(subspace_contains(tangent, fixed));
        EXPECT_TRUE(subspace_contains(fixed, tangent));
      }
    }
  }
}

TEST(MomentMap, Examples) {
  QuadraticHamiltonian h({1.0, 1.0});
  const auto f = moment_map(symplectic_j(2));
  Vec z(4);
  z << 0.3, -0.1, 0.5, 0.8;
  EXPECT_NEAR(f.value(z), -z.squaredNorm(), 1e-15);
  EXPECT_NEAR(f.value(flow(h, z, 1.234).final_state), f.value(z), 1e-12);
  const auto zero = moment_map(Mat::Zero(4, 4));
  EXPECT_EQ(zero.value(z), 0.0);
  EXPECT_THROW(moment_map(Mat::Identity(4, 4)), Error);

  const std::vector<double> w{1.0, 1.0, kR2};
  QuadraticHamiltonian t(w);
  Vec y(6);
  y << 0.2, -0.5, 0.1, 0.7, 0.3, -0.4;
  for (const auto& a : unitary_block_generators(w, {0, 1})) {
    const auto fa = moment_map(a);
    EXPECT_NEAR(fa.value(flow(t, y, 2.7).final_state), fa.value(y), 1e-8);
  }
}

TEST(MomentMap, ResonantMonomialConserved) {
  QuadraticHamiltonian q({1.0, 2.0});
  const auto re = resonant_monomial(q, 0, 1, 2, 1, false);
  const auto im = resonant_monomial(q, 0, 1, 2, 1, true);
  Vec z(4);
  z << 0.4, -0.3, 0.2, 0.6;
  for (double t : {0.3, 1.7, 5.0}) {
    const Vec zt = flow(q, z, t).final_state;
    EXPECT_NEAR(re.value(zt), re.value(z), 1e-12);
    EXPECT_NEAR(im.value(zt), im.value(z), 1e-12);
  }
  // Gradient against central differences.
  for (const auto* f : {&re, &im}) {
    const Vec g = f->gradient(z);
    for (int i = 0; i < 4; ++i) {
      Vec zp = z, zm = z;
      zp(i) += 1e-6;
      zm(i) -= 1e-6;
      EXPECT_NEAR((f->value(zp) - f->value(zm)) / 2e-6, g(i), 1e-8);
    }
  }
  EXPECT_THROW(resonant_monomial(q, 0, 1, 1, 1, false), Error);
}
