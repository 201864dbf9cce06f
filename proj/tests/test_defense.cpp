#include "common.hpp"

using namespace zt;

namespace {

ComplexList zeros_of(const DiscreteLTI& d) { return transfer_zeros(d.A, d.B, d.C); }

ComplexList random_targets(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> re(-0.8, 0.8);
  ComplexList zs;
  for (int i = 0; i < count; ++i) zs.emplace_back(re(rng), 0.0);
  return zs;
}

}  // namespace

TEST(ExactHold, DoubleIntegratorAnchor) {
  const ExactHoldDesign d = design_exact_hold(double_integrator(), 1.0, 2, ComplexList{0.0}, std::nullopt);
  Vector h(2);
  h << 3, -1;
  EXPECT_LT(max_abs_diff(d.hold.h, h), 1e-9);
  // independent check: piece integrals of e^{A(1-s)} B are [3/8, 1/2] and [1/8, 1/2], so B = [1, 1]
  // and C adj(zI - A_d) B = (z - 1) + 1 = z
  Vector B(2);
  B << 1, 1;
  const DiscreteLTI m = hold_discrete_model(double_integrator(), d.hold);
  EXPECT_LT(max_abs_diff(m.B, B), 1e-12);
  EXPECT_LT(max_abs(zeros_of(m)), 1e-9);
}

TEST(ExactSampler, DoubleIntegratorAnchor) {
  const ExactSamplerDesign d = design_exact_sampler(double_integrator(), 1.0, 3, ComplexList{0.0, 0.0}, std::nullopt);
  Vector w(3);
  w << 0.75, -3, 3.25;
  EXPECT_LT(max_abs_diff(d.sampler.w, w), 1e-9);
  EXPECT_NEAR(d.sampler.w.sum(), 1.0, 1e-12);
  // y_g[k] = sum_i w_i y((k-1) + i/3): expand with y(t) = x1 + x2 t + u t^2 / 2 on the previous period
  double cx1 = 0, cx2 = 0, cu = 0;
  for (int i = 1; i <= 3; ++i) {
    const double t = i / 3.0;
    cx1 += w(i - 1);
    cx2 += w(i - 1) * t;
    cu += w(i - 1) * t * t / 2;
  }
  const DiscreteLTI m = sampler_discrete_model(double_integrator(), d.sampler, HoldProfile::zoh(1.0));
  EXPECT_NEAR(m.C(0, 0), cx1, 1e-12);
  EXPECT_NEAR(m.C(0, 1), cx2, 1e-12);
  EXPECT_NEAR(m.C(0, 2), cu, 1e-12);
  EXPECT_LT(multiset_distance(zeros_of(m), ComplexList{0.0, 0.0}), 1e-6);
}

TEST(ExactDesignProperty, LowOrderRoundTrips) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3;
    const ContinuousLTI s = random_system(rng, n);
    const ComplexList zh = random_targets(rng, n - 1);
    const ExactHoldDesign hd = design_exact_hold(s, 1.0, n, zh, std::nullopt);
    EXPECT_NEAR(hd.hold.h.sum(), n, 1e-9 * std::max(1.0, hd.hold.h.norm()));
    EXPECT_LT(multiset_distance(zeros_of(hold_discrete_model(s, hd.hold)), zh), 1e-6) << "trial " << trial;
    const ComplexList zs = random_targets(rng, n);
    const ExactSamplerDesign sd = design_exact_sampler(s, 1.0, n + 1, zs, std::nullopt);
    EXPECT_NEAR(sd.sampler.w.sum(), 1.0, 1e-9 * std::max(1.0, sd.sampler.w.norm()));
    const DiscreteLTI sm = sampler_discrete_model(s, sd.sampler, HoldProfile::zoh(1.0));
    EXPECT_LT(multiset_distance(zeros_of(sm), zs), 1e-6) << "trial " << trial;
  }
}

TEST(ExactDesignProperty, ExplicitGainIsRespected) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    const ContinuousLTI s = random_system(rng, 3);
    const ComplexList zh = random_targets(rng, 2);
    const ExactHoldDesign hd = design_exact_hold(s, 1.0, 3, zh, 2.5);
    const DiscreteLTI m = hold_discrete_model(s, hd.hold);
    // leading numerator coefficient C B equals k_d for a relative-degree-one target
    EXPECT_NEAR((m.C * m.B)(0, 0), 2.5, 1e-8);
  }
}

TEST(ContinuousHold, RealizesTheTargetInputMap) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const ContinuousLTI s = random_system(rng, 2 + trial % 3);
    Vector Bg = Vector::Random(s.states());
    const HoldProfile h = gh_continuous(s, Bg, 1.0);
    EXPECT_LT((hold_input_map(s, h) - Bg).norm(), 1e-9 * std::max(1.0, Bg.norm()));
  }
}

TEST(HoldModel, UnitLevelsEqualZoh) {
  std::mt19937_64 rng(73);
  const ContinuousLTI s = random_system(rng, 4);
  const DiscreteLTI z = c2d_zoh(s, 0.7);
  const DiscreteLTI h = hold_discrete_model(s, HoldProfile::piecewise(Vector::Ones(5), 0.7));
  EXPECT_LT(max_abs_diff(z.B, h.B), 1e-12);
  EXPECT_LT(max_abs_diff(z.A, h.A), 1e-12);
  EXPECT_LT(max_abs_diff(hold_discrete_model(s, HoldProfile::zoh(0.7)).B, z.B), 1e-12);
}

TEST(HoldModel, PiecewiseValues) {
  Vector lv(3);
  lv << 1, -2, 4;
  const HoldProfile h = HoldProfile::piecewise(lv, 0.3);
  EXPECT_EQ(hold_value(h, double_integrator(), 0.05), 1.0);
  EXPECT_EQ(hold_value(h, double_integrator(), 0.15), -2.0);
  EXPECT_EQ(hold_value(h, double_integrator(), 0.25), 4.0);
}

TEST(SamplerModel, ConventionalAddsOnlyTheOriginZero) {
  const ContinuousLTI p = two_mass();
  const DiscreteLTI d = c2d_zoh(p, 0.1);
  const DiscreteLTI m = sampler_discrete_model(p, SamplerWeights::conventional_sampler(0.1, 4), HoldProfile::zoh(0.1));
  Matrix Cg(1, 5);
  Cg << p.C * d.A, (p.C * d.B)(0, 0);
  EXPECT_LT(max_abs_diff(m.C, Cg), 1e-12);
  ComplexList expect = zeros_of(d);
  expect.push_back(0.0);
  EXPECT_LT(multiset_distance(zeros_of(m), expect), 1e-6);
}

TEST(ExactDesign, TooFewPiecesIsReported) {
  const ContinuousLTI p = two_mass();
  const ComplexList zs = {0.1, 0.2, 0.3};
  EXPECT_EQ(code_of([&] { design_exact_hold(p, 0.1, 2, zs, 1.0); }), ErrorCode::NotInRange);
  EXPECT_EQ(code_of([&] { design_exact_sampler(p, 0.1, 3, ComplexList{0.1, 0.2, 0.3, 0.4}, 1.0); }),
            ErrorCode::NotInRowSpace);
}

TEST(ExactDesign, RejectsNonConjugateTargets) {
  EXPECT_EQ(code_of([] { design_exact_hold(two_mass(), 0.1, 4, ComplexList{Complex(0.1, 0.2), 0.0, 0.0}, 1.0); }),
            ErrorCode::InvalidArgument);
}

TEST(OptimalDesign, TwoMassZerosMoveInside) {
  const ContinuousLTI p = two_mass();
  EXPECT_GT(max_abs(zeros_of(c2d_zoh(p, 0.1))), 1.0);
  const OptimalDesign gh = gh_optimal(p, 0.1, 4, 0.0);
  EXPECT_NEAR(gh.hold.h.sum(), 4.0, 1e-10);
  const ComplexList zh = zeros_of(hold_discrete_model(p, gh.hold));
  EXPECT_LT(max_abs(zh), 1.0);
  EXPECT_LT(multiset_distance(zh, gh.zeros), 1e-6);
  const OptimalDesign gs = gs_optimal(p, 0.1, 5, 0.0);
  EXPECT_NEAR(gs.sampler.w.sum(), 1.0, 1e-10);
  EXPECT_LT(max_abs(zeros_of(sampler_discrete_model(p, gs.sampler, HoldProfile::zoh(0.1)))), 1.0);
}

TEST(OptimalDesign, MarginTightensTheRadius) {
  const ContinuousLTI p = two_mass();
  const OptimalDesign gs = gs_optimal(p, 0.1, 5, 0.05);
  EXPECT_LT(max_abs(zeros_of(sampler_discrete_model(p, gs.sampler, HoldProfile::zoh(0.1)))), 0.95);
  EXPECT_EQ(code_of([&] { gs_optimal(p, 0.1, 5, 1.5); }), ErrorCode::Infeasible);
  EXPECT_EQ(code_of([&] { gh_optimal(p, 0.1, 4, 1.0); }), ErrorCode::Infeasible);
}

TEST(OptimalDesign, MinimumPhasePlantKeepsConventionalSampler) {
  // (s + 1) / ((s + 2)(s + 3)): relative degree one, stable zero
  Vector num(2), den(3);
  num << 1, 1;
  den << 6, 5, 1;
  const OptimalDesign gs = gs_optimal(ss_from_tf(num, den), 0.1, 3, 0.0);
  Vector eN = Vector::Zero(3);
  eN(2) = 1.0;
  EXPECT_LT(max_abs_diff(gs.sampler.w, eN), 1e-4);
  const OptimalDesign gh = gh_optimal(ss_from_tf(num, den), 0.1, 2, 0.0);
  EXPECT_LT(max_abs_diff(gh.hold.h, Vector::Ones(2)), 1e-4);
}
