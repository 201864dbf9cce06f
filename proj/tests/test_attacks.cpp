#include "common.hpp"

using namespace zt;

namespace {

// x(t) and generator state z(t) under a = gen.output(z), from one augmented exponential.
Vector augmented_state(const ContinuousLTI& p, const ExoAttackGenerator& g, const Vector& x0, double t) {
  const Eigen::Index n = p.states(), m = g.dim();
  Matrix M = Matrix::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = p.A;
  M.topRightCorner(n, m) = p.B * (g.scale * g.out_row);
  M.bottomRightCorner(m, m) = g.S_gen;
  Vector w(n + m);
  w << x0, g.delta;
  return matrix_exponential(M * t) * w;
}

}  // namespace

TEST(ZeroDynamicsAttack, ContinuousOutputStaysZero) {
  const ContinuousLTI p = two_mass();
  const NormalForm nf = to_normal_form(p);
  Vector delta(1);
  delta << 0.3;
  const ExoAttackGenerator g = ct_zero_dynamics_attack(nf, delta, 0.0);
  Vector xn = Vector::Zero(4);
  xn(3) = 0.3;
  const Vector x0 = nf.T.inverse() * xn;
  for (double t : {0.5, 1.0, 3.0}) {
    const Vector w = augmented_state(p, g, x0, t);
    EXPECT_LT(std::abs((p.C * w.head(4))(0, 0)), 1e-12 * std::max(1.0, w.norm()));
  }
}

TEST(ZeroDynamicsAttackProperty, DiscreteOutputStaysZero) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const DiscreteLTI d = c2d_zoh(random_system(rng, n, 0.5), 0.5);
    const NormalForm nf = to_normal_form(d);
    ASSERT_EQ(nf.r, 1);
    Vector delta(nf.zero_dim());
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) = g(rng);
    const ExoAttackGenerator gen = dt_zero_dynamics_attack(nf, delta, 3);
    Vector xn = Vector::Zero(n);
    xn.tail(nf.zero_dim()) = delta;
    Vector x = nf.T.inverse() * xn;
    // roundoff enters through T^{-1} and is amplified by the unstable zero dynamics
    const double tol = 1e-13 * nf.T.norm() * nf.T.inverse().norm() * d.C.norm();
    for (long k = 3; k < 15; ++k) {
      EXPECT_LT(std::abs((d.C * x)(0, 0)), tol * (k - 2) * std::max(1.0, x.norm())) << "trial " << trial << " k " << k;
      x = d.A * x + d.B * gen.output(gen.state_at_step(k));
    }
  }
}

TEST(ZeroDynamicsAttack, GeneratorIsZeroBeforeStart) {
  const NormalForm nf = to_normal_form(two_mass());
  Vector delta(1);
  delta << 1.0;
  const ExoAttackGenerator g = ct_zero_dynamics_attack(nf, delta, 2.0);
  EXPECT_EQ(g.state_at(1.9).norm(), 0.0);
  EXPECT_NEAR(g.state_at(3.0)(0), std::exp(nf.S(0, 0)), 1e-12);
}

TEST(ZeroDynamicsAttack, RejectsWrongDeltaAndMissingZeros) {
  const NormalForm nf = to_normal_form(two_mass());
  EXPECT_EQ(code_of([&] { ct_zero_dynamics_attack(nf, Vector::Ones(2), 0.0); }), ErrorCode::DimensionMismatch);
  Vector num(1), den(3);
  num << 1;
  den << 2, 3, 1;
  const NormalForm none = to_normal_form(ss_from_tf(num, den));
  EXPECT_EQ(code_of([&] { ct_zero_dynamics_attack(none, Vector(), 0.0); }), ErrorCode::NoZeroDynamics);
}

TEST(PoleDynamicsAttack, CancelsFreeResponse) {
  const ContinuousLTI p = two_mass();
  Vector delta(4);
  delta << 0.1, -0.2, 0.3, 0.05;
  const ExoAttackGenerator g = pole_dynamics_attack(p, delta, 1.0);
  EXPECT_EQ(g.channel, AttackChannel::Sensor);
  for (double t : {1.0, 1.7, 4.0}) {
    const double free = (p.C * matrix_exponential(p.A * (t - 1.0)) * delta)(0, 0);
    EXPECT_NEAR(g.output(g.state_at(t)) + free, 0.0, 1e-12);
  }
}

TEST(MatrixSign, DiagonalAndInvolution) {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = -3.0;
  const Matrix Sd = matrix_sign(D);
  EXPECT_NEAR(Sd(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(Sd(1, 1), -1.0, 1e-12);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    bool clear = true;
    for (const auto& l : eigenvalues(M)) clear = clear && std::abs(l.real()) > 0.05;
    if (!clear) continue;
    const Matrix S = matrix_sign(M);
    EXPECT_LT(max_abs_diff(S * S, Matrix::Identity(n, n)), 1e-8);
    EXPECT_LT(max_abs_diff(S * M, M * S), 1e-8 * M.norm());
  }
}

TEST(MatrixSign, ImaginaryAxisIsRejected) {
  Matrix W(2, 2);
  W << 0, -1, 1, 0;
  ExoAttackGenerator g{W, RowVector::Ones(2), 1.0, Vector::Ones(2), 0.0, Domain::Continuous, AttackChannel::Actuator};
  EXPECT_EQ(code_of([&] { reduce_generator(g); }), ErrorCode::ImaginaryAxisEigenvalue);
}

TEST(ReduceGeneratorProperty, KeepsExactlyTheUnstableModes) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 4;
    const bool discrete = trial % 2;
    Matrix S(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) S(i, j) = g(rng);
    if (discrete) S = S / std::sqrt(static_cast<double>(n));
    ComplexList unstable;
    bool clear = true;
    for (const auto& l : eigenvalues(S)) {
      const double d = discrete ? std::abs(l) - 1.0 : l.real();
      clear = clear && std::abs(d) > 0.05;
      if (d > 0) unstable.push_back(l);
    }
    if (!clear || unstable.empty()) continue;
    RowVector out(n);
    Vector delta(n);
    for (int i = 0; i < n; ++i) {
      out(i) = g(rng);
      delta(i) = g(rng);
    }
    const ExoAttackGenerator full{S, out, 1.0, delta, 0.0, discrete ? Domain::Discrete : Domain::Continuous,
                                  AttackChannel::Actuator};
    const ExoAttackGenerator red = reduce_generator(full);
    EXPECT_EQ(red.dim(), static_cast<Eigen::Index>(unstable.size()));
    EXPECT_LT(multiset_distance(eigenvalues(red.S_gen), unstable), 1e-7);
  }
}

TEST(Masking, DoubleIntegratorHandStep) {
  Vector up(2);
  up << 0, -1;
  const MaskingPlan plan = masking_attack_plan(double_integrator(), 0.5, 1, up, {std::sqrt(10.0)});
  // ker [0.375, 0.125] = span [1, -3] / sqrt(10)
  ASSERT_EQ(plan.alphas.size(), 1u);
  EXPECT_NEAR(plan.alphas[0](0), 1.0, 1e-12);
  EXPECT_NEAR(plan.alphas[0](1), -3.0, 1e-12);
  EXPECT_EQ(plan.betas[0].norm(), 0.0);
  EXPECT_NEAR(plan.x_tilde[1](0), 0.0, 1e-12);
  EXPECT_NEAR(plan.x_tilde[1](1), -1.0, 1e-12);
  EXPECT_EQ(plan.sequence.size(), 2u);
}

TEST(MaskingProperty, SensorInstantsSeeNothing) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const ContinuousLTI p = random_system(rng, n, 0.4);
    std::vector<double> sched(8);
    for (double& s : sched) s = u(rng);
    const MaskingPlan plan = masking_attack_plan(p, 0.2, 8, Vector(), sched);
    ASSERT_EQ(plan.x_tilde.size(), 9u);
    for (const Vector& x : plan.x_tilde)
      EXPECT_LT(std::abs((p.C * x)(0, 0)), 1e-10 * std::max(1.0, p.C.norm() * x.norm()));
    // the plan is the open-loop response to its own sequence
    const LiftedTwoStep lm = lifted_two_step_model(p, 0.2);
    Vector x = Vector::Zero(n);
    for (std::size_t j = 0; j < plan.sequence.size(); ++j) x = lm.Ad * x + lm.Bd * plan.sequence[j];
    EXPECT_LT((x - plan.x_tilde.back()).norm(), 1e-9 * std::max(1.0, x.norm()));
  }
}

TEST(MaskingProperty, MagnitudeScalesTheDeviation) {
  Vector up(2);
  up << 0, -1;
  const MaskingPlan a = masking_attack_plan(double_integrator(), 0.5, 4, up, {1, 1, 1, 1});
  const MaskingPlan b = masking_attack_plan(double_integrator(), 0.5, 4, up, {2, 2, 2, 2});
  for (std::size_t k = 0; k < a.x_tilde.size(); ++k)
    EXPECT_LT((2.0 * a.x_tilde[k] - b.x_tilde[k]).norm(), 1e-12 * std::max(1.0, b.x_tilde[k].norm()));
}

TEST(Masking, RejectsBadSchedule) {
  EXPECT_EQ(code_of([] { masking_attack_plan(double_integrator(), 0.5, 2, Vector(), {1.0}); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { masking_attack_plan(double_integrator(), 0.5, 1, Vector(), {-1.0}); }),
            ErrorCode::InvalidArgument);
}

TEST(Dob, DefaultGainsAreBinomial) {
  // q_0 given, q_j = C(r, j) otherwise
  Vector q(4);
  q << 0.5, 4, 6, 4;
  EXPECT_EQ(default_dob_gains(4, 0.5), q);
}

TEST(Dob, ParameterChecks) {
  const NormalForm nf = to_normal_form(two_mass());
  EXPECT_EQ(code_of([&] { make_robust_zda(nf, default_dob_gains(3), 0.0, 10.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { make_robust_zda(nf, default_dob_gains(2), 1e-3, 10.0); }), ErrorCode::DimensionMismatch);
  Vector bad(3);
  bad << 1, -1, 1;  // q_1 + q_2 s + s^2 not Hurwitz
  EXPECT_EQ(code_of([&] { make_robust_zda(nf, bad, 1e-3, 10.0); }), ErrorCode::InvalidArgument);
  DobAttackState s = make_robust_zda(nf, default_dob_gains(3), 1e-3, 10.0);
  EXPECT_EQ(code_of([&] { robust_zda_step(s, 0.0, 0.0, 1e-3 / 10); }), ErrorCode::StepTooLarge);
}

TEST(Dob, OutputIsSaturated) {
  const NormalForm nf = to_normal_form(two_mass());
  DobAttackState s = make_robust_zda(nf, default_dob_gains(3), 1e-3, 0.5, 1e6);
  EXPECT_LE(std::abs(s.a), 0.5);
  for (int i = 0; i < 100; ++i) {
    double a = 0.0;
    std::tie(s, a) = robust_zda_step(s, StepSample(1e4), StepSample(0.0), 1e-3 / 50);
    EXPECT_LE(std::abs(a), 0.5);
  }
}
