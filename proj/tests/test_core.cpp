#include "common.hpp"

using namespace zt;

// ------------------------------------------------------------------ discretization

TEST(Gramian, DoubleIntegratorClosedForm) {
  for (double T : {1.0, 2.0, 0.3}) {
    Matrix ref(2, 2);
    ref << T * T * T / 3, T * T / 2, T * T / 2, T;
    EXPECT_LT(max_abs_diff(controllability_gramian(double_integrator(), T), ref), 1e-12);
  }
}

TEST(Gramian, MatchesQuadrature) {
  std::mt19937_64 rng(11);
  const ContinuousLTI s = random_system(rng, 3);
  const double T = 0.8;
  const int K = 4000;
  Matrix acc = Matrix::Zero(3, 3);
  for (int i = 0; i <= K; ++i) {
    const double t = T * i / K;
    const Matrix v = matrix_exponential(s.A * t) * s.B;
    const double wgt = (i == 0 || i == K) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += wgt * v * v.transpose();
  }
  acc *= T / (3.0 * K);
  EXPECT_LT(max_abs_diff(controllability_gramian(s, T), acc), 1e-10);
}

TEST(C2d, FirstOrderAtLog2) {
  const DiscreteLTI d = c2d_zoh(first_order(), std::log(2.0));
  EXPECT_NEAR(d.A(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(d.B(0, 0), 0.5, 1e-15);
}

TEST(C2d, DoubleIntegrator) {
  const double T = 0.7;
  const DiscreteLTI d = c2d_zoh(double_integrator(), T);
  Matrix A(2, 2), B(2, 1);
  A << 1, T, 0, 1;
  B << T * T / 2, T;
  EXPECT_LT(max_abs_diff(d.A, A), 1e-14);
  EXPECT_LT(max_abs_diff(d.B, B), 1e-14);
}

TEST(C2dProperty, SemigroupComposition) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const ContinuousLTI s = random_system(rng, 2 + trial % 4);
    const double T = u(rng);
    const DiscreteLTI one = c2d_zoh(s, T), two = c2d_zoh(s, 2 * T);
    EXPECT_LT(max_abs_diff(two.A, one.A * one.A), 1e-11 * std::max(1.0, two.A.norm()));
    EXPECT_LT(max_abs_diff(two.B, one.A * one.B + one.B), 1e-11 * std::max(1.0, two.B.norm()));
  }
}

TEST(C2d, RejectsNonpositivePeriod) {
  EXPECT_EQ(code_of([] { c2d_zoh(first_order(), 0.0); }), ErrorCode::InvalidArgument);
}

// ------------------------------------------------------------------ structure

TEST(Structure, TwoMassRelativeDegreeAndZero) {
  const ContinuousLTI p = two_mass();
  EXPECT_EQ(relative_degree(p), 3);
  const ComplexList z = transfer_zeros(p.A, p.B, p.C);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_NEAR(z[0].real(), -1.0, 1e-12);
}

TEST(StructureProperty, TransferFunctionRoundTrip) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const int m = trial % n;  // numerator degree
    Vector den(n + 1), num(m + 1);
    for (int i = 0; i < n; ++i) den(i) = g(rng);
    den(n) = 1.0;
    for (int i = 0; i <= m; ++i) num(i) = g(rng);
    if (std::abs(num(m)) < 0.1) num(m) = 0.5;
    const TransferRational tf = tf_from_ss(ss_from_tf(num, den));
    ASSERT_EQ(tf.num.size(), m + 1);
    EXPECT_LT(max_abs_diff(tf.den, den), 1e-9 * den.cwiseAbs().maxCoeff());
    EXPECT_LT(max_abs_diff(tf.num, num), 1e-9 * std::max(1.0, num.cwiseAbs().maxCoeff()));
  }
}

TEST(NormalFormProperty, CoordinatesReproduceTheRealization) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    ContinuousLTI s = random_system(rng, n);
    // force relative degree r by zeroing the first Markov parameters through C
    const int r = 1 + trial % n;
    if (r > 1) {
      Matrix K(r - 1, n);
      Matrix v = s.B;
      for (int j = 0; j < r - 1; ++j) {
        K.row(j) = v.transpose();
        v = s.A * v;
      }
      const Matrix N = null_space(K);
      s.C = (N * N.transpose() * s.C.transpose()).transpose();
      if (!is_observable(s.A, s.C) || relative_degree(s) != r) continue;
    }
    const NormalForm nf = to_normal_form(s);
    ASSERT_EQ(nf.r, relative_degree(s));
    const Matrix Ti = nf.T.inverse();
    const double sc = std::max(1.0, s.A.norm()) * nf.T.norm() * Ti.norm();
    EXPECT_LT(max_abs_diff(nf.T * s.A * Ti, nf.A_nf()), 1e-9 * sc);
    EXPECT_LT(max_abs_diff(nf.T * s.B, nf.B_nf()), 1e-9 * sc);
    EXPECT_LT(max_abs_diff(s.C * Ti, nf.C_nf()), 1e-9 * sc);
    const Eigen::Index m = nf.zero_dim();
    if (m > 0) {
      Vector em = Vector::Zero(m);
      em(m - 1) = 1.0;
      EXPECT_LT(max_abs_diff(nf.p, em), 1e-9 * sc);
      for (Eigen::Index i = 0; i + 1 < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) EXPECT_NEAR(nf.S(i, j), j == i + 1 ? 1.0 : 0.0, 1e-8 * sc);
      EXPECT_LT(multiset_distance(eigenvalues(nf.S), transfer_zeros(s.A, s.B, s.C)), 1e-6 * sc);
    }
  }
}

TEST(NormalForm, RejectsNonMinimal) {
  Matrix A = Matrix::Identity(2, 2) * -1.0, B(2, 1), C(1, 2);
  B << 1, 0;
  C << 1, 1;
  EXPECT_EQ(code_of([&] { to_normal_form(ContinuousLTI(A, B, C)); }), ErrorCode::NotMinimal);
}

// ------------------------------------------------------------------ sampling zeros

TEST(EulerFrobenius, EulerianNumbers) {
  Vector b2(2), b3(3), b4(4), b5(5);
  b2 << 1, 1;
  b3 << 1, 4, 1;
  b4 << 1, 11, 11, 1;
  b5 << 1, 26, 66, 26, 1;
  EXPECT_EQ(euler_frobenius(2), b2);
  EXPECT_EQ(euler_frobenius(3), b3);
  EXPECT_EQ(euler_frobenius(4), b4);
  EXPECT_EQ(euler_frobenius(5), b5);
}

TEST(EulerFrobeniusProperty, RootsAreNegativeRealAndReciprocal) {
  for (int r = 2; r <= 7; ++r) {
    const ComplexList roots = poly_roots(euler_frobenius(r));
    ASSERT_EQ(static_cast<int>(roots.size()), r - 1);
    ComplexList inv;
    for (const auto& z : roots) {
      EXPECT_LT(z.real(), 0.0);
      EXPECT_LT(std::abs(z.imag()), 1e-8);
      inv.push_back(1.0 / z);
    }
    EXPECT_LT(multiset_distance(roots, inv), 1e-8);
  }
}

TEST(SamplingZeros, FastSamplingApproachesEulerFrobenius) {
  // 1/(s+1)^3
  Vector num(1), den(4);
  num << 1;
  den << 1, 3, 3, 1;
  const ContinuousLTI p = ss_from_tf(num, den);
  const DiscreteLTI d = c2d_zoh(p, 1e-3);
  const ComplexList z = transfer_zeros(d.A, d.B, d.C);
  const ComplexList ref = {Complex(-2.0 + std::sqrt(3.0), 0.0), Complex(-2.0 - std::sqrt(3.0), 0.0)};
  EXPECT_LT(multiset_distance(z, ref), 0.01);
}

TEST(SamplingZeros, IntrinsicZeroIsTheExponentialImage) {
  const double Ts = 0.1;
  const ZeroClassification zc = classify_zeros(two_mass(), Ts);
  ASSERT_EQ(zc.intrinsic.size(), 1u);
  EXPECT_NEAR(zc.intrinsic[0].real(), std::exp(-Ts), 5e-3);
  EXPECT_EQ(zc.sampling.size(), 2u);
  EXPECT_GT(max_abs(zc.sampling), 1.0);
}

TEST(Lifted, DoubleIntegratorOutputMap) {
  const LiftedTwoStep m = lifted_two_step_model(double_integrator(), 0.5);
  // C Ad Bd = Ta^2/2 + Ta^2, C Bd = Ta^2/2
  EXPECT_NEAR(m.O(0, 0), 0.375, 1e-15);
  EXPECT_NEAR(m.O(0, 1), 0.125, 1e-15);
  Matrix CAd2(1, 2);
  CAd2 << 1, 1;
  EXPECT_LT(max_abs_diff(m.CAd2, CAd2), 1e-15);
}

// ------------------------------------------------------------------ controllers

namespace {

// ||p(M)|| relative to sum |p_i| ||M||^i: zero when p is the characteristic polynomial of M.
double cayley_hamilton_residual(const Matrix& M, const Vector& p) {
  Matrix acc = Matrix::Zero(M.rows(), M.cols());
  Matrix P = Matrix::Identity(M.rows(), M.cols());
  double scale = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p(i) * P;
    scale += std::abs(p(i)) * P.norm();
    P = P * M;
  }
  return acc.norm() / scale;
}

}  // namespace

TEST(ControllerProperty, StabilizingControllerPlacesRequestedPoles) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const DiscreteLTI d = c2d_zoh(random_system(rng, n, 0.5), 0.5);
    for (double radius : {0.2, 0.5, 0.8}) {
      const Controller c = stabilizing_controller(d, radius);
      EXPECT_LT(spectral_radius(closed_loop_matrix_discrete(d, c)), 1.0);
      const Vector p = poly_from_roots(spaced_poles(n, radius, Domain::Discrete));
      EXPECT_LT(cayley_hamilton_residual(d.A + d.B * c.H, p), 1e-8) << "trial " << trial;
      EXPECT_LT(cayley_hamilton_residual(d.A - c.G * d.C, p), 1e-8) << "trial " << trial;
    }
  }
}

TEST(Controller, ContinuousObserverBasedIsHurwitz) {
  const ContinuousLTI p = two_mass();
  const Controller c = observer_based_controller(p.A, p.B, p.C, Domain::Continuous, 1.0, 2.0);
  const Eigen::Index n = p.states();
  Matrix M(2 * n, 2 * n);
  M << p.A, p.B * c.H, c.G * p.C, c.F;
  for (const auto& l : eigenvalues(M)) EXPECT_LT(l.real(), 0.0);
}

TEST(Controller, DeadbeatObserverAndStateFeedback) {
  const DiscreteLTI d = c2d_zoh(double_integrator(), 1.0);
  const Controller c = observer_based_controller(d.A, d.B, d.C, Domain::Discrete, 1e-12, 1e-12);
  const Matrix Phi = closed_loop_matrix_discrete(d, c);
  Matrix P = Matrix::Identity(4, 4);
  for (int i = 0; i < 4; ++i) P = P * Phi;
  EXPECT_LT(P.norm(), 1e-9 * std::pow(std::max(1.0, Phi.norm()), 4));
}

TEST(Controller, RejectsRadiusOutsideUnitInterval) {
  const DiscreteLTI d = c2d_zoh(double_integrator(), 1.0);
  EXPECT_EQ(code_of([&] { stabilizing_controller(d, 1.0); }), ErrorCode::InvalidArgument);
}

// ------------------------------------------------------------------ semidefinite solver

TEST(Sdp, ScalarLowerBound) {
  SdpProblem p;
  p.nvars = 1;
  LmiBlock& b = p.add_block(2);
  // [[x, 1], [1, x]] > 0  <=>  x > 1
  b.F0 << 0, 1, 1, 0;
  b.Fi[0] = Matrix::Identity(2, 2);
  p.c = Vector::Ones(1);
  const SdpResult r = solve_sdp(p);
  ASSERT_NE(r.status, SdpStatus::Infeasible);
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
}

TEST(Sdp, QuadraticObjectiveWithEquality) {
  // min (x0 - 2)^2 + (x1 - 2)^2  s.t.  x0 + x1 = 1,  x0 > 0.8
  SdpProblem p;
  p.nvars = 2;
  LmiBlock& b = p.add_block(1);
  b.F0(0, 0) = -0.8;
  b.Fi[0](0, 0) = 1.0;
  p.Q = 2.0 * Matrix::Identity(2, 2);
  p.c = Vector::Constant(2, -4.0);
  p.Aeq = Matrix::Ones(1, 2);
  p.beq = Vector::Ones(1);
  const SdpResult r = solve_sdp(p);
  ASSERT_NE(r.status, SdpStatus::Infeasible);
  EXPECT_NEAR(r.x(0), 0.8, 1e-5);
  EXPECT_NEAR(r.x(1), 0.2, 1e-5);
}

TEST(Sdp, DetectsInfeasibility) {
  SdpProblem p;
  p.nvars = 1;
  LmiBlock& a = p.add_block(1);
  a.F0(0, 0) = -1.0;
  a.Fi[0](0, 0) = 1.0;  // x > 1
  LmiBlock& b = p.add_block(1);
  b.F0(0, 0) = 0.0;
  b.Fi[0](0, 0) = -1.0;  // x < 0
  p.feasibility_only = true;
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::Infeasible);
}

TEST(Spr, CertifiesStableAndRejectsUnstable) {
  Vector stable(2), unstable(2);
  stable << -0.5, 1.0;
  unstable << -1.5, 1.0;
  const SprCertificate ok = spr_stability_certificate(stable);
  EXPECT_TRUE(ok.feasible);
  EXPECT_GT(min_eigenvalue_sym(ok.P), 0.0);
  EXPECT_LT(ok.block_max_eig, 0.0);
  EXPECT_FALSE(spr_stability_certificate(unstable).feasible);
}

TEST(Spr, RejectsNonpositiveLeadingCoefficient) {
  Vector a(2);
  a << 0.1, -1.0;
  EXPECT_EQ(code_of([&] { spr_stability_certificate(a); }), ErrorCode::LeadingCoefficientNonpositive);
}

TEST(SprProperty, AcceptedPolynomialsAreSchur) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int accepted = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int q = 1 + trial % 5;
    Vector a(q + 1);
    for (int i = 0; i < q; ++i) a(i) = 0.8 * u(rng);
    a(q) = 1.0;
    const SprCertificate c = spr_stability_certificate(a);
    if (!c.feasible) continue;
    ++accepted;
    EXPECT_LT(max_abs(poly_roots(a)), 1.0);
  }
  EXPECT_GT(accepted, 0);
}

// ------------------------------------------------------------------ linear algebra

TEST(Linalg, RotationExponential) {
  Matrix W(2, 2);
  W << 0, -1, 1, 0;
  const double t = 0.9;
  Matrix ref(2, 2);
  ref << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  EXPECT_LT(max_abs_diff(matrix_exponential(W * t), ref), 1e-14);
}

TEST(LinalgProperty, PolynomialRootsRoundTrip) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    ComplexList roots;
    const int n = 1 + trial % 6;
    for (int i = 0; i < n; ++i) roots.emplace_back(u(rng), 0.0);
    EXPECT_LT(multiset_distance(poly_roots(poly_from_roots(roots)), roots), 1e-4);
  }
}

TEST(Linalg, MultisetDistanceMatchesPairs) {
  const ComplexList a = {1.0, 2.0, Complex(0, 1)};
  const ComplexList b = {Complex(0, 1), 2.001, 1.0};
  EXPECT_NEAR(multiset_distance(a, b), 0.001, 1e-12);
}
