#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "zdattack/linalg.hpp"
#include "zdattack/lti.hpp"
#include "zdattack/sampling.hpp"
#include "zdattack/types.hpp"

namespace zda {

enum class AttackChannel { Actuator, Sensor };

// Autonomous generator z' = S z (or z[k+1] = S z[k]) started at Delta; emits scale * out_row * z.
struct ExoAttackGenerator {
  Matrix S_gen;
  RowVector out_row;
  double scale = 1.0;
  Vector delta;
  double t0 = 0.0;  // start time (continuous) or start step index (discrete)
  Domain domain = Domain::Continuous;
  AttackChannel channel = AttackChannel::Actuator;

  Eigen::Index dim() const { return S_gen.rows(); }

  double output(const Vector& z) const { return scale * out_row.dot(z); }

  // Continuous generators: state at absolute time t (zero before t0).
  Vector state_at(double t) const {
    if (t < t0) return Vector::Zero(dim());
    return matrix_exponential(S_gen * (t - t0)) * delta;
  }
  // Discrete generators: state at step k (zero before the start step).
  Vector state_at_step(long k) const {
    const long k0 = static_cast<long>(std::llround(t0));
    if (k < k0) return Vector::Zero(dim());
    Vector z = delta;
    for (long i = k0; i < k; ++i) z = S_gen * z;
    return z;
  }
};

namespace detail {
inline void check_delta(const Vector& delta, Eigen::Index dim) {
  require(delta.size() == dim, ErrorCode::DimensionMismatch, "Delta must match the generator dimension");
  require(delta.allFinite(), ErrorCode::InvalidArgument, "Delta must be finite");
}
}  // namespace detail

inline ExoAttackGenerator ct_zero_dynamics_attack(const NormalForm& nf, const Vector& delta, double t0) {
  require(nf.domain == Domain::Continuous, ErrorCode::InvalidArgument, "expected a continuous-time normal form");
  require(nf.zero_dim() >= 1, ErrorCode::NoZeroDynamics, "relative degree equals the state dimension");
  detail::check_delta(delta, nf.zero_dim());
  return ExoAttackGenerator{nf.S, nf.phi_z.transpose(), -1.0 / nf.b, delta, t0, Domain::Continuous,
                            AttackChannel::Actuator};
}

inline ExoAttackGenerator dt_zero_dynamics_attack(const NormalForm& nf_d, const Vector& delta, long k0) {
  require(nf_d.domain == Domain::Discrete && nf_d.r == 1, ErrorCode::InvalidArgument,
          "expected a discrete-time normal form with r = 1");
  require(nf_d.zero_dim() >= 1, ErrorCode::NoZeroDynamics, "model has no zero dynamics");
  require(k0 >= 0, ErrorCode::InvalidArgument, "start step must be nonnegative");
  detail::check_delta(delta, nf_d.zero_dim());
  return ExoAttackGenerator{nf_d.S, nf_d.phi_z.transpose(), -1.0 / nf_d.b, delta, static_cast<double>(k0),
                            Domain::Discrete, AttackChannel::Actuator};
}

inline ExoAttackGenerator pole_dynamics_attack(const ContinuousLTI& plant, const Vector& delta, double t0) {
  require(plant.siso(), ErrorCode::InvalidArgument, "pole-dynamics attack requires a SISO plant");
  detail::check_delta(delta, plant.states());
  return ExoAttackGenerator{plant.A, plant.C, -1.0, delta, t0, Domain::Continuous, AttackChannel::Sensor};
}

// sign(M) by the scaled Newton iteration; M must have no eigenvalues on the imaginary axis.
inline Matrix matrix_sign(const Matrix& M) {
  Matrix X = M;
  const Eigen::Index n = M.rows();
  for (int it = 0; it < 100; ++it) {
    Eigen::FullPivLU<Matrix> lu(X);
    require(lu.isInvertible(), ErrorCode::ImaginaryAxisEigenvalue, "sign iteration hit a singular matrix");
    const Matrix Xi = lu.inverse();
    const double g = std::sqrt(Xi.norm() / X.norm());
    const Matrix next = 0.5 * (g * X + Xi / g);
    const double change = (next - X).norm();
    X = next;
    if (change <= 1e-13 * X.norm()) break;
  }
  require((X * X - Matrix::Identity(n, n)).norm() < 1e-6 * std::max(1.0, X.norm() * X.norm()),
          ErrorCode::NumericalFailure, "sign iteration did not converge");
  return X;
}

// Restricts the generator to its unstable invariant subspace (eigenvalue sign decides membership).
inline ExoAttackGenerator reduce_generator(const ExoAttackGenerator& gen) {
  const Eigen::Index n = gen.dim();
  const double scale = std::max(1.0, gen.S_gen.norm());
  for (const auto& l : eigenvalues(gen.S_gen)) {
    const double dist = gen.domain == Domain::Continuous ? std::abs(l.real()) : std::abs(std::abs(l) - 1.0);
    require(dist > 1e-9 * scale, ErrorCode::ImaginaryAxisEigenvalue, "generator has an eigenvalue on the stability boundary");
  }
  // Discrete generators are mapped through the Cayley transform so |z| > 1 becomes Re w > 0.
  Matrix M = gen.S_gen;
  if (gen.domain == Domain::Discrete) {
    const Matrix I = Matrix::Identity(n, n);
    M = (gen.S_gen + I).fullPivLu().solve(gen.S_gen - I);
  }
  const Matrix P = 0.5 * (Matrix::Identity(n, n) + matrix_sign(M));
  const Matrix U = range_basis(P, 1e-8);
  ExoAttackGenerator red = gen;
  red.S_gen = U.transpose() * gen.S_gen * U;
  red.out_row = gen.out_row * U;
  red.delta = U.transpose() * (P * gen.delta);
  return red;
}

// Enforced-zero-dynamics plan for two actuator updates per sensor sample.
struct MaskingPlan {
  std::vector<Vector> alphas;
  std::vector<Vector> betas;
  std::vector<double> sequence;  // a_a[0], a_a[1], ... at the actuator rate
  std::vector<Vector> x_tilde;   // predicted deviation at sensor instants 0, 2T_a, 4T_a, ...
  int horizon = 0;
  double Ta = 0.0;
};

inline MaskingPlan masking_attack_plan(const ContinuousLTI& sys, double Ta, int M, const Vector& growth_direction,
                                       const std::vector<double>& magnitude_schedule) {
  require(M >= 1, ErrorCode::InvalidArgument, "masking horizon must be >= 1");
  require(static_cast<int>(magnitude_schedule.size()) == M, ErrorCode::DimensionMismatch,
          "magnitude schedule needs one entry per sensor period");
  const LiftedTwoStep lm = lifted_two_step_model(sys, Ta);
  const Eigen::Index n = sys.states();
  require(growth_direction.size() == 0 || growth_direction.size() == n, ErrorCode::DimensionMismatch,
          "growth direction must be empty or have one entry per state");

  const int rank_O = numeric_rank(lm.O);
  if (rank_O >= 2)
    fail(ErrorCode::ConditionViolated, "(c) kernel of [C Ad Bd, C Bd] is trivial: rank 2");
  const Matrix ker = null_space(lm.O);
  const Vector v = ker.col(0);
  const Vector gamma_v = lm.Gamma * v;
  if (gamma_v.norm() <= kRankTol * std::max(1.0, lm.Gamma.norm()))
    fail(ErrorCode::ConditionViolated, "(a) kernel of [C Ad Bd, C Bd] lies in the kernel of the input map: rank Gamma v = 0");
  Matrix aug(1, 2 + n);
  aug << lm.O, lm.CAd2;
  const int rank_aug = numeric_rank(aug);
  if (rank_aug != rank_O)
    fail(ErrorCode::ConditionViolated, "(b) image of C Ad^2 not contained in image of [C Ad Bd, C Bd]: rank " +
                                           std::to_string(rank_O) + " vs " + std::to_string(rank_aug));

  // Two-step state map: x(2T_a) = Ad^2 x + [Ad Bd, Bd] a
  Matrix G2(n, 2);
  G2.col(0) = lm.Ad * lm.Bd;
  G2.col(1) = lm.Bd;
  double sign = 1.0;
  if (growth_direction.size() == n && growth_direction.dot(G2 * v) < 0.0) sign = -1.0;

  MaskingPlan plan;
  plan.horizon = M;
  plan.Ta = Ta;
  const Matrix Oinv = lm.O.completeOrthogonalDecomposition().pseudoInverse();
  Vector x = Vector::Zero(n);
  plan.x_tilde.push_back(x);
  for (int m = 0; m < M; ++m) {
    require(magnitude_schedule[m] >= 0.0 && std::isfinite(magnitude_schedule[m]), ErrorCode::InvalidArgument,
            "magnitudes must be finite and nonnegative");
    Vector beta = Vector::Zero(2);
    if (m > 0) beta = -Oinv * (lm.CAd2 * x);
    const Vector alpha = sign * magnitude_schedule[m] * v;
    const Vector a = alpha + beta;
    plan.alphas.push_back(alpha);
    plan.betas.push_back(beta);
    plan.sequence.push_back(a(0));
    plan.sequence.push_back(a(1));
    x = lm.Ad * lm.Ad * x + G2 * a;
    plan.x_tilde.push_back(x);
  }
  return plan;
}

// ---------------------------------------------------------------------------------------------
// Disturbance-observer based generators

enum class DobKind { ZeroDynamics, PoleDynamics };

struct DobAttackState {
  DobKind kind = DobKind::ZeroDynamics;
  Vector z_a;
  Vector xi;
  Vector q;  // q_0 .. q_{r-1}
  double tau = 1e-3;
  double L = 20000.0;
  NormalForm nominal;  // plant (zero dynamics) or controller (pole dynamics)
  Matrix A_n, B_n, C_n;  // nominal plant, pole-dynamics only
  double a = 0.0;        // current saturated output
  double t = 0.0;
};

// Values of an input signal at the start, midpoint and end of one integration step.
struct StepSample {
  double start = 0.0;
  double mid = 0.0;
  double end = 0.0;

  StepSample() = default;
  StepSample(double constant) : start(constant), mid(constant), end(constant) {}  // NOLINT
  StepSample(double s, double m, double e) : start(s), mid(m), end(e) {}
};

// q_0 = q0 and the remaining q_j from (s + 1)^r.
inline Vector default_dob_gains(int r, double q0 = 1.0) {
  Vector q(r);
  double c = 1.0;
  for (int j = 0; j < r; ++j) {
    q(j) = c;
    c = c * (r - j) / (j + 1);
  }
  q(0) = q0;
  return q;
}

namespace detail {

inline void check_dob_parameters(int r, const Vector& q, double tau, double L) {
  require(q.size() == r, ErrorCode::DimensionMismatch, "need gains q_0 .. q_{r-1}");
  require(q(0) > 0.0, ErrorCode::InvalidArgument, "q_0 must be positive");
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(L > 0.0, ErrorCode::InvalidArgument, "saturation level must be positive");
  if (r >= 2) {
    Vector poly(r);  // q_1 + q_2 s + ... + q_{r-1} s^{r-2} + s^{r-1}
    for (int j = 1; j < r; ++j) poly(j - 1) = q(j);
    poly(r - 1) = 1.0;
    for (const auto& root : poly_roots(poly))
      require(root.real() < 0.0, ErrorCode::InvalidArgument, "gain polynomial must be Hurwitz");
  }
}

inline double sat(double v, double L) { return std::clamp(v, -L, L); }

inline double dob_feedthrough(const DobAttackState& s) {
  return s.q(0) / std::pow(s.tau, s.nominal.r) / s.nominal.b;
}

// xi' for the observer with measured chain output m, known input term kappa and held output a.
inline Vector xi_rate(const DobAttackState& s, const Vector& xi, double m, double kappa, double a) {
  const int r = s.nominal.r;
  const double tau = s.tau;
  const double k0 = s.q(0) / std::pow(tau, r);
  const double bn = s.nominal.b;
  const Vector& phi = s.nominal.phi_rho;
  Vector d(r);
  for (int i = 1; i < r; ++i) {
    const double qi = s.q(r - i) / std::pow(tau, i);
    d(i - 1) = xi(i) - qi * xi(0) + k0 / bn * (phi(r - i) + qi) * m;
  }
  d(r - 1) = -k0 * xi(0) + k0 / bn * (phi(0) + k0) * m + k0 * (kappa + a);
  return d;
}

inline Vector generator_rate(const DobAttackState& s, const Vector& z, double m) {
  if (s.kind == DobKind::ZeroDynamics) return s.nominal.S * z + s.nominal.p * m;
  const Eigen::Index mc = s.nominal.zero_dim();
  const Eigen::Index nx = s.A_n.rows();
  Vector d(mc + nx);
  if (mc > 0) d.head(mc) = s.nominal.S * z.head(mc) + s.nominal.p * m;
  d.tail(nx) = s.A_n * z.tail(nx) + s.B_n * m;
  return d;
}

inline double known_input(const DobAttackState& s, const Vector& z, double other) {
  const Eigen::Index mc = s.nominal.zero_dim();
  const double zpart = mc > 0 ? s.nominal.phi_z.dot(z.head(mc)) / s.nominal.b : 0.0;
  if (s.kind == DobKind::ZeroDynamics) return zpart + other;
  return zpart + (s.C_n * z.tail(s.A_n.rows()))(0, 0);
}

// One RK4 step of (z_a, xi) with the saturated output held over the step.
inline void dob_advance(DobAttackState& s, const StepSample& m, const StepSample& other, double dt) {
  require(dt > 0.0, ErrorCode::InvalidArgument, "step must be positive");
  require(dt <= s.tau / 20.0 * (1.0 + 1e-12), ErrorCode::StepTooLarge, "step exceeds tau/20");
  const Eigen::Index nz = s.z_a.size();
  const Eigen::Index r = s.xi.size();
  const double a = s.a;
  auto rate = [&](const Vector& w, double mv, double ov) {
    Vector d(nz + r);
    const Vector z = w.head(nz);
    d.head(nz) = generator_rate(s, z, mv);
    d.tail(r) = xi_rate(s, w.tail(r), mv, known_input(s, z, ov), a);
    return d;
  };
  Vector w(nz + r);
  w << s.z_a, s.xi;
  const Vector k1 = rate(w, m.start, other.start);
  const Vector k2 = rate(w + 0.5 * dt * k1, m.mid, other.mid);
  const Vector k3 = rate(w + 0.5 * dt * k2, m.mid, other.mid);
  const Vector k4 = rate(w + dt * k3, m.end, other.end);
  w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  s.z_a = w.head(nz);
  s.xi = w.tail(r);
  s.a = sat(s.xi(0) - dob_feedthrough(s) * m.end, s.L);
  s.t += dt;
}

}  // namespace detail

// Zero initial conditions at t0; `y0` is the measured output at t0.
inline DobAttackState make_robust_zda(const NormalForm& nominal, const Vector& q, double tau, double L,
                                      double y0 = 0.0) {
  require(nominal.domain == Domain::Continuous, ErrorCode::InvalidArgument, "expected a continuous-time normal form");
  detail::check_dob_parameters(nominal.r, q, tau, L);
  DobAttackState s;
  s.kind = DobKind::ZeroDynamics;
  s.nominal = nominal;
  s.q = q;
  s.tau = tau;
  s.L = L;
  s.z_a = Vector::Zero(nominal.zero_dim());
  s.xi = Vector::Zero(nominal.r);
  s.a = detail::sat(-detail::dob_feedthrough(s) * y0, L);
  return s;
}

// `controller_nominal` is the normal form of the nominal continuous controller (input y, output u = c_1).
inline DobAttackState make_robust_pda(const NormalForm& controller_nominal, const ContinuousLTI& plant_nominal,
                                      const Vector& q, double tau, double L, double u0 = 0.0) {
  require(controller_nominal.domain == Domain::Continuous, ErrorCode::InvalidArgument,
          "expected a continuous-time controller normal form");
  require(plant_nominal.siso(), ErrorCode::InvalidArgument, "plant must be SISO");
  detail::check_dob_parameters(controller_nominal.r, q, tau, L);
  DobAttackState s;
  s.kind = DobKind::PoleDynamics;
  s.nominal = controller_nominal;
  s.A_n = plant_nominal.A;
  s.B_n = plant_nominal.B;
  s.C_n = plant_nominal.C;
  s.q = q;
  s.tau = tau;
  s.L = L;
  s.z_a = Vector::Zero(controller_nominal.zero_dim() + plant_nominal.states());
  s.xi = Vector::Zero(controller_nominal.r);
  s.a = detail::sat(-detail::dob_feedthrough(s) * u0, L);
  return s;
}

// Advances one step from the measured output y and the controller output u; returns the new state and
// the saturated attack value to apply over the next step.
inline std::pair<DobAttackState, double> robust_zda_step(DobAttackState state, const StepSample& y,
                                                         const StepSample& u, double dt) {
  require(state.kind == DobKind::ZeroDynamics, ErrorCode::InvalidArgument, "state is not a zero-dynamics generator");
  detail::dob_advance(state, y, u, dt);
  const double a = state.a;
  return {std::move(state), a};
}

// Dual generator: the observer reads the controller output u = c_1 and emits the sensor attack a_s.
inline std::pair<DobAttackState, double> robust_pda_step(DobAttackState state, const StepSample& u, double dt) {
  require(state.kind == DobKind::PoleDynamics, ErrorCode::InvalidArgument, "state is not a pole-dynamics generator");
  detail::dob_advance(state, u, StepSample(0.0), dt);
  const double a = state.a;
  return {std::move(state), a};
}

// The signal the zero-dynamics observer estimates, evaluated from true plant coordinates.
inline double robust_zda_target(const NormalForm& truth, const DobAttackState& s, const Vector& x, double u) {
  const Vector xn = truth.T * x;
  const int r = truth.r;
  const Vector x_rho = xn.head(r);
  const Vector x_z = xn.tail(truth.zero_dim());
  const NormalForm& n = s.nominal;
  double acc = -truth.phi_rho.dot(x_rho) - truth.b * u + n.phi_rho.dot(x_rho) + n.b * u;
  if (truth.zero_dim() > 0) acc -= truth.phi_z.dot(x_z);
  if (n.zero_dim() > 0) acc += n.phi_z.dot(s.z_a);
  return acc / truth.b;
}

}  // namespace zda
