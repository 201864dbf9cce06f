#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "zdattack/attacks.hpp"
#include "zdattack/defense.hpp"
#include "zdattack/linalg.hpp"
#include "zdattack/lti.hpp"
#include "zdattack/sampling.hpp"
#include "zdattack/types.hpp"

namespace zda {

enum class AttackKind { None, CtZda, Pda, DtZda, Masking, RobustZda, RobustPda, Sequence };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::CtZda: return "ct-zda";
    case AttackKind::Pda: return "pda";
    case AttackKind::DtZda: return "dt-zda";
    case AttackKind::Masking: return "masking";
    case AttackKind::RobustZda: return "robust-zda";
    case AttackKind::RobustPda: return "robust-pda";
    case AttackKind::Sequence: return "sequence";
  }
  return "none";
}

// Which discrete model a sampled-data attacker designs against.
enum class AttackModel { Zoh, Loop };

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double t0 = 0.0;
  Vector delta;
  bool reduce = false;
  AttackModel model = AttackModel::Zoh;
  bool stop_at_hazard = true;
  // masking
  Vector growth_direction;
  std::vector<double> schedule;
  // disturbance-observer generators
  Vector q;  // empty: defaults for the relative degree with q_0 = 1
  double tau = 1e-3;
  double L = 20000.0;
  double dob_dt = 0.0;  // 0: tau / 50
  // replayed sequence (actuator rate for actuator attacks, sample rate for sensor attacks)
  std::vector<double> values;
  AttackChannel channel = AttackChannel::Actuator;
};

struct Scenario {
  ContinuousLTI plant;
  Vector x0;
  double Ts = 0.1;
  int actuator_divisions = 1;
  Controller controller;
  HoldProfile hold;
  SamplerWeights sampler;
  AttackSpec attack;
  double horizon = 1.0;
  double L_detect = 1e-3;
  double L_hazard = 1.0;
  double observer_radius = 0.5;
  int substeps = 1;
  int record_every = 1;
  std::optional<ContinuousLTI> nominal_plant;       // attacker's plant model
  std::optional<Controller> nominal_controller;     // attacker's controller model (robust pole dynamics)

  double Ta() const { return Ts / actuator_divisions; }
  const ContinuousLTI& attacker_plant() const { return nominal_plant ? *nominal_plant : plant; }
};

// Discrete model from u[k] to the received sample, as seen by the controller.
inline DiscreteLTI loop_model(const ContinuousLTI& plant, const HoldProfile& hold, const SamplerWeights& sampler) {
  if (!sampler.conventional()) return sampler_discrete_model(plant, sampler, hold);
  return hold_discrete_model(plant, hold);
}
inline DiscreteLTI loop_model(const Scenario& s) { return loop_model(s.plant, s.hold, s.sampler); }

// Observer x[k+1] = A x + B u + L (y - C x) on a discrete model.
struct LuenbergerEstimator {
  DiscreteLTI model;
  Vector L;
  Vector xhat;

  double predict() const { return (model.C * xhat)(0, 0); }
  // Returns the residual y - yhat and advances the estimate.
  double update(double u, double y) {
    const double r = y - predict();
    xhat = model.A * xhat + model.B.col(0) * u + L * r;
    return r;
  }
};

// Observer poles evenly spaced in (0, radius]; radius 0 gives a deadbeat observer.
inline LuenbergerEstimator luenberger_estimator(const DiscreteLTI& model, double radius,
                                                const Vector& x0 = Vector()) {
  require(radius >= 0.0 && radius < 1.0, ErrorCode::InvalidArgument, "observer radius must lie in [0, 1)");
  const RowVector Lt = place_on_controllable_part(
      model.A.transpose(), model.C.transpose(), Domain::Discrete,
      [&](Eigen::Index k) { return spaced_poles(k, radius, Domain::Discrete); }, ErrorCode::NotDetectable);
  LuenbergerEstimator est;
  est.model = model;
  est.L = Lt.transpose();
  est.xhat = x0.size() ? x0 : Vector(Vector::Zero(model.states()));
  require(est.xhat.size() == model.states(), ErrorCode::DimensionMismatch, "estimator initial state size");
  return est;
}

struct Trace {
  int n = 0;
  // dense grid
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<double> u, y, y_c, y_hat, residual, attack;
  std::vector<double> attack_target;  // robust zero-dynamics runs only
  std::vector<Vector> x_af;
  std::vector<double> y_af;
  // per sample
  std::vector<double> ts;
  std::vector<double> yk, yck, yck_af, yhatk, rk, uk;
  std::vector<Vector> ck;  // controller state at samples (discrete controllers)
  // maximum state deviation over every lattice point, and the first hazard crossing
  double max_deviation = 0.0;
  double t_star = std::numeric_limits<double>::quiet_NaN();
  double deviation_at_t_star = 0.0;
  double t0 = 0.0;
  bool has_attack = false;
  bool observer_exact = true;
};

struct Report {
  bool stealthy = true;
  double first_violation = std::numeric_limits<double>::quiet_NaN();
  double max_residual = 0.0;
  bool observer_stealthy = true;
  double observer_first_violation = std::numeric_limits<double>::quiet_NaN();
  double max_observer_residual = 0.0;
  bool disruptive = false;
  double t_star = std::numeric_limits<double>::quiet_NaN();
  double max_state_deviation = 0.0;
  double L_detect = 0.0;
  double L_hazard = 0.0;
  double detect_margin = 0.0;   // L_detect - max_residual
  double hazard_ratio = 0.0;    // max_state_deviation / L_hazard

  // 0 clean, 10 detected, 20 disruptive and undetected
  int exit_code() const {
    if (!stealthy) return 10;
    if (disruptive) return 20;
    return 0;
  }
};

namespace detail {

inline long lcm_long(long a, long b) { return a / std::gcd(a, b) * b; }

struct RunConfig {
  long P = 1;            // lattice steps per sampling period
  long K = 0;            // sampling periods
  long dob_every = 0;    // lattice steps per observer step (0: no observer generator)
};

inline bool aligned(double t, double step) {
  const double r = t / step;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

inline void validate(const Scenario& s) {
  s.plant.validate();
  require(s.plant.siso(), ErrorCode::InvalidArgument, "plant must be SISO");
  require(s.Ts > 0.0, ErrorCode::InvalidArgument, "sampling period must be positive");
  require(s.actuator_divisions >= 1, ErrorCode::InvalidArgument, "actuator divisions must be >= 1");
  require(s.horizon >= s.Ts, ErrorCode::InvalidArgument, "horizon must cover at least one period");
  require(s.L_detect > 0.0, ErrorCode::InvalidArgument, "L_detect must be positive");
  require(s.L_hazard > 0.0, ErrorCode::InvalidArgument, "L_hazard must be positive");
  require(s.substeps >= 1 && s.record_every >= 1, ErrorCode::InvalidArgument, "substeps and record stride must be >= 1");
  require(s.x0.size() == s.plant.states(), ErrorCode::DimensionMismatch, "x0 must have one entry per state");
  require(std::abs(s.hold.Ts - s.Ts) <= 1e-12 * s.Ts, ErrorCode::InvalidArgument, "hold period differs from Ts");
  require(s.sampler.w.size() == 0 || std::abs(s.sampler.Ts - s.Ts) <= 1e-12 * s.Ts, ErrorCode::InvalidArgument,
          "sampler period differs from Ts");
  require(s.hold.kind == HoldKind::Zoh || s.actuator_divisions == 1, ErrorCode::InvalidArgument,
          "generalized holds require one actuator update per period");
  s.controller.validate();
  if (s.controller.domain == Domain::Continuous)
    require(s.sampler.conventional() && s.hold.kind == HoldKind::Zoh, ErrorCode::InvalidArgument,
            "continuous controllers use the plain output and input");
  if (s.attack.kind != AttackKind::None) {
    require(s.attack.t0 >= 0.0 && aligned(s.attack.t0, s.Ts), ErrorCode::InvariantViolation,
            "attack start must be a sampling instant");
  }
}

// Everything needed to run the loop once, with or without the attack.
struct Engine {
  const Scenario& s;
  RunConfig cfg;
  double delta_t = 0.0;
  Eigen::Index n = 0, nc = 0, neta = 0, nz = 0;
  Matrix Phi, Gam;   // exact lattice step for the augmented state
  bool ctrl_cont = false;
  // attack data
  ExoAttackGenerator exo;        // continuous exo or discrete generator
  bool exo_cont = false;
  bool exo_disc = false;
  MaskingPlan plan;
  DobAttackState dob0;
  bool dob = false;
  NormalForm truth_nf;
  bool have_truth = false;
  Vector eta_reset;  // e^{A' Ts} W^{-1} B_g for continuous holds
  Matrix MC_back;    // sampler rows evaluated on the backward free response, for y_g[0]
  DiscreteLTI model;
  Vector xhat0;

  explicit Engine(const Scenario& sc) : s(sc) {}
};

inline void build_engine(Engine& e) {
  const Scenario& s = e.s;
  validate(s);
  e.n = s.plant.states();
  e.ctrl_cont = s.controller.domain == Domain::Continuous;
  e.nc = e.ctrl_cont ? s.controller.states() : 0;
  e.neta = s.hold.kind == HoldKind::Continuous ? e.n : 0;
  const AttackSpec& a = s.attack;

  long L = s.actuator_divisions;
  if (s.hold.kind == HoldKind::Piecewise) L = lcm_long(L, s.hold.pieces());
  if (!s.sampler.conventional()) L = lcm_long(L, s.sampler.N());
  long P = L * s.substeps;
  if (a.kind == AttackKind::RobustZda || a.kind == AttackKind::RobustPda) {
    const double dt_max = a.dob_dt > 0.0 ? a.dob_dt : a.tau / 50.0;
    // two lattice steps per observer step, observer step no longer than dt_max
    const long need = static_cast<long>(std::ceil(2.0 * s.Ts / dt_max - 1e-9));
    long m = (need + P - 1) / P;
    P *= std::max(1L, m);
    if (P % 2) P *= 2;
    e.cfg.dob_every = 2;
  }
  e.cfg.P = P;
  e.cfg.K = static_cast<long>(std::floor(s.horizon / s.Ts + 1e-9));
  e.delta_t = s.Ts / static_cast<double>(P);

  // Attack generators from the attacker's model.
  const ContinuousLTI& ap = s.attacker_plant();
  switch (a.kind) {
    case AttackKind::None:
    case AttackKind::Sequence: break;
    case AttackKind::CtZda: {
      e.exo = ct_zero_dynamics_attack(to_normal_form(ap), a.delta, a.t0);
      if (a.reduce) e.exo = reduce_generator(e.exo);
      e.exo_cont = true;
      break;
    }
    case AttackKind::Pda: {
      e.exo = pole_dynamics_attack(ap, a.delta, a.t0);
      if (a.reduce) e.exo = reduce_generator(e.exo);
      e.exo_cont = true;
      break;
    }
    case AttackKind::DtZda: {
      DiscreteLTI dm = c2d_zoh(ap, s.Ta());
      if (a.model == AttackModel::Loop) {
        require(s.actuator_divisions == 1, ErrorCode::InvalidArgument, "loop-model attacks need one actuator update per period");
        dm = loop_model(ap, s.hold, s.sampler);
      }
      const long k0 = std::lround(a.t0 / s.Ta());
      e.exo = dt_zero_dynamics_attack(to_normal_form(dm), a.delta, k0);
      if (a.reduce) e.exo = reduce_generator(e.exo);
      e.exo_disc = true;
      break;
    }
    case AttackKind::Masking: {
      require(s.actuator_divisions == 2, ErrorCode::InvalidArgument, "masking needs two actuator updates per period");
      e.plan = masking_attack_plan(ap, s.Ta(), static_cast<int>(a.schedule.size()), a.growth_direction, a.schedule);
      break;
    }
    case AttackKind::RobustZda: {
      const NormalForm nf = to_normal_form(ap);
      const Vector q = a.q.size() ? a.q : default_dob_gains(nf.r);
      e.dob0 = make_robust_zda(nf, q, a.tau, a.L);
      e.dob = true;
      try {
        e.truth_nf = to_normal_form(s.plant);
        e.have_truth = true;
      } catch (const Error&) {
        e.have_truth = false;
      }
      break;
    }
    case AttackKind::RobustPda: {
      require(e.ctrl_cont, ErrorCode::InvalidArgument, "robust pole-dynamics attacks need a continuous controller");
      const Controller& nc = s.nominal_controller ? *s.nominal_controller : s.controller;
      const NormalForm cnf = to_normal_form(nc.F, nc.G, nc.H, Domain::Continuous);
      const Vector q = a.q.size() ? a.q : default_dob_gains(cnf.r);
      e.dob0 = make_robust_pda(cnf, ap, q, a.tau, a.L);
      e.dob = true;
      break;
    }
  }
  if (e.exo_cont) e.nz = e.exo.dim();

  // Augmented dynamics [x; c; eta; z] with held inputs [v_plant; v_sensor].
  const Eigen::Index N = e.n + e.nc + e.neta + e.nz;
  const Eigen::Index ix = 0, ic = e.n, ie = e.n + e.nc, iz = e.n + e.nc + e.neta;
  Matrix Aa = Matrix::Zero(N, N);
  Matrix Ba = Matrix::Zero(N, 2);
  const Matrix& A = s.plant.A;
  const Matrix& B = s.plant.B;
  const Matrix& C = s.plant.C;
  Aa.block(ix, ix, e.n, e.n) = A;
  Ba.block(ix, 0, e.n, 1) = B;
  if (e.nc) {
    const Controller& k = s.controller;
    Aa.block(ix, ic, e.n, e.nc) = B * k.H;
    Aa.block(ic, ix, e.nc, e.n) = k.G * C;
    Aa.block(ic, ic, e.nc, e.nc) = k.F;
    Ba.block(ic, 1, e.nc, 1) = k.G;
  }
  if (e.neta) {
    Aa.block(ix, ie, e.n, e.n) = B * B.transpose();
    Aa.block(ie, ie, e.n, e.n) = -A.transpose();
    e.eta_reset = matrix_exponential(A.transpose() * s.Ts) * s.hold.gramian_factor;
  }
  if (e.nz) {
    Aa.block(iz, iz, e.nz, e.nz) = e.exo.S_gen;
    const RowVector out = e.exo.scale * e.exo.out_row;
    if (e.exo.channel == AttackChannel::Actuator) {
      Aa.block(ix, iz, e.n, e.nz) = B * out;
    } else if (e.nc) {
      Aa.block(ic, iz, e.nc, e.nz) = s.controller.G * out;
    }
  }
  Matrix M = Matrix::Zero(N + 2, N + 2);
  M.topLeftCorner(N, N) = Aa * e.delta_t;
  M.topRightCorner(N, 2) = Ba * e.delta_t;
  const Matrix E = matrix_exponential(M);
  e.Phi = E.topLeftCorner(N, N);
  e.Gam = E.topRightCorner(N, 2);

  // Sampler rows for y_g[0] from the free response before t = 0.
  if (!s.sampler.conventional()) {
    const int Ns = s.sampler.N();
    e.MC_back = Matrix(Ns, e.n);
    for (int i = 1; i <= Ns; ++i)
      e.MC_back.row(i - 1) = C * matrix_exponential(A * (s.Ts * i / Ns - s.Ts));
  }

  e.model = loop_model(s);
  if (s.sampler.conventional()) {
    e.xhat0 = s.x0;
  } else {
    e.xhat0 = Vector::Zero(e.n + 1);
    e.xhat0.head(e.n) = matrix_exponential(-A * s.Ts) * s.x0;
  }
}

struct RunOutput {
  std::vector<Vector> x_dense;  // every lattice point (twin) or recorded points (attacked run)
  std::vector<double> t_dense;
  std::vector<double> y_dense, u_dense, atk_dense, target_dense;
  std::vector<double> yk, yck, yhatk, rk, uk;
  std::vector<Vector> ck;
};

// Runs the loop. Without `tr` every lattice point is kept (twin run); with `tr` points are recorded at the
// requested stride and the deviation from `twin` is checked at every lattice point.
inline RunOutput run(const Engine& e, bool with_attack, const RunOutput* twin, Trace* tr) {
  const Scenario& s = e.s;
  const AttackSpec& a = s.attack;
  const long P = e.cfg.P, K = e.cfg.K;
  const Eigen::Index n = e.n, nc = e.nc, neta = e.neta, nz = e.nz;
  const Eigen::Index ic = n, ie = n + nc, iz = n + nc + neta;
  const RowVector Crow = s.plant.C.row(0);
  const Vector Bcol = s.plant.B.col(0);
  const bool conv = s.sampler.conventional();
  const int Ns = conv ? 1 : s.sampler.N();
  const long per_sample = P / Ns;
  const long per_act = P / s.actuator_divisions;
  const long per_piece = s.hold.kind == HoldKind::Piecewise ? P / s.hold.pieces() : P;
  const bool attack = with_attack && a.kind != AttackKind::None;
  const long never = std::numeric_limits<long>::max();
  const long k_start = attack ? std::lround(a.t0 / s.Ts) : never;
  const long j_start = attack ? std::lround(a.t0 / s.Ta()) : never;
  const bool dob_zda = a.kind == AttackKind::RobustZda;

  RunOutput out;
  Vector X = Vector::Zero(n + nc + neta + nz);
  X.head(n) = s.x0;
  Vector c = Vector::Zero(s.controller.states());
  LuenbergerEstimator est = luenberger_estimator(e.model, s.observer_radius, e.xhat0);
  DobAttackState dob = e.dob0;
  bool dob_on = false;
  bool stopped = false;
  double ucmd = 0.0;         // discrete controller command
  double a_disc = 0.0;       // discrete actuator attack at the current actuator slot
  double a_act_held = 0.0;   // observer-driven actuator attack
  double a_sens_held = 0.0;  // sensor attack held between updates (continuous controllers)
  double target = std::numeric_limits<double>::quiet_NaN();
  double yg_next = 0.0;
  Vector zdisc;
  long zdisc_index = -1;

  auto active = [&]() { return attack && !stopped; };
  auto y_of = [&](const Vector& Xs) { return Crow.dot(Xs.head(n)); };
  auto ctrl_out = [&](const Vector& Xs) { return nc ? (s.controller.H * Xs.segment(ic, nc))(0, 0) : ucmd; };
  auto exo_value = [&](const Vector& Xs) { return nz ? e.exo.output(Xs.segment(iz, nz)) : 0.0; };
  // Plant input given the held part v_plant that enters through B.
  auto plant_input = [&](const Vector& Xs, double v_plant) {
    double u = v_plant;
    if (nc) u += ctrl_out(Xs);
    if (neta) u += Bcol.dot(Xs.segment(ie, neta));
    if (nz && e.exo.channel == AttackChannel::Actuator) u += exo_value(Xs);
    return u;
  };
  auto attack_value = [&](const Vector& Xs) {
    if (!active()) return 0.0;
    switch (a.kind) {
      case AttackKind::CtZda:
      case AttackKind::Pda: return exo_value(Xs);
      case AttackKind::RobustZda: return a_act_held;
      case AttackKind::RobustPda: return a_sens_held;
      case AttackKind::Sequence: return a.channel == AttackChannel::Actuator ? a_disc : a_sens_held;
      default: return a_disc;
    }
  };
  auto disc_attack = [&](long j) -> double {
    if (!active() || j < j_start) return 0.0;
    const auto rel = static_cast<std::size_t>(j - j_start);
    switch (a.kind) {
      case AttackKind::DtZda:
        if (zdisc_index < 0) {
          zdisc = e.exo.delta;
          zdisc_index = j_start;
        }
        while (zdisc_index < j) {
          zdisc = e.exo.S_gen * zdisc;
          ++zdisc_index;
        }
        return e.exo.output(zdisc);
      case AttackKind::Masking: return rel < e.plan.sequence.size() ? e.plan.sequence[rel] : 0.0;
      case AttackKind::Sequence:
        if (a.channel == AttackChannel::Actuator && rel < a.values.size()) return a.values[rel];
        return 0.0;
      default: return 0.0;
    }
  };

  long idx = 0;
  double max_dev = 0.0;
  auto after_point = [&](double t, double v_plant, bool period_end) {
    if (!tr) {
      out.t_dense.push_back(t);
      out.x_dense.push_back(X.head(n));
      out.y_dense.push_back(y_of(X));
      return;
    }
    const double dev = (X.head(n) - twin->x_dense[static_cast<std::size_t>(idx)]).norm();
    max_dev = std::max(max_dev, dev);
    if (std::isnan(tr->t_star) && dev >= s.L_hazard) {
      tr->t_star = t;
      tr->deviation_at_t_star = dev;
    }
    if (idx % s.record_every == 0 || period_end) {
      out.t_dense.push_back(t);
      out.x_dense.push_back(X.head(n));
      out.y_dense.push_back(y_of(X));
      out.u_dense.push_back(plant_input(X, v_plant));
      out.atk_dense.push_back(attack_value(X));
      out.target_dense.push_back(target);
    }
    if (active() && a.stop_at_hazard && !std::isnan(tr->t_star)) {
      stopped = true;
      if (nz) X.segment(iz, nz).setZero();
      a_act_held = 0.0;
      a_sens_held = 0.0;
      a_disc = 0.0;
      dob_on = false;
    }
  };

  for (long k = 0; k <= K; ++k) {
    const double tk = static_cast<double>(k) * s.Ts;
    double yg;
    if (conv) yg = y_of(X);
    else yg = k == 0 ? s.sampler.w.dot(e.MC_back * s.x0) : yg_next;

    if (active() && k == k_start) {
      if (nz) X.segment(iz, nz) = e.exo.delta;
      if (e.dob) {
        dob = e.dob0;
        const double m0 = dob_zda ? y_of(X) : ctrl_out(X);
        dob.a = detail::sat(-detail::dob_feedthrough(dob) * m0, dob.L);
        dob.t = tk;
        dob_on = true;
        if (dob_zda) a_act_held = dob.a;
        else a_sens_held = dob.a;
      }
    }
    // sensor attacks at the sample
    double a_s = 0.0;
    if (active() && k >= k_start) {
      if (a.kind == AttackKind::Pda && !nc) a_s = exo_value(X);
      if (a.kind == AttackKind::Sequence && a.channel == AttackChannel::Sensor) {
        const auto rel = static_cast<std::size_t>(k - k_start);
        a_s = rel < a.values.size() ? a.values[rel] : 0.0;
        if (nc) a_sens_held = a_s;
      }
    }
    double yc;
    if (nc) {
      yc = y_of(X) + a_sens_held;
      if (active() && a.kind == AttackKind::Pda) yc += exo_value(X);
    } else {
      yc = yg + a_s;
      ucmd = (s.controller.H * c)(0, 0);
      c = s.controller.F * c + s.controller.G * yc;
    }
    const double u_est = ctrl_out(X);
    out.yk.push_back(yg);
    out.yck.push_back(yc);
    out.yhatk.push_back(est.predict());
    out.rk.push_back(est.update(u_est, yc));
    out.uk.push_back(u_est);
    out.ck.push_back(nc ? Vector(X.segment(ic, nc)) : c);
    if (neta) X.segment(ie, neta) = e.eta_reset * (ucmd + disc_attack(k));

    if (k == 0) {
      const bool keep_tr = tr != nullptr;
      if (keep_tr) {
        // deviation at t = 0 is zero by construction
        out.t_dense.push_back(0.0);
        out.x_dense.push_back(X.head(n));
        out.y_dense.push_back(y_of(X));
        out.u_dense.push_back(plant_input(X, nc ? 0.0 : ucmd));
        out.atk_dense.push_back(0.0);
        out.target_dense.push_back(target);
      } else {
        out.t_dense.push_back(0.0);
        out.x_dense.push_back(X.head(n));
        out.y_dense.push_back(y_of(X));
      }
    }
    if (k == K) break;

    double yg_acc = 0.0;
    auto accumulate = [&](long p_done) {
      if (!conv && p_done % per_sample == 0) yg_acc += s.sampler.w(p_done / per_sample - 1) * y_of(X);
    };
    long p = 0;
    while (p < P) {
      if (p % per_act == 0 && !neta) a_disc = disc_attack(k * s.actuator_divisions + p / per_act);
      const double level = s.hold.kind == HoldKind::Piecewise ? s.hold.h(p / per_piece) : 1.0;
      double v_plant = 0.0;
      if (nc) v_plant = a_disc;
      else if (!neta) v_plant = level * (ucmd + a_disc);
      if (active() && dob_zda) v_plant += a_act_held;
      Vector vin(2);
      vin << v_plant, (nc && active()) ? a_sens_held : 0.0;

      const bool dob_step = dob_on && active() && e.cfg.dob_every > 0 && p % e.cfg.dob_every == 0 && p + 1 < P;
      if (!dob_step) {
        X = e.Phi * X + e.Gam * vin;
        ++idx;
        ++p;
        accumulate(p);
        after_point(tk + static_cast<double>(p) * e.delta_t, v_plant, p == P);
        continue;
      }
      // Observer step over two lattice steps; plant sampled at start, mid and end.
      auto measure = [&]() { return dob_zda ? y_of(X) : ctrl_out(X); };
      auto other = [&]() { return dob_zda ? ctrl_out(X) : 0.0; };
      const double m0 = measure(), o0 = other();
      if (dob_zda && e.have_truth) target = robust_zda_target(e.truth_nf, dob, X.head(n), o0);
      X = e.Phi * X + e.Gam * vin;
      ++idx;
      ++p;
      accumulate(p);
      const double m1 = measure(), o1 = other();
      after_point(tk + static_cast<double>(p) * e.delta_t, v_plant, false);
      if (!active()) continue;
      X = e.Phi * X + e.Gam * vin;
      ++idx;
      ++p;
      accumulate(p);
      const double m2 = measure(), o2 = other();
      detail::dob_advance(dob, StepSample(m0, m1, m2), StepSample(o0, o1, o2), 2.0 * e.delta_t);
      if (dob_zda) a_act_held = dob.a;
      else a_sens_held = dob.a;
      after_point(tk + static_cast<double>(p) * e.delta_t, v_plant, p == P);
    }
    yg_next = yg_acc;
  }
  if (tr) tr->max_deviation = max_dev;
  return out;
}

}  // namespace detail

// Runs the scenario and its attack-free twin on the same lattice.
inline Trace simulate(const Scenario& scn) {
  detail::Engine e(scn);
  detail::build_engine(e);
  Trace tr;
  tr.n = static_cast<int>(e.n);
  tr.t0 = scn.attack.t0;
  tr.has_attack = scn.attack.kind != AttackKind::None;
  tr.observer_exact = scn.controller.domain == Domain::Discrete;

  // Twin first: every lattice point is kept so the attacked run can measure deviation exactly.
  detail::RunOutput twin = detail::run(e, false, nullptr, nullptr);
  detail::RunOutput att = detail::run(e, true, &twin, &tr);

  tr.t = std::move(att.t_dense);
  tr.x = std::move(att.x_dense);
  tr.y = std::move(att.y_dense);
  tr.u = std::move(att.u_dense);
  tr.attack = std::move(att.atk_dense);
  if (scn.attack.kind == AttackKind::RobustZda) tr.attack_target = std::move(att.target_dense);
  tr.ts.resize(att.yk.size());
  for (std::size_t k = 0; k < tr.ts.size(); ++k) tr.ts[k] = static_cast<double>(k) * scn.Ts;
  tr.yk = std::move(att.yk);
  tr.yck = std::move(att.yck);
  tr.yck_af = twin.yck;
  tr.yhatk = std::move(att.yhatk);
  tr.rk = std::move(att.rk);
  tr.uk = std::move(att.uk);
  tr.ck = std::move(att.ck);

  // Hold sample values forward on the dense grid and attach the twin at the recorded points.
  const double Ts = scn.Ts;
  tr.y_c.resize(tr.t.size());
  tr.y_hat.resize(tr.t.size());
  tr.residual.resize(tr.t.size());
  tr.x_af.resize(tr.t.size());
  tr.y_af.resize(tr.t.size());
  const double dt = e.delta_t;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::floor(tr.t[i] / Ts + 1e-9));
    const std::size_t kk = std::min(k, tr.yck.size() - 1);
    tr.y_c[i] = tr.yck[kk];
    tr.y_hat[i] = tr.yhatk[kk];
    tr.residual[i] = tr.rk[kk];
    const auto li = static_cast<std::size_t>(std::llround(tr.t[i] / dt));
    tr.x_af[i] = twin.x_dense[li];
    tr.y_af[i] = twin.y_dense[li];
  }
  return tr;
}

inline Report detect(const Trace& tr, double L_detect, double L_hazard) {
  require(L_detect > 0.0 && L_hazard > 0.0, ErrorCode::InvalidArgument, "thresholds must be positive");
  Report rep;
  rep.L_detect = L_detect;
  rep.L_hazard = L_hazard;
  rep.max_state_deviation = tr.max_deviation;
  rep.disruptive = !std::isnan(tr.t_star);
  rep.t_star = tr.t_star;
  const double t_end = rep.disruptive ? tr.t_star : (tr.ts.empty() ? 0.0 : tr.ts.back());
  for (std::size_t k = 0; k < tr.ts.size(); ++k) {
    const double t = tr.ts[k];
    if (t < tr.t0 - 1e-12 || t > t_end + 1e-12) continue;
    const double r = std::abs(tr.yck[k] - tr.yck_af[k]);
    rep.max_residual = std::max(rep.max_residual, r);
    if (r > L_detect && rep.stealthy) {
      rep.stealthy = false;
      rep.first_violation = t;
    }
    const double ro = std::abs(tr.rk[k]);
    rep.max_observer_residual = std::max(rep.max_observer_residual, ro);
    if (ro > L_detect && rep.observer_stealthy) {
      rep.observer_stealthy = false;
      rep.observer_first_violation = t;
    }
  }
  rep.detect_margin = L_detect - rep.max_residual;
  rep.hazard_ratio = rep.max_state_deviation / L_hazard;
  return rep;
}

inline Report detect(const Trace& tr, const Scenario& scn) { return detect(tr, scn.L_detect, scn.L_hazard); }

struct Comparison {
  Report baseline;
  Report variant;
  double residual_ratio = 0.0;  // variant / baseline max residual
  double deviation_ratio = 0.0;
  bool stealth_flipped = false;
  bool disruption_flipped = false;
  double max_output_difference = 0.0;  // max_k |y_g,variant[k] - y_g,baseline[k]|
};

inline Comparison compare_scenarios(const Scenario& baseline, const Scenario& variant) {
  require(baseline.plant.A.isApprox(variant.plant.A, 0.0) && baseline.plant.B.isApprox(variant.plant.B, 0.0) &&
              baseline.plant.C.isApprox(variant.plant.C, 0.0),
          ErrorCode::InvalidArgument, "scenarios must share the plant");
  require(baseline.horizon == variant.horizon && baseline.Ts == variant.Ts, ErrorCode::InvalidArgument,
          "scenarios must share horizon and sampling period");
  const Trace ta = simulate(baseline);
  const Trace tb = simulate(variant);
  Comparison cmp;
  cmp.baseline = detect(ta, baseline);
  cmp.variant = detect(tb, variant);
  auto ratio = [](double num, double den) {
    if (den == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return num / den;
  };
  cmp.residual_ratio = ratio(cmp.variant.max_residual, cmp.baseline.max_residual);
  cmp.deviation_ratio = ratio(cmp.variant.max_state_deviation, cmp.baseline.max_state_deviation);
  cmp.stealth_flipped = cmp.baseline.stealthy != cmp.variant.stealthy;
  cmp.disruption_flipped = cmp.baseline.disruptive != cmp.variant.disruptive;
  for (std::size_t k = 0; k < std::min(ta.yk.size(), tb.yk.size()); ++k)
    cmp.max_output_difference = std::max(cmp.max_output_difference, std::abs(ta.yk[k] - tb.yk[k]));
  return cmp;
}

}  // namespace zda
