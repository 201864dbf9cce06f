#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "zdattack/linalg.hpp"
#include "zdattack/lti.hpp"
#include "zdattack/sampling.hpp"
#include "zdattack/sdp.hpp"
#include "zdattack/types.hpp"

namespace zda {

enum class HoldKind { Zoh, Piecewise, Continuous };

// Shape of the plant-side hold over one sampling period.
struct HoldProfile {
  HoldKind kind = HoldKind::Zoh;
  Vector h;         // piecewise levels h_1..h_N
  Vector Bg;        // continuous: target input map
  Vector gramian_factor;  // continuous: W(0,Ts)^{-1} B_g
  double Ts = 0.0;

  int pieces() const {
    if (kind == HoldKind::Piecewise) return static_cast<int>(h.size());
    return 1;
  }

  static HoldProfile zoh(double Ts) {
    HoldProfile p;
    p.kind = HoldKind::Zoh;
    p.Ts = Ts;
    return p;
  }
  static HoldProfile piecewise(Vector levels, double Ts) {
    require(levels.size() >= 1, ErrorCode::InvalidArgument, "piecewise hold needs N >= 1 levels");
    HoldProfile p;
    p.kind = HoldKind::Piecewise;
    p.h = std::move(levels);
    p.Ts = Ts;
    return p;
  }
};

// Sampler y_g[k] = sum_i w_i y(i Ts / N + (k-1) Ts).
struct SamplerWeights {
  Vector w;
  double Ts = 0.0;

  int N() const { return static_cast<int>(w.size()); }
  bool conventional() const {
    if (w.size() == 0) return true;
    for (Eigen::Index i = 0; i + 1 < w.size(); ++i)
      if (w(i) != 0.0) return false;
    return w(w.size() - 1) == 1.0;
  }
  static SamplerWeights conventional_sampler(double Ts, int N = 1) {
    SamplerWeights s;
    s.w = Vector::Zero(N);
    s.w(N - 1) = 1.0;
    s.Ts = Ts;
    return s;
  }
};

// k_d * prod(z - zeros) / det(zI - A_d).
struct DesiredDiscreteTF {
  ComplexList zeros;
  double k_d = 1.0;
};

// ---------------------------------------------------------------------------------------------
// Hold and sampler maps

// h_g(t) for t in [0, Ts).
inline double hold_value(const HoldProfile& hold, const ContinuousLTI& sys, double t) {
  switch (hold.kind) {
    case HoldKind::Zoh: return 1.0;
    case HoldKind::Piecewise: {
      const int N = hold.pieces();
      int i = static_cast<int>(std::floor(t / hold.Ts * N));
      i = std::clamp(i, 0, N - 1);
      return hold.h(i);
    }
    case HoldKind::Continuous: {
      const Matrix E = matrix_exponential(sys.A.transpose() * (hold.Ts - t));
      return (sys.B.transpose() * E * hold.gramian_factor)(0, 0);
    }
  }
  return 0.0;
}

// int_0^t e^{A(t - s)} B h_g(s) ds, the state reached at offset t from zero state with u[k] = 1.
inline Vector hold_response(const ContinuousLTI& sys, const HoldProfile& hold, double t) {
  const Eigen::Index n = sys.states();
  require(t >= 0.0 && t <= hold.Ts * (1.0 + 1e-12), ErrorCode::InvalidArgument, "offset outside the sampling period");
  switch (hold.kind) {
    case HoldKind::Zoh: return zoh_maps(sys.A, sys.B, t).second;
    case HoldKind::Piecewise: {
      const int N = hold.pieces();
      const double w = hold.Ts / N;
      Vector x = Vector::Zero(n);
      double done = 0.0;
      for (int i = 0; i < N && done < t; ++i) {
        const double len = std::min(w, t - done);
        if (len <= 0.0) break;
        auto [Ad, Bd] = zoh_maps(sys.A, sys.B, len);
        x = Ad * x + Bd * hold.h(i);
        done += len;
      }
      return x;
    }
    case HoldKind::Continuous: {
      // d/dt [x; eta] = [[A, B B'], [0, -A']] [x; eta], eta(0) = e^{A' Ts} W^{-1} B_g
      Matrix M = Matrix::Zero(2 * n, 2 * n);
      M.topLeftCorner(n, n) = sys.A;
      M.topRightCorner(n, n) = sys.B * sys.B.transpose();
      M.bottomRightCorner(n, n) = -sys.A.transpose();
      Vector s0 = Vector::Zero(2 * n);
      s0.tail(n) = matrix_exponential(sys.A.transpose() * hold.Ts) * hold.gramian_factor;
      return (matrix_exponential(M * t) * s0).head(n);
    }
  }
  return Vector::Zero(n);
}

// Effective discrete input map of the hold over one period.
inline Vector hold_input_map(const ContinuousLTI& sys, const HoldProfile& hold) {
  return hold_response(sys, hold, hold.Ts);
}

// M_B = [A_dN^{N-1} B_dN, ..., A_dN B_dN, B_dN].
inline Matrix hold_matrix_MB(const ContinuousLTI& sys, double Ts, int N) {
  const SubintervalModel sm = subinterval_model(sys, Ts, N);
  const Eigen::Index n = sys.states();
  Matrix MB(n, N);
  Vector col = sm.B_dN.col(0);
  for (int i = N - 1; i >= 0; --i) {
    MB.col(i) = col;
    col = sm.A_dN * col;
  }
  return MB;
}

// Rows C e^{A i Ts/N} and C x_hold(i Ts/N) for i = 1..N.
struct SamplerMatrices {
  Matrix MC;
  Vector MD;
};

inline SamplerMatrices sampler_matrices(const ContinuousLTI& sys, double Ts, int N,
                                        const std::optional<HoldProfile>& hold = std::nullopt) {
  require(N >= 1, ErrorCode::InvalidArgument, "sampler needs N >= 1");
  const Eigen::Index n = sys.states();
  SamplerMatrices m{Matrix(N, n), Vector(N)};
  if (!hold || hold->kind == HoldKind::Zoh) {
    const SubintervalModel sm = subinterval_model(sys, Ts, N);
    Matrix Ai = Matrix::Identity(n, n);
    Vector acc = Vector::Zero(n);
    for (int i = 1; i <= N; ++i) {
      acc += Ai * sm.B_dN;
      Ai = Ai * sm.A_dN;
      m.MC.row(i - 1) = sys.C * Ai;
      m.MD(i - 1) = (sys.C * acc)(0, 0);
    }
    return m;
  }
  for (int i = 1; i <= N; ++i) {
    const double t = Ts * i / N;
    m.MC.row(i - 1) = sys.C * matrix_exponential(sys.A * t);
    m.MD(i - 1) = sys.C.row(0).dot(hold_response(sys, *hold, t));
  }
  return m;
}

// Discrete model seen through a hold and a conventional sampler.
inline DiscreteLTI hold_discrete_model(const ContinuousLTI& sys, const HoldProfile& hold) {
  Matrix B = hold_input_map(sys, hold);
  return DiscreteLTI(matrix_exponential(sys.A * hold.Ts), B, sys.C, hold.Ts);
}

// Delayed model of a generalized sampler: state [x[k-1]; u[k-1]], output y_g[k].
inline DiscreteLTI sampler_discrete_model(const ContinuousLTI& sys, const SamplerWeights& sampler,
                                          const HoldProfile& hold) {
  const Eigen::Index n = sys.states();
  const SamplerMatrices sm = sampler_matrices(sys, hold.Ts, sampler.N(), hold);
  const RowVector Cg = sampler.w.transpose() * sm.MC;
  const double Dg = sampler.w.dot(sm.MD);
  Matrix A = Matrix::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = matrix_exponential(sys.A * hold.Ts);
  A.topRightCorner(n, 1) = hold_input_map(sys, hold);
  Matrix B = Matrix::Zero(n + 1, 1);
  B(n, 0) = 1.0;
  Matrix C(1, n + 1);
  C << Cg, Dg;
  return DiscreteLTI(A, B, C, hold.Ts);
}

// ---------------------------------------------------------------------------------------------
// Exact designs

namespace detail {

inline void check_conjugate_closed(const ComplexList& zs) {
  for (const auto& z : zs) {
    if (std::abs(z.imag()) <= 1e-12 * (1.0 + std::abs(z))) continue;
    bool found = false;
    for (const auto& w : zs)
      if (std::abs(w - std::conj(z)) <= 1e-9 * (1.0 + std::abs(z))) found = true;
    require(found, ErrorCode::InvalidArgument, "desired zeros must come in conjugate pairs");
  }
}

// Controllability matrix of the companion pair (A_*, B_*) of a monic polynomial.
inline Matrix companion_ctrb(const Vector& den_monic) {
  const Eigen::Index n = den_monic.size() - 1;
  Matrix B = Matrix::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  return controllability_matrix(companion_lower(den_monic), B);
}

}  // namespace detail

// Each zero with modulus >= 1 goes to 1 / conj(z); stable zeros stay.
inline ComplexList default_target_zeros(const ComplexList& zeros) {
  ComplexList out;
  for (const auto& z : zeros) out.push_back(std::abs(z) >= 1.0 ? 1.0 / std::conj(z) : z);
  return out;
}

// Numerator coefficients c_0..c_{n-1} of k_d prod(z - z_i) (strictly proper target).
inline Vector gh_target_numerator(const DesiredDiscreteTF& target, Eigen::Index n) {
  require(static_cast<Eigen::Index>(target.zeros.size()) == n - 1, ErrorCode::DimensionMismatch,
          "hold targets need n - 1 zeros");
  detail::check_conjugate_closed(target.zeros);
  return target.k_d * poly_from_roots(target.zeros);
}

inline Vector gh_exact_Bg(const DiscreteLTI& dsys, const DesiredDiscreteTF& target) {
  const Eigen::Index n = dsys.states();
  const Matrix Od = observability_matrix(dsys.A, dsys.C);
  Eigen::FullPivLU<Matrix> lu(Od);
  require(numeric_rank(Od) == n && lu.isInvertible(), ErrorCode::NotObservable, "(A_d, C_d) is not observable");
  const Vector den = characteristic_polynomial(dsys.A);
  const Vector c = gh_target_numerator(target, n);
  // Markov parameters of the target: C_* A_*^k B_* = (C_*^T)' columns of the companion controllability matrix.
  const Vector markov = detail::companion_ctrb(den).transpose() * c;
  return lu.solve(markov);
}

inline HoldProfile gh_continuous(const ContinuousLTI& sys, const Vector& Bg, double Ts) {
  require(Bg.size() == sys.states(), ErrorCode::DimensionMismatch, "B_g must have one entry per state");
  const Matrix W = controllability_gramian(sys, Ts);
  require(numeric_rank(W, 1e-12) == sys.states(), ErrorCode::NotControllable, "controllability Gramian is singular");
  HoldProfile p;
  p.kind = HoldKind::Continuous;
  p.Bg = Bg;
  p.gramian_factor = W.ldlt().solve(Bg);
  p.Ts = Ts;
  return p;
}

inline HoldProfile gh_piecewise(const ContinuousLTI& sys, const Vector& Bg, double Ts, int N) {
  require(N >= 1, ErrorCode::InvalidArgument, "need N >= 1");
  require(Bg.size() == sys.states(), ErrorCode::DimensionMismatch, "B_g must have one entry per state");
  const Matrix MB = hold_matrix_MB(sys, Ts, N);
  const Vector h = min_norm_solve(MB, Bg);
  const double resid = (MB * h - Bg).norm();
  require(resid <= 1e-9 * std::max(Bg.norm(), MB.norm() * h.norm()), ErrorCode::NotInRange,
          "B_g is not in the range of M_B (residual " + std::to_string(resid) + ")");
  return HoldProfile::piecewise(h, Ts);
}

// Numerator of k_d (prod(z - z_i) - det(zI - A_d)) for sampler targets.
inline Vector gs_target_numerator(const DesiredDiscreteTF& target, const Vector& den) {
  const Eigen::Index n = den.size() - 1;
  require(static_cast<Eigen::Index>(target.zeros.size()) == n, ErrorCode::DimensionMismatch,
          "sampler targets need n zeros");
  detail::check_conjugate_closed(target.zeros);
  const Vector num = poly_from_roots(target.zeros);
  return target.k_d * (num - den).head(n);
}

struct SamplerOutputMap {
  RowVector Cg;
  double Dg = 0.0;
};

inline SamplerOutputMap gs_exact(const DiscreteLTI& dsys, const DesiredDiscreteTF& target) {
  const Eigen::Index n = dsys.states();
  const Matrix Cd = controllability_matrix(dsys.A, dsys.B);
  Eigen::FullPivLU<Matrix> lu(Cd);
  require(numeric_rank(Cd) == n && lu.isInvertible(), ErrorCode::NotControllable, "(A_d, B_d) is not controllable");
  const Vector den = characteristic_polynomial(dsys.A);
  const Vector c = gs_target_numerator(target, den);
  const Vector markov = detail::companion_ctrb(den).transpose() * c;
  // C_g Cd = markov'  <=>  Cd' C_g' = markov
  SamplerOutputMap out;
  out.Cg = Cd.transpose().fullPivLu().solve(markov).transpose();
  out.Dg = target.k_d;
  return out;
}

inline SamplerWeights gs_weights(const ContinuousLTI& sys, double Ts, int N, const RowVector& Cg, double Dg) {
  const Eigen::Index n = sys.states();
  require(Cg.size() == n, ErrorCode::DimensionMismatch, "C_g must have one entry per state");
  const SamplerMatrices sm = sampler_matrices(sys, Ts, N);
  Matrix M(N, n + 1);
  M << sm.MC, sm.MD;
  Vector rhs(n + 1);
  rhs << Cg.transpose(), Dg;
  const Vector w = min_norm_solve(M.transpose(), rhs);
  const double resid = (M.transpose() * w - rhs).norm();
  if (resid > 1e-9 * std::max(rhs.norm(), M.norm() * w.norm())) {
    if (N >= n + 1 && numeric_rank(M) < n + 1)
      fail(ErrorCode::ExtendedUnobservable, "extended sampler system is unobservable; [M_C, M_D] is rank deficient");
    fail(ErrorCode::NotInRowSpace, "[C_g, D_g] is not in the row space of [M_C, M_D] (residual " +
                                       std::to_string(resid) + ")");
  }
  SamplerWeights s;
  s.w = w;
  s.Ts = Ts;
  return s;
}

// Exact designs with default gain normalization (sum h = N, sum w = 1).
struct ExactHoldDesign {
  DesiredDiscreteTF target;
  Vector Bg;
  HoldProfile hold;
};

inline ExactHoldDesign design_exact_hold(const ContinuousLTI& sys, double Ts, int N, std::optional<ComplexList> zeros,
                                         std::optional<double> k_d) {
  const DiscreteLTI d = c2d_zoh(sys, Ts);
  ExactHoldDesign out;
  out.target.zeros = zeros ? *zeros : default_target_zeros(transfer_zeros(d.A, d.B, d.C));
  out.target.k_d = 1.0;
  if (k_d) {
    out.target.k_d = *k_d;
  } else {
    const Vector h1 = min_norm_solve(hold_matrix_MB(sys, Ts, N), gh_exact_Bg(d, out.target));
    const double s = h1.sum();
    require(std::abs(s) > 1e-12 * std::max(1.0, h1.norm()), ErrorCode::InvalidArgument,
            "cannot normalize the gain: levels sum to zero");
    out.target.k_d = N / s;
  }
  out.Bg = gh_exact_Bg(d, out.target);
  out.hold = gh_piecewise(sys, out.Bg, Ts, N);
  return out;
}

struct ExactSamplerDesign {
  DesiredDiscreteTF target;
  SamplerOutputMap map;
  SamplerWeights sampler;
};

inline ExactSamplerDesign design_exact_sampler(const ContinuousLTI& sys, double Ts, int N,
                                               std::optional<ComplexList> zeros, std::optional<double> k_d) {
  const DiscreteLTI d = c2d_zoh(sys, Ts);
  ExactSamplerDesign out;
  if (zeros) {
    out.target.zeros = *zeros;
  } else {
    // The conventional sampler realizes z * G_d(z); its extra zero at the origin is kept.
    ComplexList zs = default_target_zeros(transfer_zeros(d.A, d.B, d.C));
    zs.push_back(0.0);
    out.target.zeros = zs;
  }
  out.target.k_d = 1.0;
  if (k_d) {
    out.target.k_d = *k_d;
  } else {
    const SamplerOutputMap m1 = gs_exact(d, out.target);
    const double s = gs_weights(sys, Ts, N, m1.Cg, m1.Dg).w.sum();
    require(std::abs(s) > 1e-12, ErrorCode::InvalidArgument, "cannot normalize the gain: weights sum to zero");
    out.target.k_d = 1.0 / s;
  }
  out.map = gs_exact(d, out.target);
  out.sampler = gs_weights(sys, Ts, N, out.map.Cg, out.map.Dg);
  return out;
}

// ---------------------------------------------------------------------------------------------
// SPR certificate and optimal designs

namespace detail {

// Adds  -[A'PA - P, A'PB - C'; B'PA - C, B'PB - 2D] > 0  and  P > 0  for alpha(x) = a0 + Amap x
// (alpha ascending, length q + 1), with P packed in variables [p_offset, p_offset + q(q+1)/2).
inline void add_spr_constraint(SdpProblem& prob, const Vector& a0, const Matrix& Amap, int p_offset) {
  const Eigen::Index q = a0.size() - 1;
  const std::vector<Matrix> basis = symmetric_basis(q);
  Matrix At = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i + 1 < q; ++i) At(i, i + 1) = 1.0;
  Matrix Bt = Matrix::Zero(q, 1);
  if (q > 0) Bt(q - 1, 0) = 1.0;

  auto alpha_part = [&](const Vector& alpha) {
    Matrix M = Matrix::Zero(q + 1, q + 1);
    for (Eigen::Index i = 0; i < q; ++i) {
      M(i, q) = -alpha(i);
      M(q, i) = -alpha(i);
    }
    M(q, q) = -2.0 * alpha(q);
    return M;
  };

  LmiBlock& spr = prob.add_block(q + 1);
  spr.F0 = -alpha_part(a0);
  for (int v = 0; v < prob.nvars; ++v) {
    if (v >= p_offset && v < p_offset + static_cast<int>(basis.size())) {
      const Matrix& E = basis[static_cast<std::size_t>(v - p_offset)];
      Matrix M(q + 1, q + 1);
      M.topLeftCorner(q, q) = At.transpose() * E * At - E;
      M.topRightCorner(q, 1) = At.transpose() * E * Bt;
      M.bottomLeftCorner(1, q) = Bt.transpose() * E * At;
      M(q, q) = (Bt.transpose() * E * Bt)(0, 0);
      spr.Fi[static_cast<std::size_t>(v)] = -M;
    } else if (Amap.cols() > v) {
      spr.Fi[static_cast<std::size_t>(v)] = -alpha_part(Amap.col(v));
    }
  }
  if (q > 0) {
    LmiBlock& pos = prob.add_block(q);
    for (std::size_t i = 0; i < basis.size(); ++i) pos.Fi[static_cast<std::size_t>(p_offset) + i] = basis[i];
  }
}

inline Matrix unpack_symmetric(const Vector& x, int offset, Eigen::Index q) {
  Matrix P = Matrix::Zero(q, q);
  int idx = offset;
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i; j < q; ++j) {
      P(i, j) = x(idx);
      P(j, i) = x(idx);
      ++idx;
    }
  return P;
}

// Largest eigenvalue of the SPR block at (alpha, P); negative means the certificate holds.
inline double spr_block_max_eig(const Vector& alpha, const Matrix& P) {
  const Eigen::Index q = alpha.size() - 1;
  Matrix At = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i + 1 < q; ++i) At(i, i + 1) = 1.0;
  Matrix Bt = Matrix::Zero(q, 1);
  if (q > 0) Bt(q - 1, 0) = 1.0;
  Matrix M(q + 1, q + 1);
  M.topLeftCorner(q, q) = At.transpose() * P * At - P;
  M.topRightCorner(q, 1) = At.transpose() * P * Bt - alpha.head(q);
  M.bottomLeftCorner(1, q) = M.topRightCorner(q, 1).transpose();
  M(q, q) = (Bt.transpose() * P * Bt)(0, 0) - 2.0 * alpha(q);
  return max_eigenvalue_sym(M);
}

inline Vector radius_scaled(const Vector& alpha, double rho) {
  Vector out = alpha;
  double f = 1.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    out(i) *= f;
    f *= rho;
  }
  return out;
}

}  // namespace detail

struct SprCertificate {
  bool feasible = false;
  Matrix P;
  double block_max_eig = 0.0;
  std::string message;
};

// Certifies (alpha_q z^q + ... + alpha_0) / z^q strictly positive real, which implies all roots inside |z| < 1.
inline SprCertificate spr_stability_certificate(const Vector& alpha_in) {
  const Vector alpha = poly_trim(alpha_in);
  const Eigen::Index q = alpha.size() - 1;
  require(alpha(q) > 0.0, ErrorCode::LeadingCoefficientNonpositive, "leading coefficient must be positive");
  SprCertificate cert;
  const Vector a = alpha / alpha.cwiseAbs().maxCoeff();
  if (q == 0) {
    cert.feasible = true;
    cert.P = Matrix(0, 0);
    cert.block_max_eig = -2.0 * a(0);
    cert.message = "constant polynomial";
    return cert;
  }
  SdpProblem prob;
  prob.nvars = static_cast<int>(q * (q + 1) / 2);
  prob.feasibility_only = true;
  prob.radius = 1e6;
  detail::add_spr_constraint(prob, a, Matrix(q + 1, 0), 0);
  const SdpResult res = solve_sdp(prob);
  cert.message = res.message;
  if (res.status == SdpStatus::Infeasible) return cert;
  cert.P = detail::unpack_symmetric(res.x, 0, q);
  cert.block_max_eig = detail::spr_block_max_eig(a, cert.P);
  cert.feasible = cert.block_max_eig < 0.0 && min_eigenvalue_sym(cert.P) > 0.0;
  if (!cert.feasible) cert.message = "solver point failed strict verification";
  return cert;
}

struct OptimalDesign {
  HoldProfile hold;
  SamplerWeights sampler;
  Vector zero_polynomial;  // ascending
  ComplexList zeros;
  double objective = 0.0;
  SdpResult solver;
};

// min ||h - 1||^2 over piecewise holds whose zero polynomial is SPR-certified inside |z| < 1 - margin.
inline OptimalDesign gh_optimal(const ContinuousLTI& sys, double Ts, int N, double margin) {
  const int n = static_cast<int>(sys.states());
  require(N >= n, ErrorCode::InvalidArgument, "optimal hold needs N >= n");
  require(margin >= 0.0, ErrorCode::InvalidArgument, "margin must be nonnegative");
  if (margin >= 1.0) fail(ErrorCode::Infeasible, "margin >= 1 leaves no admissible zero location");
  const DiscreteLTI d = c2d_zoh(sys, Ts);
  require(is_observable(d.A, d.C), ErrorCode::NotObservable, "(A_d, C_d) is not observable");
  require(is_controllable(d.A, d.B), ErrorCode::NotControllable, "(A_d, B_d) is not controllable");
  const Matrix MB = hold_matrix_MB(sys, Ts, N);
  const Vector den = characteristic_polynomial(d.A);
  const Matrix Cs = detail::companion_ctrb(den);
  // c = C_*^{-T} O_d M_B h
  const Matrix map = Cs.transpose().fullPivLu().solve(observability_matrix(d.A, d.C) * MB);
  const double lead = (d.C * d.B)(0, 0);
  require(lead != 0.0, ErrorCode::DegenerateSystem, "C B_d vanishes");
  const double norm = (lead > 0 ? 1.0 : -1.0) / std::abs(lead);
  const double rho = 1.0 - margin;

  const int q = n - 1;
  const int np = q * (q + 1) / 2;
  SdpProblem prob;
  prob.nvars = N + np;
  // alpha_i = norm * rho^i * c_i
  Matrix Amap = Matrix::Zero(q + 1, prob.nvars);
  for (int i = 0; i <= q; ++i) Amap.block(i, 0, 1, N) = norm * std::pow(rho, i) * map.row(i);
  detail::add_spr_constraint(prob, Vector::Zero(q + 1), Amap, N);
  prob.Aeq = Matrix::Zero(1, prob.nvars);
  prob.Aeq.block(0, 0, 1, N).setOnes();
  prob.beq = Vector::Constant(1, N);
  prob.Q = Matrix::Zero(prob.nvars, prob.nvars);
  prob.Q.topLeftCorner(N, N) = 2.0 * Matrix::Identity(N, N);
  prob.c = Vector::Zero(prob.nvars);
  prob.c.head(N).setConstant(-2.0);
  prob.radius = 1e6;

  OptimalDesign out;
  out.solver = solve_sdp(prob);
  if (out.solver.status == SdpStatus::Infeasible)
    fail(ErrorCode::Infeasible, "no hold with certified stable zeros: " + out.solver.message);
  const Vector h = out.solver.x.head(N);
  out.hold = HoldProfile::piecewise(h, Ts);
  out.zero_polynomial = map * h;
  out.zeros = poly_roots(out.zero_polynomial);
  out.objective = (h - Vector::Ones(N)).squaredNorm();
  for (const auto& z : out.zeros)
    require(std::abs(z) < 1.0 && std::abs(z) <= rho + 1e-9, ErrorCode::InvariantViolation,
            "post-solve root check failed");
  return out;
}

// min ||[M_C, M_D]'(w - e_N)||^2 over samplers whose zero polynomial is SPR-certified inside |z| < 1 - margin.
inline OptimalDesign gs_optimal(const ContinuousLTI& sys, double Ts, int N, double margin) {
  const int n = static_cast<int>(sys.states());
  require(N >= n + 1, ErrorCode::InvalidArgument, "optimal sampler needs N >= n + 1");
  require(margin >= 0.0, ErrorCode::InvalidArgument, "margin must be nonnegative");
  if (margin >= 1.0) fail(ErrorCode::Infeasible, "margin >= 1 leaves no admissible zero location");
  const DiscreteLTI d = c2d_zoh(sys, Ts);
  require(is_controllable(d.A, d.B), ErrorCode::NotControllable, "(A_d, B_d) is not controllable");
  const SamplerMatrices sm = sampler_matrices(sys, Ts, N);
  const Vector den = characteristic_polynomial(d.A);
  const Matrix Cs = detail::companion_ctrb(den);
  const Matrix Cd = controllability_matrix(d.A, d.B);
  // alpha_i = c_i + D d_i (i < n), alpha_n = D, with c = C_*^{-T} C_d' M_C' w and D = M_D' w
  const Matrix cmap = Cs.transpose().fullPivLu().solve(Cd.transpose() * sm.MC.transpose());
  Matrix amap(n + 1, N);
  amap.topRows(n) = cmap + den.head(n) * sm.MD.transpose();
  amap.row(n) = sm.MD.transpose();
  const double lead = (d.C * d.B)(0, 0);
  require(lead != 0.0, ErrorCode::DegenerateSystem, "C B_d vanishes");
  const double norm = (lead > 0 ? 1.0 : -1.0) / std::abs(lead);
  const double rho = 1.0 - margin;

  const int np = n * (n + 1) / 2;
  SdpProblem prob;
  prob.nvars = N + np;
  Matrix Amap = Matrix::Zero(n + 1, prob.nvars);
  for (int i = 0; i <= n; ++i) Amap.block(i, 0, 1, N) = norm * std::pow(rho, i) * amap.row(i);
  detail::add_spr_constraint(prob, Vector::Zero(n + 1), Amap, N);
  prob.Aeq = Matrix::Zero(1, prob.nvars);
  prob.Aeq.block(0, 0, 1, N).setOnes();
  prob.beq = Vector::Ones(1);
  Matrix M(N, n + 1);
  M << sm.MC, sm.MD;
  const Matrix MMt = M * M.transpose();
  Vector eN = Vector::Zero(N);
  eN(N - 1) = 1.0;
  prob.Q = Matrix::Zero(prob.nvars, prob.nvars);
  prob.Q.topLeftCorner(N, N) = 2.0 * MMt;
  prob.c = Vector::Zero(prob.nvars);
  prob.c.head(N) = -2.0 * MMt * eN;
  prob.radius = 1e6;

  OptimalDesign out;
  out.solver = solve_sdp(prob);
  if (out.solver.status == SdpStatus::Infeasible)
    fail(ErrorCode::Infeasible, "no sampler with certified stable zeros: " + out.solver.message);
  const Vector w = out.solver.x.head(N);
  out.sampler.w = w;
  out.sampler.Ts = Ts;
  out.hold = HoldProfile::zoh(Ts);
  out.zero_polynomial = amap * w;
  out.zeros = poly_roots(out.zero_polynomial);
  out.objective = (M.transpose() * (w - eN)).squaredNorm();
  for (const auto& z : out.zeros)
    require(std::abs(z) < 1.0 && std::abs(z) <= rho + 1e-9, ErrorCode::InvariantViolation,
            "post-solve root check failed");
  return out;
}

}  // namespace zda
