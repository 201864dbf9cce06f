#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "zdattack/linalg.hpp"
#include "zdattack/types.hpp"

namespace zda {

// F(x) = F0 + sum_i x_i F_i, required to be positive definite.
struct LmiBlock {
  Matrix F0;
  std::vector<Matrix> Fi;

  Eigen::Index size() const { return F0.rows(); }

  Matrix eval(const Vector& x) const {
    Matrix F = F0;
    for (std::size_t i = 0; i < Fi.size(); ++i)
      if (x(static_cast<Eigen::Index>(i)) != 0.0) F += x(static_cast<Eigen::Index>(i)) * Fi[i];
    return F;
  }
};

// minimize 1/2 x'Qx + c'x  subject to  F_j(x) > 0,  Aeq x = beq,  and optionally ||x|| <= radius.
struct SdpProblem {
  int nvars = 0;
  std::vector<LmiBlock> lmis;
  Matrix Aeq;
  Vector beq;
  Matrix Q;  // empty means zero
  Vector c;  // empty means zero
  double radius = 0.0;
  bool feasibility_only = false;

  LmiBlock& add_block(Eigen::Index size) {
    LmiBlock b;
    b.F0 = Matrix::Zero(size, size);
    b.Fi.assign(static_cast<std::size_t>(nvars), Matrix::Zero(size, size));
    lmis.push_back(std::move(b));
    return lmis.back();
  }
};

enum class SdpStatus { Optimal, Feasible, Infeasible };

struct SdpResult {
  SdpStatus status = SdpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  double gap = 0.0;           // barrier duality-gap bound m/t at exit
  double phase1_value = 0.0;  // best s with F_j(x) + s I > 0
  double min_slack = 0.0;     // smallest eigenvalue over all blocks at x
  std::vector<Matrix> duals;  // F_j(x)^{-1} / t
  int iterations = 0;
  std::string message;
};

struct SdpOptions {
  double gap_tol = 1e-9;
  double feas_margin = 1e-9;  // phase I stops once every block exceeds this (relative to data scale)
  double mu = 20.0;
  int max_newton = 4000;
};

namespace detail {

struct BarrierEval {
  bool ok = false;
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

// Blocks expressed in reduced coordinates w (x = x0 + Z w[0..k)); an optional trailing variable s adds s*I.
struct ReducedBlocks {
  std::vector<Matrix> G0;
  std::vector<std::vector<Matrix>> Gi;
  bool with_s = false;
  int k = 0;

  int dim() const { return k + (with_s ? 1 : 0); }

  Matrix eval(std::size_t j, const Vector& w) const {
    Matrix F = G0[j];
    for (int i = 0; i < k; ++i)
      if (w(i) != 0.0) F += w(i) * Gi[j][static_cast<std::size_t>(i)];
    if (with_s) F.diagonal().array() += w(k);
    return F;
  }

  Matrix dir(std::size_t j, int i) const {
    if (i < k) return Gi[j][static_cast<std::size_t>(i)];
    return Matrix::Identity(G0[j].rows(), G0[j].cols());
  }

  // -sum log det F_j(w) with gradient and Hessian.
  BarrierEval barrier(const Vector& w, bool need_derivs) const {
    BarrierEval e;
    const int d = dim();
    if (need_derivs) {
      e.grad = Vector::Zero(d);
      e.hess = Matrix::Zero(d, d);
    }
    for (std::size_t j = 0; j < G0.size(); ++j) {
      const Matrix F = eval(j, w);
      Eigen::LLT<Matrix> llt(0.5 * (F + F.transpose()));
      if (llt.info() != Eigen::Success) return e;
      const Matrix Lm = llt.matrixL();
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < Lm.rows(); ++i) {
        if (!(Lm(i, i) > 0.0)) return e;
        logdet += 2.0 * std::log(Lm(i, i));
      }
      e.value -= logdet;
      if (!need_derivs) continue;
      // S_i = L^{-1} F_i L^{-T}
      std::vector<Matrix> Sdir(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        Matrix tmp = llt.matrixL().solve(dir(j, i));
        Sdir[static_cast<std::size_t>(i)] = llt.matrixL().solve(tmp.transpose()).transpose();
        e.grad(i) -= Sdir[static_cast<std::size_t>(i)].trace();
      }
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
          const double v = (Sdir[static_cast<std::size_t>(a)].cwiseProduct(Sdir[static_cast<std::size_t>(b)].transpose())).sum();
          e.hess(a, b) += v;
          if (a != b) e.hess(b, a) += v;
        }
    }
    e.ok = true;
    return e;
  }
};

inline double min_block_eig(const ReducedBlocks& rb, const Vector& w) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < rb.G0.size(); ++j) m = std::min(m, min_eigenvalue_sym(rb.eval(j, w)));
  return m;
}

// Damped Newton on t*(1/2 w'Hq w + g'w) + barrier(w) from a strictly feasible start.
// `stop` is checked after every step and ends the centering early.
template <typename Stop>
bool centering(const ReducedBlocks& rb, const Matrix& Hq, const Vector& gq, double t, Vector& w, int& budget,
               Stop stop) {
  for (;;) {
    if (budget-- <= 0) return false;
    BarrierEval b = rb.barrier(w, true);
    if (!b.ok) return false;
    const Vector grad = t * (Hq * w + gq) + b.grad;
    const Matrix H = t * Hq + b.hess;
    Eigen::LDLT<Matrix> ldlt(H);
    Vector step = -ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = -min_norm_solve(H, grad);
    const double dec = -grad.dot(step);
    if (dec / 2.0 <= 1e-10) return true;
    const double f0 = t * (0.5 * w.dot(Hq * w) + gq.dot(w)) + b.value;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector wn = w + alpha * step;
      const BarrierEval bn = rb.barrier(wn, false);
      if (bn.ok) {
        const double fn = t * (0.5 * wn.dot(Hq * wn) + gq.dot(wn)) + bn.value;
        if (fn <= f0 - 0.25 * alpha * dec) {
          w = wn;
          moved = true;
          // Progress below roundoff of the merit value: the point is centered as well as it can be.
          if (f0 - fn <= 1e-13 * std::max(1.0, std::abs(f0))) return true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!moved) return true;  // no further progress possible at this t
    if (stop(w)) return true;
  }
}

}  // namespace detail

inline SdpResult solve_sdp(const SdpProblem& prob, const SdpOptions& opt = {}) {
  const int nv = prob.nvars;
  require(nv >= 0, ErrorCode::InvalidArgument, "negative variable count");
  for (const auto& b : prob.lmis) {
    require(static_cast<int>(b.Fi.size()) == nv, ErrorCode::DimensionMismatch, "LMI block needs one matrix per variable");
    require(b.F0.rows() == b.F0.cols(), ErrorCode::DimensionMismatch, "LMI blocks must be square");
    require((b.F0 - b.F0.transpose()).norm() <= 1e-12 * (1.0 + b.F0.norm()), ErrorCode::InvalidArgument,
            "LMI blocks must be symmetric");
  }
  SdpResult res;

  // Equalities: x = x0 + Z w.
  Vector x0 = Vector::Zero(nv);
  Matrix Z = Matrix::Identity(nv, nv);
  if (prob.Aeq.rows() > 0) {
    require(prob.Aeq.cols() == nv && prob.beq.size() == prob.Aeq.rows(), ErrorCode::DimensionMismatch,
            "equality constraint dimensions");
    x0 = min_norm_solve(prob.Aeq, prob.beq);
    const double resid = (prob.Aeq * x0 - prob.beq).norm();
    if (resid > 1e-9 * (1.0 + prob.beq.norm()) * (1.0 + prob.Aeq.norm())) {
      res.status = SdpStatus::Infeasible;
      res.message = "equality constraints are inconsistent (residual " + std::to_string(resid) + ")";
      return res;
    }
    Z = null_space(prob.Aeq);
  }
  const int k = static_cast<int>(Z.cols());
  const Matrix Q = prob.Q.size() ? prob.Q : Matrix(Matrix::Zero(nv, nv));
  const Vector c = prob.c.size() ? prob.c : Vector(Vector::Zero(nv));
  auto objective = [&](const Vector& x) { return 0.5 * x.dot(Q * x) + c.dot(x); };

  std::vector<LmiBlock> blocks = prob.lmis;
  if (prob.radius > 0.0) {
    // [[R I, x], [x', R]] > 0  <=>  ||x|| < R
    LmiBlock ball;
    ball.F0 = prob.radius * Matrix::Identity(nv + 1, nv + 1);
    ball.Fi.assign(static_cast<std::size_t>(nv), Matrix::Zero(nv + 1, nv + 1));
    for (int i = 0; i < nv; ++i) {
      ball.Fi[static_cast<std::size_t>(i)](i, nv) = 1.0;
      ball.Fi[static_cast<std::size_t>(i)](nv, i) = 1.0;
    }
    blocks.push_back(std::move(ball));
  }

  if (blocks.empty()) {
    // Unconstrained apart from equalities: solve the reduced normal equations.
    const Matrix H = Z.transpose() * Q * Z;
    const Vector g = Z.transpose() * (Q * x0 + c);
    const Vector w = k > 0 ? Vector(-min_norm_solve(H, g)) : Vector(Vector::Zero(0));
    if (k > 0 && (H * w + g).norm() > 1e-9 * (1.0 + g.norm()))
      fail(ErrorCode::NumericalFailure, "objective is unbounded below on the feasible set");
    res.x = x0 + Z * w;
    res.objective = objective(res.x);
    res.status = prob.feasibility_only ? SdpStatus::Feasible : SdpStatus::Optimal;
    res.message = "solved reduced normal equations";
    return res;
  }

  detail::ReducedBlocks rb;
  rb.k = k;
  double scale = 1.0;
  const std::size_t user_blocks = prob.lmis.size();
  for (const auto& b : blocks) {
    const Vector& xs = x0;
    Matrix G0 = b.eval(xs);
    std::vector<Matrix> Gi(static_cast<std::size_t>(k), Matrix::Zero(b.size(), b.size()));
    for (int i = 0; i < k; ++i)
      for (int v = 0; v < nv; ++v)
        if (Z(v, i) != 0.0) Gi[static_cast<std::size_t>(i)] += Z(v, i) * b.Fi[static_cast<std::size_t>(v)];
    if (rb.G0.size() < user_blocks) {
      double sz = G0.norm();
      for (const auto& G : Gi) sz = std::max(sz, G.norm());
      scale = std::max(scale, sz);
    }
    rb.G0.push_back(std::move(G0));
    rb.Gi.push_back(std::move(Gi));
  }
  double m = 0.0;
  for (const auto& G : rb.G0) m += static_cast<double>(G.rows());
  int budget = opt.max_newton;
  const double margin = opt.feas_margin * scale;

  // Phase I: minimize s subject to F_j + s I > 0 and s > -scale. The floor keeps phase I bounded when
  // some direction leaves every block unchanged; it only binds well below -margin.
  rb.with_s = true;
  rb.G0.push_back(Matrix::Constant(1, 1, scale));
  rb.Gi.push_back(std::vector<Matrix>(static_cast<std::size_t>(k), Matrix::Zero(1, 1)));
  const double m1 = m + 1.0;
  Vector w = Vector::Zero(k + 1);
  w(k) = std::max(0.0, -detail::min_block_eig(rb, Vector::Zero(k + 1))) + 1.0;
  {
    Matrix Hq = Matrix::Zero(k + 1, k + 1);
    Vector gq = Vector::Zero(k + 1);
    gq(k) = 1.0;
    double t = 1.0 / scale;
    bool found = false;
    auto reached = [&](const Vector& ww) { return ww(k) < -margin; };
    for (;;) {
      const bool ok = detail::centering(rb, Hq, gq, t, w, budget, reached);
      ++res.iterations;
      if (reached(w)) {
        found = true;
        break;
      }
      if (!ok) {
        if (budget <= 0)
          fail(ErrorCode::IterationLimit, "phase I exhausted its Newton budget at s = " + std::to_string(w(k)));
        fail(ErrorCode::NumericalFailure, "phase I lost strict feasibility");
      }
      const double bound = w(k) - m1 / t;  // lower bound on the optimal s
      if (bound > 0.0) {
        res.status = SdpStatus::Infeasible;
        res.phase1_value = w(k);
        res.message = "phase I certificate: every point violates some block by at least " + std::to_string(bound);
        return res;
      }
      if (m1 / t < opt.gap_tol * scale) {
        res.status = SdpStatus::Infeasible;
        res.phase1_value = w(k);
        res.message = "no strictly feasible point with margin " + std::to_string(margin) + " (best s = " +
                      std::to_string(w(k)) + ")";
        return res;
      }
      t *= opt.mu;
    }
    (void)found;
  }
  res.phase1_value = w(k);
  rb.with_s = false;
  rb.G0.pop_back();
  rb.Gi.pop_back();
  Vector y = w.head(k);

  double t = 1.0;
  if (!prob.feasibility_only) {
    const Matrix Hq = Z.transpose() * Q * Z;
    const Vector gq = Z.transpose() * (Q * x0 + c);
    // Start t so that objective and barrier have comparable weight.
    t = 1.0;
    for (;;) {
      const bool ok = detail::centering(rb, Hq, gq, t, y, budget, [](const Vector&) { return false; });
      ++res.iterations;
      if (!ok) {
        if (budget <= 0) fail(ErrorCode::IterationLimit, "phase II exhausted its Newton budget");
        fail(ErrorCode::NumericalFailure, "phase II lost strict feasibility");
      }
      if (m / t < opt.gap_tol) break;
      t *= opt.mu;
    }
  }

  res.x = x0 + Z * y;
  res.objective = objective(res.x);
  res.gap = prob.feasibility_only ? 0.0 : m / t;
  res.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) {
    const Matrix F = b.eval(res.x);
    res.min_slack = std::min(res.min_slack, min_eigenvalue_sym(F));
    res.duals.push_back(F.llt().solve(Matrix::Identity(F.rows(), F.cols())) / t);
  }
  require(res.min_slack > 0.0, ErrorCode::NumericalFailure, "returned point is not strictly feasible");
  res.status = prob.feasibility_only ? SdpStatus::Feasible : SdpStatus::Optimal;
  res.message = prob.feasibility_only ? "strictly feasible point found" : "barrier method converged";
  return res;
}

// Basis of symmetric k x k matrices: E_ii, and E_ij + E_ji for i < j.
inline std::vector<Matrix> symmetric_basis(Eigen::Index k) {
  std::vector<Matrix> out;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) {
      Matrix E = Matrix::Zero(k, k);
      E(i, j) = 1.0;
      E(j, i) = 1.0;
      out.push_back(E);
    }
  return out;
}

}  // namespace zda
