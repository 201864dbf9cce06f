#pragma once

#include <cmath>
#include <vector>

#include "zdattack/linalg.hpp"
#include "zdattack/types.hpp"

namespace zda {

inline Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  Matrix out(n, n * B.cols());
  Matrix blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  return out;
}

inline Matrix observability_matrix(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  Matrix out(n * C.rows(), n);
  Matrix blk = C;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleRows(k * C.rows(), C.rows()) = blk;
    blk = blk * A;
  }
  return out;
}

// W(0,T) = int_0^T e^{A t} B B' e^{A' t} dt, through one exponential of [[-A, BB'], [0, A']] (Van Loan).
inline Matrix controllability_gramian(const Matrix& A, const Matrix& B, double horizon) {
  require(horizon > 0.0, ErrorCode::InvalidArgument, "Gramian horizon must be positive");
  const Eigen::Index n = A.rows();
  Matrix M = Matrix::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -A;
  M.topRightCorner(n, n) = B * B.transpose();
  M.bottomRightCorner(n, n) = A.transpose();
  const Matrix E = matrix_exponential(M * horizon);
  const Matrix W = E.bottomRightCorner(n, n).transpose() * E.topRightCorner(n, n);
  return 0.5 * (W + W.transpose());
}

inline Matrix controllability_gramian(const ContinuousLTI& sys, double horizon) {
  return controllability_gramian(sys.A, sys.B, horizon);
}

// h_k = C A^{k-1} B for k = 1..count (SISO).
inline Vector markov_parameters(const Matrix& A, const Matrix& B, const Matrix& C, Eigen::Index count) {
  Vector h(count);
  Matrix v = B;
  for (Eigen::Index k = 0; k < count; ++k) {
    h(k) = (C * v)(0, 0);
    v = A * v;
  }
  return h;
}

// Least r with C A^{r-1} B nonzero relative to ||C|| ||A^{r-1} B||.
inline int relative_degree(const Matrix& A, const Matrix& B, const Matrix& C) {
  require(B.cols() == 1 && C.rows() == 1, ErrorCode::InvalidArgument, "relative degree requires a SISO system");
  const Eigen::Index n = A.rows();
  const double cnorm = C.norm();
  Matrix v = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = (C * v)(0, 0);
    if (std::abs(h) > kRankTol * cnorm * v.norm() && h != 0.0) return static_cast<int>(k + 1);
    v = A * v;
  }
  fail(ErrorCode::DegenerateSystem, "all Markov parameters vanish; relative degree undefined");
}

inline int relative_degree(const ContinuousLTI& sys) { return relative_degree(sys.A, sys.B, sys.C); }
inline int relative_degree(const DiscreteLTI& sys) { return relative_degree(sys.A, sys.B, sys.C); }

inline bool is_controllable(const Matrix& A, const Matrix& B) {
  return numeric_rank(controllability_matrix(A, B)) == A.rows();
}
inline bool is_observable(const Matrix& A, const Matrix& C) {
  return numeric_rank(observability_matrix(A, C)) == A.rows();
}

// Transfer function of a SISO realization. The numerator has exactly n - r + 1 coefficients.
inline TransferRational tf_from_ss(const Matrix& A, const Matrix& B, const Matrix& C) {
  const Eigen::Index n = A.rows();
  const int r = relative_degree(A, B, C);
  TransferRational tf;
  tf.den = characteristic_polynomial(A);
  const Vector h = markov_parameters(A, B, C, n);
  // coefficient of s^{n-j} in den(s) * G(s): sum_{i=0}^{j-1} d_{n-i} h_{j-i}
  Vector num = Vector::Zero(n);
  for (Eigen::Index j = 1; j <= n; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) acc += tf.den(n - i) * h(j - i - 1);
    num(n - j) = acc;
  }
  tf.num = num.head(n - r + 1);
  return tf;
}

inline TransferRational tf_from_ss(const ContinuousLTI& sys) { return tf_from_ss(sys.A, sys.B, sys.C); }
inline TransferRational tf_from_ss(const DiscreteLTI& sys) { return tf_from_ss(sys.A, sys.B, sys.C); }

// Controllable canonical realization of num/den (ascending; den is normalized to monic).
inline ContinuousLTI ss_from_tf(const Vector& num_in, const Vector& den_in) {
  const Vector den = poly_trim(den_in);
  const Vector num = poly_trim(num_in);
  const Eigen::Index n = den.size() - 1;
  require(n >= 1, ErrorCode::InvalidArgument, "denominator must have degree >= 1");
  require(num.size() <= n, ErrorCode::InvalidArgument, "transfer function must be strictly proper");
  require(num.cwiseAbs().maxCoeff() > 0.0, ErrorCode::InvalidArgument, "numerator must be nonzero");
  const double lead = den(n);
  Matrix A = companion_lower(den);
  Matrix B = Matrix::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Matrix C = Matrix::Zero(1, n);
  for (Eigen::Index i = 0; i < num.size(); ++i) C(0, i) = num(i) / lead;
  return ContinuousLTI(A, B, C);
}

inline ComplexList poles(const Matrix& A) { return eigenvalues(A); }
inline ComplexList poles(const ContinuousLTI& sys) { return eigenvalues(sys.A); }
inline ComplexList poles(const DiscreteLTI& sys) { return eigenvalues(sys.A); }

// Zeros as numerator roots; valid for non-minimal realizations too.
inline ComplexList transfer_zeros(const Matrix& A, const Matrix& B, const Matrix& C) {
  const TransferRational tf = tf_from_ss(A, B, C);
  return poly_roots(tf.num);
}

namespace detail {

inline void recompute_from_T(NormalForm& nf, const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  const int r = nf.r;
  const Eigen::Index m = n - r;
  Eigen::FullPivLU<Matrix> lu(nf.T);
  require(lu.isInvertible(), ErrorCode::NumericalFailure, "normal-form transformation is singular");
  const Matrix Abar = nf.T * A * lu.inverse();
  const Matrix Bbar = nf.T * B;
  nf.phi_rho = Abar.block(r - 1, 0, 1, r).transpose();
  nf.phi_z = Abar.block(r - 1, r, 1, m).transpose();
  nf.b = Bbar(r - 1, 0);
  nf.S = Abar.block(r, r, m, m);
  nf.p = Abar.block(r, 0, m, 1);
}

}  // namespace detail

// Byrnes-Isidori normal form of a minimal SISO realization. The internal coordinates are
// normalized so that S is a companion matrix and p is the last unit vector.
inline NormalForm to_normal_form(const Matrix& A, const Matrix& B, const Matrix& C, Domain domain) {
  require(B.cols() == 1 && C.rows() == 1, ErrorCode::InvalidArgument, "normal form requires a SISO system");
  const Eigen::Index n = A.rows();
  const int r = relative_degree(A, B, C);
  require(is_controllable(A, B), ErrorCode::NotMinimal, "realization is not controllable");
  require(is_observable(A, C), ErrorCode::NotMinimal, "realization is not observable");

  NormalForm nf;
  nf.r = r;
  nf.domain = domain;
  const Eigen::Index m = n - r;
  Matrix Trho(r, n);
  Matrix row = C;
  for (int j = 0; j < r; ++j) {
    Trho.row(j) = row;
    row = row * A;
  }
  nf.T = Matrix::Zero(n, n);
  nf.T.topRows(r) = Trho;
  if (m == 0) {
    detail::recompute_from_T(nf, A, B);
    return nf;
  }

  // Rows annihilating B and orthogonal to the first r-1 chain rows (which annihilate B already).
  Matrix K(n, r);
  K.col(0) = B;
  for (int j = 0; j + 1 < r; ++j) K.col(j + 1) = Trho.row(j).transpose();
  Matrix W = null_space(K.transpose()).transpose();
  require(W.rows() == m, ErrorCode::NumericalFailure, "could not complete the normal-form basis");
  nf.T.bottomRows(m) = W;
  detail::recompute_from_T(nf, A, B);

  if (r >= 2) {
    // x_z' = S x_z + P x_rho; shift x_z by a combination of x_1..x_{r-1} so only x_1 drives it.
    Eigen::FullPivLU<Matrix> lu(nf.T);
    const Matrix Abar = nf.T * A * lu.inverse();
    const Matrix P = Abar.block(r, 0, m, r);
    const Matrix S0 = Abar.block(r, r, m, m);
    Matrix Kc(m, r - 1);
    Kc.col(r - 2) = -P.col(r - 1);
    for (int j = r - 1; j >= 2; --j) Kc.col(j - 2) = S0 * Kc.col(j - 1) - P.col(j - 1);
    W += Kc * Trho.topRows(r - 1);
    nf.T.bottomRows(m) = W;
    detail::recompute_from_T(nf, A, B);
  }

  // Controllable canonical coordinates for (S, p).
  Matrix Cs(m, m);
  Vector v = nf.p;
  for (Eigen::Index k = 0; k < m; ++k) {
    Cs.col(k) = v;
    v = nf.S * v;
  }
  Eigen::FullPivLU<Matrix> cs_lu(Cs);
  require(cs_lu.isInvertible(), ErrorCode::NotMinimal, "internal dynamics not driven by the output");
  const Matrix Sc = companion_lower(characteristic_polynomial(nf.S));
  Matrix Cc(m, m);
  Vector e = Vector::Zero(m);
  e(m - 1) = 1.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    Cc.col(k) = e;
    e = Sc * e;
  }
  W = Cc * cs_lu.inverse() * W;
  nf.T.bottomRows(m) = W;
  detail::recompute_from_T(nf, A, B);
  return nf;
}

inline NormalForm to_normal_form(const ContinuousLTI& sys) {
  return to_normal_form(sys.A, sys.B, sys.C, Domain::Continuous);
}
inline NormalForm to_normal_form(const DiscreteLTI& sys) {
  return to_normal_form(sys.A, sys.B, sys.C, Domain::Discrete);
}

inline ComplexList zeros(const ContinuousLTI& sys) { return eigenvalues(to_normal_form(sys).S); }
inline ComplexList zeros(const DiscreteLTI& sys) { return eigenvalues(to_normal_form(sys).S); }

// Ackermann's formula for a controllable SISO pair: eig(A - B K) = poles.
inline RowVector ackermann(const Matrix& A, const Matrix& B, const ComplexList& desired) {
  const Eigen::Index n = A.rows();
  require(static_cast<Eigen::Index>(desired.size()) == n, ErrorCode::DimensionMismatch, "need one pole per state");
  const Vector phi = poly_from_roots(desired);
  Matrix phiA = Matrix::Zero(n, n);
  for (Eigen::Index i = phi.size(); i-- > 0;) phiA = phiA * A + phi(i) * Matrix::Identity(n, n);
  const Matrix Ctrb = controllability_matrix(A, B);
  Eigen::FullPivLU<Matrix> lu(Ctrb);
  require(lu.isInvertible(), ErrorCode::NotStabilizable, "pair is not controllable");
  RowVector en = RowVector::Zero(n);
  en(n - 1) = 1.0;
  // e_n' Ctrb^{-1} phi(A), solved as a transposed system
  const Vector row = Ctrb.transpose().fullPivLu().solve(en.transpose());
  return row.transpose() * phiA;
}

// State feedback placing the controllable part at `poles_fn(nc)`; uncontrollable modes are kept
// and must be stable in `domain`.
template <typename PoleFn>
RowVector place_on_controllable_part(const Matrix& A, const Matrix& B, Domain domain, PoleFn poles_fn,
                                     ErrorCode failure) {
  const Eigen::Index n = A.rows();
  const Matrix Ctrb = controllability_matrix(A, B);
  const int nc = numeric_rank(Ctrb);
  Eigen::JacobiSVD<Matrix> svd(Ctrb, Eigen::ComputeFullU);
  const Matrix U = (nc > 0) ? Matrix(svd.matrixU()) : Matrix(Matrix::Identity(n, n));
  const Matrix Abar = U.transpose() * A * U;
  const Matrix Bbar = U.transpose() * B;
  if (nc < n) {
    for (const auto& l : eigenvalues(Abar.bottomRightCorner(n - nc, n - nc))) {
      const bool stable = domain == Domain::Discrete ? std::abs(l) < 1.0 : l.real() < 0.0;
      require(stable, failure, "an unreachable mode is unstable");
    }
  }
  RowVector K = RowVector::Zero(n);
  if (nc == 0) return K;
  const RowVector K1 = ackermann(Abar.topLeftCorner(nc, nc), Bbar.topRows(nc), poles_fn(nc));
  RowVector Kbar = RowVector::Zero(n);
  Kbar.head(nc) = K1;
  return Kbar * U.transpose();
}

// Real poles evenly spaced in (0, radius] (discrete) or [-radius*n, -radius) (continuous).
inline ComplexList spaced_poles(Eigen::Index count, double radius, Domain domain) {
  ComplexList out;
  for (Eigen::Index i = 1; i <= count; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(count);
    out.emplace_back(domain == Domain::Discrete ? radius * frac : -radius * (1.0 + frac), 0.0);
  }
  return out;
}

inline Matrix closed_loop_matrix_discrete(const DiscreteLTI& plant, const Controller& ctrl) {
  const Eigen::Index n = plant.states();
  const Eigen::Index nc = ctrl.states();
  Matrix M(n + nc, n + nc);
  M.topLeftCorner(n, n) = plant.A;
  M.topRightCorner(n, nc) = plant.B * ctrl.H;
  M.bottomLeftCorner(nc, n) = ctrl.G * plant.C;
  M.bottomRightCorner(nc, nc) = ctrl.F;
  return M;
}

// Observer-based output feedback: F = A - B K - L C, G = L, H = -K.
inline Controller observer_based_controller(const Matrix& A, const Matrix& B, const Matrix& C, Domain domain,
                                            double state_radius, double observer_radius) {
  require(B.cols() == 1 && C.rows() == 1, ErrorCode::InvalidArgument, "controller design requires SISO");
  const RowVector K = place_on_controllable_part(
      A, B, domain, [&](Eigen::Index k) { return spaced_poles(k, state_radius, domain); },
      ErrorCode::NotStabilizable);
  const RowVector Lt = place_on_controllable_part(
      A.transpose(), C.transpose(), domain, [&](Eigen::Index k) { return spaced_poles(k, observer_radius, domain); },
      ErrorCode::NotDetectable);
  Controller ctrl;
  ctrl.domain = domain;
  ctrl.F = A - B * K - Lt.transpose() * C;
  ctrl.G = Lt.transpose();
  ctrl.H = -K;
  return ctrl;
}

inline Controller stabilizing_controller(const DiscreteLTI& sys, double pole_radius) {
  require(pole_radius > 0.0 && pole_radius < 1.0, ErrorCode::InvalidArgument, "pole radius must lie in (0, 1)");
  Controller ctrl = observer_based_controller(sys.A, sys.B, sys.C, Domain::Discrete, pole_radius, pole_radius);
  const double rho = spectral_radius(closed_loop_matrix_discrete(sys, ctrl));
  require(rho < 1.0, ErrorCode::NumericalFailure, "designed closed loop is not Schur stable");
  return ctrl;
}

}  // namespace zda
