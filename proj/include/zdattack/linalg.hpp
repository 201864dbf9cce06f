#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

#include "zdattack/types.hpp"

namespace zda {

// A singular value or Markov parameter counts as zero below this fraction of the matrix scale.
inline constexpr double kRankTol = 1e-9;

inline Matrix matrix_exponential(const Matrix& M) {
  require(M.rows() == M.cols(), ErrorCode::DimensionMismatch, "matrix_exponential needs a square matrix");
  require(M.allFinite(), ErrorCode::InvalidArgument, "matrix_exponential needs finite entries");
  if (M.size() == 0) return M;
  return M.exp();
}

inline int numeric_rank(const Matrix& M, double rel_tol = kRankTol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++rank;
  return rank;
}

// Orthonormal basis (columns) of the right null space of M.
inline Matrix null_space(const Matrix& M, double rel_tol = kRankTol) {
  const Eigen::Index n = M.cols();
  if (M.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int rank = 0;
  if (s.size() > 0 && s(0) > 0.0)
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > rel_tol * s(0)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

// Orthonormal basis (columns) of the column space of M.
inline Matrix range_basis(const Matrix& M, double rel_tol = kRankTol) {
  if (M.size() == 0) return Matrix(M.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
  const int rank = numeric_rank(M, rel_tol);
  return svd.matrixU().leftCols(rank);
}

// Minimum-norm least-squares solution of M x = b.
inline Matrix min_norm_solve(const Matrix& M, const Matrix& b) {
  return M.completeOrthogonalDecomposition().solve(b);
}

inline ComplexList eigenvalues(const Matrix& M) {
  ComplexList out;
  if (M.size() == 0) return out;
  Eigen::EigenSolver<Matrix> es(M, false);
  require(es.info() == Eigen::Success, ErrorCode::NumericalFailure, "eigenvalue iteration did not converge");
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

inline double spectral_radius(const Matrix& M) {
  double rho = 0.0;
  for (const auto& l : eigenvalues(M)) rho = std::max(rho, std::abs(l));
  return rho;
}

// ---- polynomials, ascending coefficient order ----

inline Vector poly_trim(const Vector& p) {
  Eigen::Index n = p.size();
  while (n > 1 && p(n - 1) == 0.0) --n;
  return p.head(n);
}

inline Vector poly_mul(const Vector& a, const Vector& b) {
  Vector out = Vector::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out(i + j) += a(i) * b(j);
  return out;
}

inline Complex poly_eval(const Vector& p, Complex z) {
  Complex acc = 0.0;
  for (Eigen::Index i = p.size(); i-- > 0;) acc = acc * z + p(i);
  return acc;
}

// Monic real polynomial with the given roots; complex roots must come in conjugate pairs.
inline Vector poly_from_roots(const ComplexList& roots) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Ones(1);
  for (const auto& r : roots) {
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(c.size() + 1);
    next.tail(c.size()) += c;
    next.head(c.size()) -= r * c;
    c = next;
  }
  return c.real();
}

// Roots through the eigenvalues of the companion matrix.
inline ComplexList poly_roots(const Vector& p_in) {
  const Vector p = poly_trim(p_in);
  const Eigen::Index deg = p.size() - 1;
  require(deg >= 0 && p(deg) != 0.0, ErrorCode::InvalidArgument, "polynomial must have a nonzero leading coefficient");
  if (deg == 0) return {};
  Matrix comp = Matrix::Zero(deg, deg);
  for (Eigen::Index i = 0; i + 1 < deg; ++i) comp(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < deg; ++j) comp(deg - 1, j) = -p(j) / p(deg);
  return eigenvalues(comp);
}

inline Vector characteristic_polynomial(const Matrix& A) { return poly_from_roots(eigenvalues(A)); }

// Companion matrix in controllable canonical form for the monic polynomial `den`
// (ascending, den(n) == 1): shift structure with last row -den(0..n-1).
inline Matrix companion_lower(const Vector& den) {
  const Eigen::Index n = den.size() - 1;
  Matrix A = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) A(n - 1, j) = -den(j) / den(n);
  return A;
}

inline double max_abs(const ComplexList& xs) {
  double m = 0.0;
  for (const auto& x : xs) m = std::max(m, std::abs(x));
  return m;
}

// Greedy nearest matching distance between two multisets of equal size.
inline double multiset_distance(ComplexList a, ComplexList b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  while (!a.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        if (std::abs(a[i] - b[j]) < best) {
          best = std::abs(a[i] - b[j]);
          bi = i;
          bj = j;
        }
    worst = std::max(worst, best);
    a.erase(a.begin() + static_cast<std::ptrdiff_t>(bi));
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return worst;
}

// Extreme eigenvalues of the symmetric part; used to check LMI blocks.
inline double max_eigenvalue_sym(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double min_eigenvalue_sym(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace zda
