#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "zdattack/errors.hpp"

namespace zda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using ComplexList = std::vector<Complex>;

enum class Domain { Continuous, Discrete };

// Strictly proper state-space model x' = A x + B u, y = C x.
struct ContinuousLTI {
  Matrix A;
  Matrix B;
  Matrix C;

  ContinuousLTI() = default;
  ContinuousLTI(Matrix a, Matrix b, Matrix c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    validate();
  }

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
  bool siso() const { return inputs() == 1 && outputs() == 1; }

  void validate() const {
    require(A.rows() == A.cols() && A.rows() > 0, ErrorCode::DimensionMismatch, "A must be square and non-empty");
    require(B.rows() == A.rows() && B.cols() > 0, ErrorCode::DimensionMismatch, "B rows must equal state dimension");
    require(C.cols() == A.rows() && C.rows() > 0, ErrorCode::DimensionMismatch, "C cols must equal state dimension");
  }
};

// x[k+1] = A x[k] + B u[k], y[k] = C x[k], sampled with period Ts.
struct DiscreteLTI {
  Matrix A;
  Matrix B;
  Matrix C;
  double Ts = 1.0;

  DiscreteLTI() = default;
  DiscreteLTI(Matrix a, Matrix b, Matrix c, double ts)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), Ts(ts) {
    validate();
  }

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
  bool siso() const { return inputs() == 1 && outputs() == 1; }

  void validate() const {
    require(Ts > 0.0, ErrorCode::InvalidArgument, "sampling period must be positive");
    require(A.rows() == A.cols() && A.rows() > 0, ErrorCode::DimensionMismatch, "A must be square and non-empty");
    require(B.rows() == A.rows() && B.cols() > 0, ErrorCode::DimensionMismatch, "B rows must equal state dimension");
    require(C.cols() == A.rows() && C.rows() > 0, ErrorCode::DimensionMismatch, "C cols must equal state dimension");
  }
};

// Ascending coefficients. The denominator is stored monic including its leading 1.
struct TransferRational {
  Vector num;
  Vector den;

  int order() const { return static_cast<int>(den.size()) - 1; }
  int relative_degree() const { return static_cast<int>(den.size() - num.size()); }
};

// Byrnes-Isidori coordinates: (x_rho, x_z) = T x with
//   x_rho chain, last row  x_r' = phi_rho' x_rho + phi_z' x_z + b u,
//   x_z' = S x_z + p x_1.
// For discrete models the same layout holds with r = 1 and shifts instead of derivatives.
struct NormalForm {
  int r = 0;
  Vector phi_rho;
  Vector phi_z;
  double b = 0.0;
  Matrix S;
  Vector p;
  Matrix T;
  Domain domain = Domain::Continuous;

  Eigen::Index zero_dim() const { return S.rows(); }

  // Rows of T that produce x_z from the source state.
  Matrix Tz() const { return T.bottomRows(T.rows() - r); }
  Matrix Trho() const { return T.topRows(r); }

  // The normal-form realization (A_nf, B_nf, C_nf) in the new coordinates.
  Matrix A_nf() const {
    const Eigen::Index n = T.rows();
    const Eigen::Index m = n - r;
    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < r; ++i) A(i, i + 1) = 1.0;
    A.block(r - 1, 0, 1, r) = phi_rho.transpose();
    if (m > 0) {
      A.block(r - 1, r, 1, m) = phi_z.transpose();
      A.block(r, r, m, m) = S;
      A.block(r, 0, m, 1) = p;
    }
    return A;
  }
  Matrix B_nf() const {
    Matrix B = Matrix::Zero(T.rows(), 1);
    B(r - 1, 0) = b;
    return B;
  }
  Matrix C_nf() const {
    Matrix C = Matrix::Zero(1, T.rows());
    C(0, 0) = 1.0;
    return C;
  }
};

// Dynamic output-feedback controller c' = F c + G y, u = H c.
struct Controller {
  Matrix F;
  Matrix G;
  Matrix H;
  Domain domain = Domain::Discrete;

  Eigen::Index states() const { return F.rows(); }

  void validate() const {
    require(F.rows() == F.cols(), ErrorCode::DimensionMismatch, "controller F must be square");
    require(G.rows() == F.rows() && G.cols() == 1, ErrorCode::DimensionMismatch, "controller G must be a column");
    require(H.cols() == F.rows() && H.rows() == 1, ErrorCode::DimensionMismatch, "controller H must be a row");
  }
};

}  // namespace zda
