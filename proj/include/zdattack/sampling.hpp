#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "zdattack/linalg.hpp"
#include "zdattack/lti.hpp"
#include "zdattack/types.hpp"

namespace zda {

// (e^{A h}, int_0^h e^{A t} dt B) from one exponential of [[A, B], [0, 0]] h.
inline std::pair<Matrix, Matrix> zoh_maps(const Matrix& A, const Matrix& B, double h) {
  const Eigen::Index n = A.rows();
  const Eigen::Index p = B.cols();
  Matrix M = Matrix::Zero(n + p, n + p);
  M.topLeftCorner(n, n) = A * h;
  M.topRightCorner(n, p) = B * h;
  const Matrix E = matrix_exponential(M);
  return {E.topLeftCorner(n, n), E.topRightCorner(n, p)};
}

inline DiscreteLTI c2d_zoh(const ContinuousLTI& sys, double Ts) {
  require(Ts > 0.0, ErrorCode::InvalidArgument, "sampling period must be positive");
  auto [Ad, Bd] = zoh_maps(sys.A, sys.B, Ts);
  return DiscreteLTI(std::move(Ad), std::move(Bd), sys.C, Ts);
}

// One of N equal subintervals of a sampling period.
struct SubintervalModel {
  Matrix A_dN;
  Matrix B_dN;
  int N = 1;
  double Ts = 1.0;

  double step() const { return Ts / N; }
};

inline SubintervalModel subinterval_model(const ContinuousLTI& sys, double Ts, int N) {
  require(Ts > 0.0, ErrorCode::InvalidArgument, "sampling period must be positive");
  require(N >= 1, ErrorCode::InvalidArgument, "subinterval count must be >= 1");
  auto [Ad, Bd] = zoh_maps(sys.A, sys.B, Ts / N);
  return SubintervalModel{std::move(Ad), std::move(Bd), N, Ts};
}

// Ascending coefficients of the Euler-Frobenius polynomial of order r - 1.
inline Vector euler_frobenius(int r) {
  require(r >= 1, ErrorCode::InvalidArgument, "order must be >= 1");
  auto binom = [](int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  };
  Vector beta(r);
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) {
      const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
      acc += sign * std::pow(static_cast<double>(j + 1), r) * binom(r + 1, i - j);
    }
    beta(i) = acc;
  }
  return beta;
}

struct ZeroClassification {
  ComplexList intrinsic;
  ComplexList sampling;
  double gain = 0.0;
};

// Splits the zeros of the ZOH model into images e^{mu T_s} of the continuous zeros and the rest.
inline ZeroClassification classify_zeros(const ContinuousLTI& sys, double Ts) {
  require(sys.siso(), ErrorCode::InvalidArgument, "zero classification requires SISO");
  const int r = relative_degree(sys);
  const DiscreteLTI d = c2d_zoh(sys, Ts);
  ComplexList remaining = transfer_zeros(d.A, d.B, d.C);
  ComplexList targets;
  for (const auto& mu : transfer_zeros(sys.A, sys.B, sys.C)) targets.push_back(std::exp(mu * Ts));

  ZeroClassification out;
  double fact = 1.0;
  for (int i = 2; i <= r; ++i) fact *= i;
  out.gain = std::pow(Ts, r) * markov_parameters(sys.A, sys.B, sys.C, r)(r - 1) / fact;

  require(targets.size() <= remaining.size(), ErrorCode::AmbiguousClassification,
          "fewer discrete zeros than continuous zeros");
  while (!targets.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bt = 0, bz = 0;
    for (std::size_t t = 0; t < targets.size(); ++t)
      for (std::size_t z = 0; z < remaining.size(); ++z) {
        const double d = std::abs(targets[t] - remaining[z]);
        if (d < best) {
          best = d;
          bt = t;
          bz = z;
        }
      }
    // Another distinct zero about as close to the chosen target makes the label a guess.
    const Complex chosen = remaining[bz];
    const double tol = 1e-3 * (1.0 + std::abs(chosen));
    for (std::size_t z = 0; z < remaining.size(); ++z) {
      if (z == bz || std::abs(remaining[z] - chosen) <= tol) continue;
      require(std::abs(targets[bt] - remaining[z]) - best > tol, ErrorCode::AmbiguousClassification,
              "two discrete zeros are equally close to an intrinsic-zero image");
    }
    out.intrinsic.push_back(chosen);
    targets.erase(targets.begin() + static_cast<std::ptrdiff_t>(bt));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(bz));
  }
  out.sampling = remaining;
  return out;
}

// Two actuator updates per sensor sample (T_s = 2 T_a).
struct LiftedTwoStep {
  Matrix Ad;     // e^{A T_a}
  Matrix Bd;     // int_0^{T_a} e^{A t} dt B
  Matrix Gamma;  // [[Bd, 0], [Ad Bd, Bd]]
  Matrix O;      // [C Ad Bd, C Bd]
  Matrix CAd2;   // C Ad^2
};

inline LiftedTwoStep lifted_two_step_model(const ContinuousLTI& sys, double Ta) {
  require(sys.siso(), ErrorCode::DimensionMismatch, "lifted model requires a SISO plant");
  require(Ta > 0.0, ErrorCode::InvalidArgument, "actuator period must be positive");
  const Eigen::Index n = sys.states();
  LiftedTwoStep m;
  std::tie(m.Ad, m.Bd) = zoh_maps(sys.A, sys.B, Ta);
  m.Gamma = Matrix::Zero(2 * n, 2);
  m.Gamma.block(0, 0, n, 1) = m.Bd;
  m.Gamma.block(n, 0, n, 1) = m.Ad * m.Bd;
  m.Gamma.block(n, 1, n, 1) = m.Bd;
  m.O = Matrix(1, 2);
  m.O(0, 0) = (sys.C * m.Ad * m.Bd)(0, 0);
  m.O(0, 1) = (sys.C * m.Bd)(0, 0);
  m.CAd2 = sys.C * m.Ad * m.Ad;
  return m;
}

}  // namespace zda
