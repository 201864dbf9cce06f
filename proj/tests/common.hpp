#pragma once

#include <gtest/gtest.h>

#include <random>

#include "zdattack/zdattack.hpp"

namespace zt {

using namespace zda;

inline ContinuousLTI two_mass() {
  Vector num(2), den(5);
  num << 1, 1;
  den << 1, 1, 3, 2, 1;
  return ss_from_tf(num, den);
}

inline ContinuousLTI double_integrator() {
  Matrix A(2, 2), B(2, 1), C(1, 2);
  A << 0, 1, 0, 0;
  B << 0, 1;
  C << 1, 0;
  return ContinuousLTI(A, B, C);
}

inline ContinuousLTI first_order(double a = -1.0) {
  Matrix A(1, 1), B(1, 1), C(1, 1);
  A << a;
  B << 1;
  C << 1;
  return ContinuousLTI(A, B, C);
}

// Dense Gaussian system, redrawn until its ZOH model at Ts is minimal.
inline ContinuousLTI random_system(std::mt19937_64& rng, int n, double Ts = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Matrix A(n, n), B(n, 1), C(1, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = g(rng) / std::sqrt(static_cast<double>(n));
      B(i, 0) = g(rng);
      C(0, i) = g(rng);
    }
    const DiscreteLTI d = c2d_zoh(ContinuousLTI(A, B, C), Ts);
    if (is_controllable(d.A, d.B) && is_observable(d.A, d.C)) return ContinuousLTI(A, B, C);
  }
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::InvalidArgument;
}

}  // namespace zt
