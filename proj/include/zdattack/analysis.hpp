#pragma once

#include <string>

#include "zdattack/lti.hpp"
#include "zdattack/sampling.hpp"

namespace zda {

struct PlantAnalysis {
  int relative_degree = 0;
  ComplexList ct_poles;
  ComplexList ct_zeros;
  ZeroClassification dt;
  ComplexList euler_frobenius_roots;
  bool unstable_ct_zero = false;
  bool unstable_sampling_zero = false;
  std::string verdict;
};

inline PlantAnalysis analyze_plant(const ContinuousLTI& sys, double Ts) {
  require(sys.siso(), ErrorCode::InvalidArgument, "analysis requires a SISO plant");
  PlantAnalysis a;
  a.relative_degree = relative_degree(sys);
  a.ct_poles = poles(sys);
  a.ct_zeros = transfer_zeros(sys.A, sys.B, sys.C);
  a.dt = classify_zeros(sys, Ts);
  a.euler_frobenius_roots = poly_roots(euler_frobenius(a.relative_degree));
  for (const auto& z : a.ct_zeros) a.unstable_ct_zero = a.unstable_ct_zero || z.real() > 0.0;
  for (const auto& z : a.dt.sampling) a.unstable_sampling_zero = a.unstable_sampling_zero || std::abs(z) > 1.0;
  if (a.unstable_ct_zero) a.verdict = "vulnerable (unstable CT zero)";
  else if (a.unstable_sampling_zero) a.verdict = "vulnerable (unstable sampling zero)";
  else if (a.ct_zeros.empty() && a.dt.sampling.empty()) a.verdict = "no zero dynamics";
  else a.verdict = "not vulnerable (all zeros stable)";
  return a;
}

}  // namespace zda
