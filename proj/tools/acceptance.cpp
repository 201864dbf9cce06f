#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "zdattack/io.hpp"
#include "zdattack/zdattack.hpp"

using namespace zda;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return io::fmt12(v); }

ContinuousLTI two_mass() {
  Vector num(2), den(5);
  num << 1, 1;
  den << 1, 1, 3, 2, 1;
  return ss_from_tf(num, den);
}

ContinuousLTI double_integrator() {
  Matrix A(2, 2), B(2, 1), C(1, 2);
  A << 0, 1, 0, 0;
  B << 0, 1;
  C << 1, 0;
  return ContinuousLTI(A, B, C);
}

io::ScenarioDocument scenario(const std::string& name) { return io::load_scenario("scenarios/" + name + ".json"); }

Outcome criterion1() {
  const NormalForm nf = to_normal_form(c2d_zoh(two_mass(), 0.1));
  const ComplexList ref = {-3.64, -0.26, 0.90};
  const double eig_err = multiset_distance(eigenvalues(nf.S), ref);
  const double phi_rho = nf.phi_rho(0);
  const double b_rel = std::abs(nf.b - 1.62e-4) / 1.62e-4;
  Vector phi_ref(3);
  phi_ref << 5.02, 20.04, -28.3;
  const double phi_z_rel = ((nf.phi_z - phi_ref).cwiseAbs().array() / phi_ref.cwiseAbs().array()).maxCoeff();
  const bool pass = nf.r == 1 && eig_err <= 0.01 && std::abs(phi_rho - 6.78) <= 0.01 && b_rel <= 0.02 && phi_z_rel <= 0.01;
  return {pass, "r " + std::to_string(nf.r) + ", eig(S) err " + num(eig_err) + ", phi_rho " + num(phi_rho) + ", b " + num(nf.b) + " (rel " + num(b_rel) +
                    "), phi_z rel " + num(phi_z_rel)};
}

Outcome criterion2() {
  bool palindromic = true;
  for (int r = 2; r <= 6; ++r) {
    const Vector beta = euler_frobenius(r);
    palindromic = palindromic && (beta - Vector(beta.reverse())).cwiseAbs().maxCoeff() == 0.0;
  }
  const ComplexList roots = poly_roots(euler_frobenius(3));
  const ComplexList exact = {-2.0 + std::sqrt(3.0), -2.0 - std::sqrt(3.0)};
  const double root_err = multiset_distance(roots, exact);
  const ZeroClassification zc = classify_zeros(two_mass(), 0.01);
  const double zero_err = multiset_distance(zc.sampling, exact);
  const bool pass = palindromic && root_err <= 1e-10 && zero_err <= 0.05;
  return {pass, std::string("palindromic r=2..6 ") + (palindromic ? "yes" : "no") + ", r=3 root err " + num(root_err) +
                    ", sampling zeros at Ts=0.01 within " + num(zero_err)};
}

double max_window_residual(const Trace& tr, double t0) {
  double m = 0.0;
  for (std::size_t k = 0; k < tr.ts.size(); ++k)
    if (tr.ts[k] >= t0 - 1e-12) m = std::max(m, std::abs(tr.yck[k] - tr.yck_af[k]));
  return m;
}

Outcome criterion3() {
  io::ScenarioDocument doc = scenario("two_mass_dt_zda");
  Scenario s = doc.scenario;
  s.attack.stop_at_hazard = false;
  const double t0 = s.attack.t0;
  const Trace full = simulate(s);
  Scenario half = s;
  half.attack.delta *= 0.5;
  const Trace halved = simulate(half);
  const double r_full = max_window_residual(full, t0);
  const double ratio = max_window_residual(halved, t0) / r_full;
  const bool lin = std::abs(ratio - 0.5) <= 1e-6;

  // (ii) state deviation one second after initiation versus later
  double dev1 = -1.0, later = 0.0;
  for (std::size_t i = 0; i < full.t.size(); ++i) {
    const double d = (full.x[i] - full.x_af[i]).norm();
    if (std::abs(full.t[i] - (t0 + 1.0)) < 1e-9) dev1 = d;
    if (full.t[i] > t0 + 1.0 + 1e-9) later = std::max(later, d);
  }
  const bool grows = dev1 > 0.0 && later > 100.0 * dev1;

  // (iii) closed loop started from -T^{-1}[0; delta] plus the generator state reproduces x - x_af
  const DiscreteLTI d = c2d_zoh(s.plant, s.Ts);
  const NormalForm nf = to_normal_form(d);
  const Matrix Phi = closed_loop_matrix_discrete(d, s.controller);
  const Eigen::Index n = d.states();
  const Eigen::PartialPivLU<Matrix> Tlu(nf.T);
  Vector xn = Vector::Zero(n);
  xn.tail(nf.zero_dim()) = s.attack.delta;
  Vector e = Vector::Zero(Phi.rows());
  e.head(n) = -Tlu.solve(xn);
  Vector za = s.attack.delta;
  const long k0 = std::lround(t0 / s.Ts);
  double err = 0.0, scale = 0.0, y_err = 0.0, y_scale = 0.0;
  std::size_t row = 0;
  for (long k = k0; k < static_cast<long>(full.ts.size()); ++k) {
    const double tk = full.ts[static_cast<std::size_t>(k)];
    while (row < full.t.size() && full.t[row] < tk - 1e-9) ++row;
    if (row == full.t.size()) break;
    xn.setZero();
    xn.tail(nf.zero_dim()) = za;
    const Vector predicted = e.head(n) + Tlu.solve(xn);
    const Vector direct = full.x[row] - full.x_af[row];
    err = std::max(err, (predicted - direct).norm());
    scale = std::max(scale, direct.norm());
    const double yd = full.yck[static_cast<std::size_t>(k)] - full.yck_af[static_cast<std::size_t>(k)];
    y_err = std::max(y_err, std::abs((d.C * e.head(n))(0, 0) - yd));
    y_scale = std::max(y_scale, std::abs(yd));
    e = Phi * e;
    za = nf.S * za;
  }
  const double rel = err / scale;
  const bool matches = rel <= 1e-8;
  const Report rep = detect(simulate(doc.scenario), doc.scenario);
  return {lin && grows && matches,
          "(i) ratio " + num(ratio) + ", (ii) deviation at t0+1s " + num(dev1) + " -> max later " + num(later) +
              ", (iii) error-system state mismatch " + num(rel) + " relative (output " + num(y_err / y_scale) +
              "); report stealthy=" +
              (rep.stealthy ? "true" : "false") + " disruptive=" + (rep.disruptive ? "true" : "false")};
}

Outcome criterion4() {
  const io::ScenarioDocument doc = scenario("double_integrator_masking");
  const Scenario& s = doc.scenario;
  const Trace tr = simulate(s);
  double worst = 0.0, xmax = 0.0;
  int samples = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) xmax = std::max(xmax, (tr.x[i] - tr.x_af[i]).norm());
  for (std::size_t k = 0; k < tr.ts.size(); ++k) {
    if (tr.ts[k] < s.attack.t0 - 1e-12) continue;
    ++samples;
    worst = std::max(worst, std::abs(tr.yck[k] - tr.yck_af[k]));
  }
  const double rel = worst / std::max(1.0, xmax);
  const bool exact = rel <= 1e-9 && samples >= 20 && xmax > s.L_hazard;

  Vector up(2);
  up << 0, -1;
  const MaskingPlan plan = masking_attack_plan(double_integrator(), 0.5, 1, up, {std::sqrt(10.0)});
  Vector a0(2), x1(2);
  a0 << 1, -3;
  x1 << 0, -1;
  const double step_err = std::max((plan.alphas[0] - a0).cwiseAbs().maxCoeff(), (plan.x_tilde[1] - x1).cwiseAbs().maxCoeff());
  return {exact && step_err <= 1e-12,
          "max |y~[k]| " + num(worst) + " over " + std::to_string(samples) + " samples (relative " + num(rel) +
              "), max ||x~|| " + num(xmax) + " vs L_hazard " + num(s.L_hazard) + ", hand step error " + num(step_err)};
}

Outcome criterion5() {
  const io::ScenarioDocument cdoc = scenario("nmp_classical_zda");
  const io::ScenarioDocument rdoc = scenario("nmp_robust_zda");
  const Report classical = detect(simulate(cdoc.scenario), cdoc.scenario);
  const Scenario& rs = rdoc.scenario;
  const Trace rtr = simulate(rs);
  const Report robust = detect(rtr, rs);
  const NormalForm truth = to_normal_form(rs.plant);
  double xz0 = -1.0, xz_max = 0.0;
  for (std::size_t i = 0; i < rtr.t.size(); ++i) {
    const double xz = (truth.T * rtr.x[i]).tail(truth.zero_dim()).norm();
    if (std::abs(rtr.t[i] - rs.attack.t0) < 1e-9) xz0 = xz;
    if (rtr.t[i] >= rs.attack.t0) xz_max = std::max(xz_max, xz);
  }
  const bool doubles = xz0 > 0.0 && xz_max >= 2.0 * xz0;

  // observer accuracy on the exact model, after the first 0.1 s
  auto estimate_error = [&](double tau) {
    Scenario s = rs;
    s.nominal_plant.reset();
    s.attack.tau = tau;
    const Trace tr = simulate(s);
    double e = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i)
      if (tr.t[i] >= s.attack.t0 + 0.1 && !std::isnan(tr.attack_target[i]))
        e = std::max(e, std::abs(tr.attack[i] - tr.attack_target[i]));
    return e;
  };
  const double e2 = estimate_error(1e-2);
  const double e3 = estimate_error(1e-3);
  const bool pass = !classical.stealthy && robust.stealthy && doubles && e2 >= 5.0 * e3;
  return {pass, "classical max residual " + num(classical.max_residual) + " vs L_detect " + num(cdoc.scenario.L_detect) +
                    ", robust " + num(robust.max_residual) + ", |x_z| " + num(xz0) + " -> " + num(xz_max) +
                    ", max|a - a*| tau=1e-2: " + num(e2) + ", tau=1e-3: " + num(e3) + " (x" + num(e2 / e3) + ")"};
}

ContinuousLTI random_system(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Matrix A(n, n), B(n, 1), C(1, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = g(rng) / std::sqrt(static_cast<double>(n));
      B(i, 0) = g(rng);
      C(0, i) = g(rng);
    }
    const DiscreteLTI d = c2d_zoh(ContinuousLTI(A, B, C), 1.0);
    if (is_controllable(d.A, d.B) && is_observable(d.A, d.C)) return ContinuousLTI(A, B, C);
  }
}

ComplexList random_zeros(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> rad(0.0, 0.9), ang(0.2, 2.9), re(-0.9, 0.9), coin(0.0, 1.0);
  ComplexList zs;
  while (static_cast<int>(zs.size()) < count) {
    if (count - static_cast<int>(zs.size()) >= 2 && coin(rng) < 0.4) {
      const Complex z = std::polar(rad(rng), ang(rng));
      zs.push_back(z);
      zs.push_back(std::conj(z));
    } else {
      zs.emplace_back(re(rng), 0.0);
    }
  }
  return zs;
}

Outcome criterion6() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> dim(2, 6);
  double gh_worst = 0.0, gs_worst = 0.0, h_max = 0.0, w_max = 0.0;
  int gh_ok = 0, gs_ok = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = dim(rng);
    const ContinuousLTI sys = random_system(rng, n);
    const double Ts = 1.0;
    const ComplexList zh = random_zeros(rng, n - 1);
    const ExactHoldDesign hd = design_exact_hold(sys, Ts, n, zh, std::nullopt);
    const DiscreteLTI hm = hold_discrete_model(sys, hd.hold);
    const double eh = multiset_distance(transfer_zeros(hm.A, hm.B, hm.C), zh);
    gh_worst = std::max(gh_worst, eh);
    gh_ok += eh <= 1e-6;
    h_max = std::max(h_max, hd.hold.h.norm());
    const ComplexList zsz = random_zeros(rng, n);
    const ExactSamplerDesign sd = design_exact_sampler(sys, Ts, n + 1, zsz, std::nullopt);
    const DiscreteLTI sm = sampler_discrete_model(sys, sd.sampler, HoldProfile::zoh(Ts));
    const double es = multiset_distance(transfer_zeros(sm.A, sm.B, sm.C), zsz);
    gs_worst = std::max(gs_worst, es);
    gs_ok += es <= 1e-6;
    w_max = std::max(w_max, sd.sampler.w.norm());
  }
  const ExactHoldDesign anchor_h = design_exact_hold(double_integrator(), 1.0, 2, ComplexList{0.0}, std::nullopt);
  Vector h_ref(2);
  h_ref << 3, -1;
  const double h_err = (anchor_h.hold.h - h_ref).cwiseAbs().maxCoeff();
  const ExactSamplerDesign anchor_s =
      design_exact_sampler(double_integrator(), 1.0, 3, ComplexList{0.0, 0.0}, std::nullopt);
  Vector w_ref(3);
  w_ref << 0.75, -3, 3.25;
  const double w_err = (anchor_s.sampler.w - w_ref).cwiseAbs().maxCoeff();
  return {gh_worst <= 1e-6 && gs_worst <= 1e-6 && h_err <= 1e-9 && w_err <= 1e-9,
          "GH " + std::to_string(gh_ok) + "/" + std::to_string(trials) + " within 1e-6 (worst " + num(gh_worst) +
              ", max ||h|| " + num(h_max) + "), GS " + std::to_string(gs_ok) + "/" + std::to_string(trials) +
              " (worst " + num(gs_worst) + ", max ||w|| " + num(w_max) + "); anchors h err " + num(h_err) +
              ", w err " + num(w_err)};
}

// Bound on ||x - x_af|| / ||delta|| for a loop-model attack: ||T^{-1}|| (max_j ||S^j|| + max_j ||Phi_cl^j||).
double condition_constant(const Scenario& s, long steps) {
  const DiscreteLTI d = loop_model(s);
  const NormalForm nf = to_normal_form(d);
  const Matrix Phi = closed_loop_matrix_discrete(d, s.controller);
  auto max_power_norm = [steps](const Matrix& M) {
    Matrix P = Matrix::Identity(M.rows(), M.cols());
    double m = 1.0;
    for (long j = 0; j < steps; ++j) {
      P = M * P;
      m = std::max(m, P.operatorNorm());
    }
    return m;
  };
  // plant state from the loop-model state: x itself, or A_d x[k-1] + B_d u[k-1] for the sampler model
  Matrix X = Matrix::Identity(d.states(), d.states());
  if (!s.sampler.conventional()) {
    const DiscreteLTI z = c2d_zoh(s.plant, s.Ts);
    X.resize(z.states(), d.states());
    X << z.A, z.B;
  }
  const double tn = (X * nf.T.inverse()).operatorNorm();
  return tn * (max_power_norm(nf.S) + max_power_norm(Phi));
}

Outcome criterion7() {
  const ContinuousLTI p = two_mass();
  const OptimalDesign gh = gh_optimal(p, 0.1, 4, 0.0);
  const OptimalDesign gs = gs_optimal(p, 0.1, 5, 0.0);
  const double gh_sum = std::abs(gh.hold.h.sum() - 4.0);
  const double gs_sum = std::abs(gs.sampler.w.sum() - 1.0);
  const DiscreteLTI ghm = hold_discrete_model(p, gh.hold);
  const DiscreteLTI gsm = sampler_discrete_model(p, gs.sampler, HoldProfile::zoh(0.1));
  const double gh_rad = max_abs(transfer_zeros(ghm.A, ghm.B, ghm.C));
  const double gs_rad = max_abs(transfer_zeros(gsm.A, gsm.B, gsm.C));
  const bool designs = gh_rad < 1.0 && gs_rad < 1.0 && gh_sum <= 1e-10 && gs_sum <= 1e-10;

  bool ok = designs;
  std::string detail = "GH max|z| " + num(gh_rad) + " |sum h - N| " + num(gh_sum) + "; GS max|z| " + num(gs_rad) +
                       " |sum w - 1| " + num(gs_sum);
  for (const char* kind : {"gh", "gs"}) {
    const io::ScenarioDocument replay = scenario(std::string("two_mass_") + kind + "_replay");
    const Report rr = detect(simulate(replay.scenario), replay.scenario);
    const io::ScenarioDocument best = scenario(std::string("two_mass_") + kind + "_recomputed");
    const Scenario& bs = best.scenario;
    const Report br = detect(simulate(bs), bs);
    const long steps = std::lround(bs.horizon / bs.Ts);
    const double bound = 10.0 * bs.attack.delta.norm() * condition_constant(bs, steps);
    const bool k_ok = !rr.stealthy && !br.disruptive && br.max_state_deviation <= bound;
    ok = ok && k_ok;
    detail += std::string("; ") + kind + ": replay " + (rr.stealthy ? "undetected" : "detected") + " (residual " +
              num(rr.max_residual) + "), recomputed deviation " + num(br.max_state_deviation) + " <= " + num(bound) +
              (br.disruptive ? " DISRUPTIVE" : "");
  }
  return {ok, detail};
}

Outcome criterion8() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> deg(1, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  int accepted = 0, false_accepts = 0, stable = 0, stable_accepted = 0;
  for (int i = 0; i < 200; ++i) {
    const int q = deg(rng);
    Vector alpha;
    if (coin(rng) < 0.5) {
      // roots drawn in a disc of radius up to 1.3
      const double R = 0.5 + 0.8 * coin(rng);
      ComplexList roots;
      while (static_cast<int>(roots.size()) < q) {
        if (q - static_cast<int>(roots.size()) >= 2 && coin(rng) < 0.5) {
          const Complex z = std::polar(R * std::sqrt(coin(rng)), 3.14159 * coin(rng));
          roots.push_back(z);
          roots.push_back(std::conj(z));
        } else {
          roots.emplace_back(R * u(rng), 0.0);
        }
      }
      alpha = poly_from_roots(roots);
    } else {
      alpha = Vector(q + 1);
      for (int j = 0; j < q; ++j) alpha(j) = 2.0 * u(rng);
      alpha(q) = 1.0;
    }
    alpha *= 0.5 + coin(rng);
    const bool schur = max_abs(poly_roots(alpha)) < 1.0;
    const SprCertificate cert = spr_stability_certificate(alpha);
    stable += schur;
    if (cert.feasible) {
      ++accepted;
      if (!schur) ++false_accepts;
      else ++stable_accepted;
    }
  }
  const double rate = stable ? static_cast<double>(stable_accepted) / stable : 0.0;
  return {false_accepts == 0, std::to_string(accepted) + " accepted, " + std::to_string(false_accepts) +
                                  " false accepts; Schur-stable inputs " + std::to_string(stable) + ", acceptance rate " +
                                  num(rate)};
}

}  // namespace

int main() {
  struct Item {
    int id;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Item> items = {{1, 1.0, criterion1},  {2, 1.0, criterion2},   {3, 10.0, criterion3},
                                   {4, 5.0, criterion4},  {5, 60.0, criterion5},  {6, 10.0, criterion6},
                                   {7, 120.0, criterion7}, {8, 30.0, criterion8}};
  int failures = 0;
  for (const auto& item : items) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = item.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < item.budget;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %d: %s  [%.2f s / %.0f s] %s\n", item.id, pass ? "PASS" : "FAIL", secs, item.budget,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
