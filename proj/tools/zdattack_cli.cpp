#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include "zdattack/io.hpp"
#include "zdattack/zdattack.hpp"

using namespace zda;
using io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

std::string zeros_text(const ComplexList& zs) {
  std::string out = "{";
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (i) out += ", ";
    out += io::fmt12(zs[i].real());
    if (zs[i].imag() != 0.0) out += (zs[i].imag() > 0 ? "+" : "-") + io::fmt12(std::abs(zs[i].imag())) + "i";
  }
  return out + "}";
}

std::string vector_text(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::fmt12(v(i));
  return out + "]";
}

Vector parse_list(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end) fail(ErrorCode::Parse, "bad number '" + tok + "' in list '" + s + "'");
    vals.push_back(v);
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// "a;b;c" with each item "re" or "re,im".
ComplexList parse_zeros(const std::string& s) {
  ComplexList out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const Vector v = parse_list(item);
    if (v.size() == 1) out.emplace_back(v(0), 0.0);
    else if (v.size() == 2) out.emplace_back(v(0), v(1));
    else fail(ErrorCode::Parse, "zero '" + item + "' must be 're' or 're,im'");
  }
  return out;
}

// Plant and Ts from a scenario file, without requiring the rest of the scenario.
std::pair<ContinuousLTI, double> load_plant(const fs::path& path, std::optional<double> Ts) {
  const json j = io::read_json_file(path);
  try {
    io::check_keys(j, "", {"name", "description", "plant", "nominal_plant", "Ts", "actuator_divisions", "x0",
                           "x0_nf", "controller", "nominal_controller", "hold", "sampler", "attack", "horizon", "L_detect",
                           "L_hazard", "detector", "substeps", "record_every", "output"});
    if (!j.contains("plant")) io::schema_error("/plant", "missing");
    const ContinuousLTI p = io::parse_plant(j["plant"], "/plant");
    if (Ts) return {p, *Ts};
    if (!j.contains("Ts")) io::schema_error("/Ts", "missing (or pass --Ts)");
    return {p, io::get_number(j["Ts"], "/Ts")};
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

int cmd_analyze(const std::string& file, std::optional<double> Ts, const std::string& out) {
  const auto [plant, ts] = load_plant(file, Ts);
  const PlantAnalysis a = analyze_plant(plant, ts);
  std::printf("relative degree: %d\n", a.relative_degree);
  std::printf("CT poles: %s\n", zeros_text(a.ct_poles).c_str());
  std::printf("CT zeros: %s\n", zeros_text(a.ct_zeros).c_str());
  std::printf("DT zeros (Ts = %s): intrinsic %s, sampling %s\n", io::fmt12(ts).c_str(), zeros_text(a.dt.intrinsic).c_str(),
              zeros_text(a.dt.sampling).c_str());
  std::printf("Euler-Frobenius limit roots: %s\n", zeros_text(a.euler_frobenius_roots).c_str());
  std::printf("verdict: %s\n", a.verdict.c_str());
  json j;
  j["Ts"] = io::round12(ts);
  j["relative_degree"] = a.relative_degree;
  j["ct_poles"] = io::complex_list_json(a.ct_poles);
  j["ct_zeros"] = io::complex_list_json(a.ct_zeros);
  j["dt_zeros"] = json{{"intrinsic", io::complex_list_json(a.dt.intrinsic)},
                       {"sampling", io::complex_list_json(a.dt.sampling)}};
  j["gain"] = io::round12(a.dt.gain);
  j["euler_frobenius_roots"] = io::complex_list_json(a.euler_frobenius_roots);
  j["verdict"] = a.verdict;
  const fs::path p = io::output_path(out, fs::path(file).stem().string() + ".analysis.json");
  io::write_text(p, j.dump(2) + "\n");
  return 0;
}

struct AttackArgs {
  std::string kind;
  std::string delta;
  std::optional<double> t0;
  int steps = 0;
  std::string out;
};

int cmd_attack(const std::string& file, const AttackArgs& args) {
  io::ScenarioDocument doc = io::load_scenario(file);
  Scenario& s = doc.scenario;
  static const std::map<std::string, AttackKind> kinds = {
      {"ct-zda", AttackKind::CtZda},         {"pda", AttackKind::Pda},       {"dt-zda", AttackKind::DtZda},
      {"masking", AttackKind::Masking},      {"robust-zda", AttackKind::RobustZda},
      {"robust-pda", AttackKind::RobustPda}};
  const auto it = kinds.find(args.kind);
  if (it == kinds.end()) fail(ErrorCode::Parse, "--kind must be one of ct-zda, pda, dt-zda, masking, robust-zda, robust-pda");
  const bool same_kind = s.attack.kind == it->second;
  if (!same_kind) {
    AttackSpec fresh;
    fresh.t0 = s.attack.t0;
    fresh.delta = s.attack.delta;
    s.attack = fresh;
  }
  s.attack.kind = it->second;
  if (!args.delta.empty()) s.attack.delta = parse_list(args.delta);
  if (args.t0) s.attack.t0 = *args.t0;
  const double Ta = s.Ta();
  const long steps = args.steps > 0 ? args.steps
                                    : static_cast<long>(std::floor((s.horizon - s.attack.t0) / Ta + 1e-9)) + 1;

  io::AttackFile f;
  f.header["kind"] = args.kind;
  f.header["t0"] = io::fmt17(s.attack.t0);
  f.header["Ta"] = io::fmt17(Ta);
  if (s.attack.delta.size()) {
    std::string d;
    for (Eigen::Index i = 0; i < s.attack.delta.size(); ++i) d += (i ? "," : "") + io::fmt17(s.attack.delta(i));
    f.header["delta"] = d;
  }
  const ContinuousLTI& ap = s.attacker_plant();
  auto sample_generator = [&](const ExoAttackGenerator& g) {
    for (long j = 0; j < steps; ++j) {
      const double t = s.attack.t0 + static_cast<double>(j) * Ta;
      f.t.push_back(t);
      f.values.push_back(g.domain == Domain::Discrete ? g.output(g.state_at_step(static_cast<long>(std::llround(g.t0)) + j))
                                                      : g.output(g.state_at(t)));
    }
  };
  switch (s.attack.kind) {
    case AttackKind::CtZda: {
      ExoAttackGenerator g = ct_zero_dynamics_attack(to_normal_form(ap), s.attack.delta, s.attack.t0);
      if (s.attack.reduce) g = reduce_generator(g);
      sample_generator(g);
      break;
    }
    case AttackKind::Pda: {
      ExoAttackGenerator g = pole_dynamics_attack(ap, s.attack.delta, s.attack.t0);
      if (s.attack.reduce) g = reduce_generator(g);
      f.header["channel"] = "sensor";
      sample_generator(g);
      break;
    }
    case AttackKind::DtZda: {
      DiscreteLTI dm = c2d_zoh(ap, Ta);
      if (s.attack.model == AttackModel::Loop) dm = loop_model(ap, s.hold, s.sampler);
      f.header["model"] = s.attack.model == AttackModel::Loop ? "loop" : "zoh";
      ExoAttackGenerator g = dt_zero_dynamics_attack(to_normal_form(dm), s.attack.delta, std::lround(s.attack.t0 / Ta));
      if (s.attack.reduce) g = reduce_generator(g);
      sample_generator(g);
      break;
    }
    case AttackKind::Masking: {
      if (s.attack.schedule.empty()) s.attack.schedule.assign(static_cast<std::size_t>(std::max(1L, steps / 2)), 0.0);
      if (s.attack.growth_direction.size() == 0) s.attack.growth_direction = Vector::Ones(ap.states());
      const MaskingPlan plan = masking_attack_plan(ap, Ta, static_cast<int>(s.attack.schedule.size()),
                                                   s.attack.growth_direction, s.attack.schedule);
      for (std::size_t j = 0; j < plan.sequence.size(); ++j) {
        f.t.push_back(s.attack.t0 + static_cast<double>(j) * Ta);
        f.values.push_back(plan.sequence[j]);
      }
      break;
    }
    case AttackKind::RobustZda:
    case AttackKind::RobustPda: {
      if (!same_kind) {
        s.attack.q = Vector();
      }
      if (s.attack.q.size() == 0) {
        const int r = s.attack.kind == AttackKind::RobustZda
                          ? relative_degree(ap)
                          : relative_degree((s.nominal_controller ? *s.nominal_controller : s.controller).F,
                                            (s.nominal_controller ? *s.nominal_controller : s.controller).G,
                                            (s.nominal_controller ? *s.nominal_controller : s.controller).H);
        s.attack.q = default_dob_gains(r);
      }
      f.header["q0"] = io::fmt17(s.attack.q(0));
      std::string q;
      for (Eigen::Index i = 0; i < s.attack.q.size(); ++i) q += (i ? "," : "") + io::fmt17(s.attack.q(i));
      f.header["q"] = q;
      f.header["L"] = io::fmt17(s.attack.L);
      f.header["tau"] = io::fmt17(s.attack.tau);
      f.header["channel"] = s.attack.kind == AttackKind::RobustZda ? "actuator" : "sensor";
      const Trace tr = simulate(s);
      for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (tr.t[i] < s.attack.t0 - 1e-12) continue;
        f.t.push_back(tr.t[i]);
        f.values.push_back(tr.attack[i]);
      }
      break;
    }
    default: break;
  }
  const fs::path p = io::output_path(args.out, doc.name + "." + args.kind + ".attack.csv");
  io::write_text(p, io::attack_csv(f));
  std::printf("wrote %zu attack values to %s\n", f.values.size(), p.string().c_str());
  return 0;
}

struct DesignArgs {
  bool hold = false;
  bool sampler = false;
  bool optimal = false;
  bool continuous = false;
  double margin = 0.0;
  int N = 0;
  std::string zeros;
  std::optional<double> k_d;
  std::string out;
};

int cmd_design(const std::string& file, const DesignArgs& a) {
  const auto [plant, Ts] = load_plant(file, std::nullopt);
  if (a.hold == a.sampler) fail(ErrorCode::Parse, "choose exactly one of --hold or --sampler");
  const DiscreteLTI d = c2d_zoh(plant, Ts);
  const ComplexList before = transfer_zeros(d.A, d.B, d.C);
  std::optional<ComplexList> zs;
  if (!a.zeros.empty()) zs = parse_zeros(a.zeros);
  const int n = static_cast<int>(plant.states());
  json profile;
  ComplexList after;
  std::string summary;
  if (a.hold) {
    const int N = a.N > 0 ? a.N : n;
    HoldProfile h;
    if (a.optimal) {
      const OptimalDesign od = gh_optimal(plant, Ts, N, a.margin);
      h = od.hold;
      summary = "objective " + io::fmt12(od.objective) + ", sum h - N = " + io::fmt12(h.h.sum() - N);
    } else {
      const ExactHoldDesign ed = design_exact_hold(plant, Ts, N, zs, a.k_d);
      h = a.continuous ? gh_continuous(plant, ed.Bg, Ts) : ed.hold;
      if (!a.continuous) summary = "sum h = " + io::fmt12(h.h.sum());
    }
    const DiscreteLTI m = hold_discrete_model(plant, h);
    after = transfer_zeros(m.A, m.B, m.C);
    profile = io::hold_json(h);
    if (h.kind == HoldKind::Piecewise) std::printf("levels: %s\n", vector_text(h.h).c_str());
  } else {
    const int N = a.N > 0 ? a.N : n + 1;
    SamplerWeights w;
    if (a.optimal) {
      const OptimalDesign od = gs_optimal(plant, Ts, N, a.margin);
      w = od.sampler;
      summary = "objective " + io::fmt12(od.objective) + ", sum w - 1 = " + io::fmt12(w.w.sum() - 1.0);
    } else {
      w = design_exact_sampler(plant, Ts, N, zs, a.k_d).sampler;
      summary = "sum w = " + io::fmt12(w.w.sum());
    }
    const DiscreteLTI m = sampler_discrete_model(plant, w, HoldProfile::zoh(Ts));
    after = transfer_zeros(m.A, m.B, m.C);
    profile = io::sampler_json(w);
    std::printf("weights: %s\n", vector_text(w.w).c_str());
  }
  std::printf("zeros before: %s\n", zeros_text(before).c_str());
  std::printf("zeros after:  %s\n", zeros_text(after).c_str());
  std::printf("max |z| after: %s\n", io::fmt12(max_abs(after)).c_str());
  if (!summary.empty()) std::printf("%s\n", summary.c_str());
  const fs::path p =
      io::output_path(a.out, fs::path(file).stem().string() + (a.hold ? ".hold.json" : ".sampler.json"));
  io::write_profile(p, profile);
  std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

struct SimResult {
  std::string line;
  int code = 0;
  std::string error;
  int error_exit = 0;
};

int error_exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse: return kExitUsage;
    case ErrorCode::Infeasible: return kExitInfeasible;
    default: return 1;
  }
}

SimResult run_one(const std::string& file, const std::string& trace_out, const std::string& report_out) {
  SimResult res;
  try {
    const io::ScenarioDocument doc = io::load_scenario(file);
    const Trace tr = simulate(doc.scenario);
    const Report rep = detect(tr, doc.scenario);
    const std::string tp = !trace_out.empty() ? trace_out : doc.trace_path;
    const std::string rp = !report_out.empty() ? report_out : doc.report_path;
    const fs::path tpath = io::output_path(tp, doc.name + ".trace.csv");
    const fs::path rpath = io::output_path(rp, doc.name + ".report.json");
    io::write_text(tpath, io::trace_csv(tr));
    json rj = io::report_json(rep);
    rj["scenario"] = doc.name;
    rj["attack"] = to_string(doc.scenario.attack.kind);
    if (!doc.hold_design.is_null()) rj["hold_design"] = doc.hold_design;
    if (!doc.sampler_design.is_null()) rj["sampler_design"] = doc.sampler_design;
    io::write_text(rpath, rj.dump(2) + "\n");
    res.code = rep.exit_code();
    res.line = doc.name + ": stealthy=" + (rep.stealthy ? "true" : "false") +
               " disruptive=" + (rep.disruptive ? "true" : "false") + " max_residual=" + io::fmt12(rep.max_residual) +
               " max_state_deviation=" + io::fmt12(rep.max_state_deviation) + " -> " + rpath.string();
  } catch (const Error& e) {
    res.error = file + ": " + e.what();
    res.error_exit = error_exit_code(e);
  }
  return res;
}

int cmd_simulate(const std::vector<std::string>& files, int jobs, const std::string& trace_out,
                 const std::string& report_out) {
  if (files.size() > 1 && (!trace_out.empty() || !report_out.empty()))
    fail(ErrorCode::Parse, "--trace and --report need a single scenario");
  std::vector<SimResult> results(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < files.size(); i = next++) results[i] = run_one(files[i], trace_out, report_out);
  };
  const int nt = std::max(1, std::min<int>(jobs, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  int code = 0;
  for (const auto& r : results) {
    if (!r.error.empty()) {
      std::fprintf(stderr, "error: %s\n", r.error.c_str());
      code = std::max(code, r.error_exit);
      continue;
    }
    std::printf("%s\n", r.line.c_str());
    code = std::max(code, r.code);
  }
  return code;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  const io::ScenarioDocument da = io::load_scenario(a);
  const io::ScenarioDocument db = io::load_scenario(b);
  const Comparison c = compare_scenarios(da.scenario, db.scenario);
  json j = io::comparison_json(c);
  j["baseline"]["scenario"] = da.name;
  j["variant"]["scenario"] = db.name;
  const std::string text = j.dump(2) + "\n";
  std::printf("%s", text.c_str());
  io::write_text(io::output_path(out, da.name + ".vs." + db.name + ".json"), text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-dynamics attack analysis, design and simulation for sampled-data loops"};
  app.require_subcommand(1);

  std::string file, out;
  std::optional<double> Ts;
  auto* analyze = app.add_subcommand("analyze", "Relative degree, zeros with intrinsic/sampling labels, vulnerability");
  analyze->add_option("file", file, "Scenario or plant file")->required();
  analyze->add_option("--Ts", Ts, "Sampling period (overrides the file)");
  analyze->add_option("-o,--out", out, "Analysis JSON path");

  AttackArgs aa;
  auto* attack = app.add_subcommand("attack", "Generate an attack sequence or signal as CSV");
  attack->add_option("file", file, "Scenario file")->required();
  attack->add_option("--kind", aa.kind, "ct-zda | pda | dt-zda | masking | robust-zda | robust-pda")->required();
  attack->add_option("--delta", aa.delta, "Initial generator state, comma separated");
  attack->add_option("--t0", aa.t0, "Initiation time");
  attack->add_option("--steps", aa.steps, "Number of actuator-rate values");
  attack->add_option("-o,--out", aa.out, "Attack CSV path");

  DesignArgs da;
  auto* design = app.add_subcommand("design", "Design a generalized hold or sampler");
  design->add_option("file", file, "Scenario or plant file")->required();
  design->add_flag("--hold", da.hold, "Design a hold");
  design->add_flag("--sampler", da.sampler, "Design a sampler");
  design->add_flag("--optimal", da.optimal, "Closest profile with certified stable zeros");
  design->add_flag("--continuous", da.continuous, "Continuous hold shape instead of piecewise levels");
  design->add_option("--margin", da.margin, "Zeros inside |z| < 1 - margin");
  design->add_option("--subintervals", da.N, "Number of subintervals N");
  design->add_option("--zeros", da.zeros, "Target zeros 're[,im];...' (exact designs)");
  design->add_option("--kd", da.k_d, "Target gain (exact designs)");
  design->add_option("-o,--out", da.out, "Profile JSON path");

  std::vector<std::string> files;
  int jobs = 1;
  std::string trace_out, report_out;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate scenarios; exit code carries the verdict");
  simulate_cmd->add_option("files", files, "Scenario files")->required();
  simulate_cmd->add_option("-j,--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--trace", trace_out, "Trace CSV path");
  simulate_cmd->add_option("--report", report_out, "Report JSON path");

  std::string base, variant;
  auto* compare = app.add_subcommand("compare", "Run two scenarios and report the differences");
  compare->add_option("baseline", base, "Baseline scenario")->required();
  compare->add_option("variant", variant, "Variant scenario")->required();
  compare->add_option("-o,--out", out, "Comparison JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(file, Ts, out);
    if (*attack) return cmd_attack(file, aa);
    if (*design) return cmd_design(file, da);
    if (*simulate_cmd) return cmd_simulate(files, jobs, trace_out, report_out);
    if (*compare) return cmd_compare(base, variant, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return error_exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
