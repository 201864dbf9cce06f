#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zdattack/defense.hpp"
#include "zdattack/sampling.hpp"
#include "zdattack/sim.hpp"

namespace zda::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Human-readable numbers: 12 significant digits.
inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
// Round-trip numbers for files that are read back.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt12(v).c_str(), nullptr);
}
inline json num12(double v) {
  if (std::isnan(v)) return nullptr;
  return round12(v);
}

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  fail(ErrorCode::Parse, (where.empty() ? std::string("/") : where) + ": " + what);
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema_error(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) schema_error(where + "/" + k, "unknown key '" + k + "'");
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where, "expected a number");
  return j.get<double>();
}
inline int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) schema_error(where, "expected an integer");
  return j.get<int>();
}
inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected a string");
  return j.get<std::string>();
}
inline bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) schema_error(where, "expected true or false");
  return j.get<bool>();
}

inline Vector to_vector(const json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) schema_error(where, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_number(j[i], where + "/" + std::to_string(i));
  return v;
}
inline std::vector<double> to_std_vector(const json& j, const std::string& where) {
  const Vector v = to_vector(j, where);
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Matrix to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_error(where, "expected a non-empty array of rows");
  if (j[0].is_number()) {  // a single row
    const Vector v = to_vector(j, where);
    return v.transpose();
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string w = where + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].size() != cols) schema_error(w, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_number(j[r][c], w + "/" + std::to_string(c));
  }
  return M;
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}
inline json matrix_json(const Matrix& M) {
  json a = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    a.push_back(row);
  }
  return a;
}
inline json complex_list_json(const ComplexList& zs) {
  json a = json::array();
  for (const auto& z : zs) {
    if (z.imag() == 0.0) a.push_back(round12(z.real()));
    else a.push_back(json::array({round12(z.real()), round12(z.imag())}));
  }
  return a;
}
// Zeros are numbers or [re, im] pairs.
inline ComplexList to_complex_list(const json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of zeros");
  ComplexList out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "/" + std::to_string(i);
    if (j[i].is_number()) out.emplace_back(j[i].get<double>(), 0.0);
    else if (j[i].is_array() && j[i].size() == 2) out.emplace_back(get_number(j[i][0], w), get_number(j[i][1], w));
    else schema_error(w, "zero must be a number or a [re, im] pair");
  }
  return out;
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Parse, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::Parse, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------------------------
// plants

// {"A","B","C"} or {"num","den"} with coefficients in descending powers of s.
inline ContinuousLTI parse_plant(const json& j, const std::string& where) {
  check_keys(j, where, {"A", "B", "C", "num", "den"});
  if (j.contains("num") || j.contains("den")) {
    if (j.contains("A") || j.contains("B") || j.contains("C")) schema_error(where, "give either A/B/C or num/den");
    if (!j.contains("num") || !j.contains("den")) schema_error(where, "num and den are both required");
    const Vector num = to_vector(j["num"], where + "/num").reverse();
    const Vector den = to_vector(j["den"], where + "/den").reverse();
    return ss_from_tf(num, den);
  }
  for (const char* k : {"A", "B", "C"})
    if (!j.contains(k)) schema_error(where + "/" + k, "missing");
  Matrix B = to_matrix(j["B"], where + "/B");
  if (B.rows() == 1 && B.cols() > 1) B.transposeInPlace();  // [b1, b2, ...] is a column
  ContinuousLTI p;
  p.A = to_matrix(j["A"], where + "/A");
  p.B = B;
  p.C = to_matrix(j["C"], where + "/C");
  try {
    p.validate();
  } catch (const Error& e) {
    schema_error(where, e.what());
  }
  return p;
}

inline json plant_json(const ContinuousLTI& p) {
  return json{{"A", matrix_json(p.A)}, {"B", matrix_json(p.B)}, {"C", matrix_json(p.C)}};
}

// ---------------------------------------------------------------------------------------------
// profiles

inline json hold_json(const HoldProfile& h) {
  json j;
  j["Ts"] = h.Ts;
  switch (h.kind) {
    case HoldKind::Zoh: j["kind"] = "zoh"; break;
    case HoldKind::Piecewise:
      j["kind"] = "piecewise";
      j["levels"] = vector_json(h.h);
      break;
    case HoldKind::Continuous:
      j["kind"] = "continuous";
      j["Bg"] = vector_json(h.Bg);
      j["gramian_factor"] = vector_json(h.gramian_factor);
      break;
  }
  return j;
}

inline json sampler_json(const SamplerWeights& s) {
  return json{{"kind", "sampler"}, {"Ts", s.Ts}, {"weights", vector_json(s.w)}};
}

inline HoldProfile hold_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "Ts", "levels", "Bg", "gramian_factor"});
  if (!j.contains("kind")) schema_error(where + "/kind", "missing");
  if (!j.contains("Ts")) schema_error(where + "/Ts", "missing");
  const std::string kind = get_string(j["kind"], where + "/kind");
  const double Ts = get_number(j["Ts"], where + "/Ts");
  if (kind == "zoh") return HoldProfile::zoh(Ts);
  if (kind == "piecewise") {
    if (!j.contains("levels")) schema_error(where + "/levels", "missing");
    return HoldProfile::piecewise(to_vector(j["levels"], where + "/levels"), Ts);
  }
  if (kind == "continuous") {
    if (!j.contains("Bg") || !j.contains("gramian_factor")) schema_error(where, "continuous holds need Bg and gramian_factor");
    HoldProfile h;
    h.kind = HoldKind::Continuous;
    h.Ts = Ts;
    h.Bg = to_vector(j["Bg"], where + "/Bg");
    h.gramian_factor = to_vector(j["gramian_factor"], where + "/gramian_factor");
    return h;
  }
  schema_error(where + "/kind", "unknown hold kind '" + kind + "'");
}

inline SamplerWeights sampler_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "Ts", "weights"});
  if (!j.contains("Ts") || !j.contains("weights")) schema_error(where, "sampler profiles need Ts and weights");
  if (j.contains("kind") && get_string(j["kind"], where + "/kind") != "sampler")
    schema_error(where + "/kind", "expected 'sampler'");
  SamplerWeights s;
  s.Ts = get_number(j["Ts"], where + "/Ts");
  s.w = to_vector(j["weights"], where + "/weights");
  return s;
}

inline void write_profile(const fs::path& path, const json& profile) { write_text(path, profile.dump(2) + "\n"); }

// ---------------------------------------------------------------------------------------------
// attack files: '#' header lines with key=value, then "k,t,value" rows

struct AttackFile {
  std::map<std::string, std::string> header;
  std::vector<double> t;
  std::vector<double> values;

  bool operator==(const AttackFile&) const = default;
};

inline std::string attack_csv(const AttackFile& f) {
  std::string out;
  for (const auto& [k, v] : f.header) out += "# " + k + "=" + v + "\n";
  out += "k,t,value\n";
  for (std::size_t i = 0; i < f.values.size(); ++i)
    out += std::to_string(i) + "," + fmt17(f.t[i]) + "," + fmt17(f.values[i]) + "\n";
  return out;
}

inline AttackFile parse_attack_csv(const std::string& text, const std::string& name) {
  AttackFile f;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_row = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string at = name + ":" + std::to_string(lineno);
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::Parse, at + ": header lines are '# key=value'");
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      f.header[key] = line.substr(eq + 1);
      continue;
    }
    if (!header_row) {
      if (line != "k,t,value") fail(ErrorCode::Parse, at + ": expected column header 'k,t,value'");
      header_row = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
      fail(ErrorCode::Parse, at + ": expected three columns");
    char* end = nullptr;
    const double t = std::strtod(b.c_str(), &end);
    if (*end) fail(ErrorCode::Parse, at + ": bad time '" + b + "'");
    const double v = std::strtod(c.c_str(), &end);
    if (*end) fail(ErrorCode::Parse, at + ": bad value '" + c + "'");
    f.t.push_back(t);
    f.values.push_back(v);
  }
  if (!header_row) fail(ErrorCode::Parse, name + ": missing column header");
  return f;
}

inline AttackFile read_attack_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Parse, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_attack_csv(ss.str(), path.string());
}

// ---------------------------------------------------------------------------------------------
// scenarios

struct ScenarioDocument {
  std::string name;
  Scenario scenario;
  fs::path base_dir;
  std::string trace_path;
  std::string report_path;
  json hold_design;     // design summary when the hold was designed on load
  json sampler_design;
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline HoldProfile parse_hold(const json& j, const ContinuousLTI& plant, double Ts, const fs::path& base,
                              const std::string& where, json& design) {
  if (j.is_string()) {
    if (j.get<std::string>() == "zoh") return HoldProfile::zoh(Ts);
    schema_error(where, "expected \"zoh\" or an object");
  }
  check_keys(j, where, {"kind", "levels", "Bg", "profile", "design", "N", "zeros", "k_d", "margin"});
  if (j.contains("profile")) {
    const fs::path p = resolve(base, get_string(j["profile"], where + "/profile"));
    return hold_from_json(read_json_file(p), p.string());
  }
  if (j.contains("design")) {
    const std::string d = get_string(j["design"], where + "/design");
    const int N = j.contains("N") ? get_int(j["N"], where + "/N") : static_cast<int>(plant.states());
    if (d == "optimal") {
      const double margin = j.contains("margin") ? get_number(j["margin"], where + "/margin") : 0.0;
      const OptimalDesign od = gh_optimal(plant, Ts, N, margin);
      design = json{{"design", "optimal"}, {"N", N}, {"margin", margin}, {"zeros", complex_list_json(od.zeros)},
                    {"objective", round12(od.objective)}};
      return od.hold;
    }
    if (d == "exact") {
      std::optional<ComplexList> zs;
      std::optional<double> kd;
      if (j.contains("zeros")) zs = to_complex_list(j["zeros"], where + "/zeros");
      if (j.contains("k_d")) kd = get_number(j["k_d"], where + "/k_d");
      const std::string kind = j.contains("kind") ? get_string(j["kind"], where + "/kind") : "piecewise";
      const ExactHoldDesign ed = design_exact_hold(plant, Ts, N, zs, kd);
      design = json{{"design", "exact"}, {"N", N}, {"zeros", complex_list_json(ed.target.zeros)},
                    {"k_d", round12(ed.target.k_d)}};
      if (kind == "continuous") return gh_continuous(plant, ed.Bg, Ts);
      if (kind != "piecewise") schema_error(where + "/kind", "exact holds are 'piecewise' or 'continuous'");
      return ed.hold;
    }
    schema_error(where + "/design", "expected 'exact' or 'optimal'");
  }
  const std::string kind = j.contains("kind") ? get_string(j["kind"], where + "/kind") : "zoh";
  if (kind == "zoh") return HoldProfile::zoh(Ts);
  if (kind == "piecewise") {
    if (!j.contains("levels")) schema_error(where + "/levels", "missing");
    return HoldProfile::piecewise(to_vector(j["levels"], where + "/levels"), Ts);
  }
  if (kind == "continuous") {
    if (!j.contains("Bg")) schema_error(where + "/Bg", "missing");
    return gh_continuous(plant, to_vector(j["Bg"], where + "/Bg"), Ts);
  }
  schema_error(where + "/kind", "unknown hold kind '" + kind + "'");
}

inline SamplerWeights parse_sampler(const json& j, const ContinuousLTI& plant, double Ts, const fs::path& base,
                                    const std::string& where, json& design) {
  if (j.is_string()) {
    if (j.get<std::string>() == "conventional") return SamplerWeights::conventional_sampler(Ts);
    schema_error(where, "expected \"conventional\" or an object");
  }
  check_keys(j, where, {"weights", "profile", "design", "N", "zeros", "k_d", "margin"});
  if (j.contains("profile")) {
    const fs::path p = resolve(base, get_string(j["profile"], where + "/profile"));
    return sampler_from_json(read_json_file(p), p.string());
  }
  if (j.contains("design")) {
    const std::string d = get_string(j["design"], where + "/design");
    const int N = j.contains("N") ? get_int(j["N"], where + "/N") : static_cast<int>(plant.states()) + 1;
    if (d == "optimal") {
      const double margin = j.contains("margin") ? get_number(j["margin"], where + "/margin") : 0.0;
      const OptimalDesign od = gs_optimal(plant, Ts, N, margin);
      design = json{{"design", "optimal"}, {"N", N}, {"margin", margin}, {"zeros", complex_list_json(od.zeros)},
                    {"objective", round12(od.objective)}};
      return od.sampler;
    }
    if (d == "exact") {
      std::optional<ComplexList> zs;
      std::optional<double> kd;
      if (j.contains("zeros")) zs = to_complex_list(j["zeros"], where + "/zeros");
      if (j.contains("k_d")) kd = get_number(j["k_d"], where + "/k_d");
      const ExactSamplerDesign ed = design_exact_sampler(plant, Ts, N, zs, kd);
      design = json{{"design", "exact"}, {"N", N}, {"zeros", complex_list_json(ed.target.zeros)},
                    {"k_d", round12(ed.target.k_d)}};
      return ed.sampler;
    }
    schema_error(where + "/design", "expected 'exact' or 'optimal'");
  }
  if (!j.contains("weights")) schema_error(where + "/weights", "missing");
  SamplerWeights s;
  s.Ts = Ts;
  s.w = to_vector(j["weights"], where + "/weights");
  return s;
}

inline Controller parse_controller(const json& j, const DiscreteLTI& loop, const ContinuousLTI& plant,
                                   const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "auto") return stabilizing_controller(loop, 0.5);
    schema_error(where, "expected \"auto\" or an object");
  }
  check_keys(j, where, {"auto", "F", "G", "H", "domain", "state_radius", "observer_radius"});
  std::string domain = "discrete";
  if (j.contains("domain")) domain = get_string(j["domain"], where + "/domain");
  if (domain != "discrete" && domain != "continuous") schema_error(where + "/domain", "expected 'discrete' or 'continuous'");
  const Domain dom = domain == "discrete" ? Domain::Discrete : Domain::Continuous;
  if (j.contains("auto")) {
    const json& a = j["auto"];
    if (a.is_boolean()) {
      if (!a.get<bool>()) schema_error(where + "/auto", "use true or a pole radius");
      if (dom == Domain::Discrete) return stabilizing_controller(loop, 0.5);
      return observer_based_controller(plant.A, plant.B, plant.C, dom, 1.0, 2.0);
    }
    if (dom == Domain::Discrete) return stabilizing_controller(loop, get_number(a, where + "/auto"));
    const double r = get_number(a, where + "/auto");
    return observer_based_controller(plant.A, plant.B, plant.C, dom, r, 2.0 * r);
  }
  if (j.contains("state_radius") || j.contains("observer_radius")) {
    if (!j.contains("state_radius") || !j.contains("observer_radius"))
      schema_error(where, "observer-based controllers need state_radius and observer_radius");
    const double sr = get_number(j["state_radius"], where + "/state_radius");
    const double orad = get_number(j["observer_radius"], where + "/observer_radius");
    if (dom == Domain::Discrete) return observer_based_controller(loop.A, loop.B, loop.C, dom, sr, orad);
    return observer_based_controller(plant.A, plant.B, plant.C, dom, sr, orad);
  }
  for (const char* k : {"F", "G", "H"})
    if (!j.contains(k)) schema_error(where + "/" + k, "missing");
  Controller c;
  c.domain = dom;
  c.F = to_matrix(j["F"], where + "/F");
  c.G = to_matrix(j["G"], where + "/G");
  if (c.G.rows() == 1 && c.G.cols() > 1) c.G.transposeInPlace();
  c.H = to_matrix(j["H"], where + "/H");
  try {
    c.validate();
  } catch (const Error& e) {
    schema_error(where, e.what());
  }
  return c;
}

inline AttackSpec parse_attack(const json& j, const fs::path& base, const std::string& where) {
  check_keys(j, where, {"kind", "t0", "delta", "reduce", "model", "stop_at_hazard", "growth_direction", "schedule", "q",
                        "q0", "tau", "L", "dt", "values", "file", "channel"});
  AttackSpec a;
  if (!j.contains("kind")) schema_error(where + "/kind", "missing");
  const std::string kind = get_string(j["kind"], where + "/kind");
  static const std::map<std::string, AttackKind> kinds = {
      {"none", AttackKind::None},         {"ct-zda", AttackKind::CtZda},         {"pda", AttackKind::Pda},
      {"dt-zda", AttackKind::DtZda},      {"masking", AttackKind::Masking},      {"robust-zda", AttackKind::RobustZda},
      {"robust-pda", AttackKind::RobustPda}, {"sequence", AttackKind::Sequence}};
  const auto it = kinds.find(kind);
  if (it == kinds.end()) schema_error(where + "/kind", "unknown attack kind '" + kind + "'");
  a.kind = it->second;
  if (j.contains("t0")) a.t0 = get_number(j["t0"], where + "/t0");
  if (j.contains("delta")) a.delta = to_vector(j["delta"], where + "/delta");
  if (j.contains("reduce")) a.reduce = get_bool(j["reduce"], where + "/reduce");
  if (j.contains("model")) {
    const std::string m = get_string(j["model"], where + "/model");
    if (m == "zoh") a.model = AttackModel::Zoh;
    else if (m == "loop") a.model = AttackModel::Loop;
    else schema_error(where + "/model", "expected 'zoh' or 'loop'");
  }
  if (j.contains("stop_at_hazard")) a.stop_at_hazard = get_bool(j["stop_at_hazard"], where + "/stop_at_hazard");
  if (j.contains("growth_direction")) a.growth_direction = to_vector(j["growth_direction"], where + "/growth_direction");
  if (j.contains("schedule")) a.schedule = to_std_vector(j["schedule"], where + "/schedule");
  if (j.contains("q")) a.q = to_vector(j["q"], where + "/q");
  if (j.contains("q0")) {
    if (j.contains("q")) schema_error(where + "/q0", "give q or q0, not both");
    a.q = Vector::Constant(1, get_number(j["q0"], where + "/q0"));  // expanded to full gains once r is known
  }
  if (j.contains("tau")) a.tau = get_number(j["tau"], where + "/tau");
  if (j.contains("L")) a.L = get_number(j["L"], where + "/L");
  if (j.contains("dt")) a.dob_dt = get_number(j["dt"], where + "/dt");
  if (j.contains("channel")) {
    const std::string c = get_string(j["channel"], where + "/channel");
    if (c == "actuator") a.channel = AttackChannel::Actuator;
    else if (c == "sensor") a.channel = AttackChannel::Sensor;
    else schema_error(where + "/channel", "expected 'actuator' or 'sensor'");
  }
  if (j.contains("values") && j.contains("file")) schema_error(where, "give values or file, not both");
  if (j.contains("values")) a.values = to_std_vector(j["values"], where + "/values");
  if (j.contains("file")) a.values = read_attack_csv(resolve(base, get_string(j["file"], where + "/file"))).values;
  return a;
}

}  // namespace detail

inline ScenarioDocument parse_scenario(const json& j, const fs::path& base_dir = fs::current_path()) {
  check_keys(j, "", {"name", "description", "plant", "nominal_plant", "Ts", "actuator_divisions", "x0", "x0_nf",
                     "controller", "nominal_controller", "hold", "sampler", "attack", "horizon", "L_detect", "L_hazard", "detector",
                     "substeps", "record_every", "output"});
  ScenarioDocument doc;
  doc.base_dir = base_dir;
  Scenario& s = doc.scenario;
  if (j.contains("name")) doc.name = get_string(j["name"], "/name");
  if (j.contains("description")) (void)get_string(j["description"], "/description");
  if (!j.contains("plant")) schema_error("/plant", "missing");
  if (!j.contains("Ts")) schema_error("/Ts", "missing");
  s.plant = parse_plant(j["plant"], "/plant");
  if (j.contains("nominal_plant")) s.nominal_plant = parse_plant(j["nominal_plant"], "/nominal_plant");
  s.Ts = get_number(j["Ts"], "/Ts");
  if (!(s.Ts > 0.0)) schema_error("/Ts", "must be positive");
  if (j.contains("actuator_divisions")) s.actuator_divisions = get_int(j["actuator_divisions"], "/actuator_divisions");
  if (s.actuator_divisions < 1) schema_error("/actuator_divisions", "must be >= 1");
  if (j.contains("x0") && j.contains("x0_nf")) schema_error("/x0_nf", "give x0 or x0_nf, not both");
  s.x0 = j.contains("x0") ? to_vector(j["x0"], "/x0") : Vector(Vector::Zero(s.plant.states()));
  if (j.contains("x0_nf")) {
    // initial state in normal-form coordinates (x_rho, x_z) of the plant
    const Vector v = to_vector(j["x0_nf"], "/x0_nf");
    if (v.size() != s.plant.states()) schema_error("/x0_nf", "needs one entry per plant state");
    s.x0 = to_normal_form(s.plant).T.fullPivLu().solve(v);
  }
  if (s.x0.size() != s.plant.states()) schema_error("/x0", "needs one entry per plant state");
  s.hold = j.contains("hold") ? detail::parse_hold(j["hold"], s.plant, s.Ts, base_dir, "/hold", doc.hold_design)
                              : HoldProfile::zoh(s.Ts);
  s.sampler = j.contains("sampler")
                  ? detail::parse_sampler(j["sampler"], s.plant, s.Ts, base_dir, "/sampler", doc.sampler_design)
                  : SamplerWeights::conventional_sampler(s.Ts);
  const DiscreteLTI loop = loop_model(s.plant, s.hold, s.sampler);
  s.controller = detail::parse_controller(j.contains("controller") ? j["controller"] : json("auto"), loop, s.plant,
                                          "/controller");
  if (j.contains("nominal_controller")) {
    const ContinuousLTI& np = s.attacker_plant();
    s.nominal_controller = detail::parse_controller(j["nominal_controller"], loop_model(np, s.hold, s.sampler), np,
                                                    "/nominal_controller");
  }
  if (j.contains("attack")) s.attack = detail::parse_attack(j["attack"], base_dir, "/attack");
  if (s.attack.q.size() == 1 && (s.attack.kind == AttackKind::RobustZda || s.attack.kind == AttackKind::RobustPda)) {
    const int r = s.attack.kind == AttackKind::RobustZda
                      ? relative_degree(s.attacker_plant())
                      : relative_degree((s.nominal_controller ? *s.nominal_controller : s.controller).F,
                                        (s.nominal_controller ? *s.nominal_controller : s.controller).G,
                                        (s.nominal_controller ? *s.nominal_controller : s.controller).H);
    s.attack.q = default_dob_gains(r, s.attack.q(0));
  }
  if (!j.contains("horizon")) schema_error("/horizon", "missing");
  s.horizon = get_number(j["horizon"], "/horizon");
  if (j.contains("L_detect")) s.L_detect = get_number(j["L_detect"], "/L_detect");
  if (j.contains("L_hazard")) s.L_hazard = get_number(j["L_hazard"], "/L_hazard");
  if (!(s.L_detect > 0.0)) schema_error("/L_detect", "must be positive");
  if (!(s.L_hazard > 0.0)) schema_error("/L_hazard", "must be positive");
  if (j.contains("detector")) {
    check_keys(j["detector"], "/detector", {"observer_radius"});
    if (j["detector"].contains("observer_radius"))
      s.observer_radius = get_number(j["detector"]["observer_radius"], "/detector/observer_radius");
  }
  if (j.contains("substeps")) s.substeps = get_int(j["substeps"], "/substeps");
  if (j.contains("record_every")) s.record_every = get_int(j["record_every"], "/record_every");
  if (j.contains("output")) {
    check_keys(j["output"], "/output", {"trace", "report"});
    if (j["output"].contains("trace")) doc.trace_path = get_string(j["output"]["trace"], "/output/trace");
    if (j["output"].contains("report")) doc.report_path = get_string(j["output"]["report"], "/output/report");
  }
  return doc;
}

inline ScenarioDocument load_scenario(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    ScenarioDocument doc = parse_scenario(j, path.has_parent_path() ? path.parent_path() : fs::current_path());
    if (doc.name.empty()) doc.name = path.stem().string();
    return doc;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) fail(ErrorCode::Parse, path.string() + ": " + e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------------------------
// outputs

inline std::string trace_csv(const Trace& tr) {
  std::string out = "t";
  for (int i = 1; i <= tr.n; ++i) out += ",x_" + std::to_string(i);
  out += ",u,y,y_c,y_hat,residual,attack";
  const bool target = !tr.attack_target.empty();
  if (target) out += ",attack_target";
  out += "\n";
  for (std::size_t r = 0; r < tr.t.size(); ++r) {
    out += fmt12(tr.t[r]);
    for (int i = 0; i < tr.n; ++i) out += "," + fmt12(tr.x[r](i));
    out += "," + fmt12(tr.u[r]) + "," + fmt12(tr.y[r]) + "," + fmt12(tr.y_c[r]) + "," + fmt12(tr.y_hat[r]) + "," +
           fmt12(tr.residual[r]) + "," + fmt12(tr.attack[r]);
    if (target) out += "," + fmt12(tr.attack_target[r]);
    out += "\n";
  }
  return out;
}

inline json report_json(const Report& r) {
  json j;
  j["stealthy"] = r.stealthy;
  j["first_violation"] = num12(r.first_violation);
  j["max_residual"] = num12(r.max_residual);
  j["detect_margin"] = num12(r.detect_margin);
  j["observer"] = json{{"stealthy", r.observer_stealthy},
                       {"first_violation", num12(r.observer_first_violation)},
                       {"max_residual", num12(r.max_observer_residual)}};
  j["disruptive"] = r.disruptive;
  j["t_star"] = num12(r.t_star);
  j["max_state_deviation"] = num12(r.max_state_deviation);
  j["hazard_ratio"] = num12(r.hazard_ratio);
  j["L_detect"] = num12(r.L_detect);
  j["L_hazard"] = num12(r.L_hazard);
  j["exit_code"] = r.exit_code();
  return j;
}

inline json comparison_json(const Comparison& c) {
  return json{{"baseline", report_json(c.baseline)},
              {"variant", report_json(c.variant)},
              {"residual_ratio", num12(c.residual_ratio)},
              {"deviation_ratio", num12(c.deviation_ratio)},
              {"stealth_flipped", c.stealth_flipped},
              {"disruption_flipped", c.disruption_flipped},
              {"max_output_difference", num12(c.max_output_difference)}};
}

// Default directory for artifacts: $ZDA_OUTPUT_DIR, else the working directory.
inline fs::path output_dir() {
  if (const char* d = std::getenv("ZDA_OUTPUT_DIR"); d && *d) return fs::path(d);
  return fs::current_path();
}
inline fs::path output_path(const std::string& given, const std::string& fallback) {
  const fs::path p(given.empty() ? fallback : given);
  return p.is_absolute() ? p : output_dir() / p;
}

}  // namespace zda::io
