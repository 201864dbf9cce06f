#include "common.hpp"

#include <cstdlib>
#include <fstream>
#include <unistd.h>

#include "zdattack/io.hpp"

using namespace zt;
using io::json;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    return e.what();
  }
  ADD_FAILURE() << "expected a parse error";
  return {};
}

json minimal() { return json::parse(R"({"plant": {"num": [1], "den": [1, 1]}, "Ts": 0.1, "horizon": 1})"); }

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / ("zda_io_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(io::fmt12(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::fmt12(1e-20), "1e-20");
  EXPECT_EQ(io::round12(2.0 / 3.0), 0.666666666667);
  EXPECT_TRUE(io::num12(std::nan("")).is_null());
}

TEST(FormatProperty, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng) * std::pow(10.0, 40.0 * u(rng));
    EXPECT_EQ(std::strtod(io::fmt17(v).c_str(), nullptr), v);
  }
}

TEST(Plant, DescendingCoefficients) {
  const ContinuousLTI p = io::parse_plant(json::parse(R"({"num": [1, 1], "den": [1, 2, 3, 1, 1]})"), "/plant");
  const ContinuousLTI q = two_mass();
  EXPECT_LT(max_abs_diff(p.A, q.A), 1e-15);
  EXPECT_LT(max_abs_diff(p.C, q.C), 1e-15);
  const ContinuousLTI r = io::parse_plant(io::plant_json(q), "/plant");
  EXPECT_EQ(r.A, q.A);
  EXPECT_EQ(r.B, q.B);
}

TEST(Plant, MixedFormsAreRejected) {
  const std::string m =
      message_of([] { io::parse_plant(json::parse(R"({"num": [1], "den": [1, 1], "A": [[1]]})"), "/plant"); });
  EXPECT_NE(m.find("/plant"), std::string::npos);
}

TEST(Profiles, HoldRoundTrip) {
  Vector lv(3);
  lv << 1.0 / 3.0, -2.5, 1e-17;
  for (const HoldProfile& h : {HoldProfile::zoh(0.1), HoldProfile::piecewise(lv, 0.25),
                               gh_continuous(double_integrator(), Vector::Ones(2), 1.0)}) {
    const json j = json::parse(io::hold_json(h).dump());
    const HoldProfile back = io::hold_from_json(j, "/hold");
    EXPECT_EQ(back.kind, h.kind);
    EXPECT_EQ(back.Ts, h.Ts);
    EXPECT_EQ(back.h, h.h);
    EXPECT_EQ(back.Bg, h.Bg);
    EXPECT_EQ(back.gramian_factor, h.gramian_factor);
  }
}

TEST(Profiles, SamplerRoundTrip) {
  SamplerWeights s;
  s.Ts = 0.1;
  s.w = Vector(3);
  s.w << 0.75, -3, 3.25;
  const SamplerWeights back = io::sampler_from_json(json::parse(io::sampler_json(s).dump()), "/sampler");
  EXPECT_EQ(back.w, s.w);
  EXPECT_EQ(back.Ts, s.Ts);
}

TEST(Profiles, UnknownHoldKind) {
  const std::string m = message_of([] { io::hold_from_json(json::parse(R"({"kind": "cubic", "Ts": 1})"), "/hold"); });
  EXPECT_NE(m.find("cubic"), std::string::npos);
}

TEST(AttackFiles, RoundTripIsExact) {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> g(0.0, 1.0);
  io::AttackFile f;
  f.header = {{"kind", "dt-zda"}, {"t0", "1"}, {"Ta", "0.1"}};
  for (int i = 0; i < 50; ++i) {
    f.t.push_back(0.1 * i);
    f.values.push_back(g(rng) * 1e-3);
  }
  const std::string text = io::attack_csv(f);
  EXPECT_EQ(text.rfind("# Ta=0.1\n# kind=dt-zda\n# t0=1\nk,t,value\n0,0,", 0), 0u);
  EXPECT_EQ(io::parse_attack_csv(text, "mem"), f);
}

TEST(AttackFiles, ErrorsNameTheLine) {
  EXPECT_NE(message_of([] { io::parse_attack_csv("# a=1\nk,t,value\n0,0.1,abc\n", "f.csv"); }).find("f.csv:3"),
            std::string::npos);
  EXPECT_NE(message_of([] { io::parse_attack_csv("0,0,1\n", "g.csv"); }).find("g.csv:1"), std::string::npos);
  EXPECT_NE(message_of([] { io::parse_attack_csv("k,t,value\n0,1\n", "h.csv"); }).find("h.csv:2"), std::string::npos);
}

TEST(Scenario, MinimalDefaults) {
  const io::ScenarioDocument d = io::parse_scenario(minimal());
  const Scenario& s = d.scenario;
  EXPECT_EQ(s.hold.kind, HoldKind::Zoh);
  EXPECT_TRUE(s.sampler.conventional());
  EXPECT_EQ(s.attack.kind, AttackKind::None);
  EXPECT_EQ(s.x0, Vector::Zero(1));
  EXPECT_LT(spectral_radius(closed_loop_matrix_discrete(loop_model(s), s.controller)), 1.0);
}

TEST(ScenarioProperty, UnknownKeysAreNamed) {
  const char* paths[] = {"", "/plant", "/attack", "/detector", "/output"};
  for (const char* where : paths) {
    json j = minimal();
    j["attack"] = json::parse(R"({"kind": "none"})");
    j["detector"] = json::object();
    j["output"] = json::object();
    json& target = std::string(where).empty() ? j : j[json::json_pointer(where)];
    target["frobnicate"] = 1;
    const std::string m = message_of([&] { io::parse_scenario(j); });
    EXPECT_NE(m.find(std::string(where) + "/frobnicate"), std::string::npos) << m;
    EXPECT_NE(m.find("unknown key 'frobnicate'"), std::string::npos) << m;
  }
}

TEST(Scenario, TypeErrorsCarryThePointer) {
  json j = minimal();
  j["Ts"] = "fast";
  EXPECT_NE(message_of([&] { io::parse_scenario(j); }).find("/Ts: expected a number"), std::string::npos);
  j = minimal();
  j["x0"] = json::array({1, 2});
  EXPECT_NE(message_of([&] { io::parse_scenario(j); }).find("/x0"), std::string::npos);
  j = minimal();
  j.erase("horizon");
  EXPECT_NE(message_of([&] { io::parse_scenario(j); }).find("/horizon: missing"), std::string::npos);
}

TEST(Scenario, NormalFormInitialState) {
  json j = json::parse(R"({"plant": {"num": [1, -1], "den": [1, 6, 11, 6]}, "Ts": 0.01, "horizon": 1,
                           "x0_nf": [0, 0, 0.5]})");
  const Scenario s = io::parse_scenario(j).scenario;
  const NormalForm nf = to_normal_form(s.plant);
  const Vector xn = nf.T * s.x0;
  EXPECT_NEAR(xn(0), 0.0, 1e-14);
  EXPECT_NEAR(xn(1), 0.0, 1e-14);
  EXPECT_NEAR(xn(2), 0.5, 1e-14);
}

TEST(Scenario, MalformedJsonReportsLineAndColumn) {
  const fs::path dir = temp_dir();
  const fs::path f = dir / "broken.json";
  std::ofstream(f) << "{\n  \"Ts\": 0.1,\n  \"horizon\": ,\n}\n";
  const std::string m = message_of([&] { io::load_scenario(f); });
  EXPECT_NE(m.find("broken.json:3:"), std::string::npos) << m;
  fs::remove_all(dir);
}

TEST(Scenario, LoadUsesFileStemAsName) {
  const fs::path dir = temp_dir();
  std::ofstream(dir / "my_case.json") << minimal().dump();
  EXPECT_EQ(io::load_scenario(dir / "my_case.json").name, "my_case");
  fs::remove_all(dir);
}

TEST(Scenario, EveryShippedScenarioParses) {
  int count = 0;
  for (const auto& e : fs::directory_iterator("scenarios")) {
    if (e.path().extension() != ".json") continue;
    ++count;
    EXPECT_NO_THROW(io::load_scenario(e.path())) << e.path();
  }
  EXPECT_GE(count, 10);
}

TEST(Outputs, TraceHeaderAndRows) {
  const Scenario s = io::parse_scenario(minimal()).scenario;
  const Trace tr = simulate(s);
  const std::string csv = io::trace_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x_1,u,y,y_c,y_hat,residual,attack");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), tr.t.size() + 1);
}

TEST(Outputs, ReportJsonFields) {
  Report r;
  r.max_residual = 0.25;
  r.L_detect = 0.1;
  r.stealthy = false;
  const json j = io::report_json(r);
  EXPECT_EQ(j["exit_code"], 10);
  EXPECT_TRUE(j["t_star"].is_null());
  EXPECT_EQ(j["max_residual"], 0.25);
  EXPECT_TRUE(j["observer"].contains("max_residual"));
}

TEST(Outputs, OutputDirectoryFromEnvironment) {
  ::setenv("ZDA_OUTPUT_DIR", "/tmp/zda_out_env", 1);
  EXPECT_EQ(io::output_path("", "a.csv"), fs::path("/tmp/zda_out_env/a.csv"));
  EXPECT_EQ(io::output_path("/abs/b.csv", "a.csv"), fs::path("/abs/b.csv"));
  ::unsetenv("ZDA_OUTPUT_DIR");
  EXPECT_EQ(io::output_path("c.csv", "a.csv"), fs::current_path() / "c.csv");
}
