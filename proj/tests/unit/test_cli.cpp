#include "wentzell/cli/config.hpp"
#include "wentzell/cli/expression.hpp"
#include "wentzell/cli/runner.hpp"

#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace wentzell;
using namespace wentzell::cli;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidInput;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("wentzell_cli_test_" + name); }

RunResult run_preset(const std::string& preset, const std::string& mode, const std::string& dir,
                     const std::vector<std::string>& extra = {}) {
  fs::remove_all(scratch(dir));
  nlohmann::json doc = {{"preset", preset}, {"mode", mode}, {"output", {{"dir", scratch(dir).string()}}}};
  for (const auto& o : extra) apply_override(doc, o);
  std::ostringstream log;
  return run(parse_config(doc), false, log);
}

}  // namespace

TEST_CASE("expressions") {
  const Vec x = Vec::Constant(1, 0.25);
  CHECK(Expression::parse("1 + 2 * 3")(0, x) == 7.0);
  CHECK(Expression::parse("2^3^2")(0, x) == 512.0);
  CHECK(Expression::parse("-2^2")(0, x) == -4.0);
  CHECK(Expression::parse("cos(pi*x)")(0, x) == doctest::Approx(std::cos(std::numbers::pi / 4)));
  CHECK(Expression::parse("exp(-t)*x")(2.0, x) == doctest::Approx(std::exp(-2.0) * 0.25));
  CHECK(Expression::parse("step(x-0.25)")(0, x) == 1.0);
  CHECK(Expression::parse("step(x-0.5)")(0, x) == 0.0);
  CHECK(Expression::parse("sign(-3) + abs(-2) + sqrt(4) + tanh(0) + log(e)")(0, x) == 4.0);
  const Vec xy = Vec::Constant(2, 0.5);
  CHECK(Expression::parse("x*y")(0, xy) == 0.25);
  CHECK(Expression::parse("x*sin(t)").autonomous() == false);
  CHECK(Expression::parse("x").autonomous());
  CHECK(Expression::parse("0").is_zero());
  CHECK(Expression::parse(" 0.0 ").is_zero());
  CHECK_FALSE(Expression::parse("x").is_zero());
  CHECK(Expression::parse("sin(x)").text() == "sin(x)");
  for (const char* bad : {"1 +", "foo(x)", "(x", "x y", "z", "", "2**3"}) {
    INFO(bad);
    CHECK(code_of([&] { Expression::parse(bad); }) == ErrorCode::Parse);
  }
  CHECK(message_of([] { Expression::parse("1 + $"); }).find("column") != std::string::npos);
}

TEST_CASE("config round trip") {
  for (const auto& name : preset_names()) {
    INFO(name);
    const RunConfig cfg = parse_config(nlohmann::json{{"preset", name}});
    CHECK(cfg.preset == name);
    CHECK_NOTHROW(validate(cfg));
    const RunConfig back = parse_config(to_json(cfg));
    CHECK(back == cfg);
    CHECK(to_json(back) == to_json(cfg));
  }
  RunConfig full;
  full.mode = "contraction";
  full.grid.dim = 2;
  full.grid.nx = 6;
  full.grid.ny = 5;
  full.model.id = "plaplacian";
  full.model.p = 3.0;
  full.model.alpha = {1.0, 2.0};
  full.sources.y0 = "x*y";
  full.T = 0.5;
  full.h = 0.05;
  full.step.tol = 1e-9;
  full.step.optimizer = Optimizer::QuasiNewton;
  full.asymptotics.t_long = 3.0;
  full.convergence.min_order = 0.5;
  full.seed = 42;
  CHECK_NOTHROW(validate(full));
  CHECK(parse_config(to_json(full)) == full);
  CHECK(parse_config(to_json(full).dump()) == full);
  CHECK(full.steps() == 10);
}

TEST_CASE("config errors") {
  CHECK(code_of([] { parse_config("{\"mode\": \"flow\",\n  \"T\": }"); }) == ErrorCode::Parse);
  CHECK(message_of([] { parse_json("{\n\n  ]"); }).find("line 3") != std::string::npos);
  CHECK(code_of([] { parse_config(R"({"step": {"tolx": 1}})"); }) == ErrorCode::Validation);
  CHECK(message_of([] { parse_config(R"({"step": {"tolx": 1}})"); }).find("/step/tolx") != std::string::npos);
  CHECK(code_of([] { parse_config(R"({"T": "long"})"); }) == ErrorCode::Parse);
  CHECK(message_of([] { parse_config(R"({"grid": {"nx": "many"}})"); }).find("grid") != std::string::npos);
  CHECK(code_of([] { parse_config(R"({"preset": "nonexistent"})"); }) != ErrorCode::Parse);

  auto violations = [](const std::string& text) { return message_of([&] { parse_config(text); }); };
  CHECK(violations(R"({"preset": "constant-1d", "T": -1})").find("T") != std::string::npos);
  CHECK(violations(R"({"preset": "constant-1d", "mode": "dance"})").find("mode") != std::string::npos);
  CHECK(code_of([] { parse_config(R"({"preset": "constant-1d", "h": 0.3})"); }) == ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"grid": {"dim": 3}, "n": 2})"); }) == ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"n": 2, "h": 0.5})"); }) == ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"n": 2, "sources": {"f": "sin("}})"); }) == ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"n": 2, "mode": "tv"})"); }) == ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"n": 2, "model": {"id": "plaplacian", "p": 0.5}})"); }) ==
        ErrorCode::Validation);
  CHECK(code_of([] { parse_config(R"({"n": 2, "step": {"decay": 2}})"); }) == ErrorCode::Validation);
  // Several problems are reported together.
  const std::string many = violations(R"({"n": 2, "T": 0, "output": {"save_every": 0}})");
  CHECK(many.find("T") != std::string::npos);
  CHECK(many.find("save_every") != std::string::npos);
}

TEST_CASE("overrides and presets") {
  nlohmann::json doc = {{"preset", "quadratic-1d"}};
  apply_override(doc, "step.tol=1e-10");
  apply_override(doc, "grid.nx=8");
  apply_override(doc, "mode=convergence");
  apply_override(doc, "sources.f=x");
  const RunConfig cfg = parse_config(doc);
  CHECK(cfg.step.tol == 1e-10);
  CHECK(cfg.grid.nx == 8);
  CHECK(cfg.mode == "convergence");
  CHECK(cfg.sources.f == "x");
  CHECK(cfg.model.id == "quadratic");
  CHECK(code_of([&] { apply_override(doc, "novalue"); }) == ErrorCode::Validation);

  // h given by the user replaces the preset step count.
  const RunConfig byh = parse_config(nlohmann::json{{"preset", "quadratic-1d"}, {"h", 0.1}});
  CHECK(byh.steps() == 10);
  CHECK_FALSE(byh.n.has_value());
  CHECK(preset_json("tv-step-1d")["model"]["id"] == "tv");
  CHECK(code_of([] { preset_json("none"); }) == ErrorCode::Validation);
}

TEST_CASE("built objects") {
  const RunConfig cfg = parse_config(nlohmann::json{{"preset", "quadratic-1d"}});
  const ProblemData p = build_problem(cfg);
  CHECK(p.grid.cell_count() == 32);
  CHECK(p.y0[0] == doctest::Approx(1.0));
  CHECK(static_cast<bool>(p.f));
  CHECK(p.f(0.0, Vec::Constant(1, 0.0)) == doctest::Approx(std::numbers::pi * std::numbers::pi - 1.0));
  const ProblemData c = build_problem(parse_config(nlohmann::json{{"preset", "constant-1d"}}));
  CHECK_FALSE(static_cast<bool>(c.f));
  CHECK_FALSE(static_cast<bool>(c.g));
  CHECK(build_model(parse_config(nlohmann::json{{"preset", "tv-step-1d"}})).kind() == FluxKind::TotalVariation);
}

TEST_CASE("number formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(exit_code_for(ErrorCode::NonConverged) == kExitNonConverged);
  CHECK(exit_code_for(ErrorCode::Parse) == kExitConfig);
  CHECK(exit_code_for(ErrorCode::Validation) == kExitConfig);
}

TEST_CASE("runs write their outputs") {
  const auto r = run_preset("quadratic-1d", "flow", "flow", {"output.save_every=5"});
  CHECK(r.exit_code == kExitOk);
  CHECK(r.status == "ok");
  const fs::path dir = scratch("flow");
  for (const char* f : {"manifest.json", "metrics.jsonl", "steps.csv"}) CHECK(fs::exists(dir / f));
  CHECK(fs::exists(dir / "fields" / "step_000000.csv"));
  CHECK(fs::exists(dir / "fields" / "step_000020.csv"));
  CHECK_FALSE(fs::exists(dir / "fields" / "step_000003.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["pass"] == true);
  CHECK(manifest["exit_code"] == 0);
  CHECK(parse_config(manifest["config"]) == parse_config(r.manifest["config"]));
  CHECK(manifest["checks"].contains("gronwall_bound"));
  // Step events for indices 0..20 plus the summary.
  std::ifstream m(dir / "metrics.jsonl");
  int lines = 0;
  for (std::string line; std::getline(m, line);) {
    CHECK(nlohmann::json::parse(line).is_object());
    ++lines;
  }
  CHECK(lines == 22);
}

TEST_CASE("runs are deterministic") {
  const auto a = run_preset("fractured-1d", "contraction", "det_a", {"contraction.perturbation=\"random\""});
  const auto b = run_preset("fractured-1d", "contraction", "det_b", {"contraction.perturbation=\"random\""});
  REQUIRE(a.exit_code == kExitOk);
  CHECK(slurp(scratch("det_a") / "metrics.jsonl") == slurp(scratch("det_b") / "metrics.jsonl"));
  CHECK(slurp(scratch("det_a") / "contraction.csv") == slurp(scratch("det_b") / "contraction.csv"));
  const auto c = run_preset("fractured-1d", "contraction", "det_c", {"contraction.perturbation=\"random\"", "seed=2"});
  CHECK(slurp(scratch("det_a") / "contraction.csv") != slurp(scratch("det_c") / "contraction.csv"));
  (void)b;
  (void)c;
}

TEST_CASE("every mode runs") {
  CHECK(run_preset("quadratic-1d", "convergence", "conv").exit_code == kExitOk);
  CHECK(fs::exists(scratch("conv") / "convergence.csv"));
  CHECK(run_preset("plaplacian-1d", "contraction", "contr").exit_code == kExitOk);
  CHECK(run_preset("constant-1d", "asymptotics", "asym", {"sources.y0=\"cos(pi*x)\""}).exit_code == kExitOk);
  CHECK(fs::exists(scratch("asym") / "limit.csv"));
  CHECK(run_preset("plaplacian-1d", "obstacle", "obst", {"sources.f=\"-1\""}).exit_code == kExitOk);
  CHECK(run_preset("tv-step-1d", "tv", "tv").exit_code == kExitOk);
  CHECK(run_preset("loggrowth-1d", "flow", "log").exit_code == kExitOk);
}

TEST_CASE("failures map to exit codes") {
  // An unattainable order threshold fails a check.
  const auto strict = run_preset("quadratic-1d", "convergence", "strict", {"convergence.min_order=5"});
  CHECK(strict.exit_code == kExitCheckFailed);
  CHECK(strict.status == "check_failed");
  CHECK(nlohmann::json::parse(slurp(scratch("strict") / "manifest.json"))["pass"] == false);
  // A starved optimizer does not converge.
  const auto starved = run_preset("plaplacian-1d", "flow", "starved",
                                  {"step.max_iterations=1", "T=20", "sources.y0=\"10*x\""});
  CHECK(starved.exit_code == kExitNonConverged);
  CHECK(starved.status == "nonconverged");
  // Asymptotics with moving sources is a configuration problem.
  CHECK(run_preset("quadratic-1d", "asymptotics", "moving").exit_code == kExitConfig);
}
