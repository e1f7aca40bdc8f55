#include "wentzell/cli/runner.hpp"

#include <Eigen/Core>

#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>

namespace wentzell::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  Csv& operator<<(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }
  Csv& operator<<(int v) {
    sep();
    out_ << v;
    return *this;
  }
  // Empty cell.
  Csv& operator<<(std::nullopt_t) {
    sep();
    return *this;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ofstream out_;
  bool first_ = true;
};

struct Check {
  std::string name;
  double value;
  double limit;
  bool pass;
};

json check_json(const std::vector<Check>& checks) {
  json j = json::object();
  for (const auto& c : checks) j[c.name] = {{"value", c.value}, {"limit", c.limit}, {"pass", c.pass}};
  return j;
}

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    metrics_.open(dir_ / "metrics.jsonl");
    if (!metrics_) throw Error(ErrorCode::InvalidInput, "cannot write into " + dir);
  }
  void metric(const json& j) { metrics_ << j.dump() << '\n'; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
};

std::vector<std::string> field_header(int dim) {
  if (dim == 1) return {"node", "x", "u"};
  return {"node", "x", "y", "u"};
}

void write_field(const Grid& g, const Field& u, const std::filesystem::path& path) {
  Csv csv(path, field_header(g.dim()));
  for (int k = 0; k < g.node_count(); ++k) {
    const Vec x = g.node(k);
    csv << k;
    for (int a = 0; a < g.dim(); ++a) csv << x[a];
    csv << u[k];
    csv.end();
  }
}

// One CSV per saved time slice: fields/step_000010.csv.
void write_fields(const Trajectory& tr, int save_every, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i <= tr.steps_count(); ++i) {
    if (i % save_every != 0 && i != tr.steps_count()) continue;
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d.csv", i);
    write_field(tr.grid, tr.y[i], dir / name);
  }
}

json stability_json(const DiagnosticsRecord& d) {
  json q = json::object();
  const auto values = d.totals.as_vector();
  for (std::size_t k = 0; k < values.size(); ++k) q[StabilityQuantities::names()[k]] = values[k];
  return {{"quantities", q}, {"c0", d.c0}, {"gronwall_bound", d.gronwall_bound}, {"worst_ratio", d.worst_ratio}};
}

double weighted_total(const Grid& g, const Field& y) { return g.total_mass().dot(y); }

// Trajectory-level checks shared by flow, obstacle and tv modes.
std::vector<Check> trajectory_checks(const Trajectory& tr, const StepConfig& step) {
  std::vector<Check> checks;
  const auto& d = tr.diagnostics;
  checks.push_back({"gronwall_bound", d.worst_ratio, 1.0, d.pass});
  double cert = 0.0, gap = HUGE_VAL;
  for (int i = 1; i <= tr.steps_count(); ++i) {
    cert = std::max(cert, tr.steps[i].certificate);
    gap = std::min(gap, tr.steps[i].min_cell_gap);
  }
  checks.push_back({"fenchel_certificate", cert, step.certificate_tol, cert <= step.certificate_tol});
  checks.push_back({"min_cell_gap", gap, -1e-10, gap >= -1e-10});
  if (!tr.model.time_dependent() && tr.sources_zero) {
    const EnergyReport er = energy_trace(tr, 1e-10);
    checks.push_back({"energy_monotone", er.worst_increase, 1e-10, er.monotone});
    checks.push_back({"energy_dissipation", er.worst_dissipation, 1e-10, er.dissipation_ok});
    if (!tr.obstacle) {
      // Zero sources conserve int y + int_Gamma y.
      const double m0 = weighted_total(tr.grid, tr.y.front());
      const double drift = std::abs(weighted_total(tr.grid, tr.y.back()) - m0);
      const double lim = 1e-8 * (1.0 + tr.grid.total_mass().dot(tr.y.front().cwiseAbs()));
      checks.push_back({"mass_conservation", drift, lim, drift <= lim});
    }
  }
  if (tr.obstacle) {
    double umin = HUGE_VAL, comp = 0.0;
    for (int i = 1; i <= tr.steps_count(); ++i) {
      umin = std::min(umin, tr.y[i].minCoeff());
      comp = std::max(comp, tr.steps[i].complementarity);
    }
    checks.push_back({"obstacle_feasible", umin, -1e-12, umin >= -1e-12});
    checks.push_back({"obstacle_complementarity", comp, 1e-6, comp <= 1e-6});
  }
  return checks;
}

void write_steps(const Trajectory& tr, Outputs& out) {
  Csv csv(out.path("steps.csv"), {"step", "t", "norm_sq", "energy", "certificate", "min_cell_gap", "residual",
                                  "weak_form_residual", "complementarity", "iterations"});
  for (int i = 0; i <= tr.steps_count(); ++i) {
    const StepRecord& s = tr.steps[i];
    const double ns = tr.diagnostics.norm_sq[i], en = tr.diagnostics.energy[i];
    csv << i << tr.t[i] << ns << en << s.certificate << s.min_cell_gap << s.residual << s.weak_form_residual
        << s.complementarity << s.iterations;
    csv.end();
    out.metric({{"event", "step"},
                {"step", i},
                {"t", tr.t[i]},
                {"norm_sq", ns},
                {"energy", en},
                {"certificate", s.certificate},
                {"min_cell_gap", s.min_cell_gap},
                {"residual", s.residual},
                {"weak_form_residual", s.weak_form_residual},
                {"complementarity", s.complementarity},
                {"iterations", s.iterations}});
  }
}

FlowOptions progress(bool verbose, std::ostream& log, int n, bool obstacle) {
  FlowOptions opt;
  opt.obstacle = obstacle;
  if (verbose)
    opt.on_step = [&log, n](int i, double t, const Field& y) {
      log << "step " << i << "/" << n << "  t = " << t << "  |y|_inf = " << y.lpNorm<Eigen::Infinity>() << '\n';
    };
  return opt;
}

json run_mode(const RunConfig& cfg, bool verbose, std::ostream& log, Outputs& out, std::vector<Check>& checks) {
  const ProblemData problem = build_problem(cfg);
  const int n = cfg.steps();
  json diag;

  if (cfg.mode == "flow" || cfg.mode == "obstacle" || cfg.mode == "tv") {
    const Trajectory tr = run_flow(problem, n, cfg.step, progress(verbose, log, n, cfg.mode == "obstacle"));
    write_fields(tr, cfg.save_every, out.path("fields"));
    write_steps(tr, out);
    checks = trajectory_checks(tr, cfg.step);
    diag = stability_json(tr.diagnostics);
    diag["steps"] = n;
    diag["h"] = tr.h;
    diag["t"] = tr.t;
    diag["energy"] = tr.diagnostics.energy;
  } else if (cfg.mode == "convergence") {
    std::vector<double> hs;
    for (int k = 0; k <= cfg.convergence.refinements; ++k) hs.push_back(cfg.T / (n * std::pow(2.0, k)));
    if (verbose) log << "convergence study over " << hs.size() << " step sizes\n";
    const ConvergenceTable table = convergence_study(problem, hs, cfg.step);
    Csv csv(out.path("convergence.csv"), {"h", "difference", "order"});
    for (std::size_t k = 0; k < table.difference.size(); ++k) {
      csv << table.h[k] << table.difference[k];
      if (k > 0) csv << table.order[k - 1];
      else csv << std::nullopt;
      csv.end();
      out.metric({{"event", "refinement"},
                  {"h", table.h[k]},
                  {"difference", table.difference[k]},
                  {"order", k > 0 ? json(table.order[k - 1]) : json(nullptr)}});
    }
    checks.push_back({"differences_decreasing", table.difference.back(), table.difference.front(), table.decreasing});
    std::optional<double> min_order = cfg.convergence.min_order;
    if (!min_order && cfg.model.id == "quadratic") min_order = 0.8;
    if (min_order && !table.order.empty()) {
      double worst = HUGE_VAL;
      for (double o : table.order) worst = std::min(worst, o);
      checks.push_back({"observed_order", worst, *min_order, worst >= *min_order});
    }
    diag = {{"r", table.r}, {"h", table.h}, {"difference", table.difference}, {"order", table.order}};
  } else if (cfg.mode == "contraction") {
    ProblemData perturbed = problem;
    if (cfg.contraction.perturbation == "random") {
      std::mt19937_64 rng(cfg.seed);
      std::uniform_real_distribution<double> u(-cfg.contraction.amplitude, cfg.contraction.amplitude);
      for (Eigen::Index i = 0; i < perturbed.y0.size(); ++i) perturbed.y0[i] += u(rng);
    } else {
      const Expression e = Expression::parse(cfg.contraction.perturbation);
      perturbed.y0 += problem.grid.sample_nodes([&](const Vec& x) { return e(0.0, x); });
    }
    const ContractionReport rep = contraction_check(problem, perturbed, n, cfg.step, cfg.contraction.tol);
    Csv csv(out.path("contraction.csv"), {"t", "distance_sq", "data_sq"});
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
      csv << rep.t[k] << rep.distance_sq[k] << rep.data_sq[k];
      csv.end();
      out.metric({{"event", "contraction"}, {"t", rep.t[k]}, {"distance_sq", rep.distance_sq[k]}, {"data_sq", rep.data_sq[k]}});
    }
    checks.push_back({"contraction", rep.empirical_c, 1.0 + cfg.contraction.tol, rep.pass});
    diag = {{"empirical_c", rep.empirical_c}};
  } else if (cfg.mode == "asymptotics") {
    const AsymptoticsReport rep = asymptotics_check(problem, n, cfg.step, cfg.asymptotics.t_long, cfg.asymptotics.tol);
    Csv csv(out.path("asymptotics.csv"), {"t", "distance"});
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
      csv << rep.t[k] << rep.distance[k];
      csv.end();
      out.metric({{"event", "asymptotics"}, {"t", rep.t[k]}, {"distance", rep.distance[k]}});
    }
    write_field(problem.grid, rep.y_inf, out.path("limit.csv"));
    checks.push_back({"final_distance", rep.final_distance, cfg.asymptotics.tol, rep.final_distance <= cfg.asymptotics.tol});
    checks.push_back({"eventually_decreasing", rep.eventually_decreasing ? 1.0 : 0.0, 1.0, rep.eventually_decreasing});
    diag = {{"final_distance", rep.final_distance}, {"reached_at", rep.reached_at}, {"t_long", rep.t.back()}};
  }
  return diag;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConverged:
    case ErrorCode::Unbounded:
      return kExitNonConverged;
    default:
      return kExitConfig;
  }
}

RunResult run(const RunConfig& cfg, bool verbose, std::ostream& log) {
  RunResult res;
  Outputs out(cfg.out_dir);
  json manifest;
  manifest["config"] = to_json(cfg);
  manifest["versions"] = {{"wentzell", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["mode"] = cfg.mode;
  std::vector<Check> checks;
  try {
    manifest["diagnostics"] = run_mode(cfg, verbose, log, out, checks);
    bool pass = true;
    for (const auto& c : checks) {
      pass = pass && c.pass;
      if (verbose) log << (c.pass ? "PASS " : "FAIL ") << c.name << "  value " << c.value << "  limit " << c.limit << '\n';
    }
    if (!pass) {
      res.exit_code = kExitCheckFailed;
      res.status = "check_failed";
      for (const auto& c : checks)
        if (!c.pass) res.reason += (res.reason.empty() ? "" : ", ") + c.name;
    }
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.code());
    res.status = res.exit_code == kExitNonConverged ? "nonconverged" : "config_error";
    res.reason = e.what();
    manifest["error_code"] = to_string(e.code());
  }
  manifest["checks"] = check_json(checks);
  manifest["pass"] = res.exit_code == kExitOk;
  manifest["status"] = res.status;
  manifest["exit_code"] = res.exit_code;
  if (!res.reason.empty()) manifest["reason"] = res.reason;
  out.metric({{"event", "summary"}, {"status", res.status}, {"pass", res.exit_code == kExitOk}});
  std::ofstream(out.path("manifest.json")) << manifest.dump(2) << '\n';
  res.manifest = std::move(manifest);
  return res;
}

}  // namespace wentzell::cli
