#include "wentzell/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wentzell::cli {

using nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"mode", "preset", "grid", "model", "sources", "T", "n", "h", "step", "output", "convergence",
            "contraction", "asymptotics", "seed"}},
      {"/grid", {"dim", "nx", "ny", "x0", "x1", "y0", "y1"}},
      {"/model", {"id", "p", "alpha", "kappa", "delta", "thresholds", "a", "rho"}},
      {"/sources", {"y0", "f", "g"}},
      {"/step", {"tol", "lambda0", "decay", "lambda_min", "max_iterations", "optimizer", "regularization",
                 "viscosity", "certificate_tol", "primal_dual_max_iterations", "primal_dual_tol"}},
      {"/output", {"dir", "save_every"}},
      {"/convergence", {"refinements", "min_order"}},
      {"/contraction", {"perturbation", "amplitude", "tol"}},
      {"/asymptotics", {"t_long", "tol"}},
  };
  return s;
}

void check_keys(const json& j, const std::string& path, std::vector<std::string>& unknown) {
  if (!j.is_object()) {
    if (path.empty()) throw Error(ErrorCode::Parse, "config must be a JSON object");
    throw Error(ErrorCode::Parse, "expected an object at " + path);
  }
  const auto& allowed = schema().at(path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string sub = path + "/" + it.key();
    if (!allowed.count(it.key())) unknown.push_back(sub);
    else if (schema().count(sub)) check_keys(*it, sub, unknown);
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Parse, "wrong type at " + path + "/" + key + ": got " + it->dump());
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& path, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  T v{};
  read(j, key, path, v);
  out = v;
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::ostringstream os;
  os << "line " << line << ", column " << col;
  return os.str();
}

}  // namespace

int RunConfig::steps() const {
  if (n) return *n;
  if (h) return static_cast<int>(std::lround(T / *h));
  return 0;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"constant-1d", "quadratic-1d", "plaplacian-1d",
                                                 "fractured-1d", "tv-step-1d", "loggrowth-1d"};
  return names;
}

json preset_json(const std::string& name) {
  // y = exp(-t) cos(pi x) solves the quadratic problem with these sources.
  if (name == "constant-1d")
    return {{"grid", {{"dim", 1}, {"nx", 16}}},
            {"model", {{"id", "quadratic"}}},
            {"sources", {{"y0", "1"}, {"f", "0"}, {"g", "0"}}},
            {"T", 1.0},
            {"n", 10}};
  if (name == "quadratic-1d")
    return {{"grid", {{"dim", 1}, {"nx", 32}}},
            {"model", {{"id", "quadratic"}}},
            {"sources", {{"y0", "cos(pi*x)"}, {"f", "(pi^2-1)*exp(-t)*cos(pi*x)"}, {"g", "-exp(-t)*cos(pi*x)"}}},
            {"T", 1.0},
            {"n", 20}};
  if (name == "plaplacian-1d")
    return {{"grid", {{"dim", 1}, {"nx", 32}}},
            {"model", {{"id", "plaplacian"}, {"p", 4.0}, {"alpha", {1.0}}}},
            {"sources", {{"y0", "cos(pi*x)"}, {"f", "0"}, {"g", "0"}}},
            {"T", 1.0},
            {"n", 50}};
  if (name == "fractured-1d")
    return {{"grid", {{"dim", 1}, {"nx", 32}}},
            {"model", {{"id", "fractured"}, {"p", 2.0}, {"alpha", {1.0}}, {"thresholds", {0.5}}}},
            {"sources", {{"y0", "cos(pi*x) + 0.5*step(x-0.6)"}, {"f", "0"}, {"g", "0"}}},
            {"T", 1.0},
            {"n", 50}};
  if (name == "tv-step-1d")
    return {{"grid", {{"dim", 1}, {"nx", 32}}},
            {"model", {{"id", "tv"}, {"rho", 0.2}}},
            {"sources", {{"y0", "step(x-0.5)"}, {"f", "0"}, {"g", "0"}}},
            {"T", 1.0},
            {"n", 50}};
  if (name == "loggrowth-1d")
    return {{"grid", {{"dim", 1}, {"nx", 32}}},
            {"model", {{"id", "loggrowth"}, {"a", 1.0}}},
            {"sources", {{"y0", "sin(2*pi*x)"}, {"f", "0"}, {"g", "0"}}},
            {"T", 1.0},
            {"n", 50}};
  throw Error(ErrorCode::Validation, "unknown preset '" + name + "'");
}

RunConfig parse_config(const json& input) {
  std::vector<std::string> unknown;
  check_keys(input, "", unknown);
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw Error(ErrorCode::Validation, msg);
  }
  json doc = input;
  RunConfig cfg;
  read(input, "preset", "", cfg.preset);
  if (!cfg.preset.empty()) {
    json base = preset_json(cfg.preset);
    if (input.contains("h")) base.erase("n");
    base.merge_patch(input);
    doc = std::move(base);
  }
  read(doc, "mode", "", cfg.mode);
  read(doc, "T", "", cfg.T);
  read(doc, "n", "", cfg.n);
  read(doc, "h", "", cfg.h);
  read(doc, "seed", "", cfg.seed);

  const json& g = section(doc, "grid");
  read(g, "dim", "/grid", cfg.grid.dim);
  read(g, "nx", "/grid", cfg.grid.nx);
  read(g, "ny", "/grid", cfg.grid.ny);
  read(g, "x0", "/grid", cfg.grid.x0);
  read(g, "x1", "/grid", cfg.grid.x1);
  read(g, "y0", "/grid", cfg.grid.y0);
  read(g, "y1", "/grid", cfg.grid.y1);

  const json& m = section(doc, "model");
  read(m, "id", "/model", cfg.model.id);
  read(m, "p", "/model", cfg.model.p);
  read(m, "alpha", "/model", cfg.model.alpha);
  read(m, "kappa", "/model", cfg.model.kappa);
  read(m, "delta", "/model", cfg.model.delta);
  read(m, "thresholds", "/model", cfg.model.thresholds);
  read(m, "a", "/model", cfg.model.a);
  read(m, "rho", "/model", cfg.model.rho);

  const json& s = section(doc, "sources");
  read(s, "y0", "/sources", cfg.sources.y0);
  read(s, "f", "/sources", cfg.sources.f);
  read(s, "g", "/sources", cfg.sources.g);

  const json& st = section(doc, "step");
  read(st, "tol", "/step", cfg.step.tol);
  read(st, "lambda0", "/step", cfg.step.lambda0);
  read(st, "decay", "/step", cfg.step.decay);
  read(st, "lambda_min", "/step", cfg.step.lambda_min);
  read(st, "max_iterations", "/step", cfg.step.max_iterations);
  read(st, "viscosity", "/step", cfg.step.viscosity);
  read(st, "certificate_tol", "/step", cfg.step.certificate_tol);
  read(st, "primal_dual_max_iterations", "/step", cfg.step.primal_dual_max_iterations);
  read(st, "primal_dual_tol", "/step", cfg.step.primal_dual_tol);
  std::string tag;
  try {
    if (st.contains("optimizer")) {
      read(st, "optimizer", "/step", tag);
      cfg.step.optimizer = optimizer_from_string(tag);
    }
    if (st.contains("regularization")) {
      read(st, "regularization", "/step", tag);
      cfg.step.regularization = regularization_from_string(tag);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Validation, std::string("/step: ") + e.what());
  }

  const json& o = section(doc, "output");
  read(o, "dir", "/output", cfg.out_dir);
  read(o, "save_every", "/output", cfg.save_every);

  const json& cv = section(doc, "convergence");
  read(cv, "refinements", "/convergence", cfg.convergence.refinements);
  read(cv, "min_order", "/convergence", cfg.convergence.min_order);
  const json& ct = section(doc, "contraction");
  read(ct, "perturbation", "/contraction", cfg.contraction.perturbation);
  read(ct, "amplitude", "/contraction", cfg.contraction.amplitude);
  read(ct, "tol", "/contraction", cfg.contraction.tol);
  const json& as = section(doc, "asymptotics");
  read(as, "t_long", "/asymptotics", cfg.asymptotics.t_long);
  read(as, "tol", "/asymptotics", cfg.asymptotics.tol);

  validate(cfg);
  return cfg;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "malformed JSON at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0));
  }
}

RunConfig parse_config(const std::string& text) { return parse_config(parse_json(text)); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::Validation, "override must read key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::Validation, "empty component in override key '" + key + "'");
    if (!node->is_object()) throw Error(ErrorCode::Validation, "override path '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["mode"] = c.mode;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["grid"] = {{"dim", c.grid.dim}, {"nx", c.grid.nx}, {"ny", c.grid.ny}, {"x0", c.grid.x0},
               {"x1", c.grid.x1},   {"y0", c.grid.y0}, {"y1", c.grid.y1}};
  j["model"] = {{"id", c.model.id},       {"p", c.model.p},
                {"alpha", c.model.alpha}, {"kappa", c.model.kappa},
                {"delta", c.model.delta}, {"thresholds", c.model.thresholds},
                {"a", c.model.a},         {"rho", c.model.rho}};
  j["sources"] = {{"y0", c.sources.y0}, {"f", c.sources.f}, {"g", c.sources.g}};
  j["T"] = c.T;
  if (c.n) j["n"] = *c.n;
  if (c.h) j["h"] = *c.h;
  j["step"] = {{"tol", c.step.tol},
               {"lambda0", c.step.lambda0},
               {"decay", c.step.decay},
               {"lambda_min", c.step.lambda_min},
               {"max_iterations", c.step.max_iterations},
               {"optimizer", to_string(c.step.optimizer)},
               {"regularization", to_string(c.step.regularization)},
               {"viscosity", c.step.viscosity},
               {"certificate_tol", c.step.certificate_tol},
               {"primal_dual_max_iterations", c.step.primal_dual_max_iterations},
               {"primal_dual_tol", c.step.primal_dual_tol}};
  j["output"] = {{"dir", c.out_dir}, {"save_every", c.save_every}};
  j["convergence"] = {{"refinements", c.convergence.refinements},
                      {"min_order", c.convergence.min_order ? json(*c.convergence.min_order) : json(nullptr)}};
  j["contraction"] = {
      {"perturbation", c.contraction.perturbation}, {"amplitude", c.contraction.amplitude}, {"tol", c.contraction.tol}};
  j["asymptotics"] = {{"t_long", c.asymptotics.t_long ? json(*c.asymptotics.t_long) : json(nullptr)},
                      {"tol", c.asymptotics.tol}};
  j["seed"] = c.seed;
  return j;
}

void validate(const RunConfig& c) {
  std::vector<std::string> v;
  static const std::set<std::string> modes = {"flow", "convergence", "contraction", "asymptotics", "obstacle", "tv"};
  if (!modes.count(c.mode)) v.push_back("/mode: unknown mode '" + c.mode + "'");
  if (c.grid.dim != 1 && c.grid.dim != 2) v.push_back("/grid/dim: must be 1 or 2");
  if (c.grid.nx < 2) v.push_back("/grid/nx: must be at least 2");
  if (c.grid.dim == 2 && c.grid.ny < 2) v.push_back("/grid/ny: must be at least 2");
  if (!(c.grid.x1 > c.grid.x0)) v.push_back("/grid: x1 must exceed x0");
  if (c.grid.dim == 2 && !(c.grid.y1 > c.grid.y0)) v.push_back("/grid: y1 must exceed y0");
  if (!(c.T > 0.0) || !std::isfinite(c.T)) v.push_back("/T: must be positive");
  if (c.n && c.h) v.push_back("/n, /h: give exactly one of n or h");
  if (!c.n && !c.h) v.push_back("/n, /h: give exactly one of n or h");
  if (c.n && *c.n < 1) v.push_back("/n: must be at least 1");
  if (c.h) {
    const double r = c.T / *c.h;
    if (!(*c.h > 0.0) || std::abs(r - std::round(r)) > 1e-9 * r) v.push_back("/h: T / h must be a positive integer");
  }
  if (c.save_every < 1) v.push_back("/output/save_every: must be at least 1");
  if (c.out_dir.empty()) v.push_back("/output/dir: must not be empty");
  if (c.convergence.refinements < 1) v.push_back("/convergence/refinements: must be at least 1");
  if (!(c.contraction.tol >= 0.0)) v.push_back("/contraction/tol: must be nonnegative");
  if (!(c.asymptotics.tol > 0.0)) v.push_back("/asymptotics/tol: must be positive");
  if (c.asymptotics.t_long && !(*c.asymptotics.t_long > 0.0)) v.push_back("/asymptotics/t_long: must be positive");
  if (c.mode == "tv" && c.model.id != "tv") v.push_back("/mode: tv mode needs model id 'tv'");
  try {
    c.step.validate();
  } catch (const Error& e) {
    v.push_back(std::string("/step: ") + e.what());
  }
  for (const auto& [key, text] : {std::pair{"/sources/y0", c.sources.y0}, std::pair{"/sources/f", c.sources.f},
                                  std::pair{"/sources/g", c.sources.g}}) {
    try {
      Expression::parse(text);
    } catch (const Error& e) {
      v.push_back(std::string(key) + ": " + e.what());
    }
  }
  if (c.mode == "contraction" && c.contraction.perturbation != "random") {
    try {
      Expression::parse(c.contraction.perturbation);
    } catch (const Error& e) {
      v.push_back(std::string("/contraction/perturbation: ") + e.what());
    }
  }
  if (v.empty()) {
    try {
      build_model(c);
    } catch (const Error& e) {
      v.push_back(std::string("/model: ") + e.what());
    }
  }
  if (!v.empty()) {
    std::string msg = "invalid config:";
    for (const auto& s : v) msg += "\n  " + s;
    throw Error(ErrorCode::Validation, msg);
  }
}

Grid build_grid(const RunConfig& c) {
  if (c.grid.dim == 1) return Grid::interval(c.grid.nx, c.grid.x0, c.grid.x1);
  return Grid::rectangle(c.grid.nx, c.grid.ny, c.grid.x0, c.grid.x1, c.grid.y0, c.grid.y1);
}

FluxModel build_model(const RunConfig& c) {
  const ModelSpec& m = c.model;
  const int d = c.grid.dim;
  auto coeffs = [](const std::vector<double>& v) { return std::vector<Coefficient>(v.begin(), v.end()); };
  if (m.id == "quadratic") return FluxModel::quadratic(d);
  if (m.id == "plaplacian") return FluxModel::p_laplacian(d, m.p, coeffs(m.alpha), m.kappa, m.delta);
  if (m.id == "fractured") return FluxModel::fractured(d, m.p, coeffs(m.alpha), m.thresholds);
  if (m.id == "loggrowth") return FluxModel::log_growth(d, m.a);
  if (m.id == "tv") return FluxModel::total_variation(d, m.rho);
  throw Error(ErrorCode::Validation, "unknown model id '" + m.id + "'");
}

ProblemData build_problem(const RunConfig& c) {
  const Grid grid = build_grid(c);
  const Expression y0 = Expression::parse(c.sources.y0);
  const Expression f = Expression::parse(c.sources.f);
  const Expression g = Expression::parse(c.sources.g);
  ProblemData p{grid, build_model(c), grid.sample_nodes([&](const Vec& x) { return y0(0.0, x); }), {}, {}, c.T};
  if (!f.is_zero()) p.f = [f](double t, const Vec& x) { return f(t, x); };
  if (!g.is_zero()) p.g = [g](double t, const Vec& x) { return g(t, x); };
  return p;
}

}  // namespace wentzell::cli
