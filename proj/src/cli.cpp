#include "lcs/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "lcs/bubbles.hpp"
#include "lcs/error.hpp"
#include "lcs/expression.hpp"
#include "lcs/field_io.hpp"
#include "lcs/random.hpp"
#include "lcs/solver.hpp"

namespace lcs::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  return j;
}

double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return parse_number(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + " must be a number or a constant expression");
}

std::array<double, 2> pair(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a list of two numbers");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<int>();
}

void positive(double v, const std::string& where) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + " must be positive");
}

SurfaceSpec parse_surface(const json& j) {
  require_object(j, "surface");
  check_keys(j, "surface", {"kind", "resolution"});
  SurfaceSpec s;
  if (j.contains("kind")) s.kind = text(j["kind"], "surface.kind");
  const SurfaceKind kind = surface_kind_from_string(s.kind);
  if (j.contains("resolution")) {
    const json& r = j["resolution"];
    if (r.is_array()) {
      if (r.size() != 2) throw ConfigError("surface.resolution must be n or [n1, n2]");
      s.n1 = integer(r[0], "surface.resolution[0]");
      s.n2 = integer(r[1], "surface.resolution[1]");
    } else {
      const int n = integer(r, "surface.resolution");
      s.n1 = n;
      s.n2 = kind == SurfaceKind::Sphere ? 2 * n : n;
    }
  }
  return s;
}

ProblemSpec parse_problem(const json& j) {
  require_object(j, "problem");
  check_keys(j, "problem", {"rho", "h1", "h2", "vortices"});
  ProblemSpec p;
  if (!j.contains("rho")) throw ConfigError("problem.rho is required");
  p.rho = pair(j["rho"], "problem.rho");
  positive(p.rho[0], "problem.rho[0]");
  positive(p.rho[1], "problem.rho[1]");
  if (j.contains("h1")) p.h1 = text(j["h1"], "problem.h1");
  if (j.contains("h2")) p.h2 = text(j["h2"], "problem.h2");
  Expression::parse(p.h1);
  Expression::parse(p.h2);
  if (j.contains("vortices")) {
    if (!j["vortices"].is_array()) throw ConfigError("problem.vortices must be a list");
    for (const auto& v : j["vortices"]) {
      require_object(v, "vortex");
      check_keys(v, "vortex", {"p", "alpha"});
      if (!v.contains("p") || !v.contains("alpha")) throw ConfigError("a vortex needs 'p' and 'alpha'");
      p.vortices.push_back({pair(v["p"], "vortex.p"), number(v["alpha"], "vortex.alpha")});
    }
  }
  return p;
}

SolverSpec parse_solver(const json& j) {
  require_object(j, "solver");
  check_keys(j, "solver",
             {"method", "init_amplitude", "inner_tolerance", "gradient_tolerance", "newton_tolerance",
              "accept_residual", "rho_path"});
  SolverSpec s;
  if (j.contains("method")) s.method = text(j["method"], "solver.method");
  static const std::set<std::string> methods{"auto", "minimize", "newton", "continuation", "k1"};
  if (!methods.count(s.method))
    throw ConfigError("solver.method '" + s.method + "' is not one of auto, minimize, newton, continuation, k1");
  const auto get = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = number(j[key], std::string("solver.") + key);
  };
  get("init_amplitude", s.init_amplitude);
  get("inner_tolerance", s.inner_tolerance);
  get("gradient_tolerance", s.gradient_tolerance);
  get("newton_tolerance", s.newton_tolerance);
  get("accept_residual", s.accept_residual);
  if (s.init_amplitude < 0.0) throw ConfigError("solver.init_amplitude must be non-negative");
  positive(s.inner_tolerance, "solver.inner_tolerance");
  positive(s.gradient_tolerance, "solver.gradient_tolerance");
  positive(s.newton_tolerance, "solver.newton_tolerance");
  positive(s.accept_residual, "solver.accept_residual");
  if (j.contains("rho_path")) {
    if (!j["rho_path"].is_array()) throw ConfigError("solver.rho_path must be a list of [rho1, rho2]");
    for (const auto& p : j["rho_path"]) s.rho_path.push_back(pair(p, "solver.rho_path entry"));
  }
  return s;
}

BubbleSpec parse_bubbles(const json& j) {
  require_object(j, "bubbles");
  check_keys(j, "bubbles", {"atoms", "lambdas"});
  BubbleSpec b;
  if (j.contains("atoms")) {
    if (!j["atoms"].is_array()) throw ConfigError("bubbles.atoms must be a list");
    for (const auto& a : j["atoms"]) {
      require_object(a, "atom");
      check_keys(a, "atom", {"t", "x"});
      AtomSpec s;
      if (a.contains("t")) s.t = number(a["t"], "atom.t");
      if (!a.contains("x")) throw ConfigError("an atom needs 'x'");
      s.x = pair(a["x"], "atom.x");
      b.atoms.push_back(s);
    }
  }
  if (j.contains("lambdas")) {
    if (!j["lambdas"].is_array()) throw ConfigError("bubbles.lambdas must be a list");
    for (const auto& l : j["lambdas"]) {
      const double v = number(l, "bubbles.lambdas entry");
      if (!(v >= 1.0)) throw ConfigError("bubble scales must be >= 1");
      b.lambdas.push_back(v);
    }
  }
  return b;
}

json pair_json(const std::array<double, 2>& p) { return json::array({p[0], p[1]}); }

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << content;
}

// ---------------------------------------------------------------------------
// Output locations

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("lcs_output");
}

fs::path output_dir(const std::string& flag, const RunConfig* config, const std::string& command) {
  if (!flag.empty()) return flag;
  if (config && !config->output_dir.empty()) return config->output_dir;
  return output_root() / command;
}

fs::path output_file(const std::string& flag, const RunConfig* config, const std::string& command) {
  if (!flag.empty()) return flag;
  const fs::path dir = config && !config->output_dir.empty() ? fs::path(config->output_dir) : output_root();
  return dir / (command + ".csv");
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Solving

struct Solved {
  SolveReport report;
  std::vector<SolveReport> branch;
  std::optional<std::pair<std::uint64_t, double>> perturbation;
};

Field random_init(const GridPtr& g, Rng& rng, double amplitude) {
  if (amplitude == 0.0) return Field(g);
  return random_field(g, rng, amplitude, eigenvalue_cutoff(*g, 4));
}

Solved solve_problem(const RunConfig& c, const ProblemData& pd) {
  const GridPtr& g = pd.grid_ptr();
  const auto m = lambda_membership(pd.rho(), pd.alphas());
  if (m.status == LambdaMembership::Status::InLambda)
    throw ConfigError("masses (" + fmt(pd.rho().rho1) + ", " + fmt(pd.rho().rho2) + ") are " + describe(m));

  InnerOptions inner;
  inner.tolerance = c.solver.inner_tolerance;
  OuterOptions outer;
  outer.gradient_tolerance = c.solver.gradient_tolerance;
  outer.accept_residual = c.solver.accept_residual;
  outer.inner = inner;
  NewtonOptions newton;
  newton.tolerance = c.solver.newton_tolerance;
  ContinuationOptions cont;
  cont.newton = newton;
  cont.inner = inner;

  std::string method = c.solver.method;
  if (method == "auto") {
    if (m.status == LambdaMembership::Status::Region && m.k == 0)
      method = "minimize";
    else if (m.status == LambdaMembership::Status::Region && m.k == 1 && g->kind() == SurfaceKind::Torus)
      method = "k1";
    else
      throw ConfigError("no automatic method for masses " + describe(m) +
                        "; choose solver.method newton or continuation");
  }

  Rng rng(c.rng_seed);
  Solved out;
  if (method == "minimize") {
    SolveReport d = minimize_outer(pd, random_init(g, rng, c.solver.init_amplitude), outer);
    out.report = d;
    try {
      SolveReport p = newton_el(pd, d.u1, d.u2, newton);
      if (p.residual() <= d.residual()) {
        p.method = SolveMethod::Minimize;
        p.trace.insert(p.trace.begin(), d.trace.begin(), d.trace.end());
        p.notes.insert(p.notes.begin(), d.notes.begin(), d.notes.end());
        p.notes.push_back("descent result polished by Newton");
        out.report = std::move(p);
      }
    } catch (const ConvergenceError& e) {
      out.report.notes.push_back(std::string("Newton polish skipped: ") + e.what());
    }
    out.report.tolerance = c.solver.accept_residual;
  } else if (method == "newton") {
    const Field u1 = random_init(g, rng, c.solver.init_amplitude);
    const Field u2 = random_init(g, rng, c.solver.init_amplitude);
    out.report = newton_el(pd, u1, u2, newton);
  } else if (method == "continuation") {
    const auto& path = c.solver.rho_path;
    if (path.empty()) throw ConfigError("solver.rho_path is required for continuation");
    if (std::abs(path.back()[0] - pd.rho().rho1) > 1e-9 || std::abs(path.back()[1] - pd.rho().rho2) > 1e-9)
      throw ConfigError("solver.rho_path must end at problem.rho");
    const ProblemData start = pd.with_rho({path[0][0], path[0][1]});
    std::vector<RhoPair> rp;
    for (const auto& p : path) rp.push_back({p[0], p[1]});
    validate_path(rp, pd.alphas(), cont);
    const auto ms = lambda_membership(start.rho(), start.alphas());
    Field u1, u2;
    if (ms.status == LambdaMembership::Status::Region && ms.k == 0) {
      const auto d = minimize_outer(start, random_init(g, rng, c.solver.init_amplitude), outer);
      u1 = d.u1;
      u2 = d.u2;
    } else {
      u1 = random_init(g, rng, c.solver.init_amplitude);
      u2 = random_init(g, rng, c.solver.init_amplitude);
    }
    out.branch = continuation(start, rp, u1, u2, cont);
    out.report = out.branch.back();
    out.report.tolerance = c.solver.accept_residual;
    out.report.success = out.report.residual() <= out.report.tolerance;
  } else {
    K1Options k1;
    k1.continuation = cont;
    k1.outer = outer;
    k1.accept_residual = c.solver.accept_residual;
    out.report = find_k1_solution(pd, k1);
    if (out.report.perturbed_problem) out.perturbation = {k1.perturbation_seed, k1.perturbation_amplitude};
  }
  return out;
}

json report_json(const Solved& s, const LambdaMembership& m) {
  const SolveReport& r = s.report;
  json j;
  j["method"] = to_string(r.method);
  j["rho"] = json::array({r.rho.rho1, r.rho.rho2});
  j["membership"] = describe(m);
  j["success"] = r.success;
  j["tolerance"] = r.tolerance;
  j["residual_1"] = r.residual_1;
  j["residual_2"] = r.residual_2;
  j["J_tilde"] = std::isfinite(r.J_tilde_value) ? json(r.J_tilde_value) : json(nullptr);
  j["J"] = r.J_value;
  j["notes"] = r.notes;
  if (s.perturbation)
    j["weights_perturbation"] = {{"seed", s.perturbation->first}, {"amplitude", s.perturbation->second}};
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"rho", json::array({t.rho.rho1, t.rho.rho2})},
                     {"value", t.value},
                     {"measure", t.measure},
                     {"step", t.step},
                     {"note", t.note}});
  j["trace"] = std::move(trace);
  return j;
}

void dump_fields(const fs::path& dir, const SolveReport& r) {
  const std::pair<const char*, const Field*> fields[] = {{"F", &r.F}, {"G", &r.G}, {"u1", &r.u1}, {"u2", &r.u2}};
  for (const auto& [name, f] : fields) {
    write_field_binary(dir / (std::string(name) + ".bin"), *f);
    write_field_csv(dir / (std::string(name) + ".csv"), *f);
  }
}

// ---------------------------------------------------------------------------
// Commands

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string fields;
  std::string rho_grid;
  std::optional<int> k;
  std::string lambda_list;
  std::string family;
  std::string window = "0:40*pi:161,0:40*pi:161";
  std::string alphas;
};

RunConfig config_from_flags(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(f.config);
  if (f.seed) c.rng_seed = *f.seed;
  return c;
}

struct Range {
  double lo, hi;
  int n;
};

Range parse_range(const std::string& s, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError(what + " range '" + s + "' must be lo:hi:n");
  Range r{parse_number(parts[0]), parse_number(parts[1]), 0};
  try {
    r.n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError(what + " range '" + s + "' has a bad count");
  }
  if (r.n < 1 || !(r.hi >= r.lo)) throw ConfigError(what + " range '" + s + "' is empty");
  return r;
}

std::pair<Range, Range> parse_window(const std::string& s, const std::string& what) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError(what + " must be r1lo:r1hi:n,r2lo:r2hi:n");
  return {parse_range(s.substr(0, comma), what), parse_range(s.substr(comma + 1), what)};
}

std::vector<double> samples(const Range& r) {
  std::vector<double> v;
  for (int i = 0; i < r.n; ++i) v.push_back(r.n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (r.n - 1));
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ',');)
    if (!p.empty()) v.push_back(parse_number(p));
  return v;
}

int cmd_solve(const Flags& f, std::ostream& out) {
  const RunConfig c = config_from_flags(f);
  const fs::path dir = output_dir(f.out, &c, "solve");
  const GridPtr g = build_grid(c);
  const ProblemData pd = build_problem(c, g);
  for (const auto& w : pd.warnings()) out << "warning: " << w << "\n";
  const Solved s = solve_problem(c, pd);
  fs::create_directories(dir);
  write_text(dir / "config.json", emit_config(c));
  write_text(dir / "report.json", report_json(s, lambda_membership(pd.rho(), pd.alphas())).dump(2) + "\n");
  dump_fields(dir, s.report);
  if (!s.branch.empty()) {
    std::ostringstream csv;
    csv << "rho1,rho2,J_tilde,residual\n";
    for (const auto& b : s.branch)
      csv << fmt(b.rho.rho1) << "," << fmt(b.rho.rho2) << "," << fmt(b.J_tilde_value) << "," << fmt(b.residual())
          << "\n";
    write_text(dir / "branch.csv", csv.str());
  }
  const SolveReport& r = s.report;
  out << "solve: method " << to_string(r.method) << ", residual " << r.residual() << " (tolerance " << r.tolerance
      << "), J~ " << r.J_tilde_value << ", " << (r.success ? "success" : "FAILED") << "\n";
  for (const auto& n : r.notes) out << "  note: " << n << "\n";
  out << "  written to " << dir.string() << "\n";
  return r.success ? 0 : 1;
}

int cmd_verify(const Flags& f, std::ostream& out) {
  if (f.fields.empty()) throw ConfigError("--fields <dir> is required");
  const fs::path dir = f.fields;
  RunConfig c = load_config(dir / "config.json");
  json report;
  try {
    report = json::parse(read_text(dir / "report.json"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report.json is not valid JSON: ") + e.what());
  }
  const GridPtr g = build_grid(c);
  ProblemData pd = build_problem(c, g);
  if (report.contains("weights_perturbation")) {
    const auto& p = report["weights_perturbation"];
    pd = perturb_weights(pd, p.at("seed").get<std::uint64_t>(), p.at("amplitude").get<double>());
  }
  const Field u1 = read_field(dir / "u1.bin", g);
  const Field u2 = read_field(dir / "u2.bin", g);
  const Residuals r = residual(pd, u1, u2);
  const double rec1 = report.at("residual_1").get<double>(), rec2 = report.at("residual_2").get<double>();
  const double tol = report.at("tolerance").get<double>();
  const bool same = std::abs(r.r1 - rec1) <= 1e-12 && std::abs(r.r2 - rec2) <= 1e-12;
  const bool within = r.max() <= tol;
  out << "verify: residual_1 " << fmt(r.r1) << " (recorded " << fmt(rec1) << "), residual_2 " << fmt(r.r2)
      << " (recorded " << fmt(rec2) << "), tolerance " << tol << ": "
      << (same && within ? "PASS" : "FAIL") << "\n";
  if (!same) out << "  recomputed residuals differ from the report\n";
  if (!within) out << "  residual above tolerance\n";
  return same && within ? 0 : 1;
}

int cmd_sweep(const Flags& f, std::ostream& out) {
  const RunConfig c = config_from_flags(f);
  if (f.rho_grid.empty()) throw ConfigError("--rho-grid r1min:r1max:n,r2min:r2max:n is required");
  const auto [r1, r2] = parse_window(f.rho_grid, "--rho-grid");
  const fs::path dir = output_dir(f.out, &c, "sweep");
  const GridPtr g = build_grid(c);
  const ProblemData base = build_problem(c, g);
  std::ostringstream csv;
  csv << "rho1,rho2,membership,k,status,method,residual,J_tilde\n";
  int failed = 0, total = 0;
  for (double a : samples(r1))
    for (double b : samples(r2)) {
      if (!(a > 0.0 && b > 0.0)) continue;
      ++total;
      RunConfig ci = c;
      ci.problem.rho = {a, b};
      const ProblemData pd = base.with_rho({a, b});
      const auto m = lambda_membership(pd.rho(), pd.alphas());
      std::string status, method;
      double res = std::nan(""), jt = std::nan("");
      if (m.status == LambdaMembership::Status::InLambda) {
        status = "critical_set";
      } else {
        try {
          const Solved s = solve_problem(ci, pd);
          status = s.report.success ? "ok" : "failed";
          method = to_string(s.report.method);
          res = s.report.residual();
          jt = s.report.J_tilde_value;
        } catch (const ConfigError&) {
          status = "unsupported";
        } catch (const Error&) {
          status = "failed";
        }
      }
      if (status == "failed") ++failed;
      csv << fmt(a) << "," << fmt(b) << ",\"" << describe(m) << "\"," << m.k << "," << status << "," << method << ","
          << fmt(res) << "," << fmt(jt) << "\n";
    }
  fs::create_directories(dir);
  write_text(dir / "config.json", emit_config(c));
  write_text(dir / "sweep.csv", csv.str());
  out << "sweep: " << total << " points, " << failed << " failed; written to " << (dir / "sweep.csv").string()
      << "\n";
  return failed == 0 ? 0 : 1;
}

std::vector<Atom> default_atoms(SurfaceKind kind, int k) {
  std::vector<Atom> atoms;
  for (int i = 0; i < k; ++i) {
    const double t = 1.0 / k;
    if (kind == SurfaceKind::Torus)
      atoms.push_back({t, {(i + 0.5) / k, (i + 0.5) / k}});
    else
      atoms.push_back({t, {0.5 * kPi, 2.0 * kPi * i / k}});
  }
  return atoms;
}

Barycenter sigma_for(const RunConfig& c, const SurfaceGrid& g, std::optional<int> k) {
  std::vector<Atom> atoms;
  for (const auto& a : c.bubbles.atoms) atoms.push_back({a.t, {a.x[0], a.x[1]}});
  if (k && int(atoms.size()) != *k) atoms = default_atoms(g.kind(), *k);
  if (atoms.empty()) atoms = default_atoms(g.kind(), 1);
  const int order = int(atoms.size());
  return make_barycenter(g, atoms, order);
}

int cmd_asymptotics(const Flags& f, std::ostream& out) {
  const RunConfig c = config_from_flags(f);
  if (f.k && *f.k < 1) throw ConfigError("--k must be at least 1");
  const GridPtr g = build_grid(c);
  const ProblemData pd = build_problem(c, g);
  const Barycenter sigma = sigma_for(c, *g, f.k);
  const std::vector<double> lambdas = f.lambda_list.empty() ? c.bubbles.lambdas : parse_list(f.lambda_list);
  if (lambdas.size() < 2) throw ConfigError("asymptotics needs at least two bubble scales");
  AsymptoticsReport rep = energy_asymptotics(pd, sigma, lambdas);
  InnerOptions inner;
  inner.tolerance = c.solver.inner_tolerance;
  Field warm;
  for (auto& row : rep.rows) {
    const auto r = phi_map(pd, sigma, row.lambda, warm.empty() ? nullptr : &warm, inner);
    row.J_tilde = r.J_tilde;
    warm = r.inner.G_tilde;
  }
  const fs::path file = output_file(f.out, &c, "asymptotics");
  ensure_parent(file);
  std::ostringstream csv;
  csv << "lambda,half_dirichlet,log_integral,J_tilde\n";
  for (const auto& r : rep.rows)
    csv << fmt(r.lambda) << "," << fmt(r.half_dirichlet) << "," << fmt(r.log_integral) << "," << fmt(r.J_tilde)
        << "\n";
  write_text(file, csv.str());

  const int k = int(sigma.atoms.size());
  const double want_d = 16.0 * k * kPi, tol_d = k == 1 ? 0.05 : 0.07;
  const double dev_d = std::abs(rep.s_dirichlet / want_d - 1.0), dev_l = std::abs(rep.s_logint / 2.0 - 1.0);
  const bool ok = dev_d <= tol_d && dev_l <= 0.05;
  out << "asymptotics: k " << k << ", slope of D/2 " << rep.s_dirichlet << " vs 16k pi = " << want_d << " ("
      << 100.0 * dev_d << "%, allowed " << 100.0 * tol_d << "%), slope of log integral " << rep.s_logint
      << " vs 2 (" << 100.0 * dev_l << "%, allowed 5%): " << (ok ? "PASS" : "FAIL") << "\n";
  out << "  written to " << file.string() << "\n";
  return ok ? 0 : 1;
}

int cmd_mtcheck(const Flags& f, std::ostream& out) {
  const RunConfig c = config_from_flags(f);
  const GridPtr g = build_grid(c);
  const ProblemData pd = build_problem(c, g);
  if (f.family.empty()) throw ConfigError("--family bubbles:<l> or random:<count>:<amplitude> is required");
  std::vector<std::string> parts;
  std::stringstream ss(f.family);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);

  std::vector<FamilyMember> family;
  int l = 0;
  if (parts.size() == 2 && parts[0] == "bubbles") {
    l = std::atoi(parts[1].c_str());
    if (l < 1) throw ConfigError("bubble family needs l >= 1");
    if (c.bubbles.lambdas.size() < 2) throw ConfigError("bubbles.lambdas needs at least two scales");
    family = bubble_family(g, sigma_for(c, *g, l), c.bubbles.lambdas);
  } else if (parts.size() == 3 && parts[0] == "random") {
    const int count = std::atoi(parts[1].c_str());
    const double amp = parse_number(parts[2]);
    if (count < 1 || !(amp > 0.0)) throw ConfigError("random family needs a positive count and amplitude");
    Rng rng(c.rng_seed);
    for (int i = 0; i < count; ++i)
      family.push_back({double(i), random_field(g, rng, amp, eigenvalue_cutoff(*g, 5))});
  } else {
    throw ConfigError("unknown family '" + f.family + "'");
  }
  const MTReport rep = mt_check(pd.log_hat_h(), family);
  const fs::path file = output_file(f.out, &c, "mtcheck");
  ensure_parent(file);
  std::ostringstream csv;
  csv << "parameter,dirichlet,log_integral,deficit,ratio\n";
  for (const auto& r : rep.rows)
    csv << fmt(r.parameter) << "," << fmt(r.dirichlet) << "," << fmt(r.log_integral) << "," << fmt(r.deficit) << ","
        << fmt(r.ratio) << "\n";
  write_text(file, csv.str());
  bool ok = true;
  out << "mtcheck: " << rep.rows.size() << " fields, max deficit " << rep.max_deficit;
  if (l > 0) {
    const double want = 1.0 / (8.0 * l * kPi), dev = std::abs(rep.asymptotic_ratio / want - 1.0);
    ok = dev <= 0.05;
    out << ", asymptotic ratio " << rep.asymptotic_ratio << " vs 1/(8 l pi) = " << want << " (" << 100.0 * dev
        << "%, allowed 5%): " << (ok ? "PASS" : "FAIL");
  }
  out << "\n  written to " << file.string() << "\n";
  return ok ? 0 : 1;
}

int cmd_lambda_map(const Flags& f, std::ostream& out) {
  std::optional<RunConfig> c;
  if (!f.config.empty()) c = config_from_flags(f);
  std::vector<double> alphas;
  if (!f.alphas.empty())
    alphas = parse_list(f.alphas);
  else if (c)
    for (const auto& v : c->problem.vortices) alphas.push_back(v.alpha);
  const auto [r1, r2] = parse_window(f.window, "--window");
  for (const Range& r : {r1, r2})
    if (r.lo < 0.0 || r.hi > 40.0 * kPi * (1.0 + 1e-12)) throw ConfigError("--window must lie within (0, 40 pi]");
  const fs::path file = output_file(f.out, c ? &*c : nullptr, "lambda_map");
  ensure_parent(file);
  std::ostringstream csv;
  csv << "rho1,rho2,status,k,n,margin\n";
  std::size_t rows = 0;
  for (double a : samples(r1))
    for (double b : samples(r2)) {
      if (!(a > 0.0 && b > 0.0)) continue;
      const auto m = lambda_membership({a, b}, alphas);
      const char* status = m.status == LambdaMembership::Status::InLambda ? "lambda"
                           : m.status == LambdaMembership::Status::Region ? "region"
                                                                          : "unknown";
      csv << fmt(a) << "," << fmt(b) << "," << status << "," << m.k << "," << fmt(m.n) << "," << fmt(m.margin) << "\n";
      ++rows;
    }
  write_text(file, csv.str());
  out << "lambda-map: " << rows << " samples written to " << file.string() << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_object(j, "config");
  check_keys(j, "config", {"surface", "problem", "solver", "bubbles", "output_dir", "rng_seed"});
  RunConfig c;
  if (j.contains("surface")) c.surface = parse_surface(j["surface"]);
  if (!j.contains("problem")) throw ConfigError("config needs a 'problem' section");
  c.problem = parse_problem(j["problem"]);
  if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
  if (j.contains("bubbles")) c.bubbles = parse_bubbles(j["bubbles"]);
  if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], "output_dir");
  if (j.contains("rng_seed")) {
    if (!j["rng_seed"].is_number_unsigned()) throw ConfigError("rng_seed must be a non-negative integer");
    c.rng_seed = j["rng_seed"].get<std::uint64_t>();
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string emit_config(const RunConfig& c) {
  json j;
  j["surface"] = {{"kind", c.surface.kind}, {"resolution", json::array({c.surface.n1, c.surface.n2})}};
  json vortices = json::array();
  for (const auto& v : c.problem.vortices) vortices.push_back({{"p", pair_json(v.p)}, {"alpha", v.alpha}});
  j["problem"] = {{"rho", pair_json(c.problem.rho)}, {"h1", c.problem.h1}, {"h2", c.problem.h2}, {"vortices", vortices}};
  json path = json::array();
  for (const auto& p : c.solver.rho_path) path.push_back(pair_json(p));
  j["solver"] = {{"method", c.solver.method},
                 {"init_amplitude", c.solver.init_amplitude},
                 {"inner_tolerance", c.solver.inner_tolerance},
                 {"gradient_tolerance", c.solver.gradient_tolerance},
                 {"newton_tolerance", c.solver.newton_tolerance},
                 {"accept_residual", c.solver.accept_residual},
                 {"rho_path", path}};
  json atoms = json::array();
  for (const auto& a : c.bubbles.atoms) atoms.push_back({{"t", a.t}, {"x", pair_json(a.x)}});
  j["bubbles"] = {{"atoms", atoms}, {"lambdas", c.bubbles.lambdas}};
  j["output_dir"] = c.output_dir;
  j["rng_seed"] = c.rng_seed;
  return j.dump(2) + "\n";
}

GridPtr build_grid(const RunConfig& c) {
  return SurfaceGrid::build(surface_kind_from_string(c.surface.kind), c.surface.n1, c.surface.n2);
}

ProblemData build_problem(const RunConfig& c, const GridPtr& grid) {
  std::vector<Vortex> vortices;
  for (const auto& v : c.problem.vortices) vortices.push_back({{v.p[0], v.p[1]}, v.alpha});
  return desingularize(grid, {c.problem.rho[0], c.problem.rho[1]},
                       field_from_expression(grid, Expression::parse(c.problem.h1)),
                       field_from_expression(grid, Expression::parse(c.problem.h2)), std::move(vortices));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational solver and verification harness for the skew-symmetric singular Liouville system"};
  app.require_subcommand(1);
  Flags f;

  const auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", f.config, "JSON run configuration");
    if (config_required) opt->required();
    sub->add_option("--out", f.out, "output directory or CSV file");
    sub->add_option("--seed", f.seed, "override rng_seed");
  };
  auto* solve = app.add_subcommand("solve", "solve the system and dump the fields");
  common(solve, true);
  auto* sweep = app.add_subcommand("sweep", "solve over a grid of masses");
  common(sweep, true);
  sweep->add_option("--rho-grid", f.rho_grid, "r1min:r1max:n,r2min:r2max:n")->required();
  auto* asym = app.add_subcommand("asymptotics", "energy growth of bubble test fields");
  common(asym, true);
  asym->add_option("--k", f.k, "number of bubbles");
  asym->add_option("--lambda-list", f.lambda_list, "comma-separated bubble scales");
  auto* mt = app.add_subcommand("mtcheck", "Moser-Trudinger constants over a family of fields");
  common(mt, true);
  mt->add_option("--family", f.family, "bubbles:<l> or random:<count>:<amplitude>")->required();
  auto* verify = app.add_subcommand("verify", "recompute residuals of dumped fields");
  verify->add_option("--fields", f.fields, "directory written by solve")->required();
  auto* lmap = app.add_subcommand("lambda-map", "classify a window of masses against the critical set");
  common(lmap, false);
  lmap->add_option("--window", f.window, "r1min:r1max:n,r2min:r2max:n");
  lmap->add_option("--alphas", f.alphas, "comma-separated vortex strengths");

  std::vector<std::string> argv_store{"lcs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(f, out);
    if (*sweep) return cmd_sweep(f, out);
    if (*asym) return cmd_asymptotics(f, out);
    if (*mt) return cmd_mtcheck(f, out);
    if (*verify) return cmd_verify(f, out);
    if (*lmap) return cmd_lambda_map(f, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace lcs::cli
