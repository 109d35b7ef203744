#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "nonlocal/error.hpp"
#include "nonlocal/expr.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/montecarlo.hpp"
#include "nonlocal/operator.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/regcheck.hpp"
#include "nonlocal/solver.hpp"

namespace nonlocal::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBrownian =
    "E exp(i z.B_s) = exp(-s |z|^2): Brownian covariance 2 s I per unit subordinator time";

// ---------------------------------------------------------------- schema

std::string escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string kind_of(const json& j) { return j.type_name(); }

double as_double(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw SchemaError(ptr, "expected a number, got " + kind_of(j));
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(ptr, "expected a finite number");
  return v;
}

std::int64_t as_int(const json& j, const std::string& ptr) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == std::floor(v) && std::abs(v) < 9e15) return std::int64_t(v);
  }
  throw SchemaError(ptr, "expected an integer, got " + kind_of(j));
}

std::string as_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw SchemaError(ptr, "expected a string, got " + kind_of(j));
  return j.get<std::string>();
}

std::vector<double> as_doubles(const json& j, const std::string& ptr) {
  if (!j.is_array()) throw SchemaError(ptr, "expected an array, got " + kind_of(j));
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], ptr + "/" + std::to_string(i)));
  return out;
}

Point as_point(const json& j, const std::string& ptr) {
  if (j.is_number()) return point(as_double(j, ptr));
  const auto v = as_doubles(j, ptr);
  if (v.size() == 1) return point(v[0]);
  if (v.size() == 2) return point(v[0], v[1]);
  throw SchemaError(ptr, "expected a point with 1 or 2 coordinates");
}

json point_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index d = 0; d < p.size(); ++d) a.push_back(p(d));
  return a;
}

// Reads the members of one object and rejects the ones nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw SchemaError(ptr_.empty() ? "/" : ptr_, "expected an object, got " + kind_of(j_));
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + escape(key); }
  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw SchemaError(at(key), "missing required member");
    return *v;
  }
  double number(const std::string& key, double def) {
    const json* v = find(key);
    return v ? as_double(*v, at(key)) : def;
  }
  std::int64_t integer(const std::string& key, std::int64_t def) {
    const json* v = find(key);
    return v ? as_int(*v, at(key)) : def;
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    return v ? as_string(*v, at(key)) : def;
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    const json* v = find(key);
    return v ? as_doubles(*v, at(key)) : def;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw SchemaError(at(it.key()), "unknown member");
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

void positive(double v, const std::string& ptr) {
  if (!(v > 0)) throw SchemaError(ptr, "must be positive");
}

void positive_all(const std::vector<double>& v, const std::string& ptr) {
  for (std::size_t i = 0; i < v.size(); ++i) positive(v[i], ptr + "/" + std::to_string(i));
}

// Spec admissibility failures carry the spec's pointer.
template <typename F>
BernsteinSpec checked_spec(const std::string& ptr, F&& make) {
  try {
    return make();
  } catch (const RejectedSpec& e) {
    throw SchemaError(ptr, e.what());
  } catch (const DomainError& e) {
    throw SchemaError(ptr, e.what());
  }
}

// ---------------------------------------------------------------- output

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(fmt(x));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> coord_names(int dim) {
  return dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<double> coords(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct Check {
  std::string name;
  std::string verdict;  // PASS, FAIL or INCONCLUSIVE
  bool gated = true;
  json metrics = json::object();
  std::string csv;
  std::string note;
};

json check_json(const Check& c) {
  json j = {{"name", c.name}, {"verdict", c.verdict}, {"gated", c.gated}, {"metrics", c.metrics}};
  if (!c.csv.empty()) j["csv"] = c.csv;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Everything a subcommand shares.
struct Run {
  Config cfg;
  json config;
  fs::path out;
  std::ostream* log = nullptr;
  std::vector<Check> checks;
  json constants = json::object();
  json outputs = json::object();
  json runtimes = json::object();
  json seeds = json::object();
  json extra = json::object();

  int dim() const { return cfg.domain.dim(); }
  KernelGrid kernel_grid() const { return {cfg.kernel.r_min, cfg.kernel.r_max, cfg.kernel.per_decade}; }

  template <typename F>
  auto timed(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      runtimes[name] = seconds_since(t0);
    } else {
      auto r = f();
      runtimes[name] = seconds_since(t0);
      return r;
    }
  }

  void add(Check c) {
    *log << "  " << std::left << std::setw(22) << c.name << c.verdict
         << (c.gated ? "" : " (not gated)") << '\n';
    checks.push_back(std::move(c));
  }
};

// ---------------------------------------------------------------- subcommands

RenewalTable make_renewal(const Run& run, const KernelTable& kernel) {
  RenewalOptions opt;
  opt.dim = kernel.dim();
  opt.kernel = &kernel;
  opt.mc.seed = run.cfg.seed;
  return build_renewal(run.cfg.spec, run.cfg.renewal, opt);
}

void write_kernel_constants(Run& run, const KernelTable& k) {
  const auto& c = k.constants();
  run.constants["kernel"] = {{"route", k.route()},           {"b2", c.b2},
                             {"b2_reverse", c.b2_reverse},   {"a3", c.a3},
                             {"comparability", c.comparability}, {"ej_violation", c.ej_violation},
                             {"j_at_one", k.j_at_one()}};
}

void write_renewal_constants(Run& run, const RenewalTable& V) {
  const auto& c = V.constants();
  run.constants["renewal"] = {{"mode", to_string(V.mode())}, {"C1", c.C1},
                              {"C2", c.C2},                  {"C3", c.C3},
                              {"lemma22", c.lemma22},        {"alpha1", V.alpha1()},
                              {"alpha2", V.alpha2()}};
}

Check char_exponent_check(Run& run, const KernelTable& k) {
  const auto rep = run.timed("char_exponent", [&] { return check_char_exponent(k, run.cfg.spec, run.cfg.kernel.z); });
  Check c{"char_exponent", verdict(rep.max_rel_dev() <= 1e-3)};
  c.metrics = {{"max_rel_dev", rep.max_rel_dev()}, {"threshold", 1e-3}};
  c.csv = "char_exponent.csv";
  Csv csv(run.out / c.csv, {"z", "integral", "phi", "rel_dev"});
  for (const auto& r : rep.rows) csv.row({r.z, r.integral, r.phi, r.rel_dev});
  return c;
}

Check recursion_check(Run& run) {
  Check c{"dimension_recursion", "INCONCLUSIVE"};
  try {
    const auto rep = run.timed("dimension_recursion",
                               [&] { return dimension_recursion_check(run.cfg.spec, run.dim(), run.kernel_grid()); });
    c.verdict = verdict(rep.max_rel_err <= 5e-3);
    c.metrics = {{"max_rel_err", rep.max_rel_err}, {"worst_r", rep.worst_r}, {"threshold", 5e-3}};
    c.csv = "dimension_recursion.csv";
    Csv csv(run.out / c.csv, {"r", "lhs", "rhs"});
    for (Eigen::Index i = 0; i < rep.r.size(); ++i) csv.row({rep.r(i), rep.lhs(i), rep.rhs(i)});
  } catch (const UnsupportedVariant& e) {
    c.gated = false;
    c.note = e.what();
  }
  return c;
}

Check pruitt_check(Run& run, const KernelTable& k) {
  const auto rep = run.timed("pruitt", [&] { return pruitt_functions(k); });
  const bool pass = rep.P_decreasing && rep.P1_decreasing && std::isfinite(rep.comparability) &&
                    std::isfinite(rep.p1_bound_ratio);
  Check c{"pruitt", verdict(pass)};
  c.metrics = {{"comparability", rep.comparability},
               {"p1_bound_ratio", rep.p1_bound_ratio},
               {"P_decreasing", rep.P_decreasing},
               {"P1_decreasing", rep.P1_decreasing}};
  c.csv = "pruitt.csv";
  Csv csv(run.out / c.csv, {"r", "P", "P1"});
  for (Eigen::Index i = 0; i < rep.r.size(); ++i) csv.row({rep.r(i), rep.P(i), rep.P1(i)});
  return c;
}

Check inequality_check(Run& run, const RenewalTable& V, const KernelTable& k, const std::string& csv_name) {
  const auto rep = run.timed("renewal_inequalities", [&] { return inequality_suite(V, k); });
  Check c{"renewal_inequalities", verdict(rep.pass)};
  c.csv = csv_name;
  Csv csv(run.out / c.csv, {"name", "r", "constant"});
  for (const auto& row : rep.rows) {
    c.metrics[row.name] = {{"max", row.max}, {"max_refined", row.max_refined},
                           {"rel_change", row.rel_change}, {"finite", row.finite}};
    for (Eigen::Index i = 0; i < row.r.size(); ++i)
      csv.row_strings({row.name, fmt(row.r(i)), fmt(row.constant(i))});
  }
  return c;
}

BarrierOptions barrier_options(const Config& cfg) {
  BarrierOptions o;
  o.points_per_stratum = cfg.barrier.points_per_stratum;
  o.strata_per_decade = cfg.barrier.strata_per_decade;
  o.min_depth = cfg.barrier.min_depth;
  o.ball_radii = cfg.barrier.radii;
  o.seed = cfg.seed;
  return o;
}

// Centre and radius when D is a ball (an interval in 1-d).
std::optional<std::pair<Point, double>> as_ball(const Domain& D) {
  if (const auto* b = std::get_if<Ball>(&D.shape())) return std::make_pair(b->center, b->radius);
  if (const auto* i = std::get_if<Interval>(&D.shape()))
    return std::make_pair(point(0.5 * (i->a + i->b)), 0.5 * (i->b - i->a));
  return std::nullopt;
}

Check barrier_check(Run& run, const RenewalTable& V, const KernelTable& k) {
  const BarrierOptions opt = barrier_options(run.cfg);
  BarrierReport rep = run.timed("barrier", [&] { return barrier_residual(run.cfg.domain, V, k, opt); });
  // An interval is the 1-d ball.
  if (rep.scale_products.empty() && std::holds_alternative<Interval>(run.cfg.domain.shape())) {
    const auto [x0, r] = *as_ball(run.cfg.domain);
    const auto ball = run.timed("barrier_scales", [&] { return barrier_residual(Domain(Ball{x0, r}), V, k, opt); });
    rep.radii = ball.radii;
    rep.scale_products = ball.scale_products;
    rep.scale_spread = ball.scale_spread;
  }
  const bool scaled = !rep.scale_products.empty();
  const bool pass = std::isfinite(rep.sup_abs) && (!scaled || rep.scale_spread <= run.cfg.barrier.max_spread);
  Check c{"barrier", verdict(pass)};
  c.metrics = {{"sup_abs", rep.sup_abs}, {"radii", rep.radii}, {"scale_products", rep.scale_products}};
  if (scaled) {
    c.metrics["scale_spread"] = rep.scale_spread;
    c.metrics["max_spread"] = run.cfg.barrier.max_spread;
  } else {
    c.note = "scale products need a ball or an interval";
  }
  c.csv = "barrier.csv";
  Csv csv(run.out / c.csv, concat(coord_names(run.dim()), {"d", "L"}));
  for (std::size_t i = 0; i < rep.x.size(); ++i) csv.row(concat(coords(rep.x[i]), {rep.d(i), rep.value(i)}));
  return c;
}

// ---------------------------------------------------------------- verify helpers

// Sum of 1 to 4 Gaussian bumps with nonnegative amplitudes centred in the
// bounding box of D.
struct BumpSource {
  std::mt19937_64 rng;
  Point lo, hi;
  BumpSource(std::uint64_t seed, const Domain& D)
      : rng(seed), lo(D.center() - D.half_extent()), hi(D.center() + D.half_extent()) {}
  Function next() {
    const double scale = (hi - lo).maxCoeff();
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::tuple<Point, double, double>> bumps;
    const int m = 1 + int(rng() % 4);
    for (int i = 0; i < m; ++i) {
      Point x = lo;
      for (Eigen::Index d = 0; d < x.size(); ++d) x(d) += (hi(d) - lo(d)) * u(rng);
      const double w = scale * (0.025 + 0.275 * u(rng));
      bumps.emplace_back(x, w, 3 * u(rng));
    }
    return [bumps](const Point& y) {
      double s = 0;
      for (const auto& [x, w, a] : bumps) s += a * std::exp(-(y - x).squaredNorm() / (w * w));
      return s;
    };
  }
};

SolverOptions solver_options(const Config& cfg, double margin) {
  SolverOptions o;
  o.margin = margin;
  o.method = cfg.method;
  return o;
}

void order_checks(Run& run, const KernelTable& k, bool want_max, bool want_cmp) {
  const Config& cfg = run.cfg;
  const DirichletSolver s = run.timed("order_assembly", [&] {
    return DirichletSolver(k, cfg.domain, cfg.h, solver_options(cfg, cfg.margin));
  });
  const auto& sys = s.system();
  const std::uint64_t seed = cfg.seed + 1;
  run.seeds["order"] = seed;
  BumpSource src(seed, cfg.domain);
  if (want_max) {
    Check c{"max_principle", "PASS"};
    c.csv = "max_principle.csv";
    Csv csv(run.out / c.csv, {"trial", "norm_f", "sup_u", "bound"});
    double worst = -INFINITY;
    int failed = 0;
    run.timed("max_principle", [&] {
      for (int t = 0; t < cfg.verify.order_trials; ++t) {
        const Eigen::VectorXd f = sys.sample_unknowns(src.next());
        const auto mp = verify_max_principle(s, f, {}, cfg.tolerance);
        const double nf = f.lpNorm<Eigen::Infinity>();
        csv.row({double(t), nf, mp.sup_u, cfg.tolerance * nf});
        worst = std::max(worst, mp.sup_u / std::max(nf, 1e-300));
        failed += !mp.pass;
      }
    });
    c.verdict = verdict(failed == 0);
    c.metrics = {{"trials", cfg.verify.order_trials}, {"failed", failed},
                 {"max_sup_u_over_norm_f", worst}, {"tolerance", cfg.tolerance}};
    run.add(std::move(c));
  }
  if (want_cmp) {
    Check c{"comparison", "PASS"};
    c.csv = "comparison.csv";
    Csv csv(run.out / c.csv, {"trial", "hypotheses_hold", "max_violation"});
    double worst = -INFINITY;
    int failed = 0;
    run.timed("comparison", [&] {
      for (int t = 0; t < cfg.verify.order_trials; ++t) {
        const Eigen::VectorXd f1 = sys.sample_unknowns(src.next());
        const Eigen::VectorXd f2 = f1 - sys.sample_unknowns(src.next());
        const Eigen::VectorXd u1 = s.solve_raw(f1), u2 = s.solve_raw(f2);
        const auto rep = verify_comparison(sys, u1, u2, f1, cfg.tolerance);
        csv.row({double(t), double(rep.hypotheses_hold), rep.max_violation});
        worst = std::max(worst, rep.max_violation);
        failed += !(rep.pass && rep.hypotheses_hold);
      }
    });
    c.verdict = verdict(failed == 0);
    c.metrics = {{"trials", cfg.verify.order_trials}, {"failed", failed},
                 {"max_violation", worst}, {"tolerance", cfg.tolerance}};
    run.add(std::move(c));
  }
}

Field torsion(const KernelTable& k, const Config& cfg, double h) {
  const DirichletSolver s(k, cfg.domain, h, solver_options(cfg, cfg.margin));
  return s.solve([](const Point&) { return -1.0; }).u;
}

Check mc_check(Run& run, const Field& u) {
  const Config& cfg = run.cfg;
  const Point x0 = cfg.domain.center();
  const std::uint64_t seed = cfg.seed + 2;
  run.seeds["mc_crosscheck"] = seed;
  PathConfig pc;
  pc.dt = cfg.verify.mc_dt;
  pc.n_paths = cfg.verify.mc_paths;
  pc.max_steps = cfg.mc.max_steps;
  pc.master_seed = seed;
  const auto est = run.timed("mc_crosscheck", [&] { return exit_time_richardson(cfg.domain, x0, cfg.spec, pc); });
  const double u0 = u(x0);
  const double& m = est.extrapolated.mean;
  const double allowed = 3 * est.extrapolated.std_error + cfg.verify.mc_allowance * std::abs(u0);
  const bool censored = est.fine.censor_flag || est.coarse.censor_flag;
  Check c{"mc_crosscheck", verdict(std::abs(m - u0) <= allowed && !censored)};
  c.metrics = {{"x0", point_json(x0)},        {"solver", u0},
               {"mc", m},                     {"mc_stderr", est.extrapolated.std_error},
               {"difference", m - u0},        {"allowed", allowed},
               {"censor_fraction", est.fine.censor_fraction}, {"order", est.order}};
  c.csv = "mc_crosscheck.csv";
  Csv csv(run.out / c.csv, {"estimate", "dt", "mean", "stderr", "censor_fraction"});
  csv.row_strings({"coarse", fmt(pc.dt), fmt(est.coarse.mean), fmt(est.coarse.std_error),
                   fmt(est.coarse.censor_fraction)});
  csv.row_strings({"fine", fmt(pc.dt / 2), fmt(est.fine.mean), fmt(est.fine.std_error),
                   fmt(est.fine.censor_fraction)});
  csv.row_strings({"extrapolated", "0", fmt(m), fmt(est.extrapolated.std_error),
                   fmt(est.fine.censor_fraction)});
  csv.row_strings({"solver", "0", fmt(u0), "0", "0"});
  return c;
}

json quotient_json(const QuotientFit& q) {
  return {{"alpha", q.alpha}, {"C", q.C}, {"r2", q.r2}, {"inconclusive", q.inconclusive}};
}

Check regularity_check(Run& run, const RenewalTable& V, const Field& u1, const Field& u2) {
  const Config& cfg = run.cfg;
  const Domain& D = cfg.domain;
  const Modulus mod = [&](double t) { return V.V(t); };
  Check c{"regularity", "FAIL"};
  const auto t0 = std::chrono::steady_clock::now();
  const double s1 = gen_holder_seminorm(u1, D, mod), s2 = gen_holder_seminorm(u2, D, mod);
  const bool semi_ok = std::abs(s2 / s1 - 1) <= cfg.verify.seminorm_band;

  const QuotientOptions qo{.rho_min = 1.0 / 32, .depth_factor = 1};
  const QuotientFit q1 = boundary_quotient_alpha(u1, V, D, qo), q2 = boundary_quotient_alpha(u2, V, D, qo);
  const bool alpha_ok = !q1.inconclusive && !q2.inconclusive && q1.alpha > 0 && q2.alpha > 0 &&
                        std::abs(q1.alpha - q2.alpha) <= cfg.verify.max_alpha_change;
  c.metrics = {{"seminorm", {s1, s2}},
               {"seminorm_ratio", s2 / s1},
               {"seminorm_band", cfg.verify.seminorm_band},
               {"quotient", {quotient_json(q1), quotient_json(q2)}},
               {"alpha_change", std::abs(q1.alpha - q2.alpha)},
               {"h", {u1.grid.h, u2.grid.h}}};
  {
    Csv csv(run.out / "quotient.csv", {"h", "rho", "sup_diff"});
    for (const auto* q : {&q1, &q2})
      for (Eigen::Index i = 0; i < q->rho.size(); ++i)
        csv.row({q == &q1 ? u1.grid.h : u2.grid.h, q->rho(i), q->sup_diff(i)});
  }
  c.csv = "quotient.csv";

  bool osc_ok = false;
  if (as_ball(D)) {
    const auto pts = boundary_points(D, cfg.verify.boundary_points);
    const OscillationOptions oo{.levels = 3, .depth_factor = 0.5};
    const auto fits = oscillation_decay(u2, V, D, pts, oo);
    osc_ok = !fits.empty();
    json gam = json::array();
    Csv csv(run.out / "oscillation.csv", concat(coord_names(run.dim()), {"r", "osc"}));
    for (const auto& f : fits) {
      osc_ok = osc_ok && f.gamma > 0 && !f.inconclusive;
      gam.push_back({{"x0", point_json(f.x0)}, {"gamma", f.gamma}, {"C", f.C}, {"r2", f.r2}});
      for (Eigen::Index l = 0; l < f.r.size(); ++l) csv.row(concat(coords(f.x0), {f.r(l), f.osc(l)}));
    }
    c.metrics["oscillation"] = gam;
    c.csv += ",oscillation.csv";
  } else {
    c.note = "oscillation fits need a ball or an interval";
  }
  run.runtimes["regularity_fits"] = seconds_since(t0);
  c.metrics["seminorm_ok"] = semi_ok;
  c.metrics["alpha_ok"] = alpha_ok;
  c.metrics["oscillation_ok"] = osc_ok;
  if (semi_ok && alpha_ok && osc_ok) c.verdict = "PASS";
  else if (semi_ok && alpha_ok && !as_ball(D)) c.verdict = "INCONCLUSIVE";
  run.constants["regularity"] = {{"seminorm", s2}, {"alpha", q2.alpha}};
  return c;
}

Check harnack_check(Run& run, const KernelTable& k) {
  const Config& cfg = run.cfg;
  Check c{"harnack", "INCONCLUSIVE"};
  const auto ball = as_ball(cfg.domain);
  if (!ball) {
    c.gated = false;
    c.note = "needs a ball or an interval";
    return c;
  }
  const auto [x0, r] = *ball;
  const std::uint64_t seed = cfg.seed + 3;
  run.seeds["harnack"] = seed;
  std::vector<Function> data;
  for (int i = 0; i < cfg.verify.harnack_data; ++i) data.push_back(random_exterior_data(x0, r, r, seed, i));
  const double h = cfg.verify.harnack_h;
  const SolverOptions so = solver_options(cfg, r);
  const auto a = run.timed("harnack", [&] {
    return std::make_pair(harnack_ratio(DirichletSolver(k, cfg.domain, h, so), data),
                          harnack_ratio(DirichletSolver(k, cfg.domain, h / 2, so), data));
  });
  const auto& [ra, rb] = a;
  const double band = std::max(ra.max_ratio / rb.max_ratio, rb.max_ratio / ra.max_ratio);
  const bool pass = ra.degenerate == 0 && rb.degenerate == 0 && std::isfinite(ra.max_ratio) &&
                    std::isfinite(rb.max_ratio) && band <= cfg.verify.harnack_band;
  c.verdict = verdict(pass);
  c.metrics = {{"h", {h, h / 2}},
               {"max_ratio", {ra.max_ratio, rb.max_ratio}},
               {"degenerate", {ra.degenerate, rb.degenerate}},
               {"grid_band", band},
               {"allowed_band", cfg.verify.harnack_band}};
  c.csv = "harnack.csv";
  Csv csv(run.out / c.csv, {"data", "ratio_h", "ratio_h2"});
  if (ra.ratios.size() == rb.ratios.size())
    for (std::size_t i = 0; i < ra.ratios.size(); ++i) csv.row({double(i), ra.ratios[i], rb.ratios[i]});
  return c;
}

Check survival_check(Run& run, const RenewalTable& V) {
  const Config& cfg = run.cfg;
  const std::uint64_t seed = cfg.seed + 4;
  run.seeds["survival"] = seed;
  run.seeds["decay"] = seed + 1;
  SurvivalOptions so;
  std::erase_if(so.depths, [&](double d) { return d > cfg.domain.inradius(); });
  PathConfig pc;
  pc.dt = cfg.verify.survival_dt;
  pc.n_paths = cfg.verify.survival_paths;
  pc.max_steps = cfg.mc.max_steps;
  pc.master_seed = seed;
  const auto rep = run.timed("survival", [&] { return survival_profile(cfg.domain, cfg.spec, V, pc, so); });
  PathConfig dc = pc;
  dc.dt = cfg.verify.decay_dt;
  dc.n_paths = cfg.verify.decay_paths;
  dc.master_seed = seed + 1;
  const auto dec = run.timed("decay", [&] {
    return survival_decay(cfg.domain, cfg.domain.center(), cfg.spec, dc, cfg.verify.decay_times);
  });
  Check c{"survival", verdict(rep.pass && dec.pass)};
  c.metrics = {{"spread", rep.spread},      {"factor", so.factor},
               {"excluded", rep.excluded.sum()}, {"decay_slope", dec.slope},
               {"decay_r2", dec.r2},         {"profile_pass", rep.pass},
               {"decay_pass", dec.pass}};
  c.csv = "survival.csv,decay.csv";
  Csv csv(run.out / "survival.csv", {"depth", "time", "survival", "stderr", "ratio", "excluded"});
  for (std::size_t i = 0; i < rep.depths.size(); ++i)
    for (std::size_t j = 0; j < rep.times.size(); ++j)
      csv.row({rep.depths[i], rep.times[j], rep.survival(i, j), rep.std_error(i, j), rep.ratio(i, j),
               double(rep.excluded(i, j))});
  Csv dcsv(run.out / "decay.csv", {"time", "survival", "stderr"});
  for (std::size_t i = 0; i < dec.times.size(); ++i) dcsv.row({dec.times[i], dec.survival(i), dec.std_error(i)});
  run.constants["survival"] = {{"spread", rep.spread}, {"decay_slope", dec.slope}};
  return c;
}

Check half_space_check(Run& run) {
  Check c{"half_space", "INCONCLUSIVE"};
  if (!run.cfg.spec.is_stable()) {
    c.gated = false;
    c.note = "the residual vanishes only for stable specs";
    return c;
  }
  const KernelTable k1 = run.timed("half_space_kernel", [&] { return build_kernel(run.cfg.spec, 1, run.kernel_grid()); });
  RenewalOptions ro;
  ro.kernel = &k1;
  const RenewalTable V1 = build_renewal(run.cfg.spec, run.cfg.renewal, ro);
  const auto rep = run.timed("half_space", [&] { return half_space_residual(k1, V1, run.cfg.verify.half_space_x); });
  c.verdict = verdict(rep.pass);
  c.csv = "half_space.csv";
  Csv csv(run.out / c.csv, {"x", "level", "residual", "normalized"});
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"x", r.x}, {"min_factor", r.min_factor},
                    {"final_normalized", r.normalized(r.normalized.size() - 1)}});
    for (Eigen::Index l = 0; l < r.residual.size(); ++l) csv.row({r.x, double(l), r.residual(l), r.normalized(l)});
  }
  c.metrics = {{"rows", rows}, {"min_factor_required", 2}, {"final_normalized_max", 1e-2}};
  return c;
}

Check subsolution_check(Run& run, const RenewalTable& V, const KernelTable& k) {
  Check c{"subsolution", "PASS"};
  c.csv = "subsolution.csv";
  Csv csv(run.out / c.csv, {"r", "c2", "C3", "C4", "c4", "min_Lw", "max_outside", "pass"});
  json rows = json::array();
  run.timed("subsolution", [&] {
    for (double r : run.cfg.verify.subsolution_radii) {
      try {
        const auto s = build_subsolution(run.dim(), r, V, k);
        const auto& q = s.report;
        const bool ok = q.pass() && q.C4 > 0;
        if (!ok) c.verdict = "FAIL";
        csv.row({r, q.c2, q.C3, q.C4, q.c4, q.min_Lw, q.max_outside, double(ok)});
        rows.push_back({{"r", r}, {"C4", q.C4}, {"c2", q.c2}, {"C3", q.C3}, {"pass", ok}});
      } catch (const VerificationFailure& e) {
        c.verdict = "FAIL";
        rows.push_back({{"r", r}, {"pass", false}, {"error", e.what()}});
      }
    }
  });
  c.metrics = {{"radii", rows}};
  return c;
}

// ---------------------------------------------------------------- runners

json spec_constants(const BernsteinSpec& s) {
  return {{"alpha1", s.scaling().alpha1}, {"alpha2", s.scaling().alpha2}, {"b1", s.scaling().b1}};
}

void run_kernel(Run& run) {
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(run.cfg.spec, run.dim(), run.kernel_grid()); });
  write_kernel_constants(run, k);
  Csv csv(run.out / "kernel.csv", {"r", "j", "varphi_profile", "P", "P1", "tail_mass"});
  for (Eigen::Index i = 0; i < k.r().size(); ++i)
    csv.row({k.r()(i), k.j_values()(i), k.varphi_profile()(i), k.pruitt_P()(i), k.pruitt_P1()(i),
             k.tail_mass()(i)});
  run.outputs["table"] = "kernel.csv";
  run.add(char_exponent_check(run, k));
  run.add(recursion_check(run));
}

void run_renewal(Run& run) {
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(run.cfg.spec, run.dim(), run.kernel_grid()); });
  const RenewalTable V = run.timed("renewal", [&] { return make_renewal(run, k); });
  write_renewal_constants(run, V);
  Csv csv(run.out / "renewal.csv", {"r", "V", "Vp", "Vpp"});
  for (Eigen::Index i = 0; i < V.r().size(); ++i)
    csv.row({V.r()(i), V.V_values()(i), V.Vp_values()(i), V.Vpp_values()(i)});
  run.outputs["table"] = "renewal.csv";
  run.add(inequality_check(run, V, k, "inequalities.csv"));
}

void run_barrier(Run& run) {
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(run.cfg.spec, run.dim(), run.kernel_grid()); });
  const RenewalTable V = run.timed("renewal", [&] { return make_renewal(run, k); });
  Check c = barrier_check(run, V, k);
  run.outputs["table"] = c.csv;
  run.constants["barrier"] = c.metrics;
  run.add(std::move(c));
}

void run_solve(Run& run) {
  const Config& cfg = run.cfg;
  const Function f = Expression::parse(cfg.f, run.dim(), "/f").bind(cfg.domain);
  const Function g = Expression::parse(cfg.g, run.dim(), "/g").bind(cfg.domain);
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(cfg.spec, run.dim(), run.kernel_grid()); });
  const DirichletSolver s = run.timed("assembly", [&] {
    return DirichletSolver(k, cfg.domain, cfg.h, solver_options(cfg, cfg.margin));
  });
  const SolveResult res = s.solve(f, g, cfg.g_far);
  run.runtimes["solve"] = res.runtime;
  const Grid& grid = res.u.grid;
  Csv csv(run.out / "u.csv", concat(coord_names(run.dim()), {"d_D", "u"}));
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Point x = grid.node(i);
    csv.row(concat(coords(x), {cfg.domain.sdist(x), res.u.values(i)}));
  }
  run.outputs["solution"] = "u.csv";
  const double fmax = s.system().sample_unknowns(f).lpNorm<Eigen::Infinity>();
  const double bound = cfg.tolerance * std::max(1.0, fmax);
  Check c{"residual", verdict(res.residual_sup <= bound)};
  c.metrics = {{"residual_sup", res.residual_sup}, {"bound", bound}};
  run.add(std::move(c));
  run.extra["matrix"] = {{"unknowns", res.stats.unknowns},
                         {"dominance_margin", res.stats.dominance_margin},
                         {"condition_estimate", res.stats.condition_estimate},
                         {"method", res.stats.method},
                         {"iterations", res.stats.iterations}};
  run.extra["grid"] = {{"h", grid.h}, {"origin", point_json(grid.origin)}, {"n", grid.n}};
  run.extra["residual_sup"] = res.residual_sup;
  run.extra["u_center"] = res.u(cfg.domain.center());
}

void run_mc(Run& run) {
  const Config& cfg = run.cfg;
  if (cfg.g != "0" || cfg.g_far != 0) throw SchemaError("/g", "mc supports zero exterior data only");
  const Function f = Expression::parse(cfg.f, run.dim(), "/f").bind(cfg.domain);
  std::vector<Point> xs = cfg.mc.x0;
  if (xs.empty()) xs.push_back(cfg.domain.center());
  run.seeds["mc"] = cfg.seed;
  PathConfig pc;
  pc.dt = cfg.mc.dt;
  pc.n_paths = cfg.mc.n_paths;
  pc.max_steps = cfg.mc.max_steps;
  pc.master_seed = cfg.seed;
  Csv csv(run.out / "mc.csv", concat(coord_names(run.dim()), {"mean", "stderr", "censor_fraction", "n_effective"}));
  Check c{"censoring", "PASS"};
  json rows = json::array();
  run.timed("mc", [&] {
    for (const Point& x : xs) {
      // u = -R^D f and R^D f(x) = E int_0^tau f(X_t) dt.
      const McEstimate e = rd_estimate(f, x, cfg.domain, cfg.spec, pc);
      csv.row(concat(coords(x), {-e.mean, e.std_error, e.censor_fraction, double(e.n_effective)}));
      rows.push_back({{"x0", point_json(x)}, {"u", -e.mean}, {"stderr", e.std_error},
                      {"censor_fraction", e.censor_fraction}});
      if (e.censor_flag) c.verdict = "FAIL";
    }
  });
  c.metrics = {{"estimates", rows}, {"max_censor_fraction", 0.01}};
  run.outputs["estimates"] = "mc.csv";
  run.add(std::move(c));
}

void run_verify(Run& run) {
  const Config& cfg = run.cfg;
  std::set<std::string> want(cfg.verify.checks.begin(), cfg.verify.checks.end());
  auto on = [&](const char* n) { return want.count(n) > 0; };
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(cfg.spec, run.dim(), run.kernel_grid()); });
  write_kernel_constants(run, k);
  const RenewalTable V = run.timed("renewal", [&] { return make_renewal(run, k); });
  write_renewal_constants(run, V);

  if (on("char_exponent")) run.add(char_exponent_check(run, k));
  if (on("dimension_recursion")) run.add(recursion_check(run));
  if (on("pruitt")) run.add(pruitt_check(run, k));
  if (on("renewal_inequalities")) run.add(inequality_check(run, V, k, "inequalities.csv"));
  if (on("half_space")) run.add(half_space_check(run));
  if (on("barrier")) run.add(barrier_check(run, V, k));
  if (on("subsolution")) run.add(subsolution_check(run, V, k));
  if (on("max_principle") || on("comparison")) order_checks(run, k, on("max_principle"), on("comparison"));
  if (on("mc_crosscheck") || on("regularity")) {
    const Field u1 = run.timed("torsion", [&] { return torsion(k, cfg, cfg.h); });
    if (on("mc_crosscheck")) run.add(mc_check(run, u1));
    if (on("regularity")) {
      const Field u2 = run.timed("torsion_refined", [&] { return torsion(k, cfg, cfg.h / 2); });
      run.add(regularity_check(run, V, u1, u2));
    }
  }
  if (on("harnack")) run.add(harnack_check(run, k));
  if (on("survival")) run.add(survival_check(run, V));
}

// CSV with a header row into columns by name.
std::map<std::string, std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("/outputs/solution", "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (const auto& n : names) {
      if (!std::getline(ss, cell, ',')) throw SchemaError("/outputs/solution", "short row in " + path.string());
      cols[n].push_back(std::stod(cell));
    }
  }
  return cols;
}

void run_report(Run& run, const fs::path& solve_dir, const json& manifest) {
  const json* sol = nullptr;
  if (manifest.contains("outputs") && manifest["outputs"].is_object() && manifest["outputs"].contains("solution"))
    sol = &manifest["outputs"]["solution"];
  if (!sol || !sol->is_string()) throw SchemaError("/outputs/solution", "missing solution file");
  auto cols = read_csv(solve_dir / sol->get<std::string>());
  const KernelTable k = run.timed("kernel", [&] { return build_kernel_any(run.cfg.spec, run.dim(), run.kernel_grid()); });
  const RenewalTable V = run.timed("renewal", [&] { return make_renewal(run, k); });
  const auto names = coord_names(run.dim());
  for (const auto& n : concat(names, {"d_D", "u"}))
    if (!cols.count(n)) throw SchemaError("/outputs/solution", "column " + n + " missing");
  const double h = run.cfg.h;
  Csv csv(run.out / "report.csv", concat(names, {"u", "u_over_V"}));
  std::size_t rows = 0;
  for (std::size_t i = 0; i < cols["u"].size(); ++i) {
    const double d = cols["d_D"][i];
    if (d < h * (1 - 1e-9)) continue;
    std::vector<double> r;
    for (const auto& n : names) r.push_back(cols[n][i]);
    r.push_back(cols["u"][i]);
    r.push_back(cols["u"][i] / V.V(d));
    csv.row(r);
    ++rows;
  }
  run.outputs["report"] = "report.csv";
  run.extra["rows"] = rows;
  run.extra["source_config_hash"] = manifest.value("config_hash", "");
}

}  // namespace

// ---------------------------------------------------------------- public

const std::vector<std::string>& all_checks() {
  static const std::vector<std::string> c{
      "char_exponent", "dimension_recursion", "pruitt",        "renewal_inequalities", "half_space",
      "barrier",       "subsolution",         "max_principle", "comparison",           "mc_crosscheck",
      "regularity",    "harnack",             "survival"};
  return c;
}

BernsteinSpec parse_spec(const json& j, const std::string& ptr) {
  Reader r(j, ptr);
  const std::string v = as_string(r.require("variant"), r.at("variant"));
  BernsteinSpec spec;
  if (v == "stable") {
    const double a = as_double(r.require("alpha"), r.at("alpha"));
    spec = checked_spec(ptr, [&] { return make_stable(a); });
  } else if (v == "mixture") {
    const json& t = r.require("terms");
    const std::string tp = r.at("terms");
    if (!t.is_array() || t.empty()) throw SchemaError(tp, "expected a nonempty array of [alpha, weight]");
    std::vector<StableMixture::Term> terms;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string p = tp + "/" + std::to_string(i);
      const auto aw = as_doubles(t[i], p);
      if (aw.size() != 2) throw SchemaError(p, "expected [alpha, weight]");
      terms.push_back({aw[0], aw[1]});
    }
    spec = checked_spec(ptr, [&] { return make_mixture(terms); });
  } else if (v == "stable_log") {
    const double a = as_double(r.require("alpha"), r.at("alpha"));
    const double b = as_double(r.require("beta"), r.at("beta"));
    spec = checked_spec(ptr, [&] { return make_stable_log(a, b); });
  } else if (v == "tabulated") {
    const json& t = r.require("points");
    const std::string tp = r.at("points");
    if (!t.is_array() || t.size() < 2) throw SchemaError(tp, "expected at least two [lambda, phi] points");
    Eigen::VectorXd lam(Eigen::Index(t.size())), phi(Eigen::Index(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string p = tp + "/" + std::to_string(i);
      const auto lp = as_doubles(t[i], p);
      if (lp.size() != 2) throw SchemaError(p, "expected [lambda, phi]");
      lam(Eigen::Index(i)) = lp[0];
      phi(Eigen::Index(i)) = lp[1];
    }
    spec = checked_spec(ptr, [&] { return make_tabulated(lam, phi); });
  } else {
    throw SchemaError(r.at("variant"), "unknown variant \"" + v + "\" (stable, mixture, stable_log, tabulated)");
  }
  r.finish();
  return spec;
}

Domain parse_domain(const json& j, const std::string& ptr) {
  Reader r(j, ptr);
  const std::string type = as_string(r.require("type"), r.at("type"));
  auto center2 = [&] {
    const json* c = r.find("center");
    const Point p = c ? as_point(*c, r.at("center")) : point(0.0, 0.0);
    if (p.size() != 2) throw SchemaError(r.at("center"), "expected 2 coordinates");
    return p;
  };
  Domain D;
  if (type == "interval") {
    const double a = r.number("a", -1), b = r.number("b", 1);
    if (!(a < b)) throw SchemaError(r.at("b"), "need a < b");
    D = Domain(Interval{a, b});
  } else if (type == "ball") {
    const json* c = r.find("center");
    const Point p = c ? as_point(*c, r.at("center")) : point(0.0, 0.0);
    const double rad = r.number("radius", 1);
    positive(rad, r.at("radius"));
    D = Domain(Ball{p, rad});
  } else if (type == "annulus") {
    const Point p = center2();
    const double in = r.number("inner", 0.5), out = r.number("outer", 1);
    positive(in, r.at("inner"));
    if (!(in < out)) throw SchemaError(r.at("outer"), "need inner < outer");
    D = Domain(Annulus{p, in, out});
  } else if (type == "star") {
    const Point p = center2();
    const double rad = r.number("radius", 1), amp = r.number("amplitude", 0.1);
    const auto lobes = r.integer("lobes", 5);
    positive(rad, r.at("radius"));
    if (!(amp >= 0 && amp < 1)) throw SchemaError(r.at("amplitude"), "need 0 <= amplitude < 1");
    if (lobes < 1) throw SchemaError(r.at("lobes"), "must be positive");
    D = Domain(SmoothStar{p, rad, amp, int(lobes)});
  } else {
    throw SchemaError(r.at("type"), "unknown domain \"" + type + "\" (interval, ball, annulus, star)");
  }
  r.finish();
  return D;
}

Config parse_config(const json& j, const Overrides& over) {
  Reader r(j, "");
  Config c;
  c.spec_json = r.require("spec");
  c.spec = parse_spec(c.spec_json, "/spec");
  const json* dom = r.find("domain");
  c.domain_json = dom ? *dom : json{{"type", "interval"}, {"a", -1}, {"b", 1}};
  c.domain = parse_domain(c.domain_json, "/domain");
  const int dim = c.domain.dim();

  if (const json* m = r.find("renewal")) {
    const std::string s = as_string(*m, "/renewal");
    try {
      c.renewal = parse_renewal_mode(s);
    } catch (const Error& e) {
      throw SchemaError("/renewal", e.what());
    }
  } else {
    c.renewal = default_renewal_mode(c.spec);
  }

  c.h = dim == 1 ? 1.0 / 256 : 1.0 / 32;
  if (const json* g = r.find("grid")) {
    Reader gr(*g, "/grid");
    c.h = gr.number("h", c.h);
    c.margin = gr.number("margin", c.margin);
    c.method = gr.string("method", c.method);
    positive(c.h, "/grid/h");
    if (c.margin < 0) throw SchemaError("/grid/margin", "must be nonnegative");
    if (c.method != "auto" && c.method != "dense" && c.method != "cg")
      throw SchemaError("/grid/method", "expected auto, dense or cg");
    gr.finish();
  }
  c.f = r.string("f", c.f);
  c.g = r.string("g", c.g);
  Expression::parse(c.f, dim, "/f");
  Expression::parse(c.g, dim, "/g");
  c.g_far = r.number("g_far", c.g_far);
  c.seed = std::uint64_t(r.integer("seed", std::int64_t(c.seed)));
  c.tolerance = r.number("tolerance", c.tolerance);

  if (const json* k = r.find("kernel")) {
    Reader kr(*k, "/kernel");
    c.kernel.r_min = kr.number("r_min", c.kernel.r_min);
    c.kernel.r_max = kr.number("r_max", c.kernel.r_max);
    c.kernel.per_decade = int(kr.integer("per_decade", c.kernel.per_decade));
    c.kernel.z = kr.numbers("z", c.kernel.z);
    positive(c.kernel.r_min, "/kernel/r_min");
    if (!(c.kernel.r_max > c.kernel.r_min)) throw SchemaError("/kernel/r_max", "need r_max > r_min");
    if (c.kernel.per_decade < 4) throw SchemaError("/kernel/per_decade", "need at least 4");
    positive_all(c.kernel.z, "/kernel/z");
    kr.finish();
  }
  if (const json* b = r.find("barrier")) {
    Reader br(*b, "/barrier");
    c.barrier.points_per_stratum = int(br.integer("points_per_stratum", c.barrier.points_per_stratum));
    c.barrier.strata_per_decade = int(br.integer("strata_per_decade", c.barrier.strata_per_decade));
    c.barrier.min_depth = br.number("min_depth", c.barrier.min_depth);
    c.barrier.radii = br.numbers("radii", c.barrier.radii);
    c.barrier.max_spread = br.number("max_spread", c.barrier.max_spread);
    if (c.barrier.points_per_stratum < 1) throw SchemaError("/barrier/points_per_stratum", "must be positive");
    if (c.barrier.strata_per_decade < 1) throw SchemaError("/barrier/strata_per_decade", "must be positive");
    positive(c.barrier.min_depth, "/barrier/min_depth");
    positive_all(c.barrier.radii, "/barrier/radii");
    br.finish();
  }
  if (const json* m = r.find("mc")) {
    Reader mr(*m, "/mc");
    if (const json* x = mr.find("x0")) {
      if (!x->is_array()) throw SchemaError("/mc/x0", "expected an array of points");
      for (std::size_t i = 0; i < x->size(); ++i) {
        const std::string p = "/mc/x0/" + std::to_string(i);
        const Point pt = as_point((*x)[i], p);
        if (pt.size() != dim) throw SchemaError(p, "expected " + std::to_string(dim) + " coordinates");
        if (!c.domain.contains(pt)) throw SchemaError(p, "point outside the domain");
        c.mc.x0.push_back(pt);
      }
    }
    c.mc.dt = mr.number("dt", c.mc.dt);
    c.mc.n_paths = mr.integer("n_paths", c.mc.n_paths);
    c.mc.max_steps = mr.integer("max_steps", c.mc.max_steps);
    positive(c.mc.dt, "/mc/dt");
    if (c.mc.n_paths < 2) throw SchemaError("/mc/n_paths", "need at least 2 paths");
    if (c.mc.max_steps < 1) throw SchemaError("/mc/max_steps", "must be positive");
    mr.finish();
  }
  VerifySettings& v = c.verify;
  v.checks = all_checks();
  v.harnack_h = dim == 1 ? 1.0 / 64 : 1.0 / 16;
  if (const json* vj = r.find("verify")) {
    Reader vr(*vj, "/verify");
    if (const json* ch = vr.find("checks")) {
      if (!ch->is_array()) throw SchemaError("/verify/checks", "expected an array of check names");
      v.checks.clear();
      for (std::size_t i = 0; i < ch->size(); ++i) {
        const std::string p = "/verify/checks/" + std::to_string(i);
        const std::string name = as_string((*ch)[i], p);
        if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end())
          throw SchemaError(p, "unknown check \"" + name + "\"");
        v.checks.push_back(name);
      }
    }
    v.order_trials = int(vr.integer("order_trials", v.order_trials));
    v.mc_paths = vr.integer("mc_paths", v.mc_paths);
    v.mc_dt = vr.number("mc_dt", v.mc_dt);
    v.mc_allowance = vr.number("mc_allowance", v.mc_allowance);
    v.half_space_x = vr.numbers("half_space_x", v.half_space_x);
    v.subsolution_radii = vr.numbers("subsolution_radii", v.subsolution_radii);
    v.boundary_points = int(vr.integer("boundary_points", v.boundary_points));
    v.seminorm_band = vr.number("seminorm_band", v.seminorm_band);
    v.max_alpha_change = vr.number("max_alpha_change", v.max_alpha_change);
    v.harnack_data = int(vr.integer("harnack_data", v.harnack_data));
    v.harnack_h = vr.number("harnack_h", v.harnack_h);
    v.harnack_band = vr.number("harnack_band", v.harnack_band);
    v.survival_paths = vr.integer("survival_paths", v.survival_paths);
    v.survival_dt = vr.number("survival_dt", v.survival_dt);
    v.decay_paths = vr.integer("decay_paths", v.decay_paths);
    v.decay_dt = vr.number("decay_dt", v.decay_dt);
    v.decay_times = vr.numbers("decay_times", v.decay_times);
    if (v.order_trials < 1) throw SchemaError("/verify/order_trials", "must be positive");
    if (v.mc_paths < 2) throw SchemaError("/verify/mc_paths", "need at least 2 paths");
    positive(v.mc_dt, "/verify/mc_dt");
    positive_all(v.half_space_x, "/verify/half_space_x");
    positive_all(v.subsolution_radii, "/verify/subsolution_radii");
    if (v.boundary_points < 1) throw SchemaError("/verify/boundary_points", "must be positive");
    if (v.harnack_data < 1) throw SchemaError("/verify/harnack_data", "must be positive");
    positive(v.harnack_h, "/verify/harnack_h");
    if (v.survival_paths < 2) throw SchemaError("/verify/survival_paths", "need at least 2 paths");
    positive(v.survival_dt, "/verify/survival_dt");
    if (v.decay_paths < 2) throw SchemaError("/verify/decay_paths", "need at least 2 paths");
    positive(v.decay_dt, "/verify/decay_dt");
    if (v.decay_times.size() < 2) throw SchemaError("/verify/decay_times", "need at least 2 times");
    positive_all(v.decay_times, "/verify/decay_times");
    vr.finish();
  }
  r.finish();

  if (over.seed) c.seed = *over.seed;
  if (over.grid) {
    positive(*over.grid, "--grid");
    c.h = *over.grid;
  }
  if (over.tolerance) {
    positive(*over.tolerance, "--tolerance");
    c.tolerance = *over.tolerance;
  }
  positive(c.tolerance, "/tolerance");
  return c;
}

json to_json(const Config& c) {
  json x0 = json::array();
  for (const auto& p : c.mc.x0) x0.push_back(point_json(p));
  const VerifySettings& v = c.verify;
  return {{"spec", c.spec_json},
          {"domain", c.domain_json},
          {"renewal", to_string(c.renewal)},
          {"grid", {{"h", c.h}, {"margin", c.margin}, {"method", c.method}}},
          {"f", c.f},
          {"g", c.g},
          {"g_far", c.g_far},
          {"seed", c.seed},
          {"tolerance", c.tolerance},
          {"kernel",
           {{"r_min", c.kernel.r_min}, {"r_max", c.kernel.r_max}, {"per_decade", c.kernel.per_decade}, {"z", c.kernel.z}}},
          {"barrier",
           {{"points_per_stratum", c.barrier.points_per_stratum},
            {"strata_per_decade", c.barrier.strata_per_decade},
            {"min_depth", c.barrier.min_depth},
            {"radii", c.barrier.radii},
            {"max_spread", c.barrier.max_spread}}},
          {"mc", {{"x0", x0}, {"dt", c.mc.dt}, {"n_paths", c.mc.n_paths}, {"max_steps", c.mc.max_steps}}},
          {"verify",
           {{"checks", v.checks},
            {"order_trials", v.order_trials},
            {"mc_paths", v.mc_paths},
            {"mc_dt", v.mc_dt},
            {"mc_allowance", v.mc_allowance},
            {"half_space_x", v.half_space_x},
            {"subsolution_radii", v.subsolution_radii},
            {"boundary_points", v.boundary_points},
            {"seminorm_band", v.seminorm_band},
            {"max_alpha_change", v.max_alpha_change},
            {"harnack_data", v.harnack_data},
            {"harnack_h", v.harnack_h},
            {"harnack_band", v.harnack_band},
            {"survival_paths", v.survival_paths},
            {"survival_dt", v.survival_dt},
            {"decay_paths", v.decay_paths},
            {"decay_dt", v.decay_dt},
            {"decay_times", v.decay_times}}}};
}

std::string config_hash(const json& normalized) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : normalized.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

json stable_part(const json& manifest) {
  json m = manifest;
  m.erase("runtimes");
  m.erase("threads");
  return m;
}

int run(const std::string& subcommand, const std::string& config_path, const std::string& out_dir,
        const Overrides& over, std::ostream& log) {
  static const std::set<std::string> known{"kernel", "renewal", "barrier", "solve", "mc", "verify", "report"};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!known.count(subcommand)) throw SchemaError("", "unknown subcommand \"" + subcommand + "\"");
    std::ifstream in(config_path);
    if (!in) throw SchemaError("", "cannot read " + config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    json cfg_doc = doc;
    if (subcommand == "report") {
      if (!doc.is_object() || doc.value("subcommand", "") != "solve")
        throw SchemaError("/subcommand", "report expects a solve manifest");
      if (!doc.contains("config")) throw SchemaError("/config", "missing member");
      cfg_doc = doc["config"];
    }
    if (over.threads) {
      if (*over.threads < 1) throw SchemaError("--threads", "must be positive");
      set_default_threads(*over.threads);
    }

    Run r;
    r.log = &log;
    r.cfg = parse_config(cfg_doc, over);
    r.config = to_json(r.cfg);
    r.out = out_dir;
    fs::create_directories(r.out);
    r.seeds["master"] = r.cfg.seed;
    log << "nonlocal " << subcommand << " -> " << r.out.string() << '\n';

    if (subcommand == "kernel") run_kernel(r);
    else if (subcommand == "renewal") run_renewal(r);
    else if (subcommand == "barrier") run_barrier(r);
    else if (subcommand == "solve") run_solve(r);
    else if (subcommand == "mc") run_mc(r);
    else if (subcommand == "verify") run_verify(r);
    else run_report(r, fs::path(config_path).parent_path(), doc);

    r.runtimes["total"] = seconds_since(t0);
    json checks = json::array();
    bool ok = true;
    for (const auto& c : r.checks) {
      checks.push_back(check_json(c));
      if (c.gated && c.verdict != "PASS") ok = false;
    }
    json manifest = {{"tool", "nonlocal"},
                     {"version", kVersion},
                     {"subcommand", subcommand},
                     {"config_hash", config_hash(r.config)},
                     {"config", r.config},
                     {"spec", {{"name", r.cfg.spec.name()}, {"json", r.cfg.spec_json}, {"scaling", spec_constants(r.cfg.spec)}}},
                     {"seeds", r.seeds},
                     {"threads", default_threads()},
                     {"brownian_convention", kBrownian},
                     {"checks", checks},
                     {"verdict", ok ? "PASS" : "FAIL"},
                     {"constants", r.constants},
                     {"outputs", r.outputs},
                     {"results", r.extra},
                     {"runtimes", r.runtimes}};
    std::ofstream mf(r.out / "manifest.json");
    if (!mf) throw Error("cannot write " + (r.out / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
    log << "verdict " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kCheckFailed;
  } catch (const SchemaError& e) {
    // what() starts with the pointer.
    log << "schema error" << (e.pointer().empty() ? "" : " at ") << e.what() << '\n';
    return kSchemaError;
  } catch (const RejectedSpec& e) {
    log << "schema error at /spec: " << e.what() << '\n';
    return kSchemaError;
  } catch (const UnsupportedVariant& e) {
    log << "schema error at /spec: " << e.what() << '\n';
    return kSchemaError;
  } catch (const json::exception& e) {
    log << "schema error: " << e.what() << '\n';
    return kSchemaError;
  } catch (const std::exception& e) {
    log << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal operators from Bernstein functions: kernels, solvers and checks"};
  app.require_subcommand(1);
  std::string config, out = "out";
  Overrides over;
  std::uint64_t seed = 0;
  int threads = 0;
  double grid = 0, tol = 0;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"kernel", "jump density table and kernel constants"},
      {"renewal", "renewal function table and integral inequalities"},
      {"barrier", "L applied to V(psi) and its scale products"},
      {"solve", "Dirichlet problem on a grid"},
      {"mc", "Monte Carlo estimates of -R^D f"},
      {"verify", "full verification battery"},
      {"report", "u and u / V(d_D) from a solve manifest"}};
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", config, name == "report" ? "solve manifest.json" : "configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    s->add_option("--out", out, "output directory")->capture_default_str();
    s->add_option("--seed", seed, "master seed");
    s->add_option("--threads", threads, "worker threads (default NONLOCAL_THREADS or all cores)");
    s->add_option("--grid", grid, "grid spacing h");
    s->add_option("--tolerance", tol, "order and residual tolerance");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kSchemaError;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) over.seed = seed;
  if (sub->count("--threads")) over.threads = threads;
  if (sub->count("--grid")) over.grid = grid;
  if (sub->count("--tolerance")) over.tolerance = tol;
  return run(sub->get_name(), config, out, over, std::cerr);
}

}  // namespace nonlocal::cli
