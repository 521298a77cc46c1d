#include "lcslab/experiments.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

#include "lcslab/betti.hpp"
#include "lcslab/lifts.hpp"
#include "lcslab/tamarkin.hpp"

namespace lcs {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "fail";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return 0;
    case Verdict::fail:
      return 1;
    case Verdict::inconclusive:
      return 2;
  }
  return 1;
}

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
  return Verdict::pass;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

const std::vector<std::string> kFileSections = {"model", "sheaf_model", "compare_model"};

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ExperimentConfig c;
  c.json_ = j;
  for (const auto& key : kFileSections) {
    if (c.json_.contains(key) && c.json_[key].is_string()) {
      c.json_[key] = read_json_file(base_dir / c.json_[key].get<std::string>());
    }
  }
  if (c.json_.contains("experiments")) {
    for (auto& e : c.json_["experiments"]) {
      if (e.contains("config") && e["config"].is_string()) {
        const auto sub = base_dir / e["config"].get<std::string>();
        e["config"] = load(sub).resolved();
      } else if (e.contains("config")) {
        e["config"] = from_json(e["config"], base_dir).resolved();
      }
    }
  }
  if (c.json_.contains("knobs")) {
    for (const auto& [name, v] : c.json_["knobs"].items()) {
      if (v.is_number() && !(v.get<double>() > 0.0)) throw InputError("knob " + name + " must be positive");
    }
  }
  if (c.json_.contains("hamiltonian")) {
    const auto name = c.json_["hamiltonian"].value("name", std::string());
    const auto names = builtin_hamiltonian_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw InputError("unknown Hamiltonian builtin: " + name);
    }
  }
  if (c.json_.contains("seed") &&
      !(c.json_["seed"].is_number_unsigned() || (c.json_["seed"].is_number_integer() && c.json_["seed"].get<long long>() >= 0))) {
    throw InputError("seed must be an unsigned integer");
  }
  return c;
}

const nlohmann::json& ExperimentConfig::at(const std::string& key) const {
  if (!json_.contains(key)) throw InputError("config is missing \"" + key + "\"");
  return json_.at(key);
}

double ExperimentConfig::knob(const std::string& name, double fallback) const {
  if (!json_.contains("knobs") || !json_["knobs"].contains(name)) return fallback;
  const auto& v = json_["knobs"][name];
  if (!v.is_number()) throw InputError("knob " + name + " must be a number");
  return v.get<double>();
}

int ExperimentConfig::knob_int(const std::string& name, int fallback) const {
  const double v = knob(name, fallback);
  if (v != std::floor(v)) throw InputError("knob " + name + " must be an integer");
  return static_cast<int>(v);
}

CoverModel ExperimentConfig::cover_model() const { return cover_model_from_json(at("model")); }

Hamiltonian ExperimentConfig::hamiltonian(const ModelSpace& space) const {
  const auto& h = at("hamiltonian");
  return builtin_hamiltonian(h.at("name").get<std::string>(), space,
                             h.value("params", nlohmann::json::object()));
}

// ---------------------------------------------------------------------------
// Result tables

nlohmann::json to_json(const ResultRow& r) {
  return {{"suite", r.suite},
          {"name", r.name},
          {"value", r.value ? nlohmann::json(*r.value) : nlohmann::json(nullptr)},
          {"criterion", r.criterion},
          {"status", r.status},
          {"detail", r.detail}};
}

Verdict verdict_of(const std::vector<ResultRow>& rows) {
  Verdict v = Verdict::pass;
  for (const auto& r : rows) {
    if (r.status == "FAIL" || r.status == "XPASS" || r.status == "ERROR") v = combine(v, Verdict::fail);
    if (r.status == "INCONCLUSIVE") v = combine(v, Verdict::inconclusive);
  }
  return v;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

ResultRow row(const std::string& suite, const std::string& name, std::optional<double> value,
              const std::string& criterion, bool ok, const std::string& detail = "") {
  return {suite, name, value, criterion, ok ? "PASS" : "FAIL", detail};
}

nlohmann::json rows_json(const std::vector<ResultRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

ExperimentResult finish(const std::string& command, const ExperimentConfig& c, std::vector<ResultRow> rows,
                        nlohmann::json payload, std::optional<Verdict> verdict = std::nullopt) {
  ExperimentResult r;
  r.command = command;
  r.rows = std::move(rows);
  r.verdict = verdict ? combine(*verdict, verdict_of(r.rows)) : verdict_of(r.rows);
  r.report = {{"command", command},
              {"config", c.resolved()},
              {"seed", c.seed()},
              {"verdict", to_string(r.verdict)},
              {"rows", rows_json(r.rows)}};
  for (auto& [k, v] : payload.items()) r.report[k] = v;
  r.csv = rows_to_csv(r.rows);
  return r;
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "suite,name,value,criterion,status,detail\n";
  for (const auto& r : rows) {
    out += csv_field(r.suite) + ',' + csv_field(r.name) + ',' + (r.value ? format_value(*r.value) : "") + ',' +
           csv_field(r.criterion) + ',' + r.status + ',' + csv_field(r.detail) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zero finding on [0, 1)^n

namespace {

using VecMap = std::function<Vec(const Vec&)>;

Mat fd_jacobian(const VecMap& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Mat j(n, n);
  for (int k = 0; k < n; ++k) {
    Vec a = x, b = x;
    a[k] += h;
    b[k] -= h;
    j.col(k) = (f(a) - f(b)) / (2 * h);
  }
  return j;
}

double min_singular_value(const Mat& j) {
  Eigen::JacobiSVD<Mat> svd(j);
  return svd.singularValues().minCoeff();
}

double wrap01(double v) {
  v -= std::floor(v);
  return v >= 1.0 ? 0.0 : v;
}

Vec wrap_all(const Vec& x) {
  Vec y = x;
  for (int i = 0; i < y.size(); ++i) y[i] = wrap01(y[i]);
  return y;
}

bool same_point(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    d = std::min(d, 1.0 - d);
    if (d > 1e-6) return false;
  }
  return true;
}

struct Root {
  Vec x;
  double margin;
};

// Sign changes along the grid, refined by bisection.
std::vector<Root> zeros_1d(const VecMap& f, int grid, double fd) {
  auto g = [&](double x) { return f(Vec::Constant(1, x))[0]; };
  std::vector<double> vals(grid + 1);
  for (int i = 0; i <= grid; ++i) vals[i] = g(static_cast<double>(i) / grid);
  std::vector<Root> roots;
  boost::math::tools::eps_tolerance<double> stop(48);
  auto add = [&](double x) {
    const double slope = (g(x + fd) - g(x - fd)) / (2 * fd);
    roots.push_back({Vec::Constant(1, wrap01(x)), std::abs(slope)});
  };
  for (int i = 0; i < grid; ++i) {
    const double a = static_cast<double>(i) / grid, b = static_cast<double>(i + 1) / grid;
    if (vals[i] == 0.0) {
      add(a);
    } else if (vals[i] * vals[i + 1] < 0.0) {
      const auto br = boost::math::tools::bisect(g, a, b, stop);
      add(0.5 * (br.first + br.second));
    }
  }
  return roots;
}

// Cells whose corners bracket zero in every component seed a Newton iteration.
std::vector<Root> zeros_nd(const VecMap& f, int n, int grid, double fd) {
  std::vector<int> idx(n, 0);
  auto point = [&](const std::vector<int>& k) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(k[i]) / grid;
    return x;
  };
  std::map<std::vector<int>, Vec> cache;
  auto value = [&](const std::vector<int>& k) -> const Vec& {
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, f(point(k))).first;
    return it->second;
  };
  std::vector<Root> roots;
  auto record = [&](const Vec& x) {
    const Vec w = wrap_all(x);
    for (const auto& r : roots) {
      if (same_point(r.x, w)) return;
    }
    roots.push_back({w, min_singular_value(fd_jacobian(f, x, fd))});
  };
  while (true) {
    Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
    Vec hi = -lo;
    for (int corner = 0; corner < (1 << n); ++corner) {
      std::vector<int> k = idx;
      for (int i = 0; i < n; ++i) k[i] += (corner >> i) & 1;
      const Vec& v = value(k);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const bool bracket = (lo.array() <= 0.0).all() && (hi.array() >= 0.0).all();
    if (bracket) {
      Vec x = point(idx).array() + 0.5 / grid;
      bool ok = false;
      for (int it = 0; it < 40; ++it) {
        const Vec fx = f(x);
        if (fx.norm() < 1e-12) {
          ok = true;
          break;
        }
        const Mat j = fd_jacobian(f, x, fd);
        if (min_singular_value(j) < 1e-14) break;
        x -= j.fullPivLu().solve(fx);
      }
      if (ok || f(x).norm() < 1e-10) {
        record(x);
      } else {
        const Vec c = point(idx);
        if (value(idx).norm() == 0.0) record(c);
      }
    }
    int i = n - 1;
    while (i >= 0 && idx[i] == grid - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
  });
  return roots;
}

void require_closed_torus(const CoverModel& m, const Hamiltonian& h) {
  const auto& s = m.base();
  if (s.lines != 0 || s.circles < 1 || s.circles > 2) {
    throw PreconditionError("intersection experiments need T*S^1 or T*T^2");
  }
  if (h.support.kind == Support::Kind::unbounded) {
    throw PreconditionError("intersection experiments need a compactly supported Hamiltonian");
  }
}

IntersectionCount collect(const std::vector<Root>& roots, const VecMap& land, const ZeroSearchOptions& opts) {
  IntersectionCount out;
  for (const auto& r : roots) {
    IntersectionPoint p;
    p.parameter = r.x;
    p.location = wrap_all(land(r.x));
    p.margin = r.margin;
    if (p.margin < opts.transverse_tol) out.transverse = false;
    out.points.push_back(std::move(p));
  }
  if (!out.transverse) {
    out.diagnostic = "intersection with margin below " + format_value(opts.transverse_tol) +
                     "; the count is only meaningful for transverse intersections";
  }
  return out;
}

void check_search(const ZeroSearchOptions& opts) {
  if (!(opts.t > 0.0) || opts.steps < 1 || opts.grid < 2 || !(opts.transverse_tol > 0.0) || !(opts.fd_step > 0.0)) {
    throw InputError("zero search options must be positive (grid >= 2)");
  }
}

}  // namespace

nlohmann::json IntersectionCount::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"parameter", std::vector<double>(p.parameter.data(), p.parameter.data() + p.parameter.size())},
                   {"location", std::vector<double>(p.location.data(), p.location.data() + p.location.size())},
                   {"margin", p.margin}});
  }
  return {{"count", count()}, {"transverse", transverse}, {"diagnostic", diagnostic}, {"points", pts}};
}

IntersectionCount zero_section_intersections(const CoverModel& m, const Hamiltonian& h,
                                             const ZeroSearchOptions& opts) {
  require_closed_torus(m, h);
  check_search(opts);
  const int n = m.dim();
  const LcsPair pair(m);
  FlowConfig cfg;
  cfg.steps = opts.steps;
  cfg.estimate_error = false;
  cfg.record = false;
  auto image = [&](const Vec& theta) {
    Vec p(2 * n);
    p << theta, Vec::Zero(n);
    return flow(pair, h, p, 0.0, opts.t, cfg).final_point();
  };
  const VecMap fiber = [&](const Vec& theta) -> Vec { return image(theta).tail(n); };
  const VecMap land = [&](const Vec& theta) -> Vec { return image(theta).head(n); };
  const auto roots = n == 1 ? zeros_1d(fiber, opts.grid, opts.fd_step) : zeros_nd(fiber, n, opts.grid, opts.fd_step);
  return collect(roots, land, opts);
}

IntersectionCount psi_intersections(const CoverModel& m, const Hamiltonian& h, const ZeroSearchOptions& opts) {
  require_closed_torus(m, h);
  check_search(opts);
  const int n = m.dim();
  const auto f = lift_hamiltonian(LiftKind::equivariant, m, h);
  auto image = [&](const Vec& x0) {
    HomogeneousPoint q;
    q.x = x0;
    q.xi = Vec::Zero(n);
    q.s = 0.0;
    q.sigma = 1.0;
    return flow_homogeneous_to(f, q, opts.t, opts.steps);
  };
  // Lambda_psi has covector (-e^{-g} s dg, e^{-g}); matching sigma fixes the scale of the
  // conic image, leaving xi / sigma = -s dg.
  const VecMap residual = [&](const Vec& x0) -> Vec {
    const auto q = image(x0);
    return q.xi / q.sigma + q.s * m.dprimitive(q.x);
  };
  const VecMap land = [&](const Vec& x0) -> Vec { return m.project(image(x0).x); };
  const auto roots =
      n == 1 ? zeros_1d(residual, opts.grid, opts.fd_step) : zeros_nd(residual, n, opts.grid, opts.fd_step);
  return collect(roots, land, opts);
}

nlohmann::json IntersectionReport::to_json() const {
  return {{"intersections", intersections.to_json()},
          {"cj", cj},
          {"bound", bound},
          {"verdict", to_string(verdict)},
          {"note", note}};
}

IntersectionReport chantraine_murphy_check(const CoverModel& m, const Hamiltonian& h,
                                           const ZeroSearchOptions& opts, int k_max, Field field) {
  IntersectionReport r;
  r.intersections = zero_section_intersections(m, h, opts);
  TorusSpec spec;
  spec.circles = m.base().circles;
  spec.lattice = m.beta().lattice();
  spec.subdivisions = 3;
  const auto est = estimate_cj(torus_model(spec), k_max, field);
  r.cj = est.estimate;
  r.bound = est.sum();
  if (!r.intersections.transverse) {
    r.verdict = Verdict::inconclusive;
    r.note = r.intersections.diagnostic.empty() ? "degenerate: no transverse intersections"
                                                : r.intersections.diagnostic;
  } else if (r.intersections.count() + 1e-9 >= r.bound) {
    r.verdict = Verdict::pass;
    if (r.bound < 1e-9) r.note = "lower bound is 0 (Morse-Novikov homology vanishes); the inequality is vacuous";
  } else {
    r.verdict = Verdict::fail;
    r.note = "fewer transverse intersections than sum of c_j";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Non-squeezing

nlohmann::json NonsqueezeReport::to_json() const {
  return {{"candidate", candidate},
          {"equivariant", equivariant},
          {"equivariance_deviation", equivariance_deviation},
          {"witness", std::vector<double>(witness.data(), witness.data() + witness.size())},
          {"max_radius", max_radius},
          {"contained", contained},
          {"outcome", outcome},
          {"ball_energy", ball_energy},
          {"squeeze_budget", squeeze_budget}};
}

NonsqueezeReport nonsqueeze_check(const CoverModel& m, const Hamiltonian& h, const std::string& candidate,
                                  const NonsqueezeOptions& opts) {
  const auto& s = m.base();
  if (s.circles != 1 || s.lines < 1 || m.beta().lattice() != std::vector<int>{1}) {
    throw PreconditionError("non-squeezing runs on S^1_z x R^n with beta = dz");
  }
  if (!(opts.r1 > 0.0 && opts.r2 > 0.0 && opts.t > 0.0 && opts.zeta_range > 0.0) || opts.steps < 1 ||
      opts.samples < 1) {
    throw InputError("non-squeezing options must be positive");
  }
  if (!(M_PI * opts.r1 * opts.r1 >= opts.k && opts.k >= M_PI * opts.r2 * opts.r2)) {
    throw InputError("need pi R1^2 >= k >= pi R2^2");
  }
  const int n = m.dim();
  const int lines = s.lines;
  const LcsPair pair(m);
  FlowConfig cfg;
  cfg.steps = opts.steps;
  cfg.estimate_error = false;
  cfg.record = false;
  auto phi = [&](const Vec& p) { return flow(pair, h, p, 0.0, opts.t, cfg).final_point(); };

  NonsqueezeReport r;
  r.candidate = candidate;
  r.ball_energy = 2.0 * energy_fibered(ball_sheaf(2, opts.r1)).energy;
  r.squeeze_budget = M_PI * opts.r2 * opts.r2;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> cloud;
  for (int k = 0; k < opts.samples; ++k) {
    // (x_1..x_n, xi_1..xi_n) in the closed ball; every other point on its boundary sphere.
    Vec w(2 * lines);
    for (int i = 0; i < 2 * lines; ++i) w[i] = normal(rng);
    const double radius = k % 2 == 0 ? opts.r1 : opts.r1 * std::pow(unit(rng), 1.0 / (2 * lines));
    w *= radius / w.norm();
    Vec p = Vec::Zero(2 * n);
    p[0] = unit(rng);
    p[n] = opts.zeta_range * (2 * unit(rng) - 1);
    p.segment(1, lines) = w.head(lines);
    p.segment(n + 1, lines) = w.tail(lines);
    cloud.push_back(std::move(p));
  }

  // zeta -> zeta + 1 must commute with the flow.
  const int checks = std::min<int>(opts.samples, 32);
  for (int k = 0; k < checks; ++k) {
    Vec shifted = cloud[k];
    shifted[n] += 1.0;
    Vec a = phi(shifted);
    a[n] -= 1.0;
    const double dev = (a - phi(cloud[k])).lpNorm<Eigen::Infinity>();
    if (k == 0 || dev > r.equivariance_deviation) {
      r.equivariance_deviation = dev;
      r.witness = cloud[k];
    }
  }
  r.equivariant = r.equivariance_deviation <= opts.equivariance_tol;
  if (!r.equivariant) {
    r.outcome = "rejected";
    return r;
  }
  for (const auto& p : cloud) {
    const Vec q = phi(p);
    r.max_radius = std::max(r.max_radius, std::hypot(q[1], q[n + 1]));
  }
  r.contained = r.max_radius < opts.r2;
  r.outcome = r.contained ? "containment_observed" : "consistent";
  return r;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

bool flow_identity(const std::string& name) {
  return name != "rho_factorization" && name != "TcDc";
}

Field config_field(const ExperimentConfig& c) {
  return c.has("field") ? field_from_string(c.at("field").get<std::string>()) : Field::F2;
}

ZeroSearchOptions search_options(const ExperimentConfig& c) {
  ZeroSearchOptions o;
  o.t = c.knob("t", o.t);
  o.steps = c.knob_int("steps", o.steps);
  o.grid = c.knob_int("grid", o.grid);
  o.transverse_tol = c.knob("transverse_tol", o.transverse_tol);
  o.fd_step = c.knob("fd_step", o.fd_step);
  return o;
}

}  // namespace

ExperimentResult cmd_verify(const ExperimentConfig& c) {
  const auto m = c.cover_model();
  const auto h = c.hamiltonian(m.base());
  const int n = m.dim();
  const double t = c.knob("t", 1.0);
  const int samples = c.knob_int("samples", 20);
  const unsigned long long seed = c.seed();
  IdentityOptions io;
  io.steps = c.knob_int("steps", 1000);
  io.seed = seed;
  const double flow_tol = c.knob("flow_tol", 1e-5);
  const double exact_tol = c.knob("exact_tol", 1e-12);
  const double witness_floor = c.knob("witness_floor", 1e-2);

  std::vector<std::string> names;
  if (c.has("identities")) {
    names = c.at("identities").get<std::vector<std::string>>();
  } else {
    // s_shift_equivariance only holds for zeta-periodic candidates on S^1_z x R^n; list it explicitly.
    for (const auto& name : identity_names()) {
      const bool deck = name.rfind("deck_", 0) == 0;
      if ((!deck || m.rank() > 0) && name != "s_shift_equivariance") names.push_back(name);
    }
  }
  const auto pts = random_homogeneous_points(n, samples, seed);
  std::vector<ResultRow> rows;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& name : names) {
    const auto rep = verify_identity(name, m, h, pts, t, io);
    reports.push_back(to_json(rep));
    if (name == "deck_nonequivariance_cl") {
      const bool seen = rep.max_deviation >= witness_floor;
      rows.push_back({"lifts", name, rep.max_deviation, ">= " + format_value(witness_floor) + " (expected failure)",
                      seen ? "XFAIL" : "XPASS", seen ? "classical lift is not deck equivariant" : "no witness found"});
      continue;
    }
    const double tol = flow_identity(name) ? flow_tol : exact_tol;
    rows.push_back(row("lifts", name, rep.max_deviation, "< " + format_value(tol), rep.max_deviation < tol));
  }

  if (c.knob_int("liouville", 1) != 0) {
    const double d = liouville_pullback_defect(m, pts);
    rows.push_back(row("lifts", "liouville_pullback", d, "< 1e-06", d < 1e-6));
  }

  nlohmann::json order = nullptr;
  if (c.has("knobs") && c.at("knobs").contains("order_base_steps")) {
    const int base = c.knob_int("order_base_steps", 25);
    const int count = std::min(samples, c.knob_int("order_samples", 5));
    std::vector<HomogeneousPoint> few(pts.begin(), pts.begin() + count);
    std::vector<double> dev;
    for (int mult : {1, 2, 4}) {
      IdentityOptions o = io;
      o.steps = base * mult;
      dev.push_back(verify_identity("diagram_eq", m, h, few, t, o).max_deviation);
    }
    const double r1 = std::log2(dev[0] / dev[1]), r2 = std::log2(dev[1] / dev[2]);
    const bool ok = r1 >= 3.5 && r1 <= 4.5 && r2 >= 3.5 && r2 <= 4.5;
    rows.push_back(row("lifts", "diagram_eq_order", std::min(r1, r2), "log2 ratios in [3.5, 4.5]", ok,
                       "ratios " + format_value(r1) + ", " + format_value(r2)));
    order = {{"base_steps", base}, {"deviations", dev}, {"log2_ratios", {r1, r2}}};
  }

  const int forms = c.knob_int("dbeta_samples", 0);
  if (forms > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    const double fd = c.knob("fd_step", 1e-4);
    double worst = 0.0;
    for (int k = 0; k < forms; ++k) {
      const bool cot = k % 2 == 1;
      const int dim = cot ? 2 * n : n;
      const int degree = static_cast<int>(rng() % static_cast<unsigned long long>(std::max(1, dim - 1)));
      const auto alpha = random_trig_form(dim, degree, cot ? FormDomain::cotangent : FormDomain::base, seed + k);
      Vec p(dim);
      for (int i = 0; i < dim; ++i) p[i] = coord(rng);
      const std::vector<Vec> one{p};
      worst = std::max(worst, check_dbeta_squared(alpha, m.beta(), one, fd));
    }
    rows.push_back(row("geometry", "dbeta_squared", worst, "< 1e-06", worst < 1e-6,
                       std::to_string(forms) + " random forms"));
  }
  return finish("verify", c, std::move(rows), {{"identities", reports}, {"order_check", order}});
}

ExperimentResult cmd_betti(const ExperimentConfig& c) {
  const auto model = equivariant_model_from_json(c.at("sheaf_model"));
  const int k_max = c.knob_int("k_max", 4);
  const double tol = c.knob("tol", 1e-9);
  const Field field = config_field(c);
  const auto est = estimate_cj(model, k_max, field, tol);
  std::vector<ResultRow> rows;
  rows.push_back({"betti", "converged", est.estimate.empty() ? 0.0 : est.estimate[0],
                  "|last difference| < " + format_value(tol), est.converged ? "PASS" : "INCONCLUSIVE",
                  "converged_at k = " + std::to_string(est.converged_at)});
  nlohmann::json payload = {{"estimate", est.to_json()}};
  if (const auto oracle = morse_novikov_oracle(model)) {
    bool ok = true;
    for (std::size_t j = 0; j < oracle->size(); ++j) {
      const double cj = j < est.estimate.size() ? est.estimate[j] : 0.0;
      ok = ok && cj + 1e-9 >= static_cast<double>((*oracle)[j]);
    }
    rows.push_back(row("betti", "cj_dominates_oracle", est.sum(), "c_j >= rank HN_j", ok));
    payload["oracle"] = *oracle;
  } else {
    payload["oracle"] = "unsupported";
  }
  if (c.has("compare_model")) {
    const auto other = equivariant_model_from_json(c.at("compare_model"));
    const auto rep = check_domain_independence(model, other, k_max, field, tol);
    rows.push_back(row("betti", "domain_independence", rep.estimate_gap,
                       "bound C (2k+1)^(r-1) and gap <= " + format_value(rep.allowed_gap), rep.passed(),
                       "C = " + format_value(rep.fitted_constant)));
    payload["domain_independence"] = rep.to_json();
  }
  auto r = finish("betti", c, std::move(rows), payload);
  std::ostringstream csv;
  est.write_csv(csv);
  r.csv = csv.str();
  return r;
}

ExperimentResult cmd_energy(const ExperimentConfig& c) {
  std::vector<ResultRow> rows;
  nlohmann::json modules = nlohmann::json::array();
  nlohmann::json fibered = nlohmann::json::array();
  const int samples = c.knob_int("samples", 10000);
  const double delta_default = c.knob("delta", 1.0 / 200);
  if (c.has("modules")) {
    int idx = 0;
    for (const auto& mj : c.at("modules")) {
      const auto f = tamarkin_module_from_json(mj);
      const auto e = energy(f);
      const std::string name = mj.value("name", "module_" + std::to_string(idx++));
      nlohmann::json entry = {{"name", name}, {"energy", e.to_json()}};
      if (mj.contains("expected")) {
        const auto& x = mj.at("expected");
        const double want = x.is_string() ? kInfinity : x.get<double>();
        rows.push_back(row("energy", name, e.energy, "== " + format_value(want), e.energy == want));
      }
      std::vector<double> grid;
      for (int k = 0; k <= 40; ++k) grid.push_back(0.25 * k);
      const auto mono = check_tau_monotone(f, grid);
      rows.push_back(row("energy", name + "_tau_monotone", mono.violations, "0 violations", mono.monotone()));
      entry["tau_monotone"] = mono.to_json();
      modules.push_back(entry);
    }
  }
  if (c.has("fibered")) {
    int idx = 0;
    for (const auto& fj : c.at("fibered")) {
      const auto f = fibered_from_json(fj);
      const std::string name = fj.value("name", f.name.empty() ? "fibered_" + std::to_string(idx) : f.name);
      ++idx;
      const auto e = energy_fibered(f, samples);
      nlohmann::json entry = {{"name", name}, {"sampled", e.to_json()}};
      if (fj.contains("expected")) {
        const double want = fj.at("expected").get<double>();
        const double tol = fj.value("tol", 1e-3);
        rows.push_back(row("energy", name, e.energy, "within " + format_value(tol) + " of " + format_value(want),
                           std::abs(e.energy - want) <= tol));
      }
      const double delta = fj.value("delta", delta_default);
      if (delta > 0.0) {
        const auto cell = energy_cellular(f, delta);
        const double gap = std::abs(cell.report.energy - e.energy);
        rows.push_back(row("energy", name + "_cellular", cell.report.energy, "within one cell " + format_value(delta),
                           gap <= delta && cell.sections_below == 1 && cell.sections_at == 0));
        entry["cellular"] = cell.to_json();
      }
      if (fj.contains("r_strip")) {
        const auto sq = verify_squeeze_bound(f, fj.at("r_strip").get<double>(), samples);
        const bool expect_violation = fj.value("expect_violation", false);
        if (expect_violation) {
          rows.push_back({"energy", name + "_squeeze", sq.margin, "margin < 0 (designed violation)",
                          sq.holds ? "XPASS" : "XFAIL",
                          "a violation means the microsupport cone condition cannot hold for this sheaf"});
        } else {
          rows.push_back(row("energy", name + "_squeeze", sq.margin, "e <= 4 r^2", sq.holds));
        }
        entry["squeeze"] = sq.to_json();
      }
      fibered.push_back(entry);
    }
  }
  return finish("energy", c, std::move(rows), {{"modules", modules}, {"fibered", fibered}});
}

ExperimentResult cmd_intersections(const ExperimentConfig& c) {
  const auto m = c.cover_model();
  const auto h = c.hamiltonian(m.base());
  const auto rep = chantraine_murphy_check(m, h, search_options(c), c.knob_int("k_max", 3), config_field(c));
  std::vector<ResultRow> rows;
  ResultRow r{"intersections", "transverse_count", double(rep.intersections.count()),
              ">= " + format_value(rep.bound), to_string(rep.verdict) == "pass" ? "PASS" : "FAIL", rep.note};
  if (rep.verdict == Verdict::inconclusive) r.status = "INCONCLUSIVE";
  rows.push_back(r);
  auto out = finish("intersections", c, std::move(rows), {{"intersection_report", rep.to_json()}});
  std::ostringstream csv;
  csv << "index,parameter,location,margin\n";
  for (std::size_t i = 0; i < rep.intersections.points.size(); ++i) {
    const auto& p = rep.intersections.points[i];
    auto join = [](const Vec& v) {
      std::string s;
      for (int k = 0; k < v.size(); ++k) s += (k ? " " : "") + format_value(v[k]);
      return s;
    };
    csv << i << ',' << join(p.parameter) << ',' << join(p.location) << ',' << format_value(p.margin) << '\n';
  }
  out.csv = csv.str();
  return out;
}

ExperimentResult cmd_psi_correspondence(const ExperimentConfig& c) {
  const auto m = c.cover_model();
  const auto h = c.hamiltonian(m.base());
  const auto opts = search_options(c);
  const auto down = zero_section_intersections(m, h, opts);
  const auto up = psi_intersections(m, h, opts);
  std::vector<ResultRow> rows;
  ResultRow r{"psi", "upstairs_equals_downstairs", double(up.count()),
              "== " + std::to_string(down.count()), up.count() == down.count() ? "PASS" : "FAIL", ""};
  if (!up.transverse || !down.transverse) {
    r.status = "INCONCLUSIVE";
    r.detail = "skipped: " + (down.diagnostic.empty() ? up.diagnostic : down.diagnostic);
  }
  rows.push_back(r);
  return finish("psi", c, std::move(rows), {{"upstairs", up.to_json()}, {"downstairs", down.to_json()}});
}

ExperimentResult cmd_nonsqueeze(const ExperimentConfig& c) {
  const auto m = c.cover_model();
  NonsqueezeOptions o;
  o.r1 = c.knob("R1", o.r1);
  o.r2 = c.knob("R2", o.r2);
  o.k = c.knob_int("k", o.k);
  o.t = c.knob("t", o.t);
  o.steps = c.knob_int("steps", o.steps);
  o.samples = c.knob_int("samples", o.samples);
  o.zeta_range = c.knob("zeta_range", o.zeta_range);
  o.equivariance_tol = c.knob("equivariance_tol", o.equivariance_tol);
  o.seed = c.seed();
  std::vector<ResultRow> rows;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& cand : c.at("candidates")) {
    const std::string name = cand.at("name").get<std::string>();
    const auto& hj = cand.at("hamiltonian");
    const auto h = builtin_hamiltonian(hj.at("name").get<std::string>(), m.base(),
                                       hj.value("params", nlohmann::json::object()));
    const auto rep = nonsqueeze_check(m, h, name, o);
    const std::string expect = cand.value("expect", std::string("consistent"));
    std::string detail;
    if (rep.outcome == "consistent") {
      detail = "containment fails; consistent with lcs non-squeezing (e >= " + format_value(rep.ball_energy) +
               " >= k = " + std::to_string(o.k) + " >= pi R2^2 = " + format_value(rep.squeeze_budget) + ")";
    } else if (rep.outcome == "rejected") {
      detail = "candidate does not commute with zeta -> zeta + 1; deviation " +
               format_value(rep.equivariance_deviation);
    } else {
      detail = "containment observed: flags non-equivariance or sampling failure, not a counterexample";
    }
    rows.push_back(row("nonsqueeze", name, rep.outcome == "rejected" ? rep.equivariance_deviation : rep.max_radius,
                       "outcome == " + expect, rep.outcome == expect, detail));
    reports.push_back(rep.to_json());
  }
  return finish("nonsqueeze", c, std::move(rows), {{"candidates", reports}});
}

std::vector<std::string> command_names() {
  return {"verify", "betti", "energy", "intersections", "psi", "nonsqueeze", "all"};
}

ExperimentResult run_command(const std::string& command, const ExperimentConfig& c) {
  if (command == "verify") return cmd_verify(c);
  if (command == "betti") return cmd_betti(c);
  if (command == "energy") return cmd_energy(c);
  if (command == "intersections") return cmd_intersections(c);
  if (command == "psi") return cmd_psi_correspondence(c);
  if (command == "nonsqueeze") return cmd_nonsqueeze(c);
  if (command == "all") return cmd_run_all(c);
  throw InputError("unknown command: " + command);
}

ExperimentResult cmd_run_all(const ExperimentConfig& c) {
  std::vector<ResultRow> rows;
  nlohmann::json runs = nlohmann::json::array();
  if (c.has("experiments")) {
    for (const auto& e : c.at("experiments")) {
      const std::string command = e.value("command", std::string());
      const std::string label = e.value("name", command);
      try {
        if (command == "all") throw InputError("nested 'all' runs are not allowed");
        auto sub_json = e.value("config", nlohmann::json::object());
        if (!sub_json.contains("seed")) sub_json["seed"] = c.seed();
        const auto sub = ExperimentConfig::from_json(sub_json);
        auto res = run_command(command, sub);
        for (auto r : res.rows) {
          r.suite = label;
          rows.push_back(std::move(r));
        }
        runs.push_back({{"name", label}, {"verdict", to_string(res.verdict)}});
      } catch (const std::exception& ex) {
        rows.push_back({label, command, std::nullopt, "runs", "ERROR", ex.what()});
        runs.push_back({{"name", label}, {"verdict", "error"}, {"error", ex.what()}});
      }
    }
  }
  return finish("all", c, std::move(rows), {{"runs", runs}});
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lcs
