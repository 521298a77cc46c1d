#include "lcslab/tamarkin.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace lcs {

namespace {

bool nonzero(const IntervalSummand& s) { return s.multiplicity > 0; }

nlohmann::json energy_value(double e) {
  if (std::isinf(e)) return "inf";
  return e;
}

}  // namespace

TamarkinModule::TamarkinModule(IntervalModule m) : module_(std::move(m)) {
  module_.validate();
  for (const auto& s : module_.summands) {
    if (std::isinf(s.left)) throw InputError("Tamarkin summands need a finite left endpoint");
    if (!s.left_closed || s.right_closed) {
      throw InputError("Tamarkin summands must be of the form [a, b) or [a, inf)");
    }
    if (!(s.left < s.right)) throw InputError("Tamarkin summands must be nonempty");
  }
}

bool TamarkinModule::empty() const {
  return std::none_of(summands().begin(), summands().end(), nonzero);
}

bool tau_nonzero(const TamarkinModule& f, double c) {
  if (!(c >= 0.0)) throw InputError("tau_c needs c >= 0");
  for (const auto& s : f.summands()) {
    if (nonzero(s) && (std::isinf(s.right) || s.left + c < s.right)) return true;
  }
  return false;
}

TamarkinModule shift(const TamarkinModule& f, double a) {
  IntervalModule m = f.module();
  for (auto& s : m.summands) {
    s.left += a;
    s.right += a;
  }
  return TamarkinModule(std::move(m));
}

TamarkinModule direct_sum(const TamarkinModule& f, const TamarkinModule& g) {
  IntervalModule m = f.module();
  m.summands.insert(m.summands.end(), g.summands().begin(), g.summands().end());
  return TamarkinModule(std::move(m));
}

nlohmann::json EnergyReport::to_json() const {
  nlohmann::json j = {{"energy", energy_value(energy)}, {"attained", attained}, {"method", method}};
  j["resolution"] = resolution ? nlohmann::json(*resolution) : nlohmann::json(nullptr);
  return j;
}

EnergyReport energy(const TamarkinModule& f) {
  EnergyReport r;
  r.method = "closed_form";
  for (const auto& s : f.summands()) {
    if (nonzero(s)) r.energy = std::max(r.energy, s.right - s.left);
  }
  // tau_c vanishes at c = b - a, so a finite supremum is never attained.
  r.attained = false;
  return r;
}

nlohmann::json MonotoneReport::to_json() const {
  return {{"grid", grid}, {"values", values}, {"violations", violations}, {"monotone", monotone()}};
}

MonotoneReport check_tau_monotone(const TamarkinModule& f, const std::vector<double>& c_grid) {
  if (!std::is_sorted(c_grid.begin(), c_grid.end())) throw InputError("c grid must be sorted");
  MonotoneReport r;
  r.grid = c_grid;
  bool seen_false = false;
  for (double c : c_grid) {
    const bool v = tau_nonzero(f, c);
    if (v && seen_false) ++r.violations;
    seen_false = seen_false || !v;
    r.values.push_back(v);
  }
  return r;
}

TamarkinModule random_tamarkin_module(std::mt19937_64& rng, int count, double infinite_rate) {
  std::uniform_int_distribution<int> left(-320, 319);
  std::uniform_int_distribution<int> length(1, 256);
  std::uniform_int_distribution<int> shift(0, 2);
  std::uniform_int_distribution<int> mult(1, 3);
  std::bernoulli_distribution infinite(infinite_rate);
  IntervalModule m;
  for (int i = 0; i < count; ++i) {
    IntervalSummand s;
    s.left = left(rng) / 64.0;
    s.right = infinite(rng) ? kInfinity : s.left + length(rng) / 64.0;
    s.shift = shift(rng);
    s.multiplicity = mult(rng);
    m.summands.push_back(s);
  }
  return TamarkinModule(std::move(m));
}

namespace {

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

FiberedIntervalSheaf ball_sheaf(int n, double radius) {
  if (n < 1) throw InputError("ball sheaf needs n >= 1");
  if (!(radius > 0.0)) throw InputError("ball sheaf needs R > 0");
  FiberedIntervalSheaf f;
  f.name = "ball(n=" + std::to_string(n) + ", R=" + std::to_string(radius) + ")";
  f.lo.assign(n, -radius);
  f.hi.assign(n, radius);
  f.in_base = [radius](const std::vector<double>& x) { return norm(x) <= radius * (1 + 1e-12); };
  auto f1 = [radius](const std::vector<double>& x) {
    const double r = std::min(norm(x), radius);
    if (r == 0.0) return 0.0;
    auto g = [radius](double u) { return std::sqrt(std::max(0.0, radius * radius - u * u)); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, r, 15, 1e-13);
  };
  f.f1 = f1;
  const double top = M_PI * radius * radius / 2;
  f.f2 = [f1, top](const std::vector<double>& x) { return top - f1(x); };
  return f;
}

FiberedIntervalSheaf constant_profile(std::vector<double> lo, std::vector<double> hi, double height) {
  if (lo.empty() || lo.size() != hi.size()) throw InputError("constant profile needs matching box bounds");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw InputError("constant profile box is empty");
  }
  FiberedIntervalSheaf f;
  f.name = "constant(h=" + std::to_string(height) + ")";
  f.lo = std::move(lo);
  f.hi = std::move(hi);
  f.in_base = [](const std::vector<double>&) { return true; };
  f.f1 = [](const std::vector<double>&) { return 0.0; };
  f.f2 = [height](const std::vector<double>&) { return height; };
  return f;
}

FiberedIntervalSheaf fibered_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "ball") return ball_sheaf(j.value("n", 2), j.value("R", 1.0));
    if (type == "constant") {
      return constant_profile(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>(),
                              j.at("height").get<double>());
    }
    throw InputError("unknown fibered sheaf type: " + type);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed fibered sheaf: ") + e.what());
  }
}

namespace {

std::vector<std::vector<double>> grid_points(const FiberedIntervalSheaf& f, const std::vector<int>& counts) {
  std::vector<std::vector<double>> pts;
  const int n = f.dim();
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
      x[i] = counts[i] == 1 ? 0.5 * (f.lo[i] + f.hi[i])
                            : f.lo[i] + (f.hi[i] - f.lo[i]) * idx[i] / (counts[i] - 1);
    }
    if (f.in_base(x)) pts.push_back(std::move(x));
    int i = n - 1;
    while (i >= 0 && idx[i] == counts[i] - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  return pts;
}

}  // namespace

std::vector<std::vector<double>> base_samples(const FiberedIntervalSheaf& f, int samples) {
  if (samples < 1) throw InputError("need at least one sample");
  int per = static_cast<int>(std::ceil(std::pow(static_cast<double>(samples), 1.0 / f.dim())));
  if (per % 2 == 0) ++per;
  return grid_points(f, std::vector<int>(f.dim(), per));
}

EnergyReport energy_fibered(const FiberedIntervalSheaf& f, int samples) {
  const auto pts = base_samples(f, samples);
  EnergyReport r;
  r.method = "sampled";
  double spacing = 0.0;
  const int per = static_cast<int>(std::round(std::pow(static_cast<double>(samples), 1.0 / f.dim())));
  for (int i = 0; i < f.dim(); ++i) spacing = std::max(spacing, (f.hi[i] - f.lo[i]) / std::max(1, per));
  r.resolution = spacing;
  for (const auto& x : pts) {
    const double a = f.f1(x), b = f.f2(x);
    if (a > b + 1e-9 * std::max(1.0, std::abs(b))) throw ValidationError("fibered sheaf has f1 > f2 at a base point");
    r.energy = std::max(r.energy, b - a);
  }
  r.attained = false;
  return r;
}

nlohmann::json CellularEnergy::to_json() const {
  nlohmann::json j = report.to_json();
  j["witness"] = witness;
  j["sections_below"] = sections_below;
  j["sections_at"] = sections_at;
  return j;
}

CellularEnergy energy_cellular(const FiberedIntervalSheaf& f, double delta) {
  if (!(delta > 0.0)) throw InputError("grid step must be positive");
  std::vector<int> counts(f.dim());
  for (int i = 0; i < f.dim(); ++i) counts[i] = static_cast<int>(std::round((f.hi[i] - f.lo[i]) / delta)) + 1;
  const auto pts = grid_points(f, counts);

  // Fiber over x: s-vertices j delta with f1 <= j delta < f2. V cap T_{m delta} V is nonempty
  // over x iff m is below the number of such vertices.
  CellularEnergy out;
  long long best = 0;
  for (const auto& x : pts) {
    const double a = f.f1(x), b = f.f2(x);
    if (a > b + 1e-9 * std::max(1.0, std::abs(b))) throw ValidationError("fibered sheaf has f1 > f2 at a base point");
    const long long lo = static_cast<long long>(std::ceil(a / delta - 1e-9));
    const long long hi = static_cast<long long>(std::ceil(b / delta - 1e-9));
    if (hi - lo > best) {
      best = hi - lo;
      out.witness = x;
    }
  }
  out.report.method = "cellular";
  out.report.resolution = delta;
  out.report.energy = static_cast<double>(best) * delta;
  out.report.attained = false;
  if (best == 0) return out;

  // Sections of k on the closure of the overlap over the witness fiber, via the sheaf engine.
  CellComplex line;
  for (long long j = 0; j < best; ++j) line.add_cell(0);
  for (long long j = 0; j + 1 < best; ++j) line.add_cell(1, {{int(j), -1}, {int(j + 1), 1}});
  const auto k = CellularSheaf::constant(line);
  auto sections = [&](long long m) {
    std::vector<bool> member(line.size(), false);
    for (long long j = m; j < best; ++j) member[j] = true;  // j and j - m both lie in the fiber
    for (long long j = m; j + 1 < best; ++j) member[best + j] = true;
    return betti_of_restriction(line, k, LocallyClosedCellSet(line, member)).at(0);
  };
  out.sections_below = sections(best - 1);
  out.sections_at = sections(best);
  return out;
}

nlohmann::json SqueezeReport::to_json() const {
  return {{"r_strip", r_strip}, {"energy", energy}, {"bound", bound}, {"margin", margin}, {"holds", holds}};
}

SqueezeReport verify_squeeze_bound(const FiberedIntervalSheaf& f, double r_strip, int samples) {
  if (!(r_strip > 0.0)) throw InputError("strip half-width must be positive");
  for (const auto& x : base_samples(f, samples)) {
    if (f.f2(x) - f.f1(x) > 1e-9 * std::max(1.0, std::abs(f.f2(x))) && !(std::abs(x[0]) < r_strip)) {
      throw PreconditionError("support leaves the strip |x_1| < r");
    }
  }
  SqueezeReport r;
  r.r_strip = r_strip;
  r.energy = energy_fibered(f, samples).energy;
  r.bound = 4 * r_strip * r_strip;
  r.margin = r.bound - r.energy;
  r.holds = r.margin >= 0.0;
  return r;
}

TamarkinModule tamarkin_module_from_json(const nlohmann::json& j) {
  return TamarkinModule(interval_module_from_json(j));
}

nlohmann::json to_json(const TamarkinModule& f) { return to_json(f.module()); }

}  // namespace lcs
