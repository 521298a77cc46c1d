#include "lcslab/betti.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <tuple>

namespace lcs {

namespace {

using Key = std::pair<int, std::vector<int>>;

struct Translated {
  int owner;
  std::vector<int> shift;
  int sign;
  std::vector<long long> map;
  bool operator<(const Translated& o) const {
    return std::tie(owner, shift, sign, map) < std::tie(o.owner, o.shift, o.sign, o.map);
  }
  bool operator==(const Translated& o) const {
    return owner == o.owner && shift == o.shift && sign == o.sign && map == o.map;
  }
};

std::vector<long long> flatten(const IntMatrix& m) {
  std::vector<long long> v{m.rows(), m.cols()};
  for (int a = 0; a < m.rows(); ++a) {
    for (int b = 0; b < m.cols(); ++b) v.push_back(m(a, b));
  }
  return v;
}

int grid_units(double turns, int n, const char* what) {
  const double u = turns * n;
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-9) {
    throw InputError(std::string(what) + " must be aligned to the grid (multiples of 1/" +
                     std::to_string(n) + ")");
  }
  return static_cast<int>(r);
}

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

SheafSummand SheafSummand::skyscraper(std::vector<double> at) {
  SheafSummand s;
  s.type = Type::closed_box;
  s.lo = at;
  s.hi = std::move(at);
  return s;
}

EquivariantSheafModel::EquivariantSheafModel(CellComplex closure, CellularSheaf sheaf,
                                             std::vector<std::vector<std::pair<int, int>>> gluing,
                                             std::optional<TorusSpec> torus)
    : complex_(std::move(closure)),
      sheaf_(std::move(sheaf)),
      gluing_(std::move(gluing)),
      torus_(std::move(torus)) {
  complex_.validate();
  sheaf_.validate(complex_);
  const int n = complex_.size();
  const int r = rank();
  std::vector<std::vector<std::pair<int, int>>> upper(n);  // (generator, lower)
  for (int i = 0; i < r; ++i) {
    std::vector<bool> seen(n, false);
    for (const auto& [u, l] : gluing_[i]) {
      if (u < 0 || u >= n || l < 0 || l >= n) throw ModelError("gluing refers to a missing cell");
      if (complex_.dim(u) != complex_.dim(l)) throw ModelError("gluing pairs cells of different dimension");
      if (seen[u]) throw ModelError("cell glued twice by the same generator");
      seen[u] = true;
      upper[u].emplace_back(i, l);
    }
    for (const auto& [u, l] : gluing_[i]) {
      if (seen[l]) throw ModelError("a cell is both upper and lower for one generator");
    }
  }

  owner_.assign(n, -1);
  offset_.assign(n, std::vector<int>(r, 0));
  std::vector<int> state(n, 0);  // 0 new, 1 in progress, 2 done
  std::function<void(int)> resolve = [&](int c) {
    if (state[c] == 2) return;
    if (state[c] == 1) throw ModelError("gluing data is cyclic");
    state[c] = 1;
    if (upper[c].empty()) {
      owner_[c] = c;
    } else {
      bool first = true;
      for (const auto& [i, l] : upper[c]) {
        resolve(l);
        std::vector<int> off = offset_[l];
        off[i] += 1;
        if (first) {
          owner_[c] = owner_[l];
          offset_[c] = off;
          first = false;
        } else if (owner_[c] != owner_[l] || offset_[c] != off) {
          throw ModelError("cell " + std::to_string(c) + " is glued inconsistently");
        }
      }
    }
    state[c] = 2;
  };
  for (int c = 0; c < n; ++c) resolve(c);
  for (int c = 0; c < n; ++c) {
    if (owner_[c] == c) owned_.push_back(c);
  }

  // Every cell of the closure is one translate of one owned cell.
  std::map<Key, int> image;
  for (int c = 0; c < n; ++c) {
    if (!image.emplace(Key{owner_[c], offset_[c]}, c).second) {
      throw ModelError("two cells of the closure are the same translate of an owned cell");
    }
  }

  // Glued cells must carry the translated incidences and maps of their owner.
  auto translated = [&](int c) {
    std::vector<Translated> out;
    const auto& faces = complex_.faces(c);
    for (std::size_t q = 0; q < faces.size(); ++q) {
      std::vector<int> shift = offset_[faces[q].face];
      for (int i = 0; i < r; ++i) shift[i] -= offset_[c][i];
      out.push_back({owner_[faces[q].face], shift, faces[q].sign,
                     flatten(sheaf_.restriction[c][q])});
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  for (int c = 0; c < n; ++c) {
    const int o = owner_[c];
    if (o == c) continue;
    if (sheaf_.stalk[c] != sheaf_.stalk[o]) {
      throw ModelError("sheaf is not invariant under the gluing at cell " + std::to_string(c));
    }
    if (translated(c) != translated(o)) {
      throw ModelError("cell " + std::to_string(c) + " does not match the translate of cell " +
                       std::to_string(o));
    }
  }
}

EquivariantSheafModel torus_model(const TorusSpec& spec) {
  const int m = spec.circles;
  const int n = spec.subdivisions;
  if (m < 1) throw InputError("torus model needs at least one circle");
  if (n < 1) throw InputError("torus model needs at least one subdivision");
  if (static_cast<int>(spec.lattice.size()) != m) throw InputError("lattice needs one entry per circle");
  std::vector<int> cut(m, 0);
  if (!spec.cuts.empty()) {
    if (static_cast<int>(spec.cuts.size()) != m) throw InputError("cuts need one entry per circle");
    for (int i = 0; i < m; ++i) cut[i] = ((grid_units(spec.cuts[i], n, "cut") % n) + n) % n;
  }
  std::vector<bool> covered(m);
  for (int i = 0; i < m; ++i) covered[i] = spec.lattice[i] != 0;

  // 1D cells per direction: (is_edge, position).
  using Cell1 = std::pair<bool, int>;
  std::vector<std::vector<Cell1>> axis(m);
  for (int i = 0; i < m; ++i) {
    const int verts = covered[i] ? n + 1 : n;
    for (int p = 0; p < verts; ++p) axis[i].emplace_back(false, p);
    for (int p = 0; p < n; ++p) axis[i].emplace_back(true, p);
  }
  std::vector<std::vector<Cell1>> cells{{}};
  for (int i = 0; i < m; ++i) {
    std::vector<std::vector<Cell1>> next;
    for (const auto& prefix : cells) {
      for (const auto& c : axis[i]) {
        auto t = prefix;
        t.push_back(c);
        next.push_back(std::move(t));
      }
    }
    cells = std::move(next);
  }
  auto dim_of = [](const std::vector<Cell1>& t) {
    return static_cast<int>(std::count_if(t.begin(), t.end(), [](const Cell1& c) { return c.first; }));
  };
  std::stable_sort(cells.begin(), cells.end(),
                   [&](const auto& a, const auto& b) { return dim_of(a) < dim_of(b); });
  std::map<std::vector<Cell1>, int> index;
  for (std::size_t c = 0; c < cells.size(); ++c) index[cells[c]] = static_cast<int>(c);

  CellComplex k;
  for (const auto& t : cells) {
    std::vector<Incidence> faces;
    int before = 0;
    for (int i = 0; i < m; ++i) {
      if (!t[i].first) continue;
      const int sign = before % 2 == 0 ? 1 : -1;
      auto hi = t, lo = t;
      hi[i] = {false, covered[i] ? t[i].second + 1 : (t[i].second + 1) % n};
      lo[i] = {false, t[i].second};
      faces.push_back({index.at(hi), sign});
      faces.push_back({index.at(lo), -sign});
      ++before;
    }
    k.add_cell(dim_of(t), std::move(faces));
  }

  // Summand membership from geometric positions (cut + p) mod n.
  struct Range {
    bool all;
    int lo, hi;
  };
  std::vector<std::vector<Range>> ranges;
  for (const auto& s : spec.summands) {
    std::vector<Range> rs(m, Range{true, 0, n});
    if (s.type != SheafSummand::Type::constant) {
      if (static_cast<int>(s.lo.size()) != m || static_cast<int>(s.hi.size()) != m) {
        throw InputError("box summand needs lo and hi for every circle");
      }
      for (int i = 0; i < m; ++i) {
        const int lo = grid_units(s.lo[i], n, "box corner");
        const int hi = grid_units(s.hi[i], n, "box corner");
        if (lo < 0 || lo >= n || hi < lo || hi > lo + n) throw InputError("box arc out of range");
        rs[i] = Range{lo == 0 && hi == n, lo, hi};
      }
    }
    ranges.push_back(std::move(rs));
  }
  auto contains = [&](std::size_t s, const std::vector<Cell1>& t) {
    const bool closed = spec.summands[s].type != SheafSummand::Type::open_box;
    for (int i = 0; i < m; ++i) {
      const Range& rg = ranges[s][i];
      if (rg.all) continue;
      const int pos = (cut[i] + t[i].second) % n;
      bool in = false;
      for (int shift : {0, n}) {
        const int p = pos + shift;
        if (t[i].first) {
          in = in || (rg.lo <= p && p + 1 <= rg.hi);
        } else {
          in = in || (closed ? (rg.lo <= p && p <= rg.hi) : (rg.lo < p && p < rg.hi));
        }
      }
      if (!in) return false;
    }
    return true;
  };

  const int total = k.size();
  std::vector<std::vector<int>> slot(total, std::vector<int>(spec.summands.size(), -1));
  CellularSheaf f;
  f.stalk.assign(total, 0);
  for (int c = 0; c < total; ++c) {
    for (std::size_t s = 0; s < spec.summands.size(); ++s) {
      if (contains(s, cells[c])) slot[c][s] = f.stalk[c]++;
    }
  }
  f.restriction.resize(total);
  for (int c = 0; c < total; ++c) {
    for (const auto& inc : k.faces(c)) {
      IntMatrix r = IntMatrix::Zero(f.stalk[c], f.stalk[inc.face]);
      for (std::size_t s = 0; s < spec.summands.size(); ++s) {
        if (slot[c][s] >= 0 && slot[inc.face][s] >= 0) r(slot[c][s], slot[inc.face][s]) = 1;
      }
      f.restriction[c].push_back(std::move(r));
    }
  }

  std::vector<std::vector<std::pair<int, int>>> gluing;
  for (int i = 0; i < m; ++i) {
    if (!covered[i]) continue;
    std::vector<std::pair<int, int>> pairs;
    for (int c = 0; c < total; ++c) {
      const auto& t = cells[c];
      if (!t[i].first && t[i].second == n) {
        auto low = t;
        low[i].second = 0;
        pairs.emplace_back(c, index.at(low));
      }
    }
    gluing.push_back(std::move(pairs));
  }
  TorusSpec tag = spec;
  tag.cuts.resize(m);
  for (int i = 0; i < m; ++i) tag.cuts[i] = static_cast<double>(cut[i]) / n;
  return EquivariantSheafModel(std::move(k), std::move(f), std::move(gluing), tag);
}

namespace {

SheafSummand summand_from_json(const nlohmann::json& j) {
  SheafSummand s;
  const auto type = j.value("type", std::string("constant"));
  if (type == "constant") return s;
  if (type == "skyscraper") return SheafSummand::skyscraper(j.at("at").get<std::vector<double>>());
  if (type == "closed_box") {
    s.type = SheafSummand::Type::closed_box;
  } else if (type == "open_box") {
    s.type = SheafSummand::Type::open_box;
  } else {
    throw InputError("unknown sheaf summand type: " + type);
  }
  s.lo = j.at("lo").get<std::vector<double>>();
  s.hi = j.at("hi").get<std::vector<double>>();
  return s;
}

}  // namespace

EquivariantSheafModel equivariant_model_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("torus")) {
      const auto& t = j.at("torus");
      TorusSpec spec;
      spec.circles = t.value("circles", 1);
      spec.lattice = t.value("lattice", std::vector<int>(spec.circles, 0));
      spec.subdivisions = t.value("subdivisions", 4);
      spec.cuts = t.value("cuts", std::vector<double>{});
      if (t.contains("summands")) {
        spec.summands.clear();
        for (const auto& s : t.at("summands")) spec.summands.push_back(summand_from_json(s));
      }
      return torus_model(spec);
    }
    auto doc = sheaf_from_json(j.at("complex"));
    std::vector<std::vector<std::pair<int, int>>> gluing;
    if (j.contains("gluing")) {
      for (const auto& gen : j.at("gluing")) {
        std::vector<std::pair<int, int>> pairs;
        for (const auto& p : gen) pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        gluing.push_back(std::move(pairs));
      }
    }
    return EquivariantSheafModel(std::move(doc.complex), std::move(doc.sheaf), std::move(gluing));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed equivariant model: ") + e.what());
  }
}

nlohmann::json to_json(const TorusSpec& spec) {
  nlohmann::json summands = nlohmann::json::array();
  for (const auto& s : spec.summands) {
    if (s.type == SheafSummand::Type::constant) {
      summands.push_back({{"type", "constant"}});
    } else {
      summands.push_back({{"type", s.type == SheafSummand::Type::open_box ? "open_box" : "closed_box"},
                          {"lo", s.lo},
                          {"hi", s.hi}});
    }
  }
  return {{"torus",
           {{"circles", spec.circles},
            {"lattice", spec.lattice},
            {"subdivisions", spec.subdivisions},
            {"cuts", spec.cuts},
            {"summands", summands}}}};
}

Window build_window(const EquivariantSheafModel& m, int k, const std::vector<int>& center) {
  if (k < 0) throw InputError("window radius must be nonnegative");
  const int r = m.rank();
  std::vector<int> c0 = center.empty() ? std::vector<int>(r, 0) : center;
  if (static_cast<int>(c0.size()) != r) throw InputError("window center has the wrong rank");

  std::map<Key, int> found;  // key -> 1 if inside the half-open window, 0 if closure only
  std::vector<Key> order;
  std::vector<int> alpha(r, -k);
  while (true) {
    std::vector<int> a(r);
    for (int i = 0; i < r; ++i) a[i] = c0[i] + alpha[i];
    for (int o : m.owned()) {
      Key key{o, a};
      found.emplace(key, 1);
      order.push_back(std::move(key));
    }
    int i = r - 1;
    while (i >= 0 && alpha[i] == k) alpha[i--] = -k;
    if (i < 0) break;
    ++alpha[i];
  }
  const auto& v = m.closure();
  for (std::size_t q = 0; q < order.size(); ++q) {
    const Key cur = order[q];
    for (const auto& inc : v.faces(cur.first)) {
      std::vector<int> a = cur.second;
      for (int i = 0; i < r; ++i) a[i] += m.offset(inc.face)[i];
      Key key{m.owner(inc.face), std::move(a)};
      if (found.emplace(key, 0).second) order.push_back(std::move(key));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const Key& a, const Key& b) {
    return v.dim(a.first) < v.dim(b.first);
  });
  std::map<Key, int> index;
  for (std::size_t q = 0; q < order.size(); ++q) index[order[q]] = static_cast<int>(q);

  Window w;
  const auto& f = m.sheaf();
  w.sheaf.stalk.reserve(order.size());
  for (const auto& key : order) {
    std::vector<Incidence> faces;
    for (const auto& inc : v.faces(key.first)) {
      std::vector<int> a = key.second;
      for (int i = 0; i < r; ++i) a[i] += m.offset(inc.face)[i];
      faces.push_back({index.at(Key{m.owner(inc.face), a}), inc.sign});
    }
    w.complex.add_cell(v.dim(key.first), std::move(faces));
    w.sheaf.stalk.push_back(f.stalk[key.first]);
    w.sheaf.restriction.push_back(f.restriction[key.first]);
    w.cells.push_back(found.at(key) == 1);
    w.labels.push_back(key);
  }
  if (!is_locally_closed(w.complex, w.cells)) {
    throw ModelError("window is not locally closed; the gluing data does not describe a tiling");
  }
  return w;
}

BettiVector window_betti(const EquivariantSheafModel& m, int k, Field field,
                         const std::vector<int>& center) {
  const Window w = build_window(m, k, center);
  return betti_of_restriction(w.complex, w.sheaf, LocallyClosedCellSet(w.complex, w.cells), field);
}

double CjEstimate::sum() const {
  double s = 0.0;
  for (double c : estimate) s += c;
  return s;
}

void CjEstimate::write_csv(std::ostream& out) const {
  out << "k,j,b_j,normalized\n" << std::setprecision(17);
  for (int k = 0; k <= k_max; ++k) {
    for (int j = 0; j < degrees; ++j) {
      out << k << ',' << j << ',' << betti[k].at(j) << ',' << normalized[k][j] << '\n';
    }
  }
}

nlohmann::json CjEstimate::to_json() const {
  nlohmann::json seq = nlohmann::json::array();
  for (int k = 0; k <= k_max; ++k) seq.push_back({{"k", k}, {"betti", betti[k].b}, {"normalized", normalized[k]}});
  return {{"rank", rank},     {"k_max", k_max},         {"tol", tol},
          {"estimate", estimate}, {"converged", converged}, {"converged_at", converged_at},
          {"sequence", seq}};
}

CjEstimate estimate_cj(const EquivariantSheafModel& m, int k_max, Field field, double tol) {
  if (k_max < 1) throw InputError("k_max must be at least 1");
  CjEstimate e;
  e.rank = m.rank();
  e.k_max = k_max;
  e.tol = tol;
  e.degrees = m.closure().max_dim() + 1;
  for (int k = 0; k <= k_max; ++k) {
    e.betti.push_back(window_betti(m, k, field));
    const double copies = std::pow(2.0 * k + 1.0, e.rank);
    std::vector<double> row(e.degrees);
    for (int j = 0; j < e.degrees; ++j) row[j] = e.betti.back().at(j) / copies;
    e.normalized.push_back(std::move(row));
  }
  e.estimate = e.normalized.back();
  auto close = [&](int k) {
    for (int j = 0; j < e.degrees; ++j) {
      if (std::abs(e.normalized[k][j] - e.estimate[j]) >= tol) return false;
    }
    return true;
  };
  e.converged = close(k_max - 1);
  e.converged_at = k_max;
  while (e.converged_at > 0 && close(e.converged_at - 1)) --e.converged_at;
  return e;
}

nlohmann::json DomainIndependenceReport::to_json() const {
  return {{"rank", rank},
          {"k_max", k_max},
          {"differences", differences},
          {"fitted_constant", fitted_constant},
          {"bound_holds", bound_holds},
          {"estimate_a", estimate_a},
          {"estimate_b", estimate_b},
          {"estimate_gap", estimate_gap},
          {"allowed_gap", allowed_gap},
          {"estimates_agree", estimates_agree},
          {"passed", passed()}};
}

DomainIndependenceReport check_domain_independence(const EquivariantSheafModel& a,
                                                   const EquivariantSheafModel& b, int k_max,
                                                   Field field, double tol) {
  if (a.rank() != b.rank()) throw InputError("models have different deck rank");
  const auto ea = estimate_cj(a, k_max, field, tol);
  const auto eb = estimate_cj(b, k_max, field, tol);
  DomainIndependenceReport rep;
  rep.rank = a.rank();
  rep.k_max = k_max;
  const int degrees = std::max(ea.degrees, eb.degrees);
  auto scale = [&](int k) { return std::pow(2.0 * k + 1.0, rep.rank - 1); };
  for (int k = 0; k <= k_max; ++k) {
    std::vector<long long> row(degrees);
    for (int j = 0; j < degrees; ++j) row[j] = std::llabs(ea.betti[k].at(j) - eb.betti[k].at(j));
    rep.differences.push_back(row);
  }
  if (rep.rank == 0) {
    // Trivial cover: the windows coincide with the base, so the Betti numbers must agree.
    rep.fitted_constant = 0.0;
    rep.bound_holds = true;
    for (const auto& row : rep.differences) {
      for (long long d : row) rep.bound_holds = rep.bound_holds && d == 0;
    }
  } else {
    for (int k = 0; k <= k_max / 2; ++k) {
      for (long long d : rep.differences[k]) rep.fitted_constant = std::max(rep.fitted_constant, d / scale(k));
    }
    rep.bound_holds = true;
    for (int k = 0; k <= k_max; ++k) {
      for (long long d : rep.differences[k]) {
        rep.bound_holds = rep.bound_holds && d <= rep.fitted_constant * scale(k) + 1e-12;
      }
    }
  }
  rep.estimate_a.assign(degrees, 0.0);
  rep.estimate_b.assign(degrees, 0.0);
  for (int j = 0; j < degrees; ++j) {
    if (j < ea.degrees) rep.estimate_a[j] = ea.estimate[j];
    if (j < eb.degrees) rep.estimate_b[j] = eb.estimate[j];
    rep.estimate_gap = std::max(rep.estimate_gap, std::abs(rep.estimate_a[j] - rep.estimate_b[j]));
  }
  rep.allowed_gap = (rep.rank == 0 ? 0.0 : rep.fitted_constant / (2.0 * k_max + 1.0)) + tol;
  rep.estimates_agree = rep.estimate_gap <= rep.allowed_gap;
  return rep;
}

std::optional<std::vector<long long>> morse_novikov_oracle(const EquivariantSheafModel& m) {
  if (!m.torus()) return std::nullopt;
  const auto& t = *m.torus();
  std::vector<long long> ranks(t.circles + 1, 0);
  const bool exact = std::all_of(t.lattice.begin(), t.lattice.end(), [](int a) { return a == 0; });
  if (exact) {
    for (int j = 0; j <= t.circles; ++j) ranks[j] = binomial(t.circles, j);
  }
  return ranks;
}

nlohmann::json MorseCheck::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({{"x", p.x}, {"index", p.index}});
  return {{"critical_points", pts}, {"morse_counts", morse_counts}, {"cj", cj},
          {"lhs", lhs},           {"rhs", rhs},                   {"holds", holds}};
}

MorseCheck morse_inequality_check(int lattice, const std::function<double(double)>& f,
                                  const std::function<double(double)>& df,
                                  const std::vector<double>& cj, int grid) {
  if (grid < 8) throw InputError("grid too coarse");
  const double a = lattice;
  // psi' = e^{-a x} q(x) with q = f' - a f; its zeros are the critical points.
  auto q = [&](double x) { return df(x) - a * f(x); };
  const double h = 1e-6;
  MorseCheck out;
  out.morse_counts.assign(2, 0);
  auto classify = [&](double x) {
    const double slope = (q(x + h) - q(x - h)) / (2 * h);
    if (std::abs(slope) < 1e-8) throw PreconditionError("degenerate critical point of e^{-g} f");
    const int index = slope > 0 ? 0 : 1;
    out.points.push_back({x, index});
    ++out.morse_counts[index];
  };
  boost::math::tools::eps_tolerance<double> stop(50);
  for (int i = 0; i < grid; ++i) {
    const double x0 = static_cast<double>(i) / grid, x1 = static_cast<double>(i + 1) / grid;
    const double q0 = q(x0), q1 = q(x1);
    if (q0 == 0.0) {
      classify(x0);
    } else if (q0 * q1 < 0.0) {
      const auto br = boost::math::tools::bisect(q, x0, x1, stop);
      classify(0.5 * (br.first + br.second));
    }
  }
  const std::size_t len = std::max<std::size_t>(2, cj.size());
  out.cj = cj;
  out.cj.resize(len, 0.0);
  out.morse_counts.resize(len, 0);
  out.holds = true;
  double sc = 0.0, sm = 0.0;
  for (std::size_t l = 0; l < len; ++l) {
    const double sign = l % 2 == 0 ? 1.0 : -1.0;
    sc += sign * out.cj[l];
    sm += sign * static_cast<double>(out.morse_counts[l]);
    out.lhs.push_back(sign * sc);
    out.rhs.push_back(sign * sm);
    out.holds = out.holds && out.lhs.back() <= out.rhs.back() + 1e-12;
  }
  return out;
}

}  // namespace lcs
