#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "lcslab/betti.hpp"
#include "lcslab/experiments.hpp"
#include "lcslab/geometry.hpp"
#include "lcslab/lifts.hpp"
#include "lcslab/tamarkin.hpp"

using namespace lcs;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

CoverModel cover(int circles, int lines, std::vector<int> lattice, const std::string& g0 = "zero",
                 double scale = 1.0) {
  const ModelSpace space(circles, lines);
  return CoverModel(ClosedOneForm(space, std::move(lattice), builtin_scalar_field(g0, space.dim(), scale)));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// 1. d_beta^2 over 1000 random forms and points.
Outcome lichnerowicz() {
  const std::vector<ModelSpace> spaces = {ModelSpace(1, 0), ModelSpace(2, 0), ModelSpace(1, 1), ModelSpace(2, 1)};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto& space = spaces[k % spaces.size()];
    const auto beta = random_closed_form(space, 1000 + k);
    const bool cot = (k / 4) % 2 == 1;
    const int dim = cot ? 2 * space.dim() : space.dim();
    const int degree = static_cast<int>(rng() % static_cast<unsigned>(std::max(1, dim - 1)));
    const auto alpha = random_trig_form(dim, degree, cot ? FormDomain::cotangent : FormDomain::base, 5000 + k);
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p[i] = coord(rng);
    const std::vector<Vec> one{p};
    worst = std::max(worst, check_dbeta_squared(alpha, beta, one, 1e-4));
  }
  return {worst < 1e-6, "max residual " + fmt(worst) + " < 1e-6"};
}

// 2. Lift identities at 1000 random points.
Outcome lift_identities() {
  const auto m = cover(2, 1, {1, 0}, "cos_theta1_cos_theta2", 0.3);
  const auto h = builtin_hamiltonian("zero", m.base());
  const auto pts = random_homogeneous_points(m.dim(), 1000, 77);
  const double rho = verify_identity("rho_factorization", m, h, pts, 1.0).max_deviation;
  const double tc = verify_identity("TcDc", m, h, pts, 1.0).max_deviation;
  const double lam = liouville_pullback_defect(m, pts);
  return {rho < 1e-12 && tc < 1e-12 && lam < 1e-6,
          "rho_eq vs rho_cl L " + fmt(rho) + ", L^-1 T_c vs D_c L^-1 " + fmt(tc) + ", L*lambda " + fmt(lam)};
}

const CoverModel& circle_dtheta() {
  static const CoverModel m = cover(1, 0, {1});
  return m;
}

// 3. Flow diagram at 10^4 steps and the fourth-order decay.
Outcome flow_diagram() {
  const auto& m = circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  const auto pts = random_homogeneous_points(1, 20, 13);
  IdentityOptions o;
  o.steps = 10000;
  const double dev = verify_identity("diagram_eq", m, h, pts, 1.0, o).max_deviation;
  const std::vector<HomogeneousPoint> few(pts.begin(), pts.begin() + 5);
  std::vector<double> d;
  for (int steps : {20, 40, 80}) {
    o.steps = steps;
    d.push_back(verify_identity("diagram_eq", m, h, few, 1.0, o).max_deviation);
  }
  const double r1 = std::log2(d[0] / d[1]), r2 = std::log2(d[1] / d[2]);
  const bool order = r1 >= 3.5 && r1 <= 4.5 && r2 >= 3.5 && r2 <= 4.5;
  return {dev < 1e-5 && order, "deviation " + fmt(dev) + "; log2 ratios " + fmt(r1) + ", " + fmt(r2)};
}

// 4. Deck equivariance of Phi^eq against a classical witness.
Outcome equivariance_contrast() {
  const auto& m = circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  const auto pts = random_homogeneous_points(1, 20, 17);
  const auto eq = verify_identity("deck_equivariance_eq", m, h, pts, 1.0);
  const auto cl = verify_identity("deck_nonequivariance_cl", m, h, pts, 1.0);
  return {eq.max_deviation < 1e-5 && cl.max_deviation >= 1e-2,
          "eq " + fmt(eq.max_deviation) + " < 1e-5, cl witness " + fmt(cl.max_deviation) + " >= 1e-2"};
}

// 5. Window Betti numbers for k <= 5 over F2.
Outcome window_betti_values() {
  bool ok = true;
  std::string bad;
  auto spec = [](int circles, std::vector<int> lattice) {
    TorusSpec t;
    t.circles = circles;
    t.lattice = std::move(lattice);
    t.subdivisions = circles == 1 ? 4 : 3;
    return t;
  };
  const std::vector<TorusSpec> specs = {spec(1, {1}), spec(2, {1, 0}), spec(1, {0}), spec(2, {0, 0})};
  for (const auto& s : specs) {
    const auto m = torus_model(s);
    const bool exact = m.rank() == 0;
    // H*(T^m) has ranks binom(m, j); any nonzero class kills the half-open windows.
    std::vector<long long> want(s.circles + 1, 0);
    if (exact) {
      for (int j = 0; j <= s.circles; ++j) want[j] = binom(s.circles, j);
    }
    for (int k = 0; k <= 5; ++k) {
      const auto b = window_betti(m, k, Field::F2);
      for (int j = 0; j <= s.circles; ++j) {
        if (b.at(j) != want[j]) {
          ok = false;
          bad = "k=" + std::to_string(k);
        }
      }
    }
    const auto est = estimate_cj(m, 5, Field::F2);
    const auto oracle = *morse_novikov_oracle(m);
    for (int j = 0; j <= s.circles; ++j) {
      ok = ok && est.estimate[j] == static_cast<double>(want[j]) && oracle[j] == want[j];
    }
  }
  return {ok, ok ? "S1/dtheta and T2/dtheta1 vanish, exact models give binom(m, j); c_j = oracle" : "mismatch at " + bad};
}

// 6. Two cuts of S^1/dtheta.
Outcome domain_independence() {
  TorusSpec a;
  a.lattice = {1};
  TorusSpec b = a;
  b.cuts = {0.5};
  const auto rep = check_domain_independence(torus_model(a), torus_model(b), 6);
  return {rep.passed() && rep.estimate_gap == 0.0,
          "C = " + fmt(rep.fitted_constant) + ", estimate gap " + fmt(rep.estimate_gap)};
}

// 7. Ball-sheaf energies and the cellular threshold at 1/200.
Outcome ball_energy() {
  bool ok = true;
  std::string detail;
  for (double r : {1.0, 0.5, 2.0}) {
    const double exact = M_PI * r * r / 2;
    const double e = energy_fibered(ball_sheaf(2, r), 10000).energy;
    const auto cell = energy_cellular(ball_sheaf(2, r), 1.0 / 200);
    ok = ok && std::abs(e - exact) <= 1e-3 && std::abs(cell.report.energy - e) <= 1.0 / 200 &&
         cell.sections_below == 1 && cell.sections_at == 0;
    detail += "R=" + fmt(r) + ": " + fmt(e) + " (cell " + fmt(cell.report.energy) + ") ";
  }
  return {ok, detail};
}

// 8. e <= 4 r^2 on the ball family.
Outcome squeeze_bound() {
  bool ok = true;
  std::string detail;
  for (double r : {0.5, 1.0, 2.0}) {
    const auto rep = verify_squeeze_bound(ball_sheaf(2, r), r);
    ok = ok && rep.holds && rep.margin > 0.0;
    detail += "R=" + fmt(r) + " margin " + fmt(rep.margin) + " ";
  }
  return {ok, detail};
}

// 9. Tamarkin monotonicity and the max-length rule on 1000 random modules.
Outcome tamarkin_suite() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> cdist(0.0, 8.0);
  int violations = 0, energy_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = random_tamarkin_module(rng, 10);
    std::vector<double> grid(50);
    for (auto& c : grid) c = cdist(rng);
    std::sort(grid.begin(), grid.end());
    violations += check_tau_monotone(f, grid).violations;
    double longest = 0.0;
    for (const auto& s : f.summands()) longest = std::max(longest, s.right - s.left);
    if (energy(f).energy != longest) ++energy_mismatch;
  }
  return {violations == 0 && energy_mismatch == 0,
          std::to_string(violations) + " violations, " + std::to_string(energy_mismatch) + " energy mismatches"};
}

// 10. Transverse count against sum c_j, and the upstairs count.
Outcome chantraine_murphy() {
  const auto m = cover(1, 0, {0});
  const auto h = builtin_hamiltonian("eps_trig_bump", m.base(), {{"eps", 0.1}});
  const auto rep = chantraine_murphy_check(m, h);
  const auto up = psi_intersections(m, h);
  const int count = rep.intersections.count();
  return {rep.verdict == Verdict::pass && count == 2 && rep.bound == 2.0 && up.count() == count,
          "count " + std::to_string(count) + " >= sum c_j " + fmt(rep.bound) + ", upstairs " +
              std::to_string(up.count())};
}

// 11. Non-squeezing falsifier.
Outcome nonsqueeze() {
  const auto m = cover(1, 1, {1});
  NonsqueezeOptions o;
  const auto id = nonsqueeze_check(m, builtin_hamiltonian("zero", m.base()), "identity", o);
  const auto rot = nonsqueeze_check(
      m, builtin_hamiltonian("rotation", m.base(), {{"omega", M_PI / 2}, {"cutoff", 2.0}}), "rotation", o);
  const auto bad = nonsqueeze_check(m, builtin_hamiltonian("zeta_breaking", m.base()), "zeta_breaking", o);
  const bool ok = id.outcome == "consistent" && rot.outcome == "consistent" && bad.outcome == "rejected" &&
                  bad.witness.size() > 0;
  return {ok, "identity " + id.outcome + ", rotation " + rot.outcome + ", zeta_breaking " + bad.outcome +
                  " (deviation " + fmt(bad.equivariance_deviation) + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Lichnerowicz nilpotency", 10, lichnerowicz},
      {2, "lift identities", 0, lift_identities},
      {3, "flow diagrams", 60, flow_diagram},
      {4, "equivariance contrast", 0, equivariance_contrast},
      {5, "window Betti values", 30, window_betti_values},
      {6, "domain independence", 0, domain_independence},
      {7, "ball-sheaf energy", 60, ball_energy},
      {8, "squeeze bound", 0, squeeze_bound},
      {9, "Tamarkin monotonicity", 0, tamarkin_suite},
      {10, "intersection desk check", 120, chantraine_murphy},
      {11, "non-squeezing falsifier", 0, nonsqueeze},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      out.ok = false;
      out.detail += " (over the " + fmt(c.budget_s) + " s budget)";
    }
    std::printf("criterion %2d %-26s %s  %.2fs  %s\n", c.id, c.name, out.ok ? "PASS" : "FAIL", secs,
                out.detail.c_str());
    if (!out.ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
