#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lcslab/betti.hpp"

using namespace lcs;

namespace {

TorusSpec circle(int lattice, int n = 4) {
  TorusSpec t;
  t.circles = 1;
  t.lattice = {lattice};
  t.subdivisions = n;
  return t;
}

TorusSpec torus2(std::vector<int> lattice, int n = 3) {
  TorusSpec t;
  t.circles = 2;
  t.lattice = std::move(lattice);
  t.subdivisions = n;
  return t;
}

// Independent hand count: b0 of the constant sheaf on a half-open interval [a, b) is 0.
// A chain of 3 copies of a 4-subdivided circle cut open: vertices 0..12, edges 0..11.
int count_in(const Window& w, bool want_edge) {
  int n = 0;
  for (int c = 0; c < w.complex.size(); ++c) {
    if (w.cells[c] && (w.complex.dim(c) == 1) == want_edge) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("window shapes") {
  const auto s1 = torus_model(circle(1));
  CHECK(s1.rank() == 1);
  CHECK(s1.owned().size() == 8);  // vertices 0..3 and four edges; vertex 4 is glued
  const auto w = build_window(s1, 1);
  // [-1, 2) in deck units: 12 vertices and 12 edges inside, one extra closure vertex.
  CHECK(count_in(w, false) == 12);
  CHECK(count_in(w, true) == 12);
  CHECK(w.complex.size() == 25);
  int lo = 100, hi = -100;
  for (std::size_t c = 0; c < w.labels.size(); ++c) {
    if (!w.cells[c]) {
      CHECK(w.labels[c].second == std::vector<int>{2});
      continue;
    }
    lo = std::min(lo, w.labels[c].second[0]);
    hi = std::max(hi, w.labels[c].second[0]);
  }
  CHECK(lo == -1);
  CHECK(hi == 1);

  const auto exact = torus_model(circle(0));
  CHECK(exact.rank() == 0);
  for (int k : {0, 3}) CHECK(build_window(exact, k).complex.size() == exact.closure().size());

  const auto annulus = build_window(torus_model(torus2({1, 0})), 0);
  // [0,1) x S^1 with a 3x3 grid: 9 vertices, 18 edges, 9 squares inside.
  int inside = 0;
  for (bool b : annulus.cells) inside += b;
  CHECK(inside == 36);
  CHECK(annulus.complex.size() == 36 + 3 + 3);
}

TEST_CASE("constant sheaf window Betti numbers") {
  const auto s1 = torus_model(circle(1));
  const auto exact = torus_model(circle(0));
  const auto t2 = torus2({1, 0});
  const auto t2m = torus_model(t2);
  const auto t2e = torus_model(torus2({0, 0}));
  for (int k = 0; k <= 5; ++k) {
    CHECK(window_betti(s1, k) == BettiVector{});
    CHECK(window_betti(exact, k) == BettiVector{{1, 1}});
    if (k <= 2) {
      CHECK(window_betti(t2m, k) == BettiVector{});
      CHECK(window_betti(t2m, k, Field::Q) == BettiVector{});
    }
  }
  CHECK(window_betti(t2e, 0) == BettiVector{{1, 2, 1}});
  CHECK(window_betti(torus_model(torus2({1, 1})), 1) == BettiVector{});
  // Lattice coefficient 2 still gives a free Z-cover in that direction.
  CHECK(window_betti(torus_model(circle(2)), 2) == BettiVector{});
}

TEST_CASE("closed windows see the full interval") {
  // A closed box over the whole circle is the constant sheaf again, so zero.
  TorusSpec t = circle(1);
  t.summands = {SheafSummand{SheafSummand::Type::closed_box, {0.0}, {1.0}}};
  CHECK(window_betti(torus_model(t), 2) == BettiVector{});
  // A closed arc strictly inside V contributes one component per copy.
  t.summands = {SheafSummand{SheafSummand::Type::closed_box, {0.25}, {0.5}}};
  for (int k = 0; k <= 3; ++k) CHECK(window_betti(torus_model(t), k) == BettiVector{{2 * k + 1}});
  // An open arc contributes H^1 per copy.
  t.summands = {SheafSummand{SheafSummand::Type::open_box, {0.25}, {0.75}}};
  for (int k = 0; k <= 3; ++k) CHECK(window_betti(torus_model(t), k) == BettiVector{{0, 2 * k + 1}});
}

TEST_CASE("re-rooting invariance") {
  TorusSpec t = torus2({1, 1}, 2);
  t.summands = {SheafSummand{}, SheafSummand::skyscraper({0.5, 0.0})};
  const auto m = torus_model(t);
  for (int k = 0; k <= 1; ++k) {
    const auto base = window_betti(m, k);
    CHECK(window_betti(m, k, Field::F2, {3, -2}) == base);
    CHECK(window_betti(m, k, Field::Q, {-1, 5}) == base);
  }
}

TEST_CASE("estimates") {
  const auto s1 = estimate_cj(torus_model(circle(1)), 5);
  CHECK(s1.converged);
  CHECK(s1.converged_at == 0);
  CHECK(s1.estimate == std::vector<double>{0.0, 0.0});
  CHECK(s1.betti.size() == 6);

  const auto exact = estimate_cj(torus_model(circle(0)), 3);
  CHECK(exact.estimate == std::vector<double>{1.0, 1.0});
  CHECK(exact.converged_at == 0);

  TorusSpec t = circle(1);
  t.summands = {SheafSummand{}, SheafSummand::skyscraper({0.25})};
  const auto sky = estimate_cj(torus_model(t), 4);
  for (int k = 0; k <= 4; ++k) CHECK(sky.betti[k] == BettiVector{{2 * k + 1}});
  CHECK(sky.estimate[0] == doctest::Approx(1.0));
  CHECK(sky.estimate[1] == 0.0);
  CHECK(sky.converged);

  std::ostringstream csv;
  s1.write_csv(csv);
  CHECK(csv.str().rfind("k,j,b_j,normalized\n0,0,0,0\n", 0) == 0);
  CHECK(s1.to_json()["sequence"].size() == 6);
  CHECK_THROWS_AS(estimate_cj(torus_model(circle(1)), 0), InputError);
}

TEST_CASE("domain independence") {
  TorusSpec a = circle(1), b = circle(1);
  b.cuts = {0.5};
  auto rep = check_domain_independence(torus_model(a), torus_model(b), 6);
  CHECK(rep.passed());
  CHECK(rep.fitted_constant == 0.0);
  CHECK(rep.estimate_gap == 0.0);

  // Open arc (0.4, 0.6) plus the constant sheaf, cut outside vs inside the arc. Cutting
  // inside splits the extreme copies into [.5-k, .6-k) (acyclic) and (k+1.4, k+1.5) (one H^1).
  a = circle(1, 10);
  a.summands = {SheafSummand{}, SheafSummand{SheafSummand::Type::open_box, {0.4}, {0.6}}};
  b = a;
  b.cuts = {0.5};
  const auto ma = torus_model(a), mb = torus_model(b);
  for (int k = 0; k <= 3; ++k) {
    CHECK(window_betti(ma, k).at(1) == 2 * k + 1);
    CHECK(window_betti(mb, k).at(1) == 2 * k + 1);
  }
  rep = check_domain_independence(ma, mb, 6);
  CHECK(rep.passed());
  CHECK(rep.fitted_constant == 0.0);

  // Different sheaves are told apart: the skyscraper adds 2k+1, which no constant bounds.
  TorusSpec sky = circle(1);
  sky.summands = {SheafSummand{}, SheafSummand::skyscraper({0.0})};
  rep = check_domain_independence(torus_model(circle(1)), torus_model(sky), 6);
  CHECK(rep.fitted_constant == 7.0);
  CHECK_FALSE(rep.bound_holds);
  CHECK_FALSE(rep.estimates_agree);

  auto e0 = circle(0), e1 = circle(0);
  e1.cuts = {0.25};
  rep = check_domain_independence(torus_model(e0), torus_model(e1), 3);
  CHECK(rep.passed());
  CHECK_THROWS_AS(check_domain_independence(torus_model(e0), torus_model(circle(1)), 2), InputError);
}

TEST_CASE("oracle and inequality") {
  CHECK(*morse_novikov_oracle(torus_model(circle(1))) == std::vector<long long>{0, 0});
  CHECK(*morse_novikov_oracle(torus_model(circle(0))) == std::vector<long long>{1, 1});
  CHECK(*morse_novikov_oracle(torus_model(torus2({1, 0}))) == std::vector<long long>{0, 0, 0});
  CHECK(*morse_novikov_oracle(torus_model(torus2({0, 0}))) == std::vector<long long>{1, 2, 1});
  for (const auto& spec : {circle(1), circle(0), torus2({1, 0}), torus2({0, 0})}) {
    const auto m = torus_model(spec);
    const auto e = estimate_cj(m, 2);
    const auto o = *morse_novikov_oracle(m);
    for (std::size_t j = 0; j < o.size(); ++j) CHECK(e.estimate[j] == doctest::Approx(double(o[j])));
  }
  CellComplex k;
  k.add_cell(0);
  CHECK_FALSE(morse_novikov_oracle(EquivariantSheafModel(k, CellularSheaf::constant(k), {})).has_value());
}

TEST_CASE("Morse inequality on the circle") {
  const double tau = 2 * M_PI;
  auto one = [](double) { return 1.0; };
  auto zero = [](double) { return 0.0; };
  auto c1 = morse_inequality_check(1, one, zero, {0.0, 0.0});
  CHECK(c1.points.empty());
  CHECK(c1.holds);

  auto f = [&](double x) { return 2 + std::sin(tau * x); };
  auto df = [&](double x) { return tau * std::cos(tau * x); };
  auto c2 = morse_inequality_check(1, f, df, {0.0, 0.0});
  CHECK(c2.morse_counts == std::vector<long long>{1, 1});
  CHECK(c2.holds);

  auto g = [&](double x) { return std::cos(tau * x); };
  auto dg = [&](double x) { return -tau * std::sin(tau * x); };
  auto c3 = morse_inequality_check(0, g, dg, {1.0, 1.0});
  CHECK(c3.morse_counts == std::vector<long long>{1, 1});
  CHECK(c3.holds);
  CHECK(c3.lhs == std::vector<double>{1.0, 0.0});
  CHECK(c3.rhs == std::vector<double>{1.0, 0.0});
  // More c_0 than minima is impossible.
  CHECK_FALSE(morse_inequality_check(0, g, dg, {2.0, 1.0}).holds);
}

TEST_CASE("model validation") {
  // S^1 cut open: vertices 0, 1 and edge 2, with vertex 1 = alpha(vertex 0).
  CellComplex k;
  k.add_cell(0);
  k.add_cell(0);
  k.add_cell(1, {{0, -1}, {1, 1}});
  const auto f = CellularSheaf::constant(k);
  const EquivariantSheafModel good(k, f, {{{1, 0}}});
  CHECK(good.owned() == std::vector<int>{0, 2});
  CHECK(good.offset(1) == std::vector<int>{1});
  CHECK(window_betti(good, 3) == BettiVector{});
  CHECK_THROWS_AS(EquivariantSheafModel(k, f, {{{2, 0}}}), ModelError);
  CHECK_THROWS_AS(EquivariantSheafModel(k, f, {{{1, 0}, {0, 1}}}), ModelError);
  CHECK_THROWS_AS(EquivariantSheafModel(k, f, {{{1, 0}}, {{1, 0}}}), ModelError);

  // Stalks that differ across the glued vertices break invariance.
  CellularSheaf g = f;
  g.stalk[1] = 0;
  g.restriction[2][1] = IntMatrix::Zero(1, 0);
  CHECK_THROWS_AS(EquivariantSheafModel(k, g, {{{1, 0}}}), ModelError);

  const nlohmann::json doc = {
      {"complex", {{"cells", {{{"dim", 0}}, {{"dim", 0}}, {{"dim", 1}, {"faces", {{0, -1}, {1, 1}}}}}}}},
      {"gluing", {{{1, 0}}}}};
  CHECK(window_betti(equivariant_model_from_json(doc), 2) == BettiVector{});
  const auto spec = torus2({1, 0});
  const auto round = equivariant_model_from_json(to_json(spec));
  CHECK(round.rank() == 1);
  CHECK_THROWS_AS(equivariant_model_from_json({{"torus", {{"circles", 1}, {"lattice", {1}}, {"cuts", {0.3}}}}}),
                  InputError);
}
