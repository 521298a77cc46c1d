#include <random>

#include "doctest.h"
#include "lcslab/sheaf.hpp"

using namespace lcs;

namespace {

CellComplex interval_complex() {
  CellComplex k;
  const int a = k.add_cell(0), b = k.add_cell(0);
  k.add_cell(1, {{a, -1}, {b, 1}});
  return k;
}

CellComplex loop_complex() {
  CellComplex k;
  const int v = k.add_cell(0);
  k.add_cell(1, {{v, -1}, {v, 1}});
  return k;
}

// Minimal torus: one vertex, edges a and b, one square with boundary a + b - a - b.
CellComplex minimal_torus() {
  CellComplex k;
  const int v = k.add_cell(0);
  const int a = k.add_cell(1, {{v, -1}, {v, 1}});
  const int b = k.add_cell(1, {{v, -1}, {v, 1}});
  k.add_cell(2, {{a, 1}, {b, 1}, {a, -1}, {b, -1}});
  return k;
}

CellComplex projective_plane() {
  CellComplex k;
  const int v = k.add_cell(0);
  const int a = k.add_cell(1, {{v, -1}, {v, 1}});
  k.add_cell(2, {{a, 1}, {a, 1}});
  return k;
}

// Vertices 0..n at integer points, edge i = (i, i+1) at index n + 1 + i.
CellComplex line_complex(int n) {
  CellComplex k;
  for (int i = 0; i <= n; ++i) k.add_cell(0);
  for (int i = 0; i < n; ++i) k.add_cell(1, {{i, -1}, {i + 1, 1}});
  return k;
}

// Square grid with n x n squares, no identifications.
CellComplex grid_complex(int n) {
  CellComplex k;
  auto v = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) k.add_cell(0);
  }
  std::vector<std::vector<int>> h(n + 1, std::vector<int>(n)), w(n, std::vector<int>(n + 1));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j < n; ++j) h[i][j] = k.add_cell(1, {{v(i, j), -1}, {v(i, j + 1), 1}});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= n; ++j) w[i][j] = k.add_cell(1, {{v(i, j), -1}, {v(i + 1, j), 1}});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      k.add_cell(2, {{h[i][j], 1}, {w[i][j + 1], 1}, {h[i + 1][j], -1}, {w[i][j], -1}});
    }
  }
  return k;
}

}  // namespace

TEST_CASE("constant sheaf cohomology of small complexes") {
  const auto i = interval_complex();
  CHECK(cohomology(i, CellularSheaf::constant(i)) == BettiVector{{1}});
  const auto s = loop_complex();
  CHECK(cohomology(s, CellularSheaf::constant(s)) == BettiVector{{1, 1}});
  const auto t = minimal_torus();
  CHECK(cohomology(t, CellularSheaf::constant(t), Field::Q) == BettiVector{{1, 2, 1}});
  CHECK(cohomology(t, CellularSheaf::constant(t), Field::F2) == BettiVector{{1, 2, 1}});
  const auto g = grid_complex(3);
  CHECK(cohomology(g, CellularSheaf::constant(g, 2), Field::Q) == BettiVector{{2}});
}

TEST_CASE("torsion separates the coefficient fields") {
  const auto p = projective_plane();
  const auto f = CellularSheaf::constant(p);
  CHECK(cohomology(p, f, Field::Q) == BettiVector{{1}});
  CHECK(cohomology(p, f, Field::F2) == BettiVector{{1, 1, 1}});
  CHECK(cohomology(p, f, Field::Q).euler() == cohomology(p, f, Field::F2).euler());
}

TEST_CASE("restriction to locally closed sets on an interval") {
  const auto k = interval_complex();
  const auto f = CellularSheaf::constant(k);
  CHECK(betti_of_restriction(k, f, LocallyClosedCellSet::from_cells(k, {0, 1, 2})) == BettiVector{{1}});
  CHECK(betti_of_restriction(k, f, LocallyClosedCellSet::from_cells(k, {0, 2})) == BettiVector{});
  CHECK(betti_of_restriction(k, f, LocallyClosedCellSet::from_cells(k, {2})) == BettiVector{{0, 1}});
}

TEST_CASE("local closedness") {
  const auto k = interval_complex();
  CHECK(is_locally_closed(k, {true, false, true}));
  CHECK(is_locally_closed(k, {false, false, true}));
  // Two vertices without the edge is closed; the edge alone is open.
  CHECK(is_locally_closed(k, {true, true, false}));
  const auto l = line_complex(2);  // vertices 0,1,2; edges 3,4
  // edge 3, vertex 1, edge 4 without the outer vertices: open, fine.
  CHECK(is_locally_closed(l, {false, true, false, true, true}));
  // Removing an interior vertex leaves an open subset of the closure.
  CHECK(is_locally_closed(l, {true, false, true, true, true}));
  // A vertex and a square without the edge between them is not locally closed.
  const auto g = grid_complex(1);  // vertices 0-3, edges 4-7, square 8
  CHECK_FALSE(is_locally_closed(g, {true, false, false, false, false, false, false, false, true}));
  CHECK_THROWS_AS(LocallyClosedCellSet::from_cells(g, {0, 8}), ValidationError);
}

TEST_CASE("inconsistent sheaves and complexes are rejected") {
  CellComplex bad;
  const int v = bad.add_cell(0);
  bad.add_cell(1, {{v, 1}, {v, 1}});
  bad.add_cell(0);
  CHECK_NOTHROW(bad.faces(1));
  CellComplex wrong_dim;
  const int a = wrong_dim.add_cell(0);
  wrong_dim.add_cell(2, {{a, 1}});
  CHECK_THROWS_AS(wrong_dim.validate(), ValidationError);

  auto t = grid_complex(1);
  auto f = CellularSheaf::constant(t);
  f.restriction[t.size() - 1][0](0, 0) = 2;
  CHECK_THROWS_AS(f.validate(t), ValidationError);
  CHECK_THROWS_AS(cohomology(t, f), ValidationError);
  f.restriction[t.size() - 1][0] = IntMatrix::Identity(2, 1);
  CHECK_THROWS_AS(f.validate(t), ValidationError);
}

TEST_CASE("interval cohomology closed forms") {
  IntervalModule m;
  m.summands = {{0, 1, true, true, 0, 1}, {2, 3, false, false, 1, 2}, {0, 5, true, false, 0, 3}};
  CHECK(interval_cohomology(m) == BettiVector{{1, 0, 2}});
  IntervalModule bad;
  bad.summands = {{1, 1, true, false, 0, 1}};
  CHECK_THROWS_AS(interval_cohomology(bad), InputError);
  bad.summands = {{2, 1, true, true, 0, 1}};
  CHECK_THROWS_AS(interval_cohomology(bad), InputError);
}

TEST_CASE("interval cohomology agrees with cellular restriction on a line") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pos(0, 12);
  const auto line = line_complex(12);
  const auto f = CellularSheaf::constant(line);
  for (int trial = 0; trial < 200; ++trial) {
    int a = pos(rng), b = pos(rng);
    if (a > b) std::swap(a, b);
    const bool lc = trial % 2 == 0, rc = (trial / 2) % 2 == 0;
    if (a == b && !(lc && rc)) continue;
    std::vector<bool> member(line.size(), false);
    for (int e = a; e < b; ++e) member[13 + e] = true;
    for (int v = a + 1; v < b; ++v) member[v] = true;
    if (lc) member[a] = true;
    if (rc) member[b] = true;
    const auto cellular = betti_of_restriction(line, f, LocallyClosedCellSet(line, member));
    IntervalModule m;
    m.summands = {{double(a), double(b), lc, rc, 0, 1}};
    CHECK(cellular == interval_cohomology(m));
  }
}

TEST_CASE("long exact sequence consequences on random cell sets") {
  std::mt19937_64 rng(23);
  const auto k = grid_complex(3);
  const auto f = CellularSheaf::constant(k);
  std::bernoulli_distribution coin(0.3);
  auto random_closed = [&]() {
    std::vector<bool> seed(k.size());
    for (int c = 0; c < k.size(); ++c) seed[c] = coin(rng);
    return k.closure(seed);
  };
  for (int trial = 0; trial < 150; ++trial) {
    const auto a = random_closed(), b = random_closed(), c = random_closed();
    std::vector<bool> z(k.size()), zc(k.size()), zo(k.size());
    for (int i = 0; i < k.size(); ++i) {
      z[i] = a[i] && !b[i];
      zc[i] = z[i] && c[i];
      zo[i] = z[i] && !c[i];
    }
    for (const auto field : {Field::F2, Field::Q}) {
      const auto bz = betti_of_restriction(k, f, LocallyClosedCellSet(k, z), field);
      const auto bc = betti_of_restriction(k, f, LocallyClosedCellSet(k, zc), field);
      const auto bo = betti_of_restriction(k, f, LocallyClosedCellSet(k, zo), field);
      CHECK(bz.euler() == bc.euler() + bo.euler());
      for (int j = 0; j <= 2; ++j) CHECK(bz.at(j) <= bc.at(j) + bo.at(j));
    }
    CHECK(betti_of_restriction(k, f, LocallyClosedCellSet(k, z), Field::F2) ==
          betti_of_restriction(k, f, LocallyClosedCellSet(k, z), Field::Q));
  }
}

TEST_CASE("exact ranks") {
  IntMatrix m(3, 3);
  m << 1, 1, 0, 0, 1, 1, 1, 0, 1;
  CHECK(matrix_rank(m, Field::Q) == 3);
  CHECK(matrix_rank(m, Field::F2) == 2);
  IntMatrix big(2, 2);
  big << 3, 6, 1, 2;
  CHECK(matrix_rank(big, Field::Q) == 1);
}

TEST_CASE("sheaf and interval JSON") {
  const nlohmann::json doc = {
      {"cells", {{{"dim", 0}}, {{"dim", 1}, {"faces", {{0, -1}, {0, 1}}}}}}};
  const auto s = sheaf_from_json(doc);
  CHECK(cohomology(s.complex, s.sheaf) == BettiVector{{1, 1}});
  const auto round = sheaf_from_json(to_json(s.complex, s.sheaf));
  CHECK(cohomology(round.complex, round.sheaf) == BettiVector{{1, 1}});

  const nlohmann::json twisted = {
      {"cells", {{{"dim", 0}}, {{"dim", 1}, {"faces", {{0, -1}, {0, 1}}}}}},
      {"stalks", {1, 1}},
      {"restrictions", {nlohmann::json::array(), {{{1}}, {{-1}}}}}};
  const auto tw = sheaf_from_json(twisted);
  CHECK(cohomology(tw.complex, tw.sheaf, Field::Q) == BettiVector{});
  CHECK(cohomology(tw.complex, tw.sheaf, Field::F2) == BettiVector{{1, 1}});

  const nlohmann::json im = {{"summands", {{{"left", 0}, {"right", "inf"}}, {{"left", 0}, {"right", 1}, {"right_closed", true}}}}};
  const auto m = interval_module_from_json(im);
  CHECK(interval_cohomology(m) == BettiVector{{1}});
  CHECK(interval_module_from_json(to_json(m)).summands.size() == 2);
  CHECK_THROWS_AS(sheaf_from_json({{"cells", {{{"dim", 1}, {"faces", {{3, 1}}}}}}}), InputError);
}
