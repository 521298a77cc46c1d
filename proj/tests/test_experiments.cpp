#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lcslab/experiments.hpp"
#include "models.hpp"

using namespace lcs;
using testing_models::model;

namespace {

nlohmann::json circle_model(int lattice) {
  return {{"circles", 1}, {"lines", 0}, {"beta", {{"lattice", {lattice}}, {"g0", "zero"}}}};
}

nlohmann::json eps_bump(double eps) { return {{"name", "eps_trig_bump"}, {"params", {{"eps", eps}}}}; }

nlohmann::json nonsqueeze_config() {
  return {{"model", {{"circles", 1}, {"lines", 1}, {"beta", {{"lattice", {1}}}}}},
          {"knobs", {{"R1", 1.0}, {"R2", 0.9}, {"k", 3}, {"samples", 60}, {"steps", 100}}},
          {"candidates",
           {{{"name", "identity"}, {"hamiltonian", {{"name", "zero"}}}},
            {{"name", "rotation"},
             {"hamiltonian", {{"name", "rotation"}, {"params", {{"omega", M_PI / 2}, {"cutoff", 2.0}}}}}},
            {{"name", "zeta_breaking"}, {"hamiltonian", {{"name", "zeta_breaking"}}}, {"expect", "rejected"}}}}};
}

}  // namespace

TEST_CASE("verdicts and exit codes") {
  CHECK(exit_code(Verdict::pass) == 0);
  CHECK(exit_code(Verdict::fail) == 1);
  CHECK(exit_code(Verdict::inconclusive) == 2);
  CHECK(combine(Verdict::inconclusive, Verdict::fail) == Verdict::fail);
  CHECK(combine(Verdict::pass, Verdict::inconclusive) == Verdict::inconclusive);
  std::vector<ResultRow> rows{{"s", "a", 1.0, "", "PASS", ""}, {"s", "b", 2.0, "", "XFAIL", ""}};
  CHECK(verdict_of(rows) == Verdict::pass);
  rows.push_back({"s", "c", std::nullopt, "", "XPASS", "with, comma"});
  CHECK(verdict_of(rows) == Verdict::fail);
  const auto csv = rows_to_csv(rows);
  CHECK(csv.find("\"with, comma\"") != std::string::npos);
  CHECK(csv.rfind("suite,name,value,criterion,status,detail\n", 0) == 0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"knobs", {{"steps", 0}}}}), InputError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"hamiltonian", {{"name", "nope"}}}}), InputError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()), InputError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"model", "does/not/exist.json"}}), InputError);
  const auto c = ExperimentConfig::from_json({{"knobs", {{"steps", 10}, {"t", 0.5}}}, {"seed", 42}});
  CHECK(c.knob_int("steps", 1) == 10);
  CHECK(c.knob("t", 1.0) == 0.5);
  CHECK(c.knob("missing", 3.0) == 3.0);
  CHECK(c.seed() == 42);
  CHECK_THROWS_AS(c.knob_int("t", 1), InputError);
  CHECK_THROWS_AS(run_command("frobnicate", c), InputError);
}

TEST_CASE("config files are resolved relative to the config") {
  const auto dir = std::filesystem::temp_directory_path() / "lcslab_cfg_test";
  std::filesystem::create_directories(dir / "models");
  std::ofstream(dir / "models" / "s1.json") << circle_model(0).dump();
  std::ofstream(dir / "run.json") << nlohmann::json{{"model", "models/s1.json"}, {"hamiltonian", eps_bump(0.1)}}.dump();
  const auto c = ExperimentConfig::load(dir / "run.json");
  CHECK(c.resolved()["model"]["circles"] == 1);
  CHECK(c.cover_model().rank() == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("intersection counts on T*S^1") {
  for (double eps : {0.05, 0.1, 0.2}) {
    const auto exact = model(1, 0, {0});
    const auto h = builtin_hamiltonian("eps_trig_bump", exact.base(), {{"eps", eps}});
    const auto r = chantraine_murphy_check(exact, h);
    CHECK(r.intersections.count() == 2);
    CHECK(r.intersections.transverse);
    CHECK(r.bound == doctest::Approx(2.0));
    CHECK(r.verdict == Verdict::pass);
    // The zeros sit near theta = 1/4 and 3/4, where cos(2 pi theta) vanishes.
    CHECK(r.intersections.points[0].parameter[0] == doctest::Approx(0.25).epsilon(0.05));
    CHECK(r.intersections.points[1].parameter[0] == doctest::Approx(0.75).epsilon(0.05));
    CHECK(psi_intersections(exact, h).count() == 2);

    const auto twisted = model(1, 0, {1});
    const auto rt = chantraine_murphy_check(twisted, h);
    CHECK(rt.bound == 0.0);
    CHECK(rt.verdict == Verdict::pass);
    CHECK(rt.note.find("vacuous") != std::string::npos);
    CHECK(psi_intersections(twisted, h).count() == rt.intersections.count());
  }
  const auto exact = model(1, 0, {0});
  const auto zero = chantraine_murphy_check(exact, builtin_hamiltonian("zero", exact.base()));
  CHECK(zero.verdict == Verdict::inconclusive);
  CHECK_FALSE(zero.intersections.transverse);
  CHECK_THROWS_AS(zero_section_intersections(model(1, 1, {0}), builtin_hamiltonian("zero", ModelSpace(1, 1))),
                  PreconditionError);
  CHECK_THROWS_AS(zero_section_intersections(exact, builtin_hamiltonian("fiber_linear", exact.base())),
                  PreconditionError);
}

TEST_CASE("intersection counts on T*T^2") {
  const auto m = model(2, 0, {0, 0});
  const auto h = builtin_hamiltonian("eps_trig_bump", m.base(), {{"eps", 0.1}});
  ZeroSearchOptions o;
  o.grid = 16;
  o.steps = 200;
  const auto down = zero_section_intersections(m, h, o);
  CHECK(down.count() == 4);
  CHECK(down.transverse);
  CHECK(psi_intersections(m, h, o).count() == 4);
  const auto r = chantraine_murphy_check(m, h, o, 2);
  CHECK(r.bound == doctest::Approx(4.0));
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("non-squeezing candidates") {
  const auto m = model(1, 1, {1});
  NonsqueezeOptions o;
  o.samples = 60;
  o.steps = 100;
  const auto id = nonsqueeze_check(m, builtin_hamiltonian("zero", m.base()), "identity", o);
  CHECK(id.outcome == "consistent");
  CHECK(id.max_radius == doctest::Approx(1.0));
  const auto rot = nonsqueeze_check(
      m, builtin_hamiltonian("rotation", m.base(), {{"omega", M_PI / 2}, {"cutoff", 2.0}}), "rotation", o);
  CHECK(rot.equivariant);
  CHECK(rot.outcome == "consistent");
  CHECK(rot.max_radius == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rot.ball_energy == doctest::Approx(M_PI).epsilon(1e-3));
  const auto bad = nonsqueeze_check(m, builtin_hamiltonian("zeta_breaking", m.base()), "zeta_breaking", o);
  CHECK(bad.outcome == "rejected");
  CHECK(bad.equivariance_deviation > 1e-2);
  CHECK(bad.witness.size() == 4);
  o.r2 = 0.2;
  o.k = 4;
  CHECK_THROWS_AS(nonsqueeze_check(m, builtin_hamiltonian("zero", m.base()), "identity", o), InputError);
  CHECK_THROWS_AS(nonsqueeze_check(model(1, 0, {1}), builtin_hamiltonian("zero", ModelSpace(1, 0)), "x", {}),
                  PreconditionError);
}

TEST_CASE("commands") {
  auto verify = ExperimentConfig::from_json({{"model", circle_model(1)},
                                             {"hamiltonian", {{"name", "bump_cos"}}},
                                             {"knobs", {{"samples", 4}, {"steps", 400}, {"dbeta_samples", 20}}}});
  const auto v = cmd_verify(verify);
  CHECK(v.verdict == Verdict::pass);
  bool saw_xfail = false;
  for (const auto& r : v.rows) saw_xfail = saw_xfail || r.status == "XFAIL";
  CHECK(saw_xfail);
  CHECK(v.report["config"]["model"]["circles"] == 1);
  CHECK(v.report["seed"] == 1);

  const auto betti = cmd_betti(ExperimentConfig::from_json(
      {{"sheaf_model", {{"torus", {{"circles", 1}, {"lattice", {1}}}}}},
       {"compare_model", {{"torus", {{"circles", 1}, {"lattice", {1}}, {"cuts", {0.5}}}}}},
       {"knobs", {{"k_max", 3}}}}));
  CHECK(betti.verdict == Verdict::pass);
  CHECK(betti.csv.rfind("k,j,b_j,normalized", 0) == 0);

  const auto energy = cmd_energy(ExperimentConfig::from_json(
      {{"modules", {{{"summands", {{{"left", 0}, {"right", 2}}}}, {"expected", 2.0}}}},
       {"fibered",
        {{{"type", "ball"}, {"n", 2}, {"R", 1.0}, {"expected", M_PI / 2}, {"r_strip", 1.0}, {"delta", 0.02}},
         {{"type", "constant"}, {"lo", {-0.9, 0}}, {"hi", {0.9, 1}}, {"height", 5.0}, {"r_strip", 1.0},
          {"expect_violation", true}, {"delta", 0.05}}}}}));
  CHECK(energy.verdict == Verdict::pass);

  const auto psi = cmd_psi_correspondence(
      ExperimentConfig::from_json({{"model", circle_model(0)}, {"hamiltonian", {{"name", "zero"}}}}));
  CHECK(psi.verdict == Verdict::inconclusive);

  auto ns = cmd_nonsqueeze(ExperimentConfig::from_json(nonsqueeze_config()));
  CHECK(ns.verdict == Verdict::pass);
  CHECK(ns.rows.size() == 3);

  const auto empty = cmd_run_all(ExperimentConfig::from_json(nlohmann::json::object()));
  CHECK(empty.rows.empty());
  CHECK(empty.verdict == Verdict::pass);

  const auto all = cmd_run_all(ExperimentConfig::from_json(
      {{"experiments",
        {{{"command", "intersections"}, {"config", {{"model", circle_model(0)}, {"hamiltonian", eps_bump(0.1)}}}},
         {{"command", "betti"}, {"config", nlohmann::json::object()}}}}}));
  CHECK(all.verdict == Verdict::fail);
  REQUIRE(all.rows.size() == 2);
  CHECK(all.rows[0].status == "PASS");
  CHECK(all.rows[1].status == "ERROR");
}

TEST_CASE("deterministic reports") {
  const auto c = ExperimentConfig::from_json(nonsqueeze_config());
  CHECK(cmd_nonsqueeze(c).report.dump() == cmd_nonsqueeze(c).report.dump());
}

TEST_CASE("atomic writes") {
  const auto dir = std::filesystem::temp_directory_path() / "lcslab_atomic_test";
  const auto file = dir / "sub" / "out.json";
  write_atomic(file, "first");
  write_atomic(file, "second");
  std::ifstream in(file);
  std::string s;
  in >> s;
  CHECK(s == "second");
  int entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "sub")) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
}
