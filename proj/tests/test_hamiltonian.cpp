#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "lcslab/hamiltonian.hpp"
#include "models.hpp"

using namespace lcs;
using testing_models::vec;

namespace {

LcsPair circle_pair() { return LcsPair(testing_models::circle_dtheta()); }

}  // namespace

TEST_CASE("two-form matrix conventions") {
  const Mat flat = lcs_two_form_matrix(LcsPair::flat(1), vec({0.3, -2.0}));
  CHECK(flat(0, 1) == -1.0);
  CHECK(flat(1, 0) == 1.0);
  CHECK(flat(0, 0) == 0.0);

  const Mat circ = lcs_two_form_matrix(circle_pair(), vec({0.3, -2.0}));
  CHECK((circ - flat).norm() == 0.0);

  // T*(S^1 x R), beta = d theta: beta ^ lambda = xi_s d theta ^ ds.
  const auto m = testing_models::model(1, 1, {1});
  const Vec p = vec({0.2, 0.5, 1.5, -0.75});
  const Mat o = lcs_two_form_matrix(LcsPair(m), p);
  CHECK(o(0, 1) == doctest::Approx(0.75));
  CHECK(o(1, 0) == doctest::Approx(-0.75));
  CHECK((o + o.transpose()).norm() == 0.0);
}

TEST_CASE("vector field examples") {
  const ModelSpace s1(1, 0);
  SUBCASE("constant Hamiltonian moves the fiber") {
    const auto h = builtin_hamiltonian("constant", s1, {{"c", 1.0}});
    const Vec x = hamiltonian_vector_field(circle_pair(), h, 0.0, vec({0.4, 0.3}));
    CHECK(x[0] == doctest::Approx(0.0));
    CHECK(x[1] == doctest::Approx(1.0));
  }
  SUBCASE("h = xi translates the base forward") {
    const ModelSpace line(0, 1);
    const auto h = builtin_hamiltonian("fiber_linear", line);
    const Vec x = hamiltonian_vector_field(LcsPair::flat(1), h, 0.0, vec({0.4, 0.3}));
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(0.0));
  }
  SUBCASE("zero Hamiltonian") {
    const auto h = builtin_hamiltonian("zero", s1);
    CHECK(hamiltonian_vector_field(circle_pair(), h, 0.0, vec({0.4, 0.3})).norm() == 0.0);
  }
  SUBCASE("solve residual") {
    const auto m = testing_models::model(1, 1, {1}, "sin_theta1", 0.3);
    const LcsPair pair(m);
    const auto h = builtin_hamiltonian("eps_trig_bump", m.base(), {{"eps", 0.7}});
    for (int k = 0; k < 10; ++k) {
      const Vec p = vec({0.1 * k, 0.3 - 0.05 * k, 0.2 * k - 0.9, 0.4});
      const Vec x = hamiltonian_vector_field(pair, h, 0.0, p);
      const Vec r = lcs_two_form_matrix(pair, p).transpose() * x + dbeta_hamiltonian(pair, h, 0.0, p);
      CHECK(r.norm() < 1e-10);
    }
  }
  SUBCASE("non-finite gradient") {
    Hamiltonian h = builtin_hamiltonian("zero", s1);
    h.gradient = [](const Vec& p, double) { return Vec::Constant(p.size(), NAN); };
    CHECK_THROWS_AS(hamiltonian_vector_field(circle_pair(), h, 0.0, vec({0.0, 0.0})), DomainError);
  }
}

TEST_CASE("analytic gradients agree with central differences") {
  const auto m = testing_models::model(1, 2, {1});
  for (const auto& name : builtin_hamiltonian_names()) {
    const auto h = builtin_hamiltonian(name, m.base(), {{"cutoff", 1.0}});
    Hamiltonian fd = h;
    fd.gradient = nullptr;
    for (int k = 0; k < 12; ++k) {
      const Vec p = vec({0.13 * k, 0.4 - 0.11 * k, 0.2 + 0.05 * k, 0.3 - 0.1 * k, 0.25, 0.1 * k});
      INFO(name);
      CHECK((h.grad(p, 0.0) - fd.grad(p, 0.0)).norm() < 1e-6);
    }
  }
}

TEST_CASE("support descriptors hold outside their region") {
  const auto m = testing_models::model(1, 1, {1});
  for (const auto& name : builtin_hamiltonian_names()) {
    const auto h = builtin_hamiltonian(name, m.base(), {{"cutoff", 0.8}});
    INFO(name);
    CHECK(support_violation(h, m.base(), 500) == 0.0);
  }
  CHECK_THROWS_AS(builtin_hamiltonian("bogus", m.base()), InputError);
  CHECK_THROWS_AS(builtin_hamiltonian("bump_cos", ModelSpace(0, 1)), InputError);
}

TEST_CASE("flow examples") {
  const ModelSpace s1(1, 0);
  SUBCASE("zero Hamiltonian is constant") {
    const auto tr = flow(circle_pair(), builtin_hamiltonian("zero", s1), vec({0.2, 0.5}), 0, 1);
    for (const auto& p : tr.points) CHECK((p - vec({0.2, 0.5})).norm() == 0.0);
  }
  SUBCASE("constant Hamiltonian shifts xi by t") {
    const auto tr = flow(circle_pair(), builtin_hamiltonian("constant", s1), vec({0.2, 0.5}), 0, 1);
    CHECK((tr.final_point() - vec({0.2, 1.5})).norm() < 1e-10);
    CHECK(tr.final_error < 1e-10);
  }
  SUBCASE("harmonic oscillator returns after 2 pi") {
    FlowConfig cfg;
    cfg.steps = 10000;
    const auto h = builtin_hamiltonian("harmonic", ModelSpace(0, 1));
    const auto tr = flow(LcsPair::flat(1), h, vec({1.0, 0.5}), 0, 2 * std::numbers::pi, cfg);
    CHECK((tr.final_point() - vec({1.0, 0.5})).norm() < 1e-6);
    CHECK(tr.times.size() == 10001);
    for (std::size_t i = 1; i < tr.times.size(); ++i) REQUIRE(tr.times[i] > tr.times[i - 1]);
  }
  SUBCASE("composition") {
    const auto m = testing_models::circle_dtheta();
    const auto h = builtin_hamiltonian("bump_cos", m.base());
    const LcsPair pair(m);
    FlowConfig cfg;
    cfg.estimate_error = false;
    const Vec p0 = vec({0.1, 0.4});
    const Vec direct = flow(pair, h, p0, 0, 0.8, cfg).final_point();
    cfg.steps = 500;
    const Vec mid = flow(pair, h, p0, 0, 0.3, cfg).final_point();
    const Vec two = flow(pair, h, mid, 0.3, 0.8, cfg).final_point();
    CHECK((direct - two).norm() < 1e-9);
  }
  SUBCASE("divergence keeps the partial trajectory") {
    FlowConfig cfg;
    cfg.blowup_bound = 3.0;
    cfg.steps = 100;
    const auto h = builtin_hamiltonian("constant", s1, {{"c", 1.0}});
    try {
      flow(circle_pair(), h, vec({0.0, 0.0}), 0, 10, cfg);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.partial().points.size() > 1);
      CHECK(e.partial().final_point()[1] > 3.0);
    }
  }
  SUBCASE("bad spans") {
    const auto h = builtin_hamiltonian("zero", s1);
    CHECK_THROWS_AS(flow(circle_pair(), h, vec({0, 0}), 1, 1), InputError);
    FlowConfig cfg;
    cfg.steps = 0;
    CHECK_THROWS_AS(flow(circle_pair(), h, vec({0, 0}), 0, 1, cfg), InputError);
  }
}

TEST_CASE("trajectory CSV export") {
  const ModelSpace s1(1, 0);
  FlowConfig cfg;
  cfg.steps = 2;
  const auto tr = flow(circle_pair(), builtin_hamiltonian("constant", s1), vec({0.2, 0.5}), 0, 1, cfg);
  std::ostringstream out;
  tr.write_csv(out, phase_columns(s1));
  CHECK(out.str().rfind("t,theta1,xi_theta1\n0,0.2", 0) == 0);
}

TEST_CASE("symplectized lift intertwines flows") {
  const auto m = testing_models::circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  std::vector<CotangentPoint> samples;
  for (int k = 0; k < 8; ++k) samples.push_back({vec({-1.0 + 0.3 * k}), vec({0.2 * k - 0.6})});
  const auto r = verify_symplectized_intertwine(m, h, samples, 1.0);
  CHECK(r.max_deviation < 1e-5);

  const auto exact = testing_models::model(1, 0, {0});
  CHECK(verify_symplectized_intertwine(exact, h, samples, 1.0).max_deviation < 1e-8);
  const auto zero = builtin_hamiltonian("zero", m.base());
  CHECK(verify_symplectized_intertwine(m, zero, samples, 1.0).max_deviation == 0.0);

  CHECK(symplectic_defect(m, h, samples[3], 1.0) < 1e-4);
}
