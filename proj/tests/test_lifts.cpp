#include <cmath>

#include "doctest.h"
#include "lcslab/lifts.hpp"
#include "models.hpp"

using namespace lcs;
using testing_models::vec;

namespace {

HomogeneousPoint hp(double x, double xi, double s, double sigma) {
  return {vec({x}), vec({xi}), s, sigma};
}

}  // namespace

TEST_CASE("stacked layout") {
  const HomogeneousPoint q{vec({1, 2}), vec({3, 4}), 5, 6};
  CHECK(q.stacked() == vec({1, 2, 5, 3, 4, 6}));
  const auto back = HomogeneousPoint::from_stacked(q.stacked());
  CHECK(back.xi == q.xi);
  CHECK(back.sigma == 6);
}

TEST_CASE("conic projections") {
  const auto m = testing_models::circle_dtheta();
  CHECK(rho_cl(hp(0, 7, 2, 3)).xi[0] == doctest::Approx(7.0 / 3.0));
  CHECK(rho_cl(hp(0.4, 7, 2, 1)).xi[0] == 7.0);
  CHECK(rho_cl(hp(0, 14, 2, 6)).xi[0] == doctest::Approx(7.0 / 3.0));
  CHECK(rho_eq(m, hp(0, 2, 3, 1)).xi[0] == doctest::Approx(5.0));
  CHECK(rho_eq(m, hp(0, 1, 2, 3)).xi[0] == doctest::Approx(7.0 / 3.0));
  CHECK_THROWS_AS(rho_cl(hp(0, 1, 0, 0)), DomainError);
  CHECK_THROWS_AS(rho_eq(m, hp(0, 1, 0, 0)), DomainError);

  const auto exact = testing_models::model(1, 0, {0});
  const auto q = hp(0.3, 1.2, -0.7, 1.9);
  CHECK(rho_eq(exact, q).xi == rho_cl(q).xi);
}

TEST_CASE("Liouville map") {
  const auto m = testing_models::circle_dtheta();
  const auto r = liouville_L(m, hp(0, 1, 2, 3));
  CHECK(r.xi[0] == doctest::Approx(7.0));
  CHECK(r.s == doctest::Approx(2.0));
  CHECK(r.sigma == doctest::Approx(3.0));

  const auto pts = random_homogeneous_points(1, 200, 4);
  double worst = 0;
  for (const auto& q : pts) {
    worst = std::max(worst, (liouville_L(m, liouville_L_inv(m, q)).stacked() - q.stacked()).norm());
  }
  CHECK(worst < 1e-13);
  CHECK(liouville_pullback_defect(m, pts) < 1e-6);

  const auto exact = testing_models::model(1, 0, {0});
  CHECK(liouville_L(exact, pts[0]).stacked() == pts[0].stacked());
}

TEST_CASE("translations") {
  const auto m = testing_models::model(2, 0, {1, 0}, "sin_theta2", 0.2);
  const auto pts = random_homogeneous_points(2, 100, 8);
  const auto exact = testing_models::model(2, 0, {0, 0});
  for (const auto& q : pts) {
    CHECK(translate_Tc(0, q).stacked() == q.stacked());
    CHECK((twisted_Dc(m, 0, q).stacked() - q.stacked()).norm() == 0.0);
    CHECK((twisted_Dc(exact, 0.7, q).stacked() - translate_Tc(0.7, q).stacked()).norm() < 1e-15);
  }
  const auto r = verify_identity("TcDc", m, builtin_hamiltonian("zero", m.base()), pts, 0);
  CHECK(r.max_deviation < 1e-12);
}

TEST_CASE("lifted Hamiltonians") {
  const auto m = testing_models::circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  const auto fcl = lift_hamiltonian(LiftKind::classical, m, h);
  const auto feq = lift_hamiltonian(LiftKind::equivariant, m, h);

  SUBCASE("zero lifts to zero") {
    const auto z = builtin_hamiltonian("zero", m.base());
    const auto q = hp(0.2, 0.3, 0.4, 0.5);
    CHECK(lift_hamiltonian(LiftKind::classical, m, z).value(q, 0) == 0.0);
    CHECK(lift_hamiltonian(LiftKind::equivariant, m, z).value(q, 0) == 0.0);
  }
  SUBCASE("degree one homogeneity") {
    for (const auto& q : random_homogeneous_points(1, 100, 2)) {
      HomogeneousPoint c = q;
      c.xi *= 2.5;
      c.sigma *= 2.5;
      CHECK(fcl.value(c, 0) == doctest::Approx(2.5 * fcl.value(q, 0)).epsilon(1e-14));
      CHECK(feq.value(c, 0) == doctest::Approx(2.5 * feq.value(q, 0)).epsilon(1e-14));
    }
  }
  SUBCASE("deck invariance of the equivariant lift only") {
    double cl_gap = 0;
    const std::vector<int> one{1};
    for (const auto& q : random_homogeneous_points(1, 100, 3)) {
      const auto d = deck_homogeneous(m, one, q);
      CHECK(std::abs(feq.value(d, 0) - feq.value(q, 0)) < 1e-12);
      cl_gap = std::max(cl_gap, std::abs(fcl.value(d, 0) - fcl.value(q, 0)));
    }
    CHECK(cl_gap > 1e-2);
  }
  SUBCASE("analytic gradients match central differences") {
    for (const auto* f : {&fcl, &feq}) {
      Hamiltonian fd = f->homogeneous();
      fd.gradient = nullptr;
      for (const auto& q : random_homogeneous_points(1, 30, 5)) {
        const Vec v = q.stacked();
        CHECK((f->homogeneous().grad(v, 0) - fd.grad(v, 0)).norm() < 1e-6);
      }
    }
  }
  SUBCASE("equivariant gradient with a curved primitive") {
    const auto curved = testing_models::model(1, 1, {1}, "cos_theta1", 0.2);
    const auto hc = builtin_hamiltonian("eps_trig_bump", curved.base(), {{"eps", 0.5}});
    const auto f = lift_hamiltonian(LiftKind::equivariant, curved, hc);
    Hamiltonian fd = f.homogeneous();
    fd.gradient = nullptr;
    for (const auto& q : random_homogeneous_points(2, 30, 6)) {
      CHECK((f.homogeneous().grad(q.stacked(), 0) - fd.grad(q.stacked(), 0)).norm() < 1e-6);
    }
  }
}

TEST_CASE("homogeneous flows") {
  const auto m = testing_models::circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  const auto feq = lift_hamiltonian(LiftKind::equivariant, m, h);

  SUBCASE("zero Hamiltonian") {
    const auto z = lift_hamiltonian(LiftKind::equivariant, m, builtin_hamiltonian("zero", m.base()));
    const auto q = hp(0.1, 0.2, 0.3, 0.4);
    CHECK(flow_homogeneous_to(z, q, 1.0, 10).stacked() == q.stacked());
  }
  SUBCASE("sigma transport") {
    for (const auto& q : random_homogeneous_points(1, 10, 12)) {
      const auto tr = flow_homogeneous(feq, q, 0, 1);
      CHECK(sigma_transport_defect(m, tr) < 1e-6);
    }
  }
  SUBCASE("sigma sign change aborts") {
    // H = s gives sigma' = -1, which reaches zero at t = sigma(0).
    Hamiltonian push;
    push.name = "push";
    push.phase_dim = 4;
    push.value = [](const Vec& p, double) { return p[1]; };
    try {
      flow_homogeneous(push, hp(0, 1, 0, 0.5), 0, 2);
      FAIL("expected a sigma crossing");
    } catch (const SigmaCrossingError& e) {
      CHECK(e.time() == doctest::Approx(0.5).epsilon(0.01));
    }
    CHECK_THROWS_AS(flow_homogeneous(push, hp(0, 1, 0, 0), 0, 2), DomainError);
  }
}

TEST_CASE("identity verifiers") {
  const auto m = testing_models::circle_dtheta();
  const auto h = builtin_hamiltonian("bump_cos", m.base());
  const auto pts = random_homogeneous_points(1, 12, 21);

  CHECK(verify_identity("rho_factorization", m, h, pts, 0).max_deviation < 1e-12);
  CHECK(verify_identity("diagram_eq", m, h, pts, 1.0).max_deviation < 1e-5);
  CHECK(verify_identity("diagram_cl", m, h, pts, 1.0).max_deviation < 1e-5);
  CHECK(verify_identity("intertwine_L", m, h, pts, 1.0).max_deviation < 1e-5);
  CHECK(verify_identity("deck_equivariance_eq", m, h, pts, 0.5).max_deviation < 1e-5);
  const auto r = verify_identity("deck_nonequivariance_cl", m, h, pts, 0.5);
  CHECK(r.max_deviation >= 1e-2);
  CHECK(r.witness_point.size() == 4);

  const auto j = to_json(r);
  CHECK(j["identity"] == "deck_nonequivariance_cl");
  CHECK(j["witness"]["lhs"].size() == 4);

  CHECK_THROWS_AS(verify_identity("nope", m, h, pts, 0), InputError);
  const auto exact = testing_models::model(1, 0, {0});
  CHECK_THROWS_AS(verify_identity("deck_equivariance_eq", exact, h, pts, 0.5), PreconditionError);
}

TEST_CASE("s-shift equivariance on the product model") {
  // Circle z first, then the line x; beta = dz.
  const auto m = testing_models::model(1, 1, {1});
  const auto rot = builtin_hamiltonian("rotation", m.base(), {{"omega", 1.0}, {"cutoff", 2.0}});
  const auto pts = random_homogeneous_points(2, 8, 31);
  CHECK(verify_identity("s_shift_equivariance", m, rot, pts, 1.0).max_deviation < 1e-5);
}
