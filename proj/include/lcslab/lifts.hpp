#pragma once

#include <span>
#include <string>
#include <vector>

#include "lcslab/geometry.hpp"
#include "lcslab/hamiltonian.hpp"

namespace lcs {

// Point of T*(M~ x R) away from sigma = 0. Stacked as (x, s, xi, sigma) so that
// base coordinates come first, matching the cotangent-model convention.
struct HomogeneousPoint {
  Vec x;
  Vec xi;
  double s = 0.0;
  double sigma = 1.0;

  int n() const { return static_cast<int>(x.size()); }
  Vec stacked() const;
  static HomogeneousPoint from_stacked(const Vec& v);
};

class SigmaCrossingError : public DomainError {
 public:
  SigmaCrossingError(const std::string& what, double time) : DomainError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

CotangentPoint rho_cl(const HomogeneousPoint& q);
CotangentPoint rho_eq(const CoverModel& m, const HomogeneousPoint& q);
HomogeneousPoint liouville_L(const CoverModel& m, const HomogeneousPoint& q);
HomogeneousPoint liouville_L_inv(const CoverModel& m, const HomogeneousPoint& q);
HomogeneousPoint translate_Tc(double c, const HomogeneousPoint& q);
HomogeneousPoint twisted_Dc(const CoverModel& m, double c, const HomogeneousPoint& q);
/// Plain cotangent deck action (x, xi, s, sigma) -> (alpha(x), xi, s, sigma).
HomogeneousPoint deck_homogeneous(const CoverModel& m, std::span<const int> powers,
                                  const HomogeneousPoint& q);

/// max over samples of |L^* (xi dx + sigma ds) - (xi dx + sigma ds)| using a
/// central-difference Jacobian of L.
double liouville_pullback_defect(const CoverModel& m, std::span<const HomogeneousPoint> samples,
                                 double fd_step = 1e-6);

enum class LiftKind { classical, equivariant };
std::string to_string(LiftKind k);
LiftKind lift_kind_from_string(const std::string& s);

// f^cl = sigma * f~(rho_cl(q)) or f^eq = sigma * h(pi_g(rho_eq(q))).
class LiftedHamiltonian {
 public:
  LiftedHamiltonian(LiftKind kind, CoverModel m, Hamiltonian h);

  LiftKind kind() const { return kind_; }
  const CoverModel& cover() const { return m_; }
  const Hamiltonian& base() const { return h_; }

  double value(const HomogeneousPoint& q, double t) const;
  /// As a Hamiltonian on the stacked (x, s, xi, sigma) phase space.
  const Hamiltonian& homogeneous() const { return lifted_; }

 private:
  LiftKind kind_;
  CoverModel m_;
  Hamiltonian h_;
  Hamiltonian lifted_;
};

LiftedHamiltonian lift_hamiltonian(LiftKind kind, const CoverModel& m, const Hamiltonian& h);

/// RK4 flow for the standard symplectic form on T*(M~ x R). Aborts with
/// SigmaCrossingError when sigma changes sign.
Trajectory flow_homogeneous(const LiftedHamiltonian& f, const HomogeneousPoint& q0, double t0,
                            double t1, const FlowConfig& cfg = {});
/// Same integrator for an arbitrary Hamiltonian on the stacked phase space.
Trajectory flow_homogeneous(const Hamiltonian& stacked, const HomogeneousPoint& q0, double t0,
                            double t1, const FlowConfig& cfg = {});
HomogeneousPoint flow_homogeneous_to(const LiftedHamiltonian& f, const HomogeneousPoint& q0,
                                     double t, int steps);

/// Largest |sigma(t) e^{g(x(t))} / (sigma(0) e^{g(x(0))}) - 1| along a trajectory.
double sigma_transport_defect(const CoverModel& m, const Trajectory& traj);

struct DiagramReport {
  std::string identity;
  int samples = 0;
  double max_deviation = 0.0;
  Vec witness_point;
  Vec witness_lhs;
  Vec witness_rhs;
};
nlohmann::json to_json(const DiagramReport& r);

std::vector<std::string> identity_names();

struct IdentityOptions {
  int steps = 1000;
  /// Deck generator used by the deck identities (index into the covered directions).
  int generator = 0;
  unsigned long long seed = 11;
};

/// Evaluates one of identity_names() over the samples. Flow identities use time t.
DiagramReport verify_identity(const std::string& name, const CoverModel& m, const Hamiltonian& h,
                              std::span<const HomogeneousPoint> samples, double t,
                              const IdentityOptions& opts = {});

struct SampleBox {
  double x_range = 1.0;
  double xi_range = 2.0;
  double s_range = 1.0;
  double sigma_min = 0.5;
  double sigma_max = 2.0;
};

std::vector<HomogeneousPoint> random_homogeneous_points(int n, int count,
                                                        unsigned long long seed,
                                                        const SampleBox& box = {});

}  // namespace lcs
