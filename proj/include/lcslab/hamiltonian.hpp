#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lcslab/errors.hpp"
#include "lcslab/geometry.hpp"

namespace lcs {

// Exact lcs pair (lambda, beta) on T*M with lambda = sum xi_i dx_i. Phase points
// are stacked as (x_1..x_n, xi_1..xi_n).
struct LcsPair {
  ModelSpace space;
  ClosedOneForm beta;

  explicit LcsPair(const CoverModel& m) : space(m.base()), beta(m.beta()) {}
  LcsPair(ModelSpace s, ClosedOneForm b) : space(std::move(s)), beta(std::move(b)) {}
  /// beta = 0 on R^n: the symplectic cotangent bundle of a cover.
  static LcsPair flat(int n);

  int n() const { return space.dim(); }
  int phase_dim() const { return 2 * space.dim(); }
};

struct Support {
  enum class Kind { compact_fiber, constant_outside, unbounded };
  Kind kind = Kind::unbounded;
  /// compact_fiber: h vanishes for |xi| >= radius. constant_outside: h == constant
  /// once the line-factor coordinates (x_j, xi_j) have norm >= radius.
  double radius = 0.0;
  double constant = 0.0;
};

struct Hamiltonian {
  std::string name;
  int phase_dim = 0;
  std::function<double(const Vec&, double)> value;
  /// Optional analytic gradient; central differences with fd_step otherwise.
  std::function<Vec(const Vec&, double)> gradient;
  Support support;
  double fd_step = 1e-6;
  nlohmann::json params = nlohmann::json::object();

  Vec grad(const Vec& p, double t) const;
};

/// Builtins (theta = first circle coordinate, angles are 2*pi*theta):
///   zero, constant{c}, fiber_linear (xi_1), harmonic ((x_1^2 + xi_1^2)/2),
///   bump_cos (bump(|xi|; rho) cos theta), eps_trig_bump (eps * sum_i sin theta_i * bump),
///   rotation{omega, cutoff} in the (x, xi) plane of the first line coordinate,
///   zeta_breaking (xi_0 * xi_a, a = first line coordinate).
Hamiltonian builtin_hamiltonian(const std::string& name, const ModelSpace& space,
                                const nlohmann::json& params = nlohmann::json::object());
std::vector<std::string> builtin_hamiltonian_names();

/// Smooth bump exp(1 - 1/(1 - |v|^2/rho^2)) supported in |v| < rho, equal to 1 at 0.
double bump(const Vec& v, double rho);
Vec bump_gradient(const Vec& v, double rho);

/// Samples points outside the declared support and returns the largest
/// |h - declared constant| seen (0 for unbounded support).
double support_violation(const Hamiltonian& h, const ModelSpace& space, int samples,
                         unsigned long long seed = 7);

/// O[i][j] = omega(e_i, e_j) for omega = d_beta lambda.
Mat lcs_two_form_matrix(const LcsPair& pair, const Vec& p, double det_tol = 1e-12);

/// d_beta h = dh - h beta at (p, t) as a covector on the phase space.
Vec dbeta_hamiltonian(const LcsPair& pair, const Hamiltonian& h, double t, const Vec& p);

/// Solves iota_X omega = -d_beta h, i.e. O^T X = -d_beta h.
Vec hamiltonian_vector_field(const LcsPair& pair, const Hamiltonian& h, double t, const Vec& p);

struct FlowConfig {
  int steps = 1000;
  /// Re-run with 2*steps and report the difference as the error estimate.
  bool estimate_error = true;
  double blowup_bound = 1e6;
  /// Keep every intermediate point (otherwise only start and end).
  bool record = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;
  /// Step-halving estimate at each recorded time (empty when not requested).
  std::vector<double> errors;
  double final_error = 0.0;

  const Vec& final_point() const { return points.back(); }
  void write_csv(std::ostream& out, const std::vector<std::string>& columns) const;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

using VectorField = std::function<Vec(double, const Vec&)>;
/// Called after every accepted step; throw to abort the integration.
using StepMonitor = std::function<void(double, const Vec&, const Trajectory&)>;

/// Fixed-step classical RK4. `size` measures a state against cfg.blowup_bound.
Trajectory integrate_rk4(const VectorField& field, const Vec& y0, double t0, double t1,
                         const FlowConfig& cfg, const std::function<double(const Vec&)>& size,
                         const StepMonitor& monitor = {});

Trajectory flow(const LcsPair& pair, const Hamiltonian& h, const Vec& p0, double t0, double t1,
                const FlowConfig& cfg = {});

/// Column names for trajectory CSV export: t, base labels, then xi_<label>.
std::vector<std::string> phase_columns(const ModelSpace& space);

/// f~ = e^{-g} (h o pi_g) on T*M~; its flow with beta = 0 covers the lcs flow of h.
Hamiltonian symplectized_hamiltonian(const CoverModel& m, const Hamiltonian& h);

struct IntertwineReport {
  double max_deviation = 0.0;
  Vec witness;
};

/// max over samples of |pi_g(Phi~_t(q)) - phi_t(pi_g(q))|, circle coordinates wrapped.
IntertwineReport verify_symplectized_intertwine(const CoverModel& m, const Hamiltonian& h,
                                                std::span<const CotangentPoint> samples,
                                                double t, const FlowConfig& cfg = {});

/// |J^T Omega J - Omega| for the finite-difference Jacobian of the flow of f~ at q.
double symplectic_defect(const CoverModel& m, const Hamiltonian& h, const CotangentPoint& q,
                         double t, const FlowConfig& cfg = {}, double fd_step = 1e-5);

}  // namespace lcs
