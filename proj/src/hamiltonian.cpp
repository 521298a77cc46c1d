#include "lcslab/hamiltonian.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

namespace lcs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// psi(t) = exp(-1/t) based smooth step: 1 for u <= 0, 0 for u >= 1.
double smooth_step(double u, double* derivative) {
  auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  auto dpsi = [&](double t) { return t > 0.0 ? psi(t) / (t * t) : 0.0; };
  if (u <= 0.0) {
    if (derivative) *derivative = 0.0;
    return 1.0;
  }
  if (u >= 1.0) {
    if (derivative) *derivative = 0.0;
    return 0.0;
  }
  const double a = psi(1.0 - u), b = psi(u);
  const double da = -dpsi(1.0 - u), db = dpsi(u);
  if (derivative) *derivative = (da * b - a * db) / ((a + b) * (a + b));
  return a / (a + b);
}

int first_line_coordinate(const ModelSpace& space, const std::string& who) {
  if (space.lines == 0 && space.circles > 0) {
    throw InputError(who + " needs a line factor in the model space");
  }
  return space.circles;
}

void require_circle(const ModelSpace& space, const std::string& who) {
  if (space.circles < 1) throw InputError(who + " needs a circle factor in the model space");
}

}  // namespace

LcsPair LcsPair::flat(int n) {
  ModelSpace space(0, n);
  return LcsPair(space, ClosedOneForm::zero(space));
}

Vec Hamiltonian::grad(const Vec& p, double t) const {
  if (gradient) return gradient(p, t);
  Vec g(p.size());
  for (int i = 0; i < p.size(); ++i) {
    Vec a = p, b = p;
    a[i] += fd_step;
    b[i] -= fd_step;
    g[i] = (value(a, t) - value(b, t)) / (2.0 * fd_step);
  }
  return g;
}

double bump(const Vec& v, double rho) {
  const double u = v.squaredNorm() / (rho * rho);
  if (u >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u));
}

Vec bump_gradient(const Vec& v, double rho) {
  const double u = v.squaredNorm() / (rho * rho);
  if (u >= 1.0) return Vec::Zero(v.size());
  const double b = std::exp(1.0 - 1.0 / (1.0 - u));
  return -b * 2.0 / (rho * rho * (1.0 - u) * (1.0 - u)) * v;
}

std::vector<std::string> builtin_hamiltonian_names() {
  return {"zero",     "constant",      "fiber_linear", "harmonic",
          "bump_cos", "eps_trig_bump", "rotation",     "zeta_breaking"};
}

Hamiltonian builtin_hamiltonian(const std::string& name, const ModelSpace& space,
                                const nlohmann::json& params) {
  const int n = space.dim();
  Hamiltonian h;
  h.name = name;
  h.phase_dim = 2 * n;
  h.params = params.is_null() ? nlohmann::json::object() : params;

  if (name == "zero" || name == "constant") {
    const double c = name == "zero" ? 0.0 : h.params.value("c", 1.0);
    h.value = [c](const Vec&, double) { return c; };
    h.gradient = [](const Vec& p, double) { return Vec::Zero(p.size()); };
    h.support = {Support::Kind::constant_outside, 0.0, c};
    return h;
  }
  if (name == "fiber_linear") {
    h.value = [n](const Vec& p, double) { return p[n]; };
    h.gradient = [n](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      g[n] = 1.0;
      return g;
    };
    return h;
  }
  if (name == "harmonic") {
    h.value = [n](const Vec& p, double) { return 0.5 * (p[0] * p[0] + p[n] * p[n]); };
    h.gradient = [n](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      g[0] = p[0];
      g[n] = p[n];
      return g;
    };
    return h;
  }
  if (name == "bump_cos") {
    require_circle(space, name);
    const double rho = h.params.value("rho", 2.0);
    h.value = [n, rho](const Vec& p, double) {
      return bump(p.tail(n), rho) * std::cos(kTwoPi * p[0]);
    };
    h.gradient = [n, rho](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      const Vec xi = p.tail(n);
      g[0] = -kTwoPi * std::sin(kTwoPi * p[0]) * bump(xi, rho);
      g.tail(n) = std::cos(kTwoPi * p[0]) * bump_gradient(xi, rho);
      return g;
    };
    h.support = {Support::Kind::compact_fiber, rho, 0.0};
    return h;
  }
  if (name == "eps_trig_bump") {
    require_circle(space, name);
    const double eps = h.params.value("eps", 0.1);
    const double rho = h.params.value("rho", 2.0);
    const int circles = space.circles;
    h.value = [=](const Vec& p, double) {
      double s = 0.0;
      for (int i = 0; i < circles; ++i) s += std::sin(kTwoPi * p[i]);
      return eps * s * bump(p.tail(n), rho);
    };
    h.gradient = [=](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      const Vec xi = p.tail(n);
      const double b = bump(xi, rho);
      double s = 0.0;
      for (int i = 0; i < circles; ++i) {
        s += std::sin(kTwoPi * p[i]);
        g[i] = eps * kTwoPi * std::cos(kTwoPi * p[i]) * b;
      }
      g.tail(n) = eps * s * bump_gradient(xi, rho);
      return g;
    };
    h.support = {Support::Kind::compact_fiber, rho, 0.0};
    return h;
  }
  if (name == "rotation") {
    const int a = first_line_coordinate(space, name);
    const double omega = h.params.value("omega", 1.0);
    const double cutoff = h.params.value("cutoff", 0.0);
    const int circles = space.circles;
    // Radius over the R^{2n} factor only, so the candidate stays zeta-periodic.
    auto radius_sq = [=](const Vec& p) {
      double r = 0.0;
      for (int i = circles; i < n; ++i) r += p[i] * p[i] + p[n + i] * p[n + i];
      return r;
    };
    h.value = [=](const Vec& p, double) {
      const double q = 0.5 * omega * (p[a] * p[a] + p[n + a] * p[n + a]);
      if (cutoff <= 0.0) return q;
      const double r = std::sqrt(radius_sq(p));
      return smooth_step((r - cutoff) / cutoff, nullptr) * q;
    };
    h.gradient = [=](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      const double q = 0.5 * omega * (p[a] * p[a] + p[n + a] * p[n + a]);
      g[a] = omega * p[a];
      g[n + a] = omega * p[n + a];
      if (cutoff <= 0.0) return g;
      const double r = std::sqrt(radius_sq(p));
      double dchi = 0.0;
      const double chi = smooth_step((r - cutoff) / cutoff, &dchi);
      g *= chi;
      if (dchi != 0.0 && r > 0.0) {
        for (int i = circles; i < n; ++i) {
          g[i] += q * dchi / cutoff * p[i] / r;
          g[n + i] += q * dchi / cutoff * p[n + i] / r;
        }
      }
      return g;
    };
    if (cutoff > 0.0) h.support = {Support::Kind::constant_outside, 2.0 * cutoff, 0.0};
    return h;
  }
  if (name == "zeta_breaking") {
    require_circle(space, name);
    const int a = first_line_coordinate(space, name);
    h.value = [=](const Vec& p, double) { return p[n] * p[n + a]; };
    h.gradient = [=](const Vec& p, double) {
      Vec g = Vec::Zero(p.size());
      g[n] = p[n + a];
      g[n + a] = p[n];
      return g;
    };
    return h;
  }
  throw InputError("unknown Hamiltonian builtin: " + name);
}

double support_violation(const Hamiltonian& h, const ModelSpace& space, int samples,
                         unsigned long long seed) {
  if (h.support.kind == Support::Kind::unbounded) return 0.0;
  const int n = space.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double r0 = h.support.radius;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec p(2 * n);
    for (int i = 0; i < n; ++i) p[i] = space.periodic(i) ? unit(rng) : 4.0 * unit(rng) - 2.0;
    for (int i = 0; i < n; ++i) p[n + i] = normal(rng);
    const double target = r0 + (2.0 * r0 + 1.0) * unit(rng);
    if (h.support.kind == Support::Kind::compact_fiber) {
      p.tail(n) *= target / p.tail(n).norm();
    } else {
      double r = 0.0;
      for (int i = space.circles; i < n; ++i) r += p[i] * p[i] + p[n + i] * p[n + i];
      if (r == 0.0) continue;
      const double scale = target / std::sqrt(r);
      for (int i = space.circles; i < n; ++i) {
        p[i] *= scale;
        p[n + i] *= scale;
      }
    }
    worst = std::max(worst, std::abs(h.value(p, 0.0) - h.support.constant));
  }
  return worst;
}

Mat lcs_two_form_matrix(const LcsPair& pair, const Vec& p, double det_tol) {
  const int n = pair.n();
  if (p.size() != 2 * n) throw InputError("phase point has the wrong dimension");
  const Vec b = pair.beta.components(p.head(n));
  const Vec xi = p.tail(n);
  Mat o = Mat::Zero(2 * n, 2 * n);
  // omega = sum dxi_i ^ dx_i - beta ^ lambda
  for (int i = 0; i < n; ++i) {
    o(i, n + i) = -1.0;
    o(n + i, i) = 1.0;
    for (int j = 0; j < n; ++j) {
      if (i != j) o(i, j) = -(b[i] * xi[j] - b[j] * xi[i]);
    }
  }
  const double det = o.determinant();
  if (!std::isfinite(det) || std::abs(det) < det_tol) {
    throw DegenerateFormError("d_beta lambda is degenerate at the evaluation point");
  }
  return o;
}

Vec dbeta_hamiltonian(const LcsPair& pair, const Hamiltonian& h, double t, const Vec& p) {
  const int n = pair.n();
  Vec d = h.grad(p, t);
  const Vec b = pair.beta.components(p.head(n));
  const double value = h.value(p, t);
  d.head(n) -= value * b;
  return d;
}

Vec hamiltonian_vector_field(const LcsPair& pair, const Hamiltonian& h, double t, const Vec& p) {
  const Vec d = dbeta_hamiltonian(pair, h, t, p);
  if (!d.allFinite()) throw DomainError("Hamiltonian gradient is not finite");
  const Mat o = lcs_two_form_matrix(pair, p);
  // (iota_X omega)_j = omega(X, e_j) = sum_i X_i O[i][j]
  return o.transpose().partialPivLu().solve(-d);
}

namespace {

Trajectory run_rk4(const VectorField& field, const Vec& y0, double t0, double t1, int steps,
                   bool record, double bound, const std::function<double(const Vec&)>& size,
                   const StepMonitor& monitor) {
  Trajectory traj;
  traj.times.push_back(t0);
  traj.points.push_back(y0);
  const double dt = (t1 - t0) / steps;
  Vec y = y0;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * dt;
    const Vec k1 = field(t, y);
    const Vec k2 = field(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Vec k3 = field(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Vec k4 = field(t + dt, y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double tn = (i + 1 == steps) ? t1 : t0 + (i + 1) * dt;
    if (record || i + 1 == steps) {
      traj.times.push_back(tn);
      traj.points.push_back(y);
    }
    if (!y.allFinite() || size(y) > bound) {
      if (!record) {
        traj.times.push_back(tn);
        traj.points.push_back(y);
      }
      throw DivergenceError("trajectory exceeded the blow-up bound at t = " + std::to_string(tn),
                            std::move(traj));
    }
    if (monitor) monitor(tn, y, traj);
  }
  return traj;
}

}  // namespace

Trajectory integrate_rk4(const VectorField& field, const Vec& y0, double t0, double t1,
                         const FlowConfig& cfg, const std::function<double(const Vec&)>& size,
                         const StepMonitor& monitor) {
  if (cfg.steps < 1) throw InputError("flow needs at least one step");
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    throw InputError("flow needs a finite time span with t1 > t0");
  }
  Trajectory coarse = run_rk4(field, y0, t0, t1, cfg.steps, cfg.record, cfg.blowup_bound, size,
                              monitor);
  if (!cfg.estimate_error) return coarse;
  const Trajectory fine = run_rk4(field, y0, t0, t1, 2 * cfg.steps, cfg.record,
                                  cfg.blowup_bound, size, {});
  coarse.errors.resize(coarse.points.size());
  for (std::size_t i = 0; i < coarse.points.size(); ++i) {
    const std::size_t j = cfg.record ? 2 * i : i;
    coarse.errors[i] = (coarse.points[i] - fine.points[j]).norm();
  }
  coarse.final_error = coarse.errors.back();
  return coarse;
}

Trajectory flow(const LcsPair& pair, const Hamiltonian& h, const Vec& p0, double t0, double t1,
                const FlowConfig& cfg) {
  const int n = pair.n();
  if (p0.size() != 2 * n) throw InputError("initial point has the wrong dimension");
  const VectorField field = [&](double t, const Vec& y) {
    return hamiltonian_vector_field(pair, h, t, y);
  };
  const auto fiber_norm = [n](const Vec& y) { return y.tail(n).norm(); };
  return integrate_rk4(field, p0, t0, t1, cfg, fiber_norm);
}

std::vector<std::string> phase_columns(const ModelSpace& space) {
  std::vector<std::string> cols = space.labels;
  for (const auto& l : space.labels) cols.push_back("xi_" + l);
  return cols;
}

void Trajectory::write_csv(std::ostream& out, const std::vector<std::string>& columns) const {
  out << "t";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << times[i];
    for (int k = 0; k < points[i].size(); ++k) out << ',' << points[i][k];
    out << '\n';
  }
}

Hamiltonian symplectized_hamiltonian(const CoverModel& m, const Hamiltonian& h) {
  const int n = m.dim();
  Hamiltonian f;
  f.name = "symplectized(" + h.name + ")";
  f.phase_dim = 2 * n;
  f.params = h.params;
  f.fd_step = h.fd_step;
  auto base_point = [m, n](const Vec& q, double g) {
    Vec b(2 * n);
    b << m.project(q.head(n)), std::exp(g) * q.tail(n);
    return b;
  };
  f.value = [m, h, n, base_point](const Vec& q, double t) {
    const double g = m.primitive(q.head(n));
    return std::exp(-g) * h.value(base_point(q, g), t);
  };
  if (h.gradient) {
    f.gradient = [m, h, n, base_point](const Vec& q, double t) {
      const Vec x = q.head(n);
      const double g = m.primitive(x);
      const Vec b = base_point(q, g);
      const Vec grad = h.gradient(b, t);
      const Vec dg = m.dprimitive(x);
      const Vec eta = b.tail(n);
      const double value = h.value(b, t);
      Vec out(2 * n);
      out.head(n) = std::exp(-g) * (grad.head(n) + (grad.tail(n).dot(eta) - value) * dg);
      out.tail(n) = grad.tail(n);
      return out;
    };
  }
  return f;
}

IntertwineReport verify_symplectized_intertwine(const CoverModel& m, const Hamiltonian& h,
                                                std::span<const CotangentPoint> samples,
                                                double t, const FlowConfig& cfg) {
  const LcsPair base(m);
  const LcsPair cover = LcsPair::flat(m.dim());
  const Hamiltonian lifted = symplectized_hamiltonian(m, h);
  FlowConfig quiet = cfg;
  quiet.estimate_error = false;
  quiet.record = false;
  IntertwineReport report;
  for (const auto& q : samples) {
    const Vec up = flow(cover, lifted, q.stacked(), 0.0, t, quiet).final_point();
    const CotangentPoint lhs = pi_g(m, CotangentPoint::from_stacked(up));
    const CotangentPoint start = pi_g(m, q);
    const CotangentPoint rhs =
        CotangentPoint::from_stacked(flow(base, h, start.stacked(), 0.0, t, quiet).final_point());
    Vec diff(2 * m.dim());
    diff << wrapped_difference(m.base(), lhs.x, rhs.x), lhs.xi - rhs.xi;
    const double dev = diff.norm();
    if (dev >= report.max_deviation) {
      report.max_deviation = dev;
      report.witness = q.stacked();
    }
  }
  return report;
}

double symplectic_defect(const CoverModel& m, const Hamiltonian& h, const CotangentPoint& q,
                         double t, const FlowConfig& cfg, double fd_step) {
  const int n = m.dim();
  const LcsPair cover = LcsPair::flat(n);
  const Hamiltonian lifted = symplectized_hamiltonian(m, h);
  FlowConfig quiet = cfg;
  quiet.estimate_error = false;
  quiet.record = false;
  const Vec q0 = q.stacked();
  Mat jac(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    Vec a = q0, b = q0;
    a[i] += fd_step;
    b[i] -= fd_step;
    jac.col(i) = (flow(cover, lifted, a, 0.0, t, quiet).final_point() -
                  flow(cover, lifted, b, 0.0, t, quiet).final_point()) /
                 (2.0 * fd_step);
  }
  const Mat omega = lcs_two_form_matrix(cover, q0);
  return (jac.transpose() * omega * jac - omega).norm();
}

}  // namespace lcs
