#include "lcslab/lifts.hpp"

#include <cmath>
#include <random>

namespace lcs {

namespace {

void require_sigma(double sigma) {
  if (sigma == 0.0 || !std::isfinite(sigma)) {
    throw DomainError("sigma must be finite and nonzero");
  }
}

}  // namespace

Vec HomogeneousPoint::stacked() const {
  const int k = n();
  Vec v(2 * k + 2);
  v.head(k) = x;
  v[k] = s;
  v.segment(k + 1, k) = xi;
  v[2 * k + 1] = sigma;
  return v;
}

HomogeneousPoint HomogeneousPoint::from_stacked(const Vec& v) {
  if (v.size() < 2 || v.size() % 2 != 0) throw InputError("homogeneous point has odd size");
  const auto k = v.size() / 2 - 1;
  return {v.head(k), v.segment(k + 1, k), v[k], v[2 * k + 1]};
}

CotangentPoint rho_cl(const HomogeneousPoint& q) {
  require_sigma(q.sigma);
  return {q.x, q.xi / q.sigma};
}

CotangentPoint rho_eq(const CoverModel& m, const HomogeneousPoint& q) {
  require_sigma(q.sigma);
  const double g = m.primitive(q.x);
  return {q.x, std::exp(-g) * (q.xi / q.sigma + q.s * m.dprimitive(q.x))};
}

HomogeneousPoint liouville_L(const CoverModel& m, const HomogeneousPoint& q) {
  const double g = m.primitive(q.x);
  return {q.x, q.xi + q.s * q.sigma * m.dprimitive(q.x), std::exp(-g) * q.s,
          std::exp(g) * q.sigma};
}

HomogeneousPoint liouville_L_inv(const CoverModel& m, const HomogeneousPoint& q) {
  const double g = m.primitive(q.x);
  return {q.x, q.xi - q.s * q.sigma * m.dprimitive(q.x), std::exp(g) * q.s,
          std::exp(-g) * q.sigma};
}

HomogeneousPoint translate_Tc(double c, const HomogeneousPoint& q) {
  HomogeneousPoint r = q;
  r.s += c;
  return r;
}

HomogeneousPoint twisted_Dc(const CoverModel& m, double c, const HomogeneousPoint& q) {
  const double eg = std::exp(m.primitive(q.x));
  return {q.x, q.xi - eg * c * q.sigma * m.dprimitive(q.x), q.s + eg * c, q.sigma};
}

HomogeneousPoint deck_homogeneous(const CoverModel& m, std::span<const int> powers,
                                  const HomogeneousPoint& q) {
  HomogeneousPoint r = q;
  r.x = m.deck_act(powers, q.x);
  return r;
}

double liouville_pullback_defect(const CoverModel& m, std::span<const HomogeneousPoint> samples,
                                 double fd_step) {
  double worst = 0.0;
  for (const auto& q : samples) {
    const int k = q.n();
    const Vec v = q.stacked();
    const int d = static_cast<int>(v.size());
    Mat jac(d, d);
    for (int i = 0; i < d; ++i) {
      Vec a = v, b = v;
      a[i] += fd_step;
      b[i] -= fd_step;
      jac.col(i) = (liouville_L(m, HomogeneousPoint::from_stacked(a)).stacked() -
                    liouville_L(m, HomogeneousPoint::from_stacked(b)).stacked()) /
                   (2.0 * fd_step);
    }
    const Vec image = liouville_L(m, q).stacked();
    // lambda = (fiber part) . d(base part); pull back through the base rows of J.
    const Vec pulled = jac.topRows(k + 1).transpose() * image.tail(k + 1);
    Vec lambda = Vec::Zero(d);
    lambda.head(k + 1) = v.tail(k + 1);
    worst = std::max(worst, (pulled - lambda).norm());
  }
  return worst;
}

std::string to_string(LiftKind k) { return k == LiftKind::classical ? "classical" : "equivariant"; }

LiftKind lift_kind_from_string(const std::string& s) {
  if (s == "classical" || s == "cl") return LiftKind::classical;
  if (s == "equivariant" || s == "eq") return LiftKind::equivariant;
  throw InputError("unknown lift kind: " + s);
}

LiftedHamiltonian::LiftedHamiltonian(LiftKind kind, CoverModel m, Hamiltonian h)
    : kind_(kind), m_(std::move(m)), h_(std::move(h)) {
  const int n = m_.dim();
  if (h_.phase_dim != 2 * n) throw InputError("Hamiltonian does not live on the base model");
  lifted_.name = to_string(kind_) + "(" + h_.name + ")";
  lifted_.phase_dim = 2 * n + 2;
  lifted_.params = h_.params;
  lifted_.fd_step = h_.fd_step;

  const CoverModel cover = m_;
  const Hamiltonian base = h_;
  if (kind_ == LiftKind::classical) {
    const Hamiltonian ft = symplectized_hamiltonian(cover, base);
    lifted_.value = [ft](const Vec& v, double t) {
      const auto q = HomogeneousPoint::from_stacked(v);
      return q.sigma * ft.value(rho_cl(q).stacked(), t);
    };
    if (ft.gradient) {
      lifted_.gradient = [ft, n](const Vec& v, double t) {
        const auto q = HomogeneousPoint::from_stacked(v);
        const Vec p = rho_cl(q).stacked();
        const Vec gr = ft.gradient(p, t);
        Vec out(2 * n + 2);
        out.head(n) = q.sigma * gr.head(n);
        out[n] = 0.0;
        out.segment(n + 1, n) = gr.tail(n);
        out[2 * n + 1] = ft.value(p, t) - gr.tail(n).dot(p.tail(n));
        return out;
      };
    }
  } else {
    auto base_point = [cover, n](const HomogeneousPoint& q) {
      require_sigma(q.sigma);
      Vec p(2 * n);
      p << cover.project(q.x), q.xi / q.sigma + q.s * cover.dprimitive(q.x);
      return p;
    };
    lifted_.value = [base, base_point](const Vec& v, double t) {
      const auto q = HomogeneousPoint::from_stacked(v);
      return q.sigma * base.value(base_point(q), t);
    };
    if (base.gradient) {
      lifted_.gradient = [base, base_point, cover, n](const Vec& v, double t) {
        const auto q = HomogeneousPoint::from_stacked(v);
        const Vec p = base_point(q);
        const Vec gr = base.gradient(p, t);
        const Vec deta = gr.tail(n);
        Vec out(2 * n + 2);
        out.head(n) = q.sigma * (gr.head(n) + q.s * cover.hessian(q.x) * deta);
        out[n] = q.sigma * deta.dot(cover.dprimitive(q.x));
        out.segment(n + 1, n) = deta;
        out[2 * n + 1] = base.value(p, t) - deta.dot(q.xi) / q.sigma;
        return out;
      };
    }
  }
}

double LiftedHamiltonian::value(const HomogeneousPoint& q, double t) const {
  return lifted_.value(q.stacked(), t);
}

LiftedHamiltonian lift_hamiltonian(LiftKind kind, const CoverModel& m, const Hamiltonian& h) {
  return LiftedHamiltonian(kind, m, h);
}

Trajectory flow_homogeneous(const LiftedHamiltonian& f, const HomogeneousPoint& q0, double t0,
                            double t1, const FlowConfig& cfg) {
  if (q0.n() != f.cover().dim()) throw InputError("homogeneous point has the wrong dimension");
  return flow_homogeneous(f.homogeneous(), q0, t0, t1, cfg);
}

Trajectory flow_homogeneous(const Hamiltonian& hh, const HomogeneousPoint& q0, double t0,
                            double t1, const FlowConfig& cfg) {
  require_sigma(q0.sigma);
  const int k = q0.n() + 1;
  if (hh.phase_dim != 2 * k) throw InputError("Hamiltonian does not match the homogeneous point");
  // Standard form on T*(M~ x R): x' = dH/dxi, xi' = -dH/dx.
  const VectorField field = [&hh, k](double t, const Vec& y) {
    const Vec g = hh.grad(y, t);
    if (!g.allFinite()) throw DomainError("lifted Hamiltonian gradient is not finite");
    Vec dy(2 * k);
    dy.head(k) = g.tail(k);
    dy.tail(k) = -g.head(k);
    return dy;
  };
  const double sign0 = q0.sigma > 0 ? 1.0 : -1.0;
  const StepMonitor monitor = [sign0](double t, const Vec& y, const Trajectory&) {
    if (!(y[y.size() - 1] * sign0 > 0.0)) {
      throw SigmaCrossingError("sigma changed sign at t = " + std::to_string(t), t);
    }
  };
  const auto fiber_norm = [k](const Vec& y) { return y.tail(k).norm(); };
  return integrate_rk4(field, q0.stacked(), t0, t1, cfg, fiber_norm, monitor);
}

HomogeneousPoint flow_homogeneous_to(const LiftedHamiltonian& f, const HomogeneousPoint& q0,
                                     double t, int steps) {
  FlowConfig cfg;
  cfg.steps = steps;
  cfg.estimate_error = false;
  cfg.record = false;
  return HomogeneousPoint::from_stacked(flow_homogeneous(f, q0, 0.0, t, cfg).final_point());
}

double sigma_transport_defect(const CoverModel& m, const Trajectory& traj) {
  const auto q0 = HomogeneousPoint::from_stacked(traj.points.front());
  const double ref = q0.sigma * std::exp(m.primitive(q0.x));
  double worst = 0.0;
  for (const auto& v : traj.points) {
    const auto q = HomogeneousPoint::from_stacked(v);
    worst = std::max(worst, std::abs(q.sigma * std::exp(m.primitive(q.x)) / ref - 1.0));
  }
  return worst;
}

nlohmann::json to_json(const DiagramReport& r) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"identity", r.identity},
          {"samples", r.samples},
          {"max_deviation", r.max_deviation},
          {"witness",
           {{"point", vec(r.witness_point)}, {"lhs", vec(r.witness_lhs)}, {"rhs", vec(r.witness_rhs)}}}};
}

std::vector<std::string> identity_names() {
  return {"diagram_cl",   "diagram_eq",          "intertwine_L",
          "rho_factorization", "TcDc",           "deck_equivariance_eq",
          "deck_nonequivariance_cl", "s_shift_equivariance"};
}

DiagramReport verify_identity(const std::string& name, const CoverModel& m, const Hamiltonian& h,
                              std::span<const HomogeneousPoint> samples, double t,
                              const IdentityOptions& opts) {
  const auto names = identity_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InputError("unknown identity: " + name);
  }
  const int n = m.dim();
  const bool deck = name == "deck_equivariance_eq" || name == "deck_nonequivariance_cl";
  std::vector<int> powers(m.rank(), 0);
  if (deck) {
    if (m.rank() == 0) throw PreconditionError(name + " needs a non-exact beta");
    if (opts.generator < 0 || opts.generator >= m.rank()) {
      throw InputError("deck generator index out of range");
    }
    powers[opts.generator] = 1;
  }
  const LiftedHamiltonian fcl(LiftKind::classical, m, h);
  const LiftedHamiltonian feq(LiftKind::equivariant, m, h);
  const Hamiltonian ft = symplectized_hamiltonian(m, h);
  const LcsPair flat = LcsPair::flat(n);
  FlowConfig cover_cfg;
  cover_cfg.steps = opts.steps;
  cover_cfg.estimate_error = false;
  cover_cfg.record = false;
  auto flow_cover = [&](const CotangentPoint& p) {
    return flow(flat, ft, p.stacked(), 0.0, t, cover_cfg).final_point();
  };
  auto phi = [&](const LiftedHamiltonian& f, const HomogeneousPoint& q) {
    return flow_homogeneous_to(f, q, t, opts.steps);
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> cdist(-1.0, 1.0);

  DiagramReport report;
  report.identity = name;
  report.samples = static_cast<int>(samples.size());
  bool first = true;
  for (const auto& q : samples) {
    Vec lhs, rhs;
    if (name == "diagram_cl") {
      lhs = rho_cl(phi(fcl, q)).stacked();
      rhs = flow_cover(rho_cl(q));
    } else if (name == "diagram_eq") {
      lhs = rho_eq(m, phi(feq, q)).stacked();
      rhs = flow_cover(rho_eq(m, q));
    } else if (name == "intertwine_L") {
      lhs = phi(feq, q).stacked();
      rhs = liouville_L_inv(m, phi(fcl, liouville_L(m, q))).stacked();
    } else if (name == "rho_factorization") {
      lhs = rho_eq(m, q).stacked();
      rhs = rho_cl(liouville_L(m, q)).stacked();
    } else if (name == "TcDc") {
      const double c = cdist(rng);
      lhs = liouville_L_inv(m, translate_Tc(c, q)).stacked();
      rhs = twisted_Dc(m, c, liouville_L_inv(m, q)).stacked();
    } else if (name == "s_shift_equivariance") {
      lhs = phi(feq, translate_Tc(1.0, q)).stacked();
      rhs = translate_Tc(1.0, phi(feq, q)).stacked();
    } else {
      const LiftedHamiltonian& f = name == "deck_equivariance_eq" ? feq : fcl;
      lhs = phi(f, deck_homogeneous(m, powers, q)).stacked();
      rhs = deck_homogeneous(m, powers, phi(f, q)).stacked();
    }
    const double dev = (lhs - rhs).norm();
    if (first || dev > report.max_deviation) {
      first = false;
      report.max_deviation = dev;
      report.witness_point = q.stacked();
      report.witness_lhs = lhs;
      report.witness_rhs = rhs;
    }
  }
  return report;
}

std::vector<HomogeneousPoint> random_homogeneous_points(int n, int count,
                                                        unsigned long long seed,
                                                        const SampleBox& box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> sig(box.sigma_min, box.sigma_max);
  std::vector<HomogeneousPoint> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    HomogeneousPoint q;
    q.x.resize(n);
    q.xi.resize(n);
    for (int i = 0; i < n; ++i) q.x[i] = box.x_range * unit(rng);
    for (int i = 0; i < n; ++i) q.xi[i] = box.xi_range * unit(rng);
    q.s = box.s_range * unit(rng);
    q.sigma = sig(rng);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace lcs
