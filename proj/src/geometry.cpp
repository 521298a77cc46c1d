#include "lcslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <numbers>

#include "lcslab/errors.hpp"

namespace lcs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField trig_field(const std::string& name, int dim, double scale, int axis, bool use_cos) {
  if (axis >= dim) {
    throw InputError("scalar field " + name + " needs at least " + std::to_string(axis + 1) +
                     " coordinates");
  }
  ScalarField f;
  f.name = name;
  f.scale = scale;
  f.value = [=](const Vec& p) {
    const double a = kTwoPi * p[axis];
    return scale * (use_cos ? std::cos(a) : std::sin(a));
  };
  f.gradient = [=](const Vec& p) {
    Vec g = Vec::Zero(p.size());
    const double a = kTwoPi * p[axis];
    g[axis] = scale * kTwoPi * (use_cos ? -std::sin(a) : std::cos(a));
    return g;
  };
  f.hessian = [=](const Vec& p) {
    Mat h = Mat::Zero(p.size(), p.size());
    const double a = kTwoPi * p[axis];
    h(axis, axis) = -scale * kTwoPi * kTwoPi * (use_cos ? std::cos(a) : std::sin(a));
    return h;
  };
  return f;
}

}  // namespace

ModelSpace::ModelSpace(int circles_, int lines_, std::vector<std::string> labels_)
    : circles(circles_), lines(lines_), labels(std::move(labels_)) {
  if (circles < 0 || lines < 0 || circles + lines < 1) {
    throw InputError("model space needs a nonnegative factor count and dimension >= 1");
  }
  if (labels.empty()) {
    for (int i = 0; i < circles; ++i) labels.push_back("theta" + std::to_string(i + 1));
    for (int i = 0; i < lines; ++i) labels.push_back("y" + std::to_string(i + 1));
  }
  if (static_cast<int>(labels.size()) != circles + lines) {
    throw InputError("model space label count does not match its dimension");
  }
}

std::vector<std::string> builtin_scalar_field_names() {
  return {"zero", "cos_theta1", "sin_theta1", "cos_theta2", "sin_theta2", "cos_theta1_cos_theta2"};
}

ScalarField builtin_scalar_field(const std::string& name, int dim, double scale) {
  if (name == "zero") {
    ScalarField f;
    f.name = name;
    f.scale = scale;
    f.value = [](const Vec&) { return 0.0; };
    f.gradient = [](const Vec& p) { return Vec::Zero(p.size()); };
    f.hessian = [](const Vec& p) { return Mat::Zero(p.size(), p.size()); };
    return f;
  }
  if (name == "cos_theta1") return trig_field(name, dim, scale, 0, true);
  if (name == "sin_theta1") return trig_field(name, dim, scale, 0, false);
  if (name == "cos_theta2") return trig_field(name, dim, scale, 1, true);
  if (name == "sin_theta2") return trig_field(name, dim, scale, 1, false);
  if (name == "cos_theta1_cos_theta2") {
    if (dim < 2) throw InputError("cos_theta1_cos_theta2 needs two coordinates");
    ScalarField f;
    f.name = name;
    f.scale = scale;
    f.value = [=](const Vec& p) {
      return scale * std::cos(kTwoPi * p[0]) * std::cos(kTwoPi * p[1]);
    };
    f.gradient = [=](const Vec& p) {
      Vec g = Vec::Zero(p.size());
      const double c0 = std::cos(kTwoPi * p[0]), s0 = std::sin(kTwoPi * p[0]);
      const double c1 = std::cos(kTwoPi * p[1]), s1 = std::sin(kTwoPi * p[1]);
      g[0] = -scale * kTwoPi * s0 * c1;
      g[1] = -scale * kTwoPi * c0 * s1;
      return g;
    };
    f.hessian = [=](const Vec& p) {
      Mat h = Mat::Zero(p.size(), p.size());
      const double c0 = std::cos(kTwoPi * p[0]), s0 = std::sin(kTwoPi * p[0]);
      const double c1 = std::cos(kTwoPi * p[1]), s1 = std::sin(kTwoPi * p[1]);
      const double k2 = scale * kTwoPi * kTwoPi;
      h(0, 0) = -k2 * c0 * c1;
      h(1, 1) = -k2 * c0 * c1;
      h(0, 1) = h(1, 0) = k2 * s0 * s1;
      return h;
    };
    return f;
  }
  throw InputError("unknown scalar field builtin: " + name);
}

ClosedOneForm::ClosedOneForm(const ModelSpace& space, std::vector<int> lattice, ScalarField g0)
    : space_(space), lattice_(std::move(lattice)), g0_(std::move(g0)) {
  if (static_cast<int>(lattice_.size()) != space_.circles) {
    throw InputError("lattice needs one coefficient per circle factor");
  }
  if (!g0_.value || !g0_.gradient || !g0_.hessian) {
    throw InputError("exact part of beta must provide value, gradient and hessian");
  }
  // g0 has to descend to the base: period 1 in every circle coordinate.
  const int n = space_.dim();
  for (int sample = 0; sample < 7; ++sample) {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = 0.137 * (sample + 1) + 0.291 * i;
    for (int i = 0; i < space_.circles; ++i) {
      Vec q = p;
      q[i] += 1.0;
      if (std::abs(g0_.value(q) - g0_.value(p)) > 1e-9) {
        throw InputError("exact part " + g0_.name + " is not 1-periodic in " + space_.labels[i]);
      }
    }
  }
}

ClosedOneForm ClosedOneForm::zero(const ModelSpace& space) {
  return ClosedOneForm(space, std::vector<int>(space.circles, 0),
                       builtin_scalar_field("zero", space.dim()));
}

Vec ClosedOneForm::components(const Vec& p) const {
  Vec b = g0_.gradient(p);
  for (int i = 0; i < space_.circles; ++i) b[i] += lattice_[i];
  return b;
}

Mat ClosedOneForm::derivative(const Vec& p) const { return g0_.hessian(p); }

int ClosedOneForm::rank() const {
  return static_cast<int>(std::count_if(lattice_.begin(), lattice_.end(),
                                        [](int a) { return a != 0; }));
}

Vec CotangentPoint::stacked() const {
  Vec v(x.size() + xi.size());
  v << x, xi;
  return v;
}

CotangentPoint CotangentPoint::from_stacked(const Vec& v) {
  const auto n = v.size() / 2;
  return {v.head(n), v.tail(n)};
}

CoverModel::CoverModel(ClosedOneForm beta) : beta_(std::move(beta)) {
  for (int i = 0; i < beta_.space().circles; ++i) {
    if (beta_.lattice()[i] != 0) covered_.push_back(i);
  }
}

Vec CoverModel::project(const Vec& x) const {
  Vec p = x;
  for (int i = 0; i < base().circles; ++i) p[i] = x[i] - std::floor(x[i]);
  return p;
}

double CoverModel::primitive(const Vec& x) const {
  double g = beta_.exact_part().value(project(x));
  for (int i = 0; i < base().circles; ++i) g += beta_.lattice()[i] * x[i];
  return g;
}

Vec CoverModel::dprimitive(const Vec& x) const { return beta_.components(project(x)); }

Mat CoverModel::hessian(const Vec& x) const { return beta_.derivative(project(x)); }

Vec CoverModel::deck_act(std::span<const int> powers, const Vec& x) const {
  if (static_cast<int>(powers.size()) != rank()) {
    throw InputError("deck_act expects " + std::to_string(rank()) + " powers, got " +
                     std::to_string(powers.size()));
  }
  Vec y = x;
  for (int i = 0; i < rank(); ++i) y[covered_[i]] += powers[i];
  return y;
}

CotangentPoint CoverModel::conformal_deck(std::span<const int> powers,
                                          const CotangentPoint& q) const {
  const Vec x = deck_act(powers, q.x);
  double shift = 0.0;
  for (int i = 0; i < rank(); ++i) shift += powers[i] * beta_.lattice()[covered_[i]];
  return {x, std::exp(-shift) * q.xi};
}

CotangentPoint pi_g(const CoverModel& m, const CotangentPoint& q) {
  return {m.project(q.x), std::exp(m.primitive(q.x)) * q.xi};
}

Vec wrapped_difference(const ModelSpace& space, const Vec& a, const Vec& b) {
  Vec d = a - b;
  for (int i = 0; i < space.circles && i < d.size(); ++i) d[i] -= std::floor(d[i] + 0.5);
  return d;
}

ExteriorBasis::ExteriorBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > 20 || degree < 0) throw InputError("unsupported exterior basis size");
  mask_to_pos_.assign(std::size_t{1} << dim, -1);
  if (degree > dim) return;
  std::vector<int> t(degree);
  for (int i = 0; i < degree; ++i) t[i] = i;
  while (true) {
    unsigned mask = 0;
    for (int v : t) mask |= 1u << v;
    mask_to_pos_[mask] = static_cast<int>(tuples_.size());
    tuples_.push_back(t);
    int i = degree - 1;
    while (i >= 0 && t[i] == dim - degree + i) --i;
    if (i < 0) break;
    ++t[i];
    for (int j = i + 1; j < degree; ++j) t[j] = t[j - 1] + 1;
  }
}

int ExteriorBasis::position(const std::vector<int>& sorted) const {
  if (static_cast<int>(sorted.size()) != degree_) return -1;
  unsigned mask = 0;
  for (int v : sorted) {
    if (v < 0 || v >= dim_) return -1;
    mask |= 1u << v;
  }
  return mask_to_pos_[mask];
}

double FormValue::norm() const {
  double s = 0.0;
  for (double c : components) s += c * c;
  return std::sqrt(s);
}

double FormValue::at(std::vector<int> indices) const {
  // Sort while tracking the permutation sign; repeated indices give zero.
  int sign = 1;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = 0; j + 1 < indices.size() - i; ++j) {
      if (indices[j] > indices[j + 1]) {
        std::swap(indices[j], indices[j + 1]);
        sign = -sign;
      }
    }
  }
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] == indices[i - 1]) return 0.0;
  }
  const ExteriorBasis basis(dim, degree);
  const int pos = basis.position(indices);
  if (pos < 0) throw InputError("form index out of range");
  return sign * components[pos];
}

FormField FormField::zero(int dim, int degree, FormDomain domain) {
  const int size = ExteriorBasis(dim, degree).size();
  FormField f;
  f.degree = degree;
  f.dim = dim;
  f.domain = domain;
  f.coefficients = [size](const Vec&) { return std::vector<double>(size, 0.0); };
  f.jacobian = [size, dim](const Vec&) { return Mat::Zero(size, dim); };
  return f;
}

FormField FormField::scalar(int dim, std::function<double(const Vec&)> fn, FormDomain domain) {
  FormField f;
  f.degree = 0;
  f.dim = dim;
  f.domain = domain;
  f.coefficients = [fn = std::move(fn)](const Vec& p) { return std::vector<double>{fn(p)}; };
  return f;
}

FormField FormField::liouville(int n) {
  const ExteriorBasis basis(2 * n, 1);
  FormField f;
  f.degree = 1;
  f.dim = 2 * n;
  f.domain = FormDomain::cotangent;
  f.coefficients = [n](const Vec& p) {
    std::vector<double> c(2 * n, 0.0);
    for (int i = 0; i < n; ++i) c[i] = p[n + i];
    return c;
  };
  f.jacobian = [n](const Vec&) {
    Mat j = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) j(i, n + i) = 1.0;
    return j;
  };
  return f;
}

namespace {

Vec pulled_back_beta(const FormField& alpha, const ClosedOneForm& beta, const Vec& p) {
  const int n = beta.dim();
  const bool on_cotangent =
      alpha.domain == FormDomain::cotangent || alpha.domain == FormDomain::cover_cotangent;
  const int expected = on_cotangent ? 2 * n : n;
  if (alpha.dim != expected || p.size() != alpha.dim) {
    throw InputError("form of dimension " + std::to_string(alpha.dim) +
                     " does not live on a space of dimension " + std::to_string(expected));
  }
  Vec b = Vec::Zero(alpha.dim);
  b.head(n) = beta.components(p.head(n));
  return b;
}

Mat partials(const FormField& alpha, const Vec& p, double h, int size) {
  if (alpha.jacobian) return alpha.jacobian(p);
  Mat jac(size, alpha.dim);
  // Five-point central stencil.
  for (int i = 0; i < alpha.dim; ++i) {
    auto at = [&](double offset) {
      Vec q = p;
      q[i] += offset;
      return alpha.coefficients(q);
    };
    const auto f2p = at(2 * h), f1p = at(h), f1m = at(-h), f2m = at(-2 * h);
    for (int c = 0; c < size; ++c) {
      jac(c, i) = (f2m[c] - 8.0 * f1m[c] + 8.0 * f1p[c] - f2p[c]) / (12.0 * h);
    }
  }
  return jac;
}

}  // namespace

FormValue eval_lichnerowicz(const FormField& alpha, const ClosedOneForm& beta, const Vec& p,
                            double fd_step) {
  if (!(fd_step > 0.0)) throw InputError("fd_step must be positive");
  const Vec b = pulled_back_beta(alpha, beta, p);
  const ExteriorBasis in(alpha.dim, alpha.degree);
  const ExteriorBasis out(alpha.dim, alpha.degree + 1);
  const auto coeffs = alpha.coefficients(p);
  if (static_cast<int>(coeffs.size()) != in.size()) {
    throw InputError("form coefficient count does not match its degree");
  }
  FormValue result{alpha.degree + 1, alpha.dim, std::vector<double>(out.size(), 0.0)};
  if (out.size() == 0) return result;
  const Mat jac = partials(alpha, p, fd_step, in.size());

  for (int k = 0; k < out.size(); ++k) {
    const auto& tuple = out.tuple(k);
    double value = 0.0;
    for (std::size_t m = 0; m < tuple.size(); ++m) {
      std::vector<int> rest;
      rest.reserve(tuple.size() - 1);
      for (std::size_t q = 0; q < tuple.size(); ++q) {
        if (q != m) rest.push_back(tuple[q]);
      }
      const int pos = in.position(rest);
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      value += sign * (jac(pos, tuple[m]) - b[tuple[m]] * coeffs[pos]);
    }
    result.components[k] = value;
  }
  return result;
}

FormField lichnerowicz_field(const FormField& alpha, const ClosedOneForm& beta, double fd_step) {
  FormField f;
  f.degree = alpha.degree + 1;
  f.dim = alpha.dim;
  f.domain = alpha.domain;
  f.coefficients = [alpha, beta, fd_step](const Vec& p) {
    return eval_lichnerowicz(alpha, beta, p, fd_step).components;
  };
  return f;
}

double check_dbeta_squared(const FormField& alpha, const ClosedOneForm& beta,
                           std::span<const Vec> samples, double fd_step) {
  if (samples.empty()) throw InputError("check_dbeta_squared needs at least one sample");
  const FormField first = lichnerowicz_field(alpha, beta, fd_step);
  double worst = 0.0;
  for (const Vec& p : samples) {
    worst = std::max(worst, eval_lichnerowicz(first, beta, p, fd_step).norm());
  }
  return worst;
}

FormField random_trig_form(int dim, int degree, FormDomain domain, unsigned long long seed) {
  const int size = ExteriorBasis(dim, degree).size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_int_distribution<int> wave(-1, 1);
  struct Term {
    double a;
    double phi;
    std::vector<int> k;
  };
  std::vector<std::vector<Term>> terms(size);
  for (auto& component : terms) {
    for (int t = 0; t < 2; ++t) {
      Term term{amp(rng), phase(rng), std::vector<int>(dim)};
      for (int& k : term.k) k = wave(rng);
      component.push_back(std::move(term));
    }
  }
  FormField f;
  f.degree = degree;
  f.dim = dim;
  f.domain = domain;
  f.coefficients = [terms](const Vec& p) {
    std::vector<double> c(terms.size(), 0.0);
    for (std::size_t j = 0; j < terms.size(); ++j) {
      for (const auto& t : terms[j]) {
        double arg = t.phi;
        for (int i = 0; i < p.size(); ++i) arg += kTwoPi * t.k[i] * p[i];
        c[j] += t.a * std::sin(arg);
      }
    }
    return c;
  };
  return f;
}

ClosedOneForm random_closed_form(const ModelSpace& space, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> lattice_dist(-1, 2);
  std::uniform_real_distribution<double> scale_dist(0.0, 0.25);
  std::vector<int> lattice(space.circles);
  for (int& a : lattice) a = lattice_dist(rng);
  std::vector<std::string> names{"zero"};
  if (space.circles >= 1) {
    names.insert(names.end(), {"cos_theta1", "sin_theta1"});
  }
  if (space.circles >= 2) {
    names.insert(names.end(), {"cos_theta2", "sin_theta2", "cos_theta1_cos_theta2"});
  }
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  const std::string name = names[pick(rng)];
  return ClosedOneForm(space, lattice, builtin_scalar_field(name, space.dim(), scale_dist(rng)));
}

CoverModel cover_model_from_json(const nlohmann::json& j) {
  const int circles = j.value("circles", 0);
  const int lines = j.value("lines", 0);
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
  const ModelSpace space(circles, lines, labels);
  std::vector<int> lattice(circles, 0);
  std::string g0 = "zero";
  double scale = 1.0;
  if (j.contains("beta")) {
    const auto& b = j.at("beta");
    if (b.contains("lattice")) lattice = b.at("lattice").get<std::vector<int>>();
    g0 = b.value("g0", std::string("zero"));
    scale = b.value("g0_scale", 1.0);
  }
  return CoverModel(ClosedOneForm(space, lattice, builtin_scalar_field(g0, space.dim(), scale)));
}

nlohmann::json to_json(const CoverModel& m) {
  return {{"circles", m.base().circles},
          {"lines", m.base().lines},
          {"labels", m.base().labels},
          {"beta",
           {{"lattice", m.beta().lattice()},
            {"g0", m.beta().exact_part().name},
            {"g0_scale", m.beta().exact_part().scale}}}};
}

}  // namespace lcs
