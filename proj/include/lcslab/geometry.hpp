#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace lcs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Product of S^1 (period 1) and R factors. Circle coordinates come first.
struct ModelSpace {
  int circles = 0;
  int lines = 0;
  std::vector<std::string> labels;

  ModelSpace() = default;
  ModelSpace(int circles, int lines, std::vector<std::string> labels = {});

  int dim() const { return circles + lines; }
  bool periodic(int i) const { return i < circles; }
};

// Smooth scalar field on the base with analytic first and second derivatives.
// Only a fixed list of named builtins is exposed; see builtin_scalar_field().
struct ScalarField {
  std::string name = "zero";
  double scale = 1.0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

/// Named builtins: zero, cos_theta1, sin_theta1, cos_theta2, sin_theta2,
/// cos_theta1_cos_theta2. Angles are 2*pi*theta so every field has period 1.
ScalarField builtin_scalar_field(const std::string& name, int dim, double scale = 1.0);
std::vector<std::string> builtin_scalar_field_names();

// beta = sum_i a_i dtheta_i + d g0, with integer lattice coefficients a_i.
class ClosedOneForm {
 public:
  ClosedOneForm() = default;
  ClosedOneForm(const ModelSpace& space, std::vector<int> lattice, ScalarField g0);
  static ClosedOneForm zero(const ModelSpace& space);

  const ModelSpace& space() const { return space_; }
  const std::vector<int>& lattice() const { return lattice_; }
  const ScalarField& exact_part() const { return g0_; }
  int dim() const { return space_.dim(); }

  /// Components (beta_1, ..., beta_n) at a base point.
  Vec components(const Vec& p) const;
  /// Jacobian of the components; symmetric (it is the Hessian of g0).
  Mat derivative(const Vec& p) const;
  /// Number of covered directions r = #{i : a_i != 0}.
  int rank() const;
  bool exact() const { return rank() == 0; }

 private:
  ModelSpace space_;
  std::vector<int> lattice_;
  ScalarField g0_;
};

struct CotangentPoint {
  Vec x;
  Vec xi;

  Vec stacked() const;
  static CotangentPoint from_stacked(const Vec& v);
};

// Integral cover of beta. Cover points use unrolled coordinates for every
// factor; the deck group Z^r translates the circle factors with a_i != 0.
class CoverModel {
 public:
  CoverModel() = default;
  explicit CoverModel(ClosedOneForm beta);

  const ModelSpace& base() const { return beta_.space(); }
  const ClosedOneForm& beta() const { return beta_; }
  int dim() const { return beta_.dim(); }
  int rank() const { return static_cast<int>(covered_.size()); }
  /// Base coordinate index translated by the i-th deck generator.
  const std::vector<int>& covered() const { return covered_; }

  Vec project(const Vec& x) const;
  double primitive(const Vec& x) const;
  Vec dprimitive(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  Vec deck_act(std::span<const int> powers, const Vec& x) const;
  /// Deck generator i acting on T*M~ by (x, xi) -> (alpha_i x, e^{-a_i} xi);
  /// the unique action making pi_g invariant.
  CotangentPoint conformal_deck(std::span<const int> powers, const CotangentPoint& q) const;

 private:
  ClosedOneForm beta_;
  std::vector<int> covered_;
};

/// (x, xi) -> (pi(x), e^{g(x)} xi).
CotangentPoint pi_g(const CoverModel& m, const CotangentPoint& q);

/// Signed difference a - b with circle coordinates reduced to [-1/2, 1/2).
Vec wrapped_difference(const ModelSpace& space, const Vec& a, const Vec& b);

// Exterior algebra bookkeeping for k-forms on R^D: components are indexed by
// strictly increasing index tuples in lexicographic order.
class ExteriorBasis {
 public:
  ExteriorBasis(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(tuples_.size()); }
  const std::vector<int>& tuple(int k) const { return tuples_[k]; }
  /// Position of the sorted tuple, or -1 when degree/dim do not match.
  int position(const std::vector<int>& sorted) const;

 private:
  int dim_;
  int degree_;
  std::vector<std::vector<int>> tuples_;
  std::vector<int> mask_to_pos_;
};

enum class FormDomain { base, cotangent, cover, cover_cotangent };

struct FormValue {
  int degree = 0;
  int dim = 0;
  std::vector<double> components;

  double norm() const;
  /// Coefficient on dx_{i1} ^ ... ^ dx_{ik} for an arbitrary (unsorted) tuple.
  double at(std::vector<int> indices) const;
};

// A k-form given pointwise. `coefficients` returns all C(D, k) components;
// the optional `jacobian` returns d(component)/d(coordinate), rows = components.
struct FormField {
  int degree = 0;
  int dim = 0;
  FormDomain domain = FormDomain::base;
  std::function<std::vector<double>(const Vec&)> coefficients;
  std::function<Mat(const Vec&)> jacobian;

  static FormField zero(int dim, int degree, FormDomain domain = FormDomain::base);
  static FormField scalar(int dim, std::function<double(const Vec&)> f,
                          FormDomain domain = FormDomain::base);
  /// Canonical Liouville form sum xi_i dx_i on the 2n-dimensional cotangent model.
  static FormField liouville(int n);
};

/// d alpha - beta ^ alpha at p. beta is pulled back along the bundle projection
/// when alpha lives on a cotangent model.
FormValue eval_lichnerowicz(const FormField& alpha, const ClosedOneForm& beta, const Vec& p,
                            double fd_step = 1e-4);

/// d_beta alpha as a FormField, evaluated by eval_lichnerowicz.
FormField lichnerowicz_field(const FormField& alpha, const ClosedOneForm& beta,
                             double fd_step = 1e-4);

/// max over samples of |d_beta(d_beta alpha)| by nested central differences.
double check_dbeta_squared(const FormField& alpha, const ClosedOneForm& beta,
                           std::span<const Vec> samples, double fd_step = 1e-4);

/// Random k-form whose coefficients are short trigonometric sums of period 1 in
/// every coordinate (amplitudes in [-1, 1], wave vectors in {-1, 0, 1}^dim).
FormField random_trig_form(int dim, int degree, FormDomain domain, unsigned long long seed);

/// Random closed one-form on the given space: lattice entries in {-1, 0, 1, 2},
/// exact part drawn from the builtin scalar fields valid on that space.
ClosedOneForm random_closed_form(const ModelSpace& space, unsigned long long seed);

/// {"circles": n1, "lines": n2, "beta": {"lattice": [...], "g0": "zero", "g0_scale": 1}}
CoverModel cover_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CoverModel& m);

}  // namespace lcs
