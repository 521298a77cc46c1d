#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcslab/sheaf.hpp"

namespace lcs {

// Interval module made of [a, b) and [a, inf) summands only.
class TamarkinModule {
 public:
  TamarkinModule() = default;
  explicit TamarkinModule(IntervalModule m);

  const IntervalModule& module() const { return module_; }
  const std::vector<IntervalSummand>& summands() const { return module_.summands; }
  bool empty() const;

 private:
  IntervalModule module_;
};

/// Whether F -> T_{c*} F is nonzero, decided summand by summand.
bool tau_nonzero(const TamarkinModule& f, double c);

TamarkinModule shift(const TamarkinModule& f, double a);
TamarkinModule direct_sum(const TamarkinModule& f, const TamarkinModule& g);

struct EnergyReport {
  double energy = 0.0;  // +inf when never displaced
  bool attained = false;
  std::string method;  // "closed_form", "sampled", "cellular"
  std::optional<double> resolution;
  nlohmann::json to_json() const;
};

EnergyReport energy(const TamarkinModule& f);

struct MonotoneReport {
  std::vector<double> grid;
  std::vector<bool> values;
  int violations = 0;
  bool monotone() const { return violations == 0; }
  nlohmann::json to_json() const;
};

MonotoneReport check_tau_monotone(const TamarkinModule& f, const std::vector<double>& c_grid);

/// Module with `count` random summands: endpoints on the 1/64 grid in [-5, 9), a few infinite ones.
TamarkinModule random_tamarkin_module(std::mt19937_64& rng, int count, double infinite_rate = 0.05);

// k_V for V = {(x, s) : f1(x) <= s < f2(x)} over a base region inside the box [lo, hi].
struct FiberedIntervalSheaf {
  using Profile = std::function<double(const std::vector<double>&)>;
  std::string name;
  std::vector<double> lo;
  std::vector<double> hi;
  std::function<bool(const std::vector<double>&)> in_base;
  Profile f1;
  Profile f2;

  int dim() const { return static_cast<int>(lo.size()); }
};

/// f1(x) = int_0^{|x|} sqrt(R^2 - u^2) du (adaptive quadrature), f2 = pi R^2 / 2 - f1, on |x| <= R.
FiberedIntervalSheaf ball_sheaf(int n, double radius);
/// f1 = 0, f2 = height over the box.
FiberedIntervalSheaf constant_profile(std::vector<double> lo, std::vector<double> hi, double height);

/// {"type": "ball", "n", "R"} or {"type": "constant", "lo", "hi", "height"}.
FiberedIntervalSheaf fibered_from_json(const nlohmann::json& j);

/// Base grid points with about `samples` points in total (odd count per axis).
std::vector<std::vector<double>> base_samples(const FiberedIntervalSheaf& f, int samples);

/// sup over sampled base points of f2 - f1; throws ValidationError if f1 > f2 somewhere.
EnergyReport energy_fibered(const FiberedIntervalSheaf& f, int samples = 10000);

struct CellularEnergy {
  EnergyReport report;
  std::vector<double> witness;  // base vertex carrying the longest fiber
  /// H^0 of k on the closure of V cap T_c V over the witness fiber, just below and at the threshold.
  long long sections_below = 0;
  long long sections_at = 0;
  nlohmann::json to_json() const;
};

/// Brute force on a grid of step delta in base and s: the first c = m delta with V cap T_c V empty.
CellularEnergy energy_cellular(const FiberedIntervalSheaf& f, double delta);

struct SqueezeReport {
  double r_strip = 0.0;
  double energy = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool holds = false;
  nlohmann::json to_json() const;
};

/// e(F) <= 4 r^2 for F supported in |x_1| < r. The microsupport cone condition is assumed.
SqueezeReport verify_squeeze_bound(const FiberedIntervalSheaf& f, double r_strip, int samples = 10000);

TamarkinModule tamarkin_module_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TamarkinModule& f);

}  // namespace lcs
