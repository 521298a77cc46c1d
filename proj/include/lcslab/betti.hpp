#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcslab/sheaf.hpp"

namespace lcs {

// One direct summand of a sheaf on the torus model, pulled back to the cover.
// Boxes are products of arcs [lo_i, hi_i] in circle coordinates (units of one
// turn, aligned to the grid); lo_i = 0, hi_i = 1 means the whole circle.
struct SheafSummand {
  enum class Type { constant, closed_box, open_box };
  Type type = Type::constant;
  std::vector<double> lo;
  std::vector<double> hi;

  /// A rank-one skyscraper at a grid vertex, i.e. a closed box with lo == hi.
  static SheafSummand skyscraper(std::vector<double> at);
};

struct TorusSpec {
  int circles = 1;
  std::vector<int> lattice{1};
  int subdivisions = 4;
  /// Per-circle position of the fundamental-domain cut, in turns, grid aligned.
  std::vector<double> cuts;
  std::vector<SheafSummand> summands{SheafSummand{}};
};

// Closure of a fundamental domain V with its gluing data. Cells on the upper
// face of a covered direction are identified with the translate of a lower cell;
// everything else is owned by V (half-open tiling).
class EquivariantSheafModel {
 public:
  /// gluing[i] lists (upper cell, lower cell) pairs for generator i, meaning
  /// upper = alpha_i(lower).
  EquivariantSheafModel(CellComplex closure, CellularSheaf sheaf,
                        std::vector<std::vector<std::pair<int, int>>> gluing,
                        std::optional<TorusSpec> torus = std::nullopt);

  int rank() const { return static_cast<int>(gluing_.size()); }
  const CellComplex& closure() const { return complex_; }
  const CellularSheaf& sheaf() const { return sheaf_; }
  const std::vector<int>& owned() const { return owned_; }
  int owner(int c) const { return owner_[c]; }
  const std::vector<int>& offset(int c) const { return offset_[c]; }
  const std::optional<TorusSpec>& torus() const { return torus_; }
  const std::vector<std::vector<std::pair<int, int>>>& gluing() const { return gluing_; }

 private:
  CellComplex complex_;
  CellularSheaf sheaf_;
  std::vector<std::vector<std::pair<int, int>>> gluing_;
  std::optional<TorusSpec> torus_;
  std::vector<int> owner_;
  std::vector<std::vector<int>> offset_;
  std::vector<int> owned_;
};

EquivariantSheafModel torus_model(const TorusSpec& spec);

/// {"torus": {"circles", "lattice", "subdivisions", "cuts", "summands": [{"type", "lo", "hi"}]}}
/// or {"complex": <sheaf document>, "gluing": [[[upper, lower], ...], ...]}.
EquivariantSheafModel equivariant_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TorusSpec& spec);

struct Window {
  CellComplex complex;
  CellularSheaf sheaf;
  /// The half-open union of translates over the hypercube.
  std::vector<bool> cells;
  /// (owned cell, deck coordinates) for every window cell.
  std::vector<std::pair<int, std::vector<int>>> labels;
};

/// Translates over center + [-k, k]^r together with the closure they need.
Window build_window(const EquivariantSheafModel& m, int k, const std::vector<int>& center = {});
BettiVector window_betti(const EquivariantSheafModel& m, int k, Field field = Field::F2,
                         const std::vector<int>& center = {});

struct CjEstimate {
  int rank = 0;
  int k_max = 0;
  double tol = 0.0;
  int degrees = 0;
  std::vector<BettiVector> betti;               // index k
  std::vector<std::vector<double>> normalized;  // [k][j]
  std::vector<double> estimate;                 // normalized at k_max
  bool converged = false;
  /// Smallest k after which every normalized value stays within tol of the estimate.
  int converged_at = 0;

  double sum() const;
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

CjEstimate estimate_cj(const EquivariantSheafModel& m, int k_max, Field field = Field::F2,
                       double tol = 1e-9);

struct DomainIndependenceReport {
  int rank = 0;
  int k_max = 0;
  /// [k][j] of |b_j^A(k) - b_j^B(k)|
  std::vector<std::vector<long long>> differences;
  double fitted_constant = 0.0;
  bool bound_holds = false;
  std::vector<double> estimate_a;
  std::vector<double> estimate_b;
  double estimate_gap = 0.0;
  double allowed_gap = 0.0;
  bool estimates_agree = false;

  bool passed() const { return bound_holds && estimates_agree; }
  nlohmann::json to_json() const;
};

/// Fits C on k <= k_max / 2 from |b^A - b^B| <= C (2k+1)^{r-1}, checks the bound on every
/// k and that the estimates differ by at most C / (2 k_max + 1) + tol.
DomainIndependenceReport check_domain_independence(const EquivariantSheafModel& a,
                                                   const EquivariantSheafModel& b, int k_max,
                                                   Field field = Field::F2, double tol = 1e-9);

/// rank HN_j for torus models: binomial(m, j) for exact beta, zero otherwise;
/// nullopt when the model carries no torus description.
std::optional<std::vector<long long>> morse_novikov_oracle(const EquivariantSheafModel& m);

struct CriticalPoint {
  double x;
  int index;
};

struct MorseCheck {
  std::vector<CriticalPoint> points;
  std::vector<long long> morse_counts;  // m_j
  std::vector<double> cj;
  /// (-1)^l sum_{j<=l} (-1)^j c_j and the same for m_j, per l.
  std::vector<double> lhs;
  std::vector<double> rhs;
  bool holds = false;
  nlohmann::json to_json() const;
};

/// Critical points of psi = e^{-g} f on one period [0, 1) of the cover of S^1
/// with g(x) = a x (a = lattice coefficient), compared with c_j.
MorseCheck morse_inequality_check(int lattice, const std::function<double(double)>& f,
                                  const std::function<double(double)>& df,
                                  const std::vector<double>& cj, int grid = 4000);

}  // namespace lcs
