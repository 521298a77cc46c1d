#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcslab/errors.hpp"

namespace lcs {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

enum class Field { F2, Q };
Field field_from_string(const std::string& s);
std::string to_string(Field f);

struct Incidence {
  int face;
  int sign;
};

// Finite cell complex given by its codimension-one faces with incidence signs.
// A face may appear more than once (e.g. both ends of a loop edge).
class CellComplex {
 public:
  int add_cell(int dim, std::vector<Incidence> faces = {});

  int size() const { return static_cast<int>(dims_.size()); }
  int dim(int c) const { return dims_[c]; }
  int max_dim() const;
  const std::vector<Incidence>& faces(int c) const { return faces_[c]; }
  std::vector<std::vector<int>> cofaces() const;

  /// Faces have dimension one less and the signed boundary squares to zero.
  void validate() const;

  std::vector<bool> closure(const std::vector<bool>& cells) const;
  bool is_closed(const std::vector<bool>& cells) const;

 private:
  std::vector<int> dims_;
  std::vector<std::vector<Incidence>> faces_;
};

// restriction[c][k] maps the stalk of faces(c)[k].face to the stalk of c.
struct CellularSheaf {
  std::vector<int> stalk;
  std::vector<std::vector<IntMatrix>> restriction;

  static CellularSheaf constant(const CellComplex& k, int rank = 1);
  /// Shapes match and the coboundary squares to zero over the integers.
  void validate(const CellComplex& k) const;
};

// Subset of cells that is open in its closure.
class LocallyClosedCellSet {
 public:
  LocallyClosedCellSet(const CellComplex& k, std::vector<bool> member);
  static LocallyClosedCellSet from_cells(const CellComplex& k, const std::vector<int>& cells);
  static LocallyClosedCellSet all(const CellComplex& k);

  bool contains(int c) const { return member_[c]; }
  const std::vector<bool>& members() const { return member_; }
  int count() const;

 private:
  std::vector<bool> member_;
};

bool is_locally_closed(const CellComplex& k, const std::vector<bool>& member);

struct BettiVector {
  std::vector<long long> b;

  long long at(int j) const { return j >= 0 && j < static_cast<int>(b.size()) ? b[j] : 0; }
  long long euler() const;
  void trim();
  bool operator==(const BettiVector& o) const;
};
nlohmann::json to_json(const BettiVector& b);

BettiVector cohomology(const CellComplex& k, const CellularSheaf& f, Field field = Field::F2);

/// Cohomology of the sub-cochain complex on the cells of z with the ambient coboundary.
BettiVector betti_of_restriction(const CellComplex& k, const CellularSheaf& f,
                                 const LocallyClosedCellSet& z, Field field = Field::F2);

/// Rank of an integer matrix over the field (exact).
long long matrix_rank(const IntMatrix& m, Field field);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct IntervalSummand {
  double left = 0.0;
  double right = kInfinity;
  bool left_closed = true;
  bool right_closed = false;
  int shift = 0;
  int multiplicity = 1;
};

struct IntervalModule {
  std::vector<IntervalSummand> summands;

  void validate() const;
};

/// Summand-wise: closed-closed -> degree shift, open-open -> shift + 1, half-open -> 0.
BettiVector interval_cohomology(const IntervalModule& m);

struct SheafDocument {
  CellComplex complex;
  CellularSheaf sheaf;
};

/// {"cells": [{"dim": d, "faces": [[face, sign], ...]}, ...],
///  "stalks": [...], "restrictions": [[matrix per face], ...]}   (sheaf keys optional:
/// the constant sheaf is used when absent)
SheafDocument sheaf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CellComplex& k, const CellularSheaf& f);

IntervalModule interval_module_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IntervalModule& m);

}  // namespace lcs
