#include "lcslab/sheaf.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace lcs {

namespace {

using Rational = boost::multiprecision::cpp_rational;

struct GF2 {
  using T = unsigned char;
  static T from(long long v) { return static_cast<T>(((v % 2) + 2) % 2); }
  static bool zero(T a) { return a == 0; }
  static T sub(T a, T b) { return a ^ b; }
  static T mul(T a, T b) { return a & b; }
  static T div(T a, T) { return a; }
};

struct QQ {
  using T = Rational;
  static T from(long long v) { return T(v); }
  static bool zero(const T& a) { return a == 0; }
  static T sub(const T& a, const T& b) { return a - b; }
  static T mul(const T& a, const T& b) { return a * b; }
  static T div(const T& a, const T& b) { return a / b; }
};

using SparseRow = std::map<int, long long>;
using SparseMatrix = std::vector<SparseRow>;

// Row echelon reduction on sorted sparse rows; only pivots are kept.
template <class F>
long long sparse_rank(const SparseMatrix& rows) {
  using Row = std::vector<std::pair<int, typename F::T>>;
  std::unordered_map<int, Row> pivots;
  long long rank = 0;
  for (const auto& src : rows) {
    Row row;
    row.reserve(src.size());
    for (const auto& [c, v] : src) {
      auto e = F::from(v);
      if (!F::zero(e)) row.emplace_back(c, e);
    }
    while (!row.empty()) {
      auto it = pivots.find(row.front().first);
      if (it == pivots.end()) {
        pivots.emplace(row.front().first, std::move(row));
        ++rank;
        break;
      }
      const Row& piv = it->second;
      const auto factor = F::div(row.front().second, piv.front().second);
      Row next;
      next.reserve(row.size() + piv.size());
      std::size_t a = 0, b = 0;
      while (a < row.size() || b < piv.size()) {
        if (b == piv.size() || (a < row.size() && row[a].first < piv[b].first)) {
          next.push_back(row[a++]);
        } else if (a == row.size() || piv[b].first < row[a].first) {
          next.emplace_back(piv[b].first, F::sub(F::from(0), F::mul(factor, piv[b].second)));
          ++b;
        } else {
          auto v = F::sub(row[a].second, F::mul(factor, piv[b].second));
          if (!F::zero(v)) next.emplace_back(row[a].first, std::move(v));
          ++a;
          ++b;
        }
      }
      row = std::move(next);
    }
  }
  return rank;
}

long long rank_over(const SparseMatrix& rows, Field field) {
  return field == Field::F2 ? sparse_rank<GF2>(rows) : sparse_rank<QQ>(rows);
}

struct CochainLayout {
  // offset[c] = first cochain index of cell c within its degree (or -1 when excluded)
  std::vector<int> offset;
  std::vector<int> size_by_degree;
};

CochainLayout layout(const CellComplex& k, const CellularSheaf& f, const std::vector<bool>& in) {
  CochainLayout l;
  l.offset.assign(k.size(), -1);
  l.size_by_degree.assign(std::max(k.max_dim() + 1, 1), 0);
  for (int c = 0; c < k.size(); ++c) {
    if (!in[c]) continue;
    l.offset[c] = l.size_by_degree[k.dim(c)];
    l.size_by_degree[k.dim(c)] += f.stalk[c];
  }
  return l;
}

// delta_j : C^j -> C^{j+1}, rows indexed by degree j+1 cochains.
SparseMatrix coboundary(const CellComplex& k, const CellularSheaf& f, const std::vector<bool>& in,
                        const CochainLayout& l, int j) {
  SparseMatrix rows(l.size_by_degree[j + 1]);
  for (int c = 0; c < k.size(); ++c) {
    if (!in[c] || k.dim(c) != j + 1) continue;
    const auto& faces = k.faces(c);
    for (std::size_t q = 0; q < faces.size(); ++q) {
      const int face = faces[q].face;
      if (!in[face]) continue;
      const IntMatrix& r = f.restriction[c][q];
      for (int a = 0; a < r.rows(); ++a) {
        auto& row = rows[l.offset[c] + a];
        for (int b = 0; b < r.cols(); ++b) {
          if (r(a, b) == 0) continue;
          const int col = l.offset[face] + b;
          row[col] += faces[q].sign * r(a, b);
          if (row[col] == 0) row.erase(col);
        }
      }
    }
  }
  return rows;
}

bool product_vanishes(const SparseMatrix& second, const SparseMatrix& first) {
  for (const auto& row : second) {
    SparseRow acc;
    for (const auto& [mid, v] : row) {
      for (const auto& [col, w] : first[mid]) acc[col] += v * w;
    }
    for (const auto& [col, v] : acc) {
      if (v != 0) return false;
    }
  }
  return true;
}

BettiVector betti_on(const CellComplex& k, const CellularSheaf& f, const std::vector<bool>& in,
                     Field field) {
  const auto l = layout(k, f, in);
  const int top = static_cast<int>(l.size_by_degree.size()) - 1;
  std::vector<long long> ranks(top + 1, 0);  // ranks[j] = rank delta_j
  for (int j = 0; j < top; ++j) ranks[j] = rank_over(coboundary(k, f, in, l, j), field);
  BettiVector out;
  out.b.resize(top + 1);
  for (int j = 0; j <= top; ++j) {
    out.b[j] = l.size_by_degree[j] - ranks[j] - (j > 0 ? ranks[j - 1] : 0);
  }
  out.trim();
  return out;
}

}  // namespace

Field field_from_string(const std::string& s) {
  if (s == "F2" || s == "f2" || s == "GF2") return Field::F2;
  if (s == "Q" || s == "q" || s == "QQ") return Field::Q;
  throw InputError("unknown coefficient field: " + s);
}

std::string to_string(Field f) { return f == Field::F2 ? "F2" : "Q"; }

int CellComplex::add_cell(int dim, std::vector<Incidence> faces) {
  if (dim < 0) throw InputError("cell dimension must be nonnegative");
  for (const auto& inc : faces) {
    if (inc.face < 0 || inc.face >= size()) throw InputError("face refers to a missing cell");
    if (inc.sign != 1 && inc.sign != -1) throw InputError("incidence sign must be +1 or -1");
  }
  dims_.push_back(dim);
  faces_.push_back(std::move(faces));
  return size() - 1;
}

int CellComplex::max_dim() const {
  int d = 0;
  for (int x : dims_) d = std::max(d, x);
  return d;
}

std::vector<std::vector<int>> CellComplex::cofaces() const {
  std::vector<std::vector<int>> up(size());
  for (int c = 0; c < size(); ++c) {
    for (const auto& inc : faces_[c]) {
      auto& v = up[inc.face];
      if (v.empty() || v.back() != c) v.push_back(c);
    }
  }
  return up;
}

void CellComplex::validate() const {
  for (int c = 0; c < size(); ++c) {
    if (dims_[c] > 0 && faces_[c].empty()) {
      throw ValidationError("cell " + std::to_string(c) + " of positive dimension has no faces");
    }
    std::map<int, long long> dd;
    for (const auto& inc : faces_[c]) {
      if (dims_[inc.face] != dims_[c] - 1) {
        throw ValidationError("cell " + std::to_string(c) + " has a face of the wrong dimension");
      }
      for (const auto& inner : faces_[inc.face]) dd[inner.face] += inc.sign * inner.sign;
    }
    for (const auto& [face, v] : dd) {
      if (v != 0) {
        throw ValidationError("boundary of boundary is nonzero at cell " + std::to_string(c));
      }
    }
  }
}

std::vector<bool> CellComplex::closure(const std::vector<bool>& cells) const {
  std::vector<bool> out = cells;
  std::vector<int> stack;
  for (int c = 0; c < size(); ++c) {
    if (cells[c]) stack.push_back(c);
  }
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    for (const auto& inc : faces_[c]) {
      if (!out[inc.face]) {
        out[inc.face] = true;
        stack.push_back(inc.face);
      }
    }
  }
  return out;
}

bool CellComplex::is_closed(const std::vector<bool>& cells) const {
  for (int c = 0; c < size(); ++c) {
    if (!cells[c]) continue;
    for (const auto& inc : faces_[c]) {
      if (!cells[inc.face]) return false;
    }
  }
  return true;
}

CellularSheaf CellularSheaf::constant(const CellComplex& k, int rank) {
  CellularSheaf f;
  f.stalk.assign(k.size(), rank);
  f.restriction.resize(k.size());
  const IntMatrix id = IntMatrix::Identity(rank, rank);
  for (int c = 0; c < k.size(); ++c) f.restriction[c].assign(k.faces(c).size(), id);
  return f;
}

void CellularSheaf::validate(const CellComplex& k) const {
  if (static_cast<int>(stalk.size()) != k.size() ||
      static_cast<int>(restriction.size()) != k.size()) {
    throw ValidationError("sheaf data does not cover every cell");
  }
  for (int c = 0; c < k.size(); ++c) {
    if (stalk[c] < 0) throw ValidationError("negative stalk dimension");
    if (restriction[c].size() != k.faces(c).size()) {
      throw ValidationError("cell " + std::to_string(c) + " needs one restriction map per face");
    }
    for (std::size_t q = 0; q < restriction[c].size(); ++q) {
      const auto& r = restriction[c][q];
      if (r.rows() != stalk[c] || r.cols() != stalk[k.faces(c)[q].face]) {
        throw ValidationError("restriction map into cell " + std::to_string(c) +
                              " has the wrong shape");
      }
    }
  }
  const std::vector<bool> all(k.size(), true);
  const auto l = layout(k, *this, all);
  for (int j = 0; j + 2 < static_cast<int>(l.size_by_degree.size()); ++j) {
    if (!product_vanishes(coboundary(k, *this, all, l, j + 1), coboundary(k, *this, all, l, j))) {
      throw ValidationError("restriction maps are inconsistent: coboundary does not square to zero");
    }
  }
}

bool is_locally_closed(const CellComplex& k, const std::vector<bool>& member) {
  const auto cl = k.closure(member);
  std::vector<bool> rim(k.size());
  for (int c = 0; c < k.size(); ++c) rim[c] = cl[c] && !member[c];
  return k.is_closed(rim);
}

LocallyClosedCellSet::LocallyClosedCellSet(const CellComplex& k, std::vector<bool> member)
    : member_(std::move(member)) {
  if (static_cast<int>(member_.size()) != k.size()) {
    throw InputError("cell set size does not match the complex");
  }
  if (!is_locally_closed(k, member_)) throw ValidationError("cell set is not locally closed");
}

LocallyClosedCellSet LocallyClosedCellSet::from_cells(const CellComplex& k,
                                                      const std::vector<int>& cells) {
  std::vector<bool> m(k.size(), false);
  for (int c : cells) {
    if (c < 0 || c >= k.size()) throw InputError("cell index out of range");
    m[c] = true;
  }
  return LocallyClosedCellSet(k, std::move(m));
}

LocallyClosedCellSet LocallyClosedCellSet::all(const CellComplex& k) {
  return LocallyClosedCellSet(k, std::vector<bool>(k.size(), true));
}

int LocallyClosedCellSet::count() const {
  return static_cast<int>(std::count(member_.begin(), member_.end(), true));
}

long long BettiVector::euler() const {
  long long chi = 0;
  for (std::size_t j = 0; j < b.size(); ++j) chi += (j % 2 == 0 ? 1 : -1) * b[j];
  return chi;
}

void BettiVector::trim() {
  while (!b.empty() && b.back() == 0) b.pop_back();
}

bool BettiVector::operator==(const BettiVector& o) const {
  const std::size_t n = std::max(b.size(), o.b.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (at(static_cast<int>(j)) != o.at(static_cast<int>(j))) return false;
  }
  return true;
}

nlohmann::json to_json(const BettiVector& b) { return b.b; }

long long matrix_rank(const IntMatrix& m, Field field) {
  SparseMatrix rows(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0) rows[i][j] = m(i, j);
    }
  }
  return rank_over(rows, field);
}

BettiVector cohomology(const CellComplex& k, const CellularSheaf& f, Field field) {
  f.validate(k);
  return betti_on(k, f, std::vector<bool>(k.size(), true), field);
}

BettiVector betti_of_restriction(const CellComplex& k, const CellularSheaf& f,
                                 const LocallyClosedCellSet& z, Field field) {
  if (static_cast<int>(z.members().size()) != k.size()) {
    throw InputError("cell set does not belong to this complex");
  }
  return betti_on(k, f, z.members(), field);
}

void IntervalModule::validate() const {
  for (const auto& s : summands) {
    if (std::isnan(s.left) || std::isnan(s.right) || s.left > s.right) {
      throw InputError("interval summand needs left <= right");
    }
    if (s.left == s.right && !(s.left_closed && s.right_closed)) {
      throw InputError("a single-point interval must be closed");
    }
    if ((std::isinf(s.left) && s.left_closed) || (std::isinf(s.right) && s.right_closed)) {
      throw InputError("infinite endpoints cannot be closed");
    }
    if (s.shift < 0) throw InputError("degree shifts must be nonnegative");
    if (s.multiplicity < 0) throw InputError("multiplicity must be nonnegative");
  }
}

BettiVector interval_cohomology(const IntervalModule& m) {
  m.validate();
  BettiVector out;
  auto add = [&out](int degree, long long count) {
    if (out.b.size() <= static_cast<std::size_t>(degree)) out.b.resize(degree + 1, 0);
    out.b[degree] += count;
  };
  for (const auto& s : m.summands) {
    if (s.left_closed && s.right_closed) {
      add(s.shift, s.multiplicity);
    } else if (!s.left_closed && !s.right_closed) {
      add(s.shift + 1, s.multiplicity);
    }
  }
  out.trim();
  return out;
}

SheafDocument sheaf_from_json(const nlohmann::json& j) {
  SheafDocument doc;
  try {
    for (const auto& cell : j.at("cells")) {
      std::vector<Incidence> faces;
      if (cell.contains("faces")) {
        for (const auto& f : cell.at("faces")) faces.push_back({f.at(0).get<int>(), f.at(1).get<int>()});
      }
      doc.complex.add_cell(cell.at("dim").get<int>(), std::move(faces));
    }
    doc.complex.validate();
    if (!j.contains("stalks")) {
      doc.sheaf = CellularSheaf::constant(doc.complex);
      return doc;
    }
    doc.sheaf.stalk = j.at("stalks").get<std::vector<int>>();
    const auto& maps = j.at("restrictions");
    doc.sheaf.restriction.resize(maps.size());
    for (std::size_t c = 0; c < maps.size(); ++c) {
      for (const auto& mat : maps[c]) {
        const auto rows = mat.get<std::vector<std::vector<long long>>>();
        const int cols = rows.empty() ? 0 : static_cast<int>(rows[0].size());
        IntMatrix m(static_cast<int>(rows.size()), cols);
        for (std::size_t a = 0; a < rows.size(); ++a) {
          if (static_cast<int>(rows[a].size()) != cols) throw InputError("ragged restriction matrix");
          for (int b = 0; b < cols; ++b) m(static_cast<int>(a), b) = rows[a][b];
        }
        doc.sheaf.restriction[c].push_back(std::move(m));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed sheaf document: ") + e.what());
  }
  // Zero-stalk faces are written as [] in JSON; restore the expected shapes.
  for (int c = 0; c < doc.complex.size() && c < static_cast<int>(doc.sheaf.restriction.size()); ++c) {
    for (std::size_t q = 0; q < doc.sheaf.restriction[c].size() && q < doc.complex.faces(c).size(); ++q) {
      auto& m = doc.sheaf.restriction[c][q];
      const int face = doc.complex.faces(c)[q].face;
      if (m.size() == 0 && face < static_cast<int>(doc.sheaf.stalk.size())) {
        m = IntMatrix::Zero(doc.sheaf.stalk[c], doc.sheaf.stalk[face]);
      }
    }
  }
  doc.sheaf.validate(doc.complex);
  return doc;
}

nlohmann::json to_json(const CellComplex& k, const CellularSheaf& f) {
  nlohmann::json cells = nlohmann::json::array();
  nlohmann::json maps = nlohmann::json::array();
  for (int c = 0; c < k.size(); ++c) {
    nlohmann::json faces = nlohmann::json::array();
    for (const auto& inc : k.faces(c)) faces.push_back({inc.face, inc.sign});
    cells.push_back({{"dim", k.dim(c)}, {"faces", faces}});
    nlohmann::json per = nlohmann::json::array();
    for (const auto& m : f.restriction[c]) {
      nlohmann::json rows = nlohmann::json::array();
      for (int a = 0; a < m.rows(); ++a) {
        std::vector<long long> row(m.cols());
        for (int b = 0; b < m.cols(); ++b) row[b] = m(a, b);
        rows.push_back(row);
      }
      per.push_back(rows);
    }
    maps.push_back(per);
  }
  return {{"cells", cells}, {"stalks", f.stalk}, {"restrictions", maps}};
}

IntervalModule interval_module_from_json(const nlohmann::json& j) {
  IntervalModule m;
  auto endpoint = [](const nlohmann::json& v) {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return kInfinity;
      if (s == "-inf") return -kInfinity;
      throw InputError("bad interval endpoint: " + s);
    }
    return v.get<double>();
  };
  try {
    for (const auto& s : j.at("summands")) {
      IntervalSummand x;
      x.left = endpoint(s.at("left"));
      x.right = s.contains("right") ? endpoint(s.at("right")) : kInfinity;
      x.left_closed = s.value("left_closed", true);
      x.right_closed = s.value("right_closed", false);
      x.shift = s.value("shift", 0);
      x.multiplicity = s.value("multiplicity", 1);
      m.summands.push_back(x);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed interval module: ") + e.what());
  }
  m.validate();
  return m;
}

nlohmann::json to_json(const IntervalModule& m) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : m.summands) {
    auto end = [](double v) -> nlohmann::json {
      if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
      return v;
    };
    out.push_back({{"left", end(s.left)},
                   {"right", end(s.right)},
                   {"left_closed", s.left_closed},
                   {"right_closed", s.right_closed},
                   {"shift", s.shift},
                   {"multiplicity", s.multiplicity}});
  }
  return {{"summands", out}};
}

}  // namespace lcs
