#pragma once

#include <algorithm>
#include <cassert>
#include <optional>
#include <string>
#include <vector>

#include "cmodlab/dvr.hpp"

namespace cmodlab {

/// Dense matrix over O = Z_(p) with exact entries.
class OMatrix {
 public:
  OMatrix() : p_(0), rows_(0), cols_(0) {}
  OMatrix(long p, long rows, long cols)
      : p_(p), rows_(rows), cols_(cols), e_(static_cast<size_t>(rows * cols), DvrScalar::zero(p)) {}

  static OMatrix identity(long p, long n) {
    OMatrix m(p, n, n);
    for (long i = 0; i < n; ++i) m.at(i, i) = DvrScalar::one(p);
    return m;
  }

  long p() const { return p_; }
  long rows() const { return rows_; }
  long cols() const { return cols_; }

  DvrScalar& at(long i, long j) {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return e_[static_cast<size_t>(i * cols_ + j)];
  }
  const DvrScalar& at(long i, long j) const {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return e_[static_cast<size_t>(i * cols_ + j)];
  }

  OMatrix operator*(const OMatrix& o) const {
    assert(cols_ == o.rows_);
    OMatrix r(p_, rows_, o.cols_);
    for (long i = 0; i < rows_; ++i)
      for (long k = 0; k < cols_; ++k) {
        const DvrScalar& a = at(i, k);
        if (a.is_zero()) continue;
        for (long j = 0; j < o.cols_; ++j) {
          const DvrScalar& b = o.at(k, j);
          if (!b.is_zero()) r.at(i, j) += a * b;
        }
      }
    return r;
  }

  OMatrix transpose() const {
    OMatrix r(p_, cols_, rows_);
    for (long i = 0; i < rows_; ++i)
      for (long j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
  }

  OMatrix row_slice(long from, long to) const {
    assert(0 <= from && from <= to && to <= rows_);
    OMatrix r(p_, to - from, cols_);
    for (long i = from; i < to; ++i)
      for (long j = 0; j < cols_; ++j) r.at(i - from, j) = at(i, j);
    return r;
  }

  OMatrix col_slice(long from, long to) const {
    assert(0 <= from && from <= to && to <= cols_);
    OMatrix r(p_, rows_, to - from);
    for (long i = 0; i < rows_; ++i)
      for (long j = from; j < to; ++j) r.at(i, j - from) = at(i, j);
    return r;
  }

  static OMatrix vstack(const OMatrix& a, const OMatrix& b) {
    assert(a.cols_ == b.cols_);
    OMatrix r(a.p_ ? a.p_ : b.p_, a.rows_ + b.rows_, a.cols_);
    for (long i = 0; i < a.rows_; ++i)
      for (long j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
    for (long i = 0; i < b.rows_; ++i)
      for (long j = 0; j < b.cols_; ++j) r.at(a.rows_ + i, j) = b.at(i, j);
    return r;
  }

  static OMatrix hstack(const OMatrix& a, const OMatrix& b) {
    assert(a.rows_ == b.rows_);
    OMatrix r(a.p_ ? a.p_ : b.p_, a.rows_, a.cols_ + b.cols_);
    for (long i = 0; i < a.rows_; ++i) {
      for (long j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
      for (long j = 0; j < b.cols_; ++j) r.at(i, a.cols_ + j) = b.at(i, j);
    }
    return r;
  }

  OMatrix scaled_p_pow(long e) const {
    OMatrix r(*this);
    for (auto& x : r.e_) x = x.times_p_pow(e);
    return r;
  }

  bool is_zero() const {
    return std::all_of(e_.begin(), e_.end(), [](const DvrScalar& x) { return x.is_zero(); });
  }

  bool operator==(const OMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && e_ == o.e_;
  }

  std::string str() const {
    std::string s = "[";
    for (long i = 0; i < rows_; ++i) {
      s += i ? "; " : "";
      for (long j = 0; j < cols_; ++j) s += (j ? "," : "") + at(i, j).str();
    }
    return s + "]";
  }

 private:
  long p_, rows_, cols_;
  std::vector<DvrScalar> e_;
};

/**
 * Smith normal form over the local PID O: u * m * v = d with u, v invertible
 * over O and d diagonal with entries p^{e_1} | p^{e_2} | ...  The exponent
 * list is ascending; its size is the rank of m over the fraction field.
 */
struct SnfResult {
  OMatrix d, u, v;
  std::vector<long> pivot_exponents;
  long rank() const { return static_cast<long>(pivot_exponents.size()); }
};

inline SnfResult smith_normal_form(const OMatrix& m) {
  const long p = m.p(), nr = m.rows(), nc = m.cols();
  SnfResult r;
  r.d = m;
  r.u = OMatrix::identity(p, nr);
  r.v = OMatrix::identity(p, nc);
  OMatrix& d = r.d;
  OMatrix& u = r.u;
  OMatrix& v = r.v;

  const long steps = std::min(nr, nc);
  for (long k = 0; k < steps; ++k) {
    // Pivot: minimal valuation in the trailing block, ties to smallest row
    // then column.  Row/column operations never drop below this valuation,
    // so the pivot exponents come out ascending with divisibility for free.
    long pi = -1, pj = -1, pval = kValInfinity;
    for (long i = k; i < nr; ++i)
      for (long j = k; j < nc; ++j) {
        long val = d.at(i, j).valuation();
        if (val < pval) pval = val, pi = i, pj = j;
      }
    if (pi < 0 || pval == kValInfinity) break;

    if (pi != k) {
      for (long j = 0; j < nc; ++j) std::swap(d.at(k, j), d.at(pi, j));
      for (long j = 0; j < nr; ++j) std::swap(u.at(k, j), u.at(pi, j));
    }
    if (pj != k) {
      for (long i = 0; i < nr; ++i) std::swap(d.at(i, k), d.at(i, pj));
      for (long i = 0; i < nc; ++i) std::swap(v.at(i, k), v.at(i, pj));
    }

    DvrScalar scale = d.at(k, k).unit() == 1
                          ? DvrScalar::one(p)
                          : DvrScalar::from_mpq(p, 1 / d.at(k, k).unit());
    if (!(scale == DvrScalar::one(p))) {
      for (long j = 0; j < nc; ++j) d.at(k, j) *= scale;
      for (long j = 0; j < nr; ++j) u.at(k, j) *= scale;
    }
    const DvrScalar pivot = d.at(k, k);
    assert(pivot == DvrScalar::p_pow(p, pval));

    for (long i = k + 1; i < nr; ++i) {
      if (d.at(i, k).is_zero()) continue;
      DvrScalar f = d.at(i, k).div_exact(pivot);
      for (long j = 0; j < nc; ++j) d.at(i, j) -= f * d.at(k, j);
      for (long j = 0; j < nr; ++j) u.at(i, j) -= f * u.at(k, j);
    }
    for (long j = k + 1; j < nc; ++j) {
      if (d.at(k, j).is_zero()) continue;
      DvrScalar f = d.at(k, j).div_exact(pivot);
      for (long i = 0; i < nr; ++i) d.at(i, j) -= f * d.at(i, k);
      for (long i = 0; i < nc; ++i) v.at(i, j) -= f * v.at(i, k);
    }

    assert(r.pivot_exponents.empty() || r.pivot_exponents.back() <= pval);
    r.pivot_exponents.push_back(pval);
  }
  return r;
}

/// Valuation of det(m) for square m; kValInfinity when singular over E.
inline long det_valuation(const OMatrix& m) {
  require(m.rows() == m.cols(), ErrKind::Computation, "det_valuation needs a square matrix");
  SnfResult s = smith_normal_form(m);
  if (s.rank() < m.rows()) return kValInfinity;
  long total = 0;
  for (long e : s.pivot_exponents) total += e;
  return total;
}

inline long rank_over_E(const OMatrix& m) { return smith_normal_form(m).rank(); }

/**
 * Basis of ker(m : O^cols -> O^rows) as matrix columns.  The kernel of a map
 * into a torsion-free module is saturated, and the trailing columns of v form
 * a basis for it: m*v has those columns zero, and v is invertible.
 */
inline OMatrix kernel_basis(const OMatrix& m) {
  SnfResult s = smith_normal_form(m);
  return s.v.col_slice(s.rank(), m.cols());
}

/**
 * For the submodule N = colspan(m) of O^rows: a surjection
 * pi : O^rows -> O^{rows - rank} whose kernel is the saturation of N.
 * Composing with pi gives coordinates on the torsion-free quotient of
 * O^rows / N.
 */
inline OMatrix tf_projection(const OMatrix& m) {
  SnfResult s = smith_normal_form(m);
  return s.u.row_slice(s.rank(), m.rows());
}

/**
 * Solve a * x = b over O (all columns of b at once); std::nullopt when some
 * column lies outside the O-column span of a.
 */
inline std::optional<OMatrix> solve_in_O(const OMatrix& a, const OMatrix& b) {
  assert(a.rows() == b.rows());
  SnfResult s = smith_normal_form(a);
  OMatrix c = s.u * b;
  const long rk = s.rank();
  OMatrix y(a.p(), a.cols(), b.cols());
  for (long j = 0; j < b.cols(); ++j) {
    for (long i = 0; i < c.rows(); ++i) {
      if (i >= rk || i >= a.cols()) {
        if (!c.at(i, j).is_zero()) return std::nullopt;
      } else {
        if (c.at(i, j).valuation() < s.pivot_exponents[static_cast<size_t>(i)]) return std::nullopt;
        y.at(i, j) = c.at(i, j).div_exact(DvrScalar::p_pow(a.p(), s.pivot_exponents[static_cast<size_t>(i)]));
      }
    }
  }
  return s.v * y;
}

/// Does colspan(a) contain colspan(b) as O-submodules of O^rows?
inline bool colspan_contains(const OMatrix& a, const OMatrix& b) {
  return solve_in_O(a, b).has_value();
}

/// Dense matrix over the fraction field E = Q, for rank and eigencomponent work.
class QMatrix {
 public:
  QMatrix() : rows_(0), cols_(0) {}
  QMatrix(long rows, long cols) : rows_(rows), cols_(cols), e_(static_cast<size_t>(rows * cols)) {}

  static QMatrix from(const OMatrix& m) {
    QMatrix r(m.rows(), m.cols());
    for (long i = 0; i < m.rows(); ++i)
      for (long j = 0; j < m.cols(); ++j) r.at(i, j) = m.at(i, j).value();
    return r;
  }

  static QMatrix identity(long n) {
    QMatrix r(n, n);
    for (long i = 0; i < n; ++i) r.at(i, i) = 1;
    return r;
  }

  long rows() const { return rows_; }
  long cols() const { return cols_; }
  mpq_class& at(long i, long j) { return e_[static_cast<size_t>(i * cols_ + j)]; }
  const mpq_class& at(long i, long j) const { return e_[static_cast<size_t>(i * cols_ + j)]; }

  QMatrix operator*(const QMatrix& o) const {
    assert(cols_ == o.rows_);
    QMatrix r(rows_, o.cols_);
    for (long i = 0; i < rows_; ++i)
      for (long k = 0; k < cols_; ++k) {
        if (at(i, k) == 0) continue;
        for (long j = 0; j < o.cols_; ++j)
          if (o.at(k, j) != 0) r.at(i, j) += at(i, k) * o.at(k, j);
      }
    return r;
  }

  QMatrix transpose() const {
    QMatrix r(cols_, rows_);
    for (long i = 0; i < rows_; ++i)
      for (long j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
  }

  static QMatrix vstack(const QMatrix& a, const QMatrix& b) {
    assert(a.cols_ == b.cols_);
    QMatrix r(a.rows_ + b.rows_, a.cols_);
    for (long i = 0; i < a.rows_; ++i)
      for (long j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
    for (long i = 0; i < b.rows_; ++i)
      for (long j = 0; j < b.cols_; ++j) r.at(a.rows_ + i, j) = b.at(i, j);
    return r;
  }

  /// In-place reduced row echelon form; returns pivot column indices.
  std::vector<long> rref() {
    std::vector<long> pivots;
    long row = 0;
    for (long col = 0; col < cols_ && row < rows_; ++col) {
      long pr = -1;
      for (long i = row; i < rows_; ++i)
        if (at(i, col) != 0) { pr = i; break; }
      if (pr < 0) continue;
      if (pr != row)
        for (long j = 0; j < cols_; ++j) std::swap(at(row, j), at(pr, j));
      mpq_class inv = 1 / at(row, col);
      for (long j = col; j < cols_; ++j) at(row, j) *= inv;
      for (long i = 0; i < rows_; ++i) {
        if (i == row || at(i, col) == 0) continue;
        mpq_class f = at(i, col);
        for (long j = col; j < cols_; ++j) at(i, j) -= f * at(row, j);
      }
      pivots.push_back(col);
      ++row;
    }
    return pivots;
  }

  long rank() const {
    QMatrix c(*this);
    return static_cast<long>(c.rref().size());
  }

  /// Basis of the right kernel, as columns.
  QMatrix kernel() const {
    QMatrix c(*this);
    std::vector<long> pivots = c.rref();
    std::vector<bool> is_pivot(static_cast<size_t>(cols_), false);
    for (long j : pivots) is_pivot[static_cast<size_t>(j)] = true;
    QMatrix k(cols_, cols_ - static_cast<long>(pivots.size()));
    long kc = 0;
    for (long j = 0; j < cols_; ++j) {
      if (is_pivot[static_cast<size_t>(j)]) continue;
      k.at(j, kc) = 1;
      for (size_t r = 0; r < pivots.size(); ++r) {
        // row r has leading 1 in column pivots[r]
        k.at(pivots[r], kc) = -c.at(static_cast<long>(r), j);
      }
      ++kc;
    }
    return k;
  }

 private:
  long rows_, cols_;
  std::vector<mpq_class> e_;
};

/**
 * Largest subspace of E^s on which every operator in `ops` is nilpotent:
 * the joint generalized kernel, computed by growing K_{j+1} = {v : op*v in K_j}
 * until the dimension stabilizes.  Returns its dimension.
 */
inline long joint_generalized_kernel_dim(const std::vector<QMatrix>& ops, long s) {
  if (ops.empty()) return s;
  QMatrix basis(s, 0);
  for (;;) {
    // functionals vanishing on span(basis)
    QMatrix ann = basis.cols() ? basis.transpose().kernel().transpose() : QMatrix::identity(s);
    QMatrix stacked(0, s);
    for (const QMatrix& op : ops) stacked = QMatrix::vstack(stacked, ann * op);
    QMatrix next = stacked.kernel();
    if (next.cols() == basis.cols()) return basis.cols();
    basis = next;
  }
}

/// Joint kernel over O of a family of square matrices acting on O^s, as columns.
inline OMatrix joint_kernel_basis(const std::vector<OMatrix>& ops, long p, long s) {
  OMatrix stacked(p, 0, s);
  for (const OMatrix& op : ops) stacked = OMatrix::vstack(stacked, op);
  if (stacked.rows() == 0) return OMatrix::identity(p, s);
  return kernel_basis(stacked);
}

}  // namespace cmodlab
