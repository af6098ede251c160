#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "cmodlab/matrix.hpp"

namespace cmodlab {

/**
 * Finitely generated O-module in normal form: O^free_rank (+) O/p^{e_1} (+) ...
 * with ascending exponents.  The zero module is (0, []).
 */
struct FgOModule {
  long free_rank = 0;
  std::vector<long> torsion_exponents;  // ascending, each >= 1

  static FgOModule free(long rank) { return FgOModule{rank, {}}; }

  long rank() const { return free_rank; }
  bool is_zero() const { return free_rank == 0 && torsion_exponents.empty(); }
  bool is_torsion() const { return free_rank == 0; }

  /// Length of the torsion part (= length of the module when it is torsion).
  long torsion_length() const {
    return std::accumulate(torsion_exponents.begin(), torsion_exponents.end(), 0L);
  }

  /// Length of a finite module; errors if the module has a free part.
  long length() const {
    require(free_rank == 0, ErrKind::Computation,
            "length of a module with free rank " + std::to_string(free_rank));
    return torsion_length();
  }

  FgOModule torsion_part() const { return FgOModule{0, torsion_exponents}; }
  FgOModule torsion_free_quotient() const { return FgOModule{free_rank, {}}; }

  bool operator==(const FgOModule& o) const {
    return free_rank == o.free_rank && torsion_exponents == o.torsion_exponents;
  }

  std::string str() const {
    if (is_zero()) return "0";
    std::string s;
    if (free_rank == 1) s = "O";
    if (free_rank > 1) s = "O^" + std::to_string(free_rank);
    for (long e : torsion_exponents) {
      if (!s.empty()) s += " + ";
      s += e == 1 ? "O/p" : "O/p^" + std::to_string(e);
    }
    return s;
  }
};

/**
 * Cokernel of rels viewed as relations among the column generators:
 * O^{cols} / rowspan(rels), in normal form.
 */
inline FgOModule module_from_presentation(const OMatrix& rels) {
  SnfResult s = smith_normal_form(rels);
  FgOModule m;
  m.free_rank = rels.cols() - s.rank();
  for (long e : s.pivot_exponents)
    if (e > 0) m.torsion_exponents.push_back(e);
  return m;
}

/// Cokernel of m as a map O^{cols} -> O^{rows} (quotient by the column span).
inline FgOModule cokernel_of_columns(const OMatrix& m) {
  return module_from_presentation(m.transpose());
}

/**
 * Map between modules in normal form.  Generators of each side are ordered
 * free part first, then torsion generators following torsion_exponents;
 * matrix columns express the images of source generators in target generators.
 */
struct OModuleMap {
  FgOModule source, target;
  OMatrix matrix;  // (target generator count) x (source generator count)
};

inline long generator_count(const FgOModule& m) {
  return m.free_rank + static_cast<long>(m.torsion_exponents.size());
}

/// Diagonal relation rows p^{e_i} on the torsion generators of m.
inline OMatrix presentation_rows(const FgOModule& m, long p) {
  long g = generator_count(m);
  long t = static_cast<long>(m.torsion_exponents.size());
  OMatrix rels(p, t, g);
  for (long i = 0; i < t; ++i)
    rels.at(i, m.free_rank + i) = DvrScalar::p_pow(p, m.torsion_exponents[static_cast<size_t>(i)]);
  return rels;
}

inline void check_well_defined(const OModuleMap& f) {
  const long p = f.matrix.p();
  require(f.matrix.rows() == generator_count(f.target) && f.matrix.cols() == generator_count(f.source),
          ErrKind::IllFormedMap, "matrix shape does not match generator counts");
  // p^e * (image of a torsion generator) must vanish in the target.
  long tsrc = static_cast<long>(f.source.torsion_exponents.size());
  for (long j = 0; j < tsrc; ++j) {
    long e = f.source.torsion_exponents[static_cast<size_t>(j)];
    long col = f.source.free_rank + j;
    for (long i = 0; i < f.matrix.rows(); ++i) {
      const DvrScalar& a = f.matrix.at(i, col);
      if (a.is_zero()) continue;
      if (i < f.target.free_rank)
        fail(ErrKind::IllFormedMap, "torsion generator maps to a free generator");
      long d = f.target.torsion_exponents[static_cast<size_t>(i - f.target.free_rank)];
      if (a.valuation() + e < d)
        fail(ErrKind::IllFormedMap, "relation p^" + std::to_string(e) + " not respected");
    }
  }
  (void)p;
}

/// coker(f) = target / (im f + relations of target).
inline FgOModule map_cokernel(const OModuleMap& f) {
  check_well_defined(f);
  OMatrix rels = OMatrix::vstack(f.matrix.transpose(), presentation_rows(f.target, f.matrix.p()));
  return module_from_presentation(rels);
}

}  // namespace cmodlab
