#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmodlab/module.hpp"
#include "cmodlab/poly.hpp"

namespace cmodlab {

/**
 * Presented augmented algebra O[[t_1..t_c, x_1..x_k]]/(f_1..f_m) with the
 * augmentation sending every variable to 0.  Base ("lambda") variables come
 * first in the variable table; the augmentation kernel has height c =
 * lambda_count for category members.
 */
struct AugmentedAlgebra {
  long p = 0;
  VarTable vars;
  std::vector<Poly> relations;
  std::vector<std::string> flags;

  long codim() const { return vars.lambda_count; }
  bool has_flag(const std::string& f) const {
    for (const auto& g : flags)
      if (g == f) return true;
    return false;
  }
};

inline bool is_prime_long(long n) {
  mpz_class z(n);
  return mpz_probab_prime_p(z.get_mpz_t(), 30) != 0;
}

/**
 * Input-form checks: relations lie in (p)(vars) + (vars)^2.  Constant terms
 * must vanish; a fiber variable may not carry a unit linear coefficient
 * (such a relation would silently collapse the variable in the completed
 * ring).  Base variables may be cut out by relations with unit linear
 * coefficients; their residues are checked for independence later.
 */
inline void validate_algebra(const AugmentedAlgebra& a) {
  require(a.p >= 2 && is_prime_long(a.p), ErrKind::Parse, "p must be a prime");
  for (const Poly& f : a.relations) {
    require(f.nvars() == a.vars.total(), ErrKind::Parse, "relation over wrong variable table");
    for (const auto& [m, c] : f.terms()) (void)DvrScalar::from_mpq(a.p, c);
    require(f.constant_term() == 0, ErrKind::BadAugmentationForm,
            "relation '" + f.str(a.vars) + "' has a nonzero constant term");
    for (long j = a.vars.lambda_count; j < a.vars.total(); ++j) {
      DvrScalar c = DvrScalar::from_mpq(a.p, f.linear_coefficient(j));
      if (!c.is_zero() && c.valuation() == 0)
        fail(ErrKind::BadAugmentationForm, "relation '" + f.str(a.vars) +
                                               "' has a unit linear coefficient on fiber variable " +
                                               a.vars.names[static_cast<size_t>(j)]);
    }
  }
}

/// m x n matrix of linear coefficients of the relations against all variables.
inline OMatrix linear_part_matrix(const AugmentedAlgebra& a) {
  const long m = static_cast<long>(a.relations.size());
  const long n = a.vars.total();
  OMatrix u(a.p, m, n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j)
      u.at(i, j) = DvrScalar::from_mpq(a.p, a.relations[static_cast<size_t>(i)].linear_coefficient(j));
  return u;
}

/**
 * The cotangent module p_lambda/p_lambda^2 = coker of the linear-part matrix,
 * together with coordinates on its torsion-free quotient: pi maps the residue
 * of an augmentation-kernel element (given by its linear-coefficient vector)
 * to tf(p/p^2).
 */
struct CotangentData {
  OMatrix linear;   // m x n
  FgOModule module; // normal form of p/p^2
  OMatrix pi;       // (free rank) x n projection onto tf coordinates
};

inline CotangentData cotangent(const AugmentedAlgebra& a) {
  CotangentData c;
  c.linear = linear_part_matrix(a);
  c.module = module_from_presentation(c.linear);
  c.pi = tf_projection(c.linear.transpose());
  return c;
}

/// Linear-coefficient column vector of f.
inline OMatrix linear_vector(const AugmentedAlgebra& a, const Poly& f) {
  OMatrix v(a.p, a.vars.total(), 1);
  for (long j = 0; j < a.vars.total(); ++j)
    v.at(j, 0) = DvrScalar::from_mpq(a.p, f.linear_coefficient(j));
  return v;
}

/// Coordinates of the residue of f in tf(p/p^2).
inline OMatrix residue_tf_coords(const CotangentData& cot, const AugmentedAlgebra& a, const Poly& f) {
  require(f.constant_term() == 0, ErrKind::Computation,
          "element '" + f.str(a.vars) + "' is not in the augmentation kernel");
  return cot.pi * linear_vector(a, f);
}

/**
 * Order of f in p/p^2: the minimal valuation of alpha(f) over O-linear
 * functionals alpha, i.e. the minimal valuation among tf coordinates of the
 * residue.  Errors with TorsionResidue when the order ideal is zero.
 */
inline long order_of(const CotangentData& cot, const AugmentedAlgebra& a, const Poly& f) {
  OMatrix w = residue_tf_coords(cot, a, f);
  long best = kValInfinity;
  for (long i = 0; i < w.rows(); ++i) best = std::min(best, w.at(i, 0).valuation());
  if (best == kValInfinity)
    fail(ErrKind::TorsionResidue, "residue of '" + f.str(a.vars) + "' in p/p^2 is torsion; its order ideal is zero");
  return best;
}

inline long order_of(const AugmentedAlgebra& a, const Poly& f) {
  CotangentData cot = cotangent(a);
  return order_of(cot, a, f);
}

inline long residue_mod_p(const DvrScalar& s, long p) {
  if (s.is_zero() || s.valuation() > 0) return 0;
  mpq_class v = s.value();
  mpz_class num = v.get_num() % p;
  mpz_class den = v.get_den() % p;
  if (num < 0) num += p;
  if (den < 0) den += p;
  mpz_class pz(p), inv;
  int ok = mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), pz.get_mpz_t());
  assert(ok);
  (void)ok;
  mpz_class r = (num * inv) % pz;
  return r.get_si();
}

struct FpElim {
  long rank = 0;
  std::vector<long> pivot_cols;
};

/// Gaussian elimination of the residue matrix over F_p.
inline FpElim eliminate_mod_p(const OMatrix& m) {
  const long p = m.p();
  std::vector<std::vector<long>> a(static_cast<size_t>(m.rows()),
                                   std::vector<long>(static_cast<size_t>(m.cols())));
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) a[static_cast<size_t>(i)][static_cast<size_t>(j)] = residue_mod_p(m.at(i, j), p);

  auto inv_mod = [p](long x) {
    mpz_class xz(x), pz(p), r;
    mpz_invert(r.get_mpz_t(), xz.get_mpz_t(), pz.get_mpz_t());
    return r.get_si();
  };

  FpElim out;
  long row = 0;
  for (long col = 0; col < m.cols() && row < m.rows(); ++col) {
    long pr = -1;
    for (long i = row; i < m.rows(); ++i)
      if (a[static_cast<size_t>(i)][static_cast<size_t>(col)]) { pr = i; break; }
    if (pr < 0) continue;
    std::swap(a[static_cast<size_t>(row)], a[static_cast<size_t>(pr)]);
    long iv = inv_mod(a[static_cast<size_t>(row)][static_cast<size_t>(col)]);
    for (long j = col; j < m.cols(); ++j)
      a[static_cast<size_t>(row)][static_cast<size_t>(j)] = (a[static_cast<size_t>(row)][static_cast<size_t>(j)] * iv) % p;
    for (long i = 0; i < m.rows(); ++i) {
      if (i == row) continue;
      long f = a[static_cast<size_t>(i)][static_cast<size_t>(col)];
      if (!f) continue;
      for (long j = col; j < m.cols(); ++j) {
        long v = (a[static_cast<size_t>(i)][static_cast<size_t>(j)] - f * a[static_cast<size_t>(row)][static_cast<size_t>(j)]) % p;
        a[static_cast<size_t>(i)][static_cast<size_t>(j)] = v < 0 ? v + p : v;
      }
    }
    out.pivot_cols.push_back(col);
    ++row;
  }
  out.rank = row;
  return out;
}

/**
 * Certificate that A is regular (a power-series ring after eliminating base
 * variables): the base-variable linear block of the relations has full row
 * rank modulo p, so every relation defines one base variable in terms of the
 * others and the presentation eliminates completely.  Returns the pivot
 * (eliminated) base-variable indices, or nullopt when not certified.
 */
inline std::optional<std::vector<long>> regular_certificate(const AugmentedAlgebra& a) {
  const long m = static_cast<long>(a.relations.size());
  OMatrix lam = linear_part_matrix(a).col_slice(0, a.vars.lambda_count);
  FpElim e = eliminate_mod_p(lam);
  if (e.rank != m) return std::nullopt;
  return e.pivot_cols;
}

}  // namespace cmodlab
