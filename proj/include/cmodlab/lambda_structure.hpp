#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmodlab/algebra.hpp"

namespace cmodlab {

/// Element of a finite free Lambda-module: lambda-polynomial coordinates on a basis.
using LVec = std::vector<Poly>;

/**
 * Description of A as a finite free module over Lambda_c = O[[t_1..t_c]]:
 * basis with basis[0] = 1, structure constants as polynomials in the base
 * variables (truncated at total t-degree `trunc`), the augmentation on the
 * basis, and the expression of each fiber variable in the basis.
 */
struct LambdaStructure {
  long p = 0;
  long rank = 0;
  long trunc = 8;
  std::vector<std::string> basis;
  std::vector<std::vector<LVec>> mult;  // mult[i][j] = coordinates of e_i * e_j
  std::vector<mpq_class> aug;
  std::vector<LVec> embed;  // one entry per fiber variable
  VarTable vars;
};

inline LVec lvec_zero(const LambdaStructure& L) {
  return LVec(static_cast<size_t>(L.rank), Poly(L.vars.total()));
}

inline LVec lvec_unit(const LambdaStructure& L, long i) {
  LVec v = lvec_zero(L);
  v[static_cast<size_t>(i)] = Poly::one(L.vars.total());
  return v;
}

inline LVec lvec_add(const LVec& a, const LVec& b) {
  LVec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline LVec lvec_sub(const LVec& a, const LVec& b) {
  LVec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline LVec lvec_scale(const LambdaStructure& L, const LVec& a, const Poly& s) {
  LVec r(a);
  for (auto& x : r) x = (x * s).truncated(L.trunc);
  return r;
}

inline LVec lvec_mul(const LambdaStructure& L, const LVec& a, const LVec& b) {
  LVec r = lvec_zero(L);
  for (long i = 0; i < L.rank; ++i) {
    if (a[static_cast<size_t>(i)].is_zero()) continue;
    for (long j = 0; j < L.rank; ++j) {
      if (b[static_cast<size_t>(j)].is_zero()) continue;
      Poly c = (a[static_cast<size_t>(i)] * b[static_cast<size_t>(j)]).truncated(L.trunc);
      if (c.is_zero()) continue;
      const LVec& row = L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)];
      for (long k = 0; k < L.rank; ++k)
        if (!row[static_cast<size_t>(k)].is_zero())
          r[static_cast<size_t>(k)] += (c * row[static_cast<size_t>(k)]).truncated(L.trunc);
    }
  }
  return r;
}

inline bool lvec_is_zero(const LVec& a) {
  for (const auto& x : a)
    if (!x.is_zero()) return false;
  return true;
}

/// Evaluate a polynomial in all variables inside the structure: base variables
/// act as scalars, fiber variables through their embeddings.
inline LVec evaluate_in_lambda(const LambdaStructure& L, const Poly& f) {
  const long c = L.vars.lambda_count;
  LVec acc = lvec_zero(L);
  for (const auto& [m, coeff] : f.terms()) {
    Mono tpart(m.size(), 0);
    for (long i = 0; i < c; ++i) tpart[static_cast<size_t>(i)] = m[static_cast<size_t>(i)];
    LVec v = lvec_scale(L, lvec_unit(L, 0), Poly::monomial(tpart, coeff));
    for (long j = c; j < L.vars.total(); ++j)
      for (int rep = 0; rep < m[static_cast<size_t>(j)]; ++rep)
        v = lvec_mul(L, v, L.embed[static_cast<size_t>(j - c)]);
    acc = lvec_add(acc, v);
  }
  return acc;
}

struct ConsistencyReport {
  bool pass = true;
  std::string witness;
};

/// Structural checks of the table itself (unit row, commutativity,
/// associativity, multiplicativity of the augmentation).
inline ConsistencyReport check_lambda_table(const LambdaStructure& L) {
  auto failure = [](const std::string& w) { return ConsistencyReport{false, w}; };
  const long r = L.rank;
  if (static_cast<long>(L.basis.size()) != r || static_cast<long>(L.aug.size()) != r)
    return failure("basis/augmentation size mismatch");
  if (static_cast<long>(L.mult.size()) != r) return failure("multiplication table size mismatch");
  for (const auto& row : L.mult) {
    if (static_cast<long>(row.size()) != r) return failure("multiplication table size mismatch");
    for (const auto& v : row) {
      if (static_cast<long>(v.size()) != r) return failure("multiplication table size mismatch");
      for (const auto& pl : v)
        if (!pl.vars_below(L.vars.lambda_count)) return failure("structure constant uses a fiber variable");
    }
  }
  if (L.aug[0] != 1) return failure("augmentation of the identity is not 1");
  for (const auto& q : L.aug) (void)DvrScalar::from_mpq(L.p, q);
  for (long j = 0; j < r; ++j)
    if (!(L.mult[0][static_cast<size_t>(j)] == lvec_unit(L, j))) return failure("basis element 0 is not the identity");
  for (long i = 0; i < r; ++i)
    for (long j = i + 1; j < r; ++j)
      if (!(L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] ==
            L.mult[static_cast<size_t>(j)][static_cast<size_t>(i)]))
        return failure("table not commutative at (" + L.basis[static_cast<size_t>(i)] + "," +
                       L.basis[static_cast<size_t>(j)] + ")");
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < r; ++j)
      for (long k = 0; k < r; ++k) {
        LVec left = lvec_mul(L, L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)], lvec_unit(L, k));
        LVec right = lvec_mul(L, lvec_unit(L, i), L.mult[static_cast<size_t>(j)][static_cast<size_t>(k)]);
        if (!lvec_is_zero(lvec_sub(left, right)))
          return failure("table not associative at (" + L.basis[static_cast<size_t>(i)] + "," +
                         L.basis[static_cast<size_t>(j)] + "," + L.basis[static_cast<size_t>(k)] + ")");
      }
  // augmentation is multiplicative on the fiber
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < r; ++j) {
      mpq_class v = 0;
      const LVec& row = L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)];
      for (long k = 0; k < r; ++k) v += row[static_cast<size_t>(k)].constant_term() * L.aug[static_cast<size_t>(k)];
      if (v != L.aug[static_cast<size_t>(i)] * L.aug[static_cast<size_t>(j)])
        return failure("augmentation not multiplicative at (" + L.basis[static_cast<size_t>(i)] + "," +
                       L.basis[static_cast<size_t>(j)] + ")");
    }
  return {};
}

/// Do the algebra's polynomial relations vanish in the structure (mod p^inf,
/// t-degree < trunc)?
inline ConsistencyReport consistency_check(const AugmentedAlgebra& a, const LambdaStructure& L) {
  ConsistencyReport table = check_lambda_table(L);
  if (!table.pass) return table;
  if (static_cast<long>(L.embed.size()) != a.vars.fiber_count())
    return {false, "embedding missing for some fiber variable"};
  for (const Poly& f : a.relations) {
    if (!lvec_is_zero(evaluate_in_lambda(L, f))) return {false, "relation " + f.str(a.vars) + " does not vanish"};
  }
  return {};
}

/// Fiber algebra A_0 = A/(t)A: the structure constants at t = 0.
struct FiberAlgebra {
  long p = 0;
  long rank = 0;
  std::vector<OMatrix> mult_op;  // mult_op[i] = multiplication by e_i
  std::vector<DvrScalar> aug;
  std::vector<std::vector<DvrScalar>> embed0;
};

inline FiberAlgebra fiber_algebra(const LambdaStructure& L) {
  FiberAlgebra f;
  f.p = L.p;
  f.rank = L.rank;
  for (long i = 0; i < L.rank; ++i) {
    OMatrix op(L.p, L.rank, L.rank);
    for (long j = 0; j < L.rank; ++j)
      for (long k = 0; k < L.rank; ++k)
        op.at(k, j) = DvrScalar::from_mpq(
            L.p, L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)][static_cast<size_t>(k)].constant_term());
    f.mult_op.push_back(op);
  }
  for (const auto& q : L.aug) f.aug.push_back(DvrScalar::from_mpq(L.p, q));
  for (const auto& e : L.embed) {
    std::vector<DvrScalar> v;
    for (const auto& pl : e) v.push_back(DvrScalar::from_mpq(L.p, pl.constant_term()));
    f.embed0.push_back(v);
  }
  // exact re-verification at t = 0
  require(f.mult_op[0] == OMatrix::identity(L.p, L.rank), ErrKind::InconsistentStructure,
          "fiber table: identity row broken");
  for (long i = 0; i < L.rank; ++i)
    for (long j = 0; j < L.rank; ++j) {
      OMatrix lhs = f.mult_op[static_cast<size_t>(i)] * f.mult_op[static_cast<size_t>(j)];
      OMatrix rhs(L.p, L.rank, L.rank);
      for (long k = 0; k < L.rank; ++k) {
        const DvrScalar& ck = f.mult_op[static_cast<size_t>(i)].at(k, j);
        if (ck.is_zero()) continue;
        for (long u = 0; u < L.rank; ++u)
          for (long v2 = 0; v2 < L.rank; ++v2)
            rhs.at(u, v2) += ck * f.mult_op[static_cast<size_t>(k)].at(u, v2);
      }
      require(lhs == rhs, ErrKind::InconsistentStructure,
              "fiber table not associative at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  return f;
}

/// A-module that is finite free over Lambda_c, by action matrices of the basis.
struct LambdaModule {
  std::string name;
  long rank = 0;                                    // rank over Lambda_c
  std::vector<std::vector<std::vector<Poly>>> act;  // act[i]: rank x rank lambda-poly matrix
};

struct FiberModule {
  long p = 0;
  long rank = 0;
  std::vector<OMatrix> act;  // action of each fiber-algebra basis element
};

inline LambdaModule regular_module(const LambdaStructure& L) {
  LambdaModule m;
  m.name = "A";
  m.rank = L.rank;
  for (long i = 0; i < L.rank; ++i) {
    std::vector<std::vector<Poly>> mat(static_cast<size_t>(L.rank),
                                       std::vector<Poly>(static_cast<size_t>(L.rank), Poly(L.vars.total())));
    for (long j = 0; j < L.rank; ++j)
      for (long k = 0; k < L.rank; ++k)
        mat[static_cast<size_t>(k)][static_cast<size_t>(j)] =
            L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)][static_cast<size_t>(k)];
    m.act.push_back(mat);
  }
  return m;
}

inline FiberModule fiber_module(const LambdaStructure& L, const LambdaModule& m) {
  FiberModule f;
  f.p = L.p;
  f.rank = m.rank;
  require(static_cast<long>(m.act.size()) == L.rank, ErrKind::InconsistentStructure,
          "module block must give one action matrix per basis element");
  for (const auto& mat : m.act) {
    OMatrix op(L.p, m.rank, m.rank);
    for (long i = 0; i < m.rank; ++i)
      for (long j = 0; j < m.rank; ++j) {
        const Poly& e = mat[static_cast<size_t>(i)][static_cast<size_t>(j)];
        require(e.vars_below(L.vars.lambda_count), ErrKind::InconsistentStructure,
                "module action entries must be polynomials in the base variables");
        op.at(i, j) = DvrScalar::from_mpq(L.p, e.constant_term());
      }
    f.act.push_back(op);
  }
  require(f.act[0] == OMatrix::identity(L.p, m.rank), ErrKind::InconsistentStructure,
          "module: identity must act as the identity");
  // actions satisfy the fiber multiplication table
  FiberAlgebra a0 = fiber_algebra(L);
  for (long i = 0; i < L.rank; ++i)
    for (long j = 0; j < L.rank; ++j) {
      OMatrix lhs = f.act[static_cast<size_t>(i)] * f.act[static_cast<size_t>(j)];
      OMatrix rhs(L.p, m.rank, m.rank);
      for (long k = 0; k < L.rank; ++k) {
        const DvrScalar& ck = a0.mult_op[static_cast<size_t>(i)].at(k, j);
        if (ck.is_zero()) continue;
        for (long u = 0; u < m.rank; ++u)
          for (long v = 0; v < m.rank; ++v) rhs.at(u, v) += ck * f.act[static_cast<size_t>(k)].at(u, v);
      }
      require(lhs == rhs, ErrKind::InconsistentStructure,
              "module action does not satisfy the multiplication table at (" + std::to_string(i) + "," +
                  std::to_string(j) + ")");
    }
  return f;
}

// ---------------------------------------------------------------------------
// Rewriting engine: derive a Lambda-structure from the presentation by
// orienting each relation at its largest fiber monomial (graded-lex) and
// saturating a monomial basis.
// ---------------------------------------------------------------------------

using FMono = std::vector<int>;  // exponents on fiber variables only

inline bool fmono_less(const FMono& a, const FMono& b) {
  long da = 0, db = 0;
  for (int e : a) da += e;
  for (int e : b) db += e;
  if (da != db) return da < db;
  return a < b;  // lex tiebreak
}

inline bool fmono_divides(const FMono& a, const FMono& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

/// Element of A written as sum of fiber monomials with lambda-poly coefficients.
using FElem = std::map<FMono, Poly>;

class Rewriter {
 public:
  Rewriter(const AugmentedAlgebra& a, long trunc) : a_(a), trunc_(trunc), k_(a.vars.fiber_count()) {
    for (const Poly& f : a.relations) add_rule(f);
  }

  FElem to_felem(const Poly& f) const {
    const long c = a_.vars.lambda_count;
    FElem e;
    for (const auto& [m, coeff] : f.terms()) {
      FMono fm(static_cast<size_t>(k_), 0);
      Mono tm(m.size(), 0);
      for (long i = 0; i < a_.vars.total(); ++i) {
        if (i < c) tm[static_cast<size_t>(i)] = m[static_cast<size_t>(i)];
        else fm[static_cast<size_t>(i - c)] = m[static_cast<size_t>(i)];
      }
      auto it = e.find(fm);
      if (it == e.end()) e[fm] = Poly::monomial(tm, coeff);
      else it->second += Poly::monomial(tm, coeff);
    }
    for (auto it = e.begin(); it != e.end();)
      it = it->second.is_zero() ? e.erase(it) : std::next(it);
    return e;
  }

  FElem reduce(FElem e) const {
    for (long guard = 0; guard < 100000; ++guard) {
      // rewrite the graded-lex largest reducible monomial, for determinism
      const FMono* target = nullptr;
      const Rule* rule = nullptr;
      for (const auto& [m, pl] : e)
        for (const Rule& r : rules_)
          if (fmono_divides(r.lhs, m)) {
            if (!target || fmono_less(*target, m)) {
              target = &m;
              rule = &r;
            }
            break;
          }
      if (!target) return e;
      FMono key(*target);
      FMono quot(key);
      for (size_t i = 0; i < quot.size(); ++i) quot[i] -= rule->lhs[i];
      Poly coeff = e.at(key);
      e.erase(key);
      for (const auto& [m, pl] : rule->rhs) {
        FMono prod(m);
        for (size_t i = 0; i < prod.size(); ++i) prod[i] += quot[i];
        Poly add = (pl * coeff).truncated(trunc_);
        if (add.is_zero()) continue;
        auto it = e.find(prod);
        if (it == e.end()) e[prod] = add;
        else {
          it->second += add;
          if (it->second.is_zero()) e.erase(it);
        }
      }
    }
    fail(ErrKind::InconsistentStructure, "rewriting did not terminate");
  }

  /// Saturated monomial basis, closed under products; graded-lex sorted.
  std::vector<FMono> saturate_basis() {
    std::set<FMono, decltype(&fmono_less)> basis(&fmono_less);
    basis.insert(FMono(static_cast<size_t>(k_), 0));
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<FMono> snapshot(basis.begin(), basis.end());
      for (const FMono& b : snapshot) {
        for (long x = 0; x < k_; ++x) {
          FMono m(b);
          m[static_cast<size_t>(x)] += 1;
          FElem r = reduce(single(m));
          for (const auto& [mm, pl] : r)
            if (!basis.count(mm)) {
              basis.insert(mm);
              grew = true;
              require(basis.size() <= 256, ErrKind::InconsistentStructure,
                      "monomial basis exceeds 256 elements; the algebra does not look module-finite over its base");
            }
        }
      }
    }
    return {basis.begin(), basis.end()};
  }

  FElem single(const FMono& m) const {
    FElem e;
    e[m] = Poly::one(a_.vars.total());
    return e;
  }

  bool is_irreducible(const FMono& m) const {
    for (const Rule& r : rules_)
      if (fmono_divides(r.lhs, m)) return false;
    return true;
  }

 private:
  struct Rule {
    FMono lhs;
    FElem rhs;
  };

  void add_rule(const Poly& f) {
    FElem e = to_felem(f);
    require(!e.empty(), ErrKind::InconsistentStructure, "zero relation");
    FMono best = e.begin()->first;
    for (const auto& [m, pl] : e)
      if (fmono_less(best, m)) best = m;
    require(mono_degree_f(best) >= 1, ErrKind::InconsistentStructure,
            "relation '" + f.str(a_.vars) + "' involves only base variables; the algebra is not free over its base");
    Poly lc = e[best];
    require(lc.degree() == 0, ErrKind::InconsistentStructure,
            "relation '" + f.str(a_.vars) + "' cannot be oriented: leading fiber monomial has a non-constant coefficient");
    DvrScalar c = DvrScalar::from_mpq(a_.p, lc.constant_term());
    require(c.is_unit(), ErrKind::InconsistentStructure,
            "relation '" + f.str(a_.vars) +
                "' cannot be oriented: leading fiber monomial has a non-unit coefficient; provide a lambda-structure block");
    Rule r;
    r.lhs = best;
    mpq_class inv = -1 / lc.constant_term();
    for (const auto& [m, pl] : e) {
      if (m == best) continue;
      r.rhs[m] = pl * inv;
    }
    rules_.push_back(std::move(r));
  }

  static long mono_degree_f(const FMono& m) {
    long d = 0;
    for (int e : m) d += e;
    return d;
  }

  const AugmentedAlgebra& a_;
  long trunc_;
  long k_;
  std::vector<Rule> rules_;
};

inline std::string fmono_label(const FMono& m, const VarTable& vars, long c) {
  std::string s;
  for (size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    if (!s.empty()) s += "*";
    s += vars.names[static_cast<size_t>(c) + i];
    if (m[i] > 1) s += "^" + std::to_string(m[i]);
  }
  return s.empty() ? "1" : s;
}

/**
 * Derive the Lambda-structure of A from its presentation.  Works when every
 * relation orients into a monomial rewrite rule; the derived table is
 * consistency-checked by the caller, which catches non-confluent rule sets.
 */
inline LambdaStructure derive_lambda_structure(const AugmentedAlgebra& a, long trunc) {
  Rewriter rw(a, trunc);
  std::vector<FMono> basis = rw.saturate_basis();
  // close the basis under pairwise products
  for (bool grew = true; grew;) {
    grew = false;
    for (size_t i = 0; i < basis.size() && !grew; ++i)
      for (size_t j = i; j < basis.size() && !grew; ++j) {
        FMono prod(basis[i]);
        for (size_t u = 0; u < prod.size(); ++u) prod[u] += basis[j][u];
        FElem r = rw.reduce(rw.single(prod));
        for (const auto& [mm, pl] : r) {
          if (std::find(basis.begin(), basis.end(), mm) == basis.end()) {
            basis.push_back(mm);
            std::sort(basis.begin(), basis.end(), fmono_less);
            require(basis.size() <= 256, ErrKind::InconsistentStructure, "monomial basis exceeds 256 elements");
            grew = true;
          }
        }
      }
  }

  const long c = a.vars.lambda_count;
  LambdaStructure L;
  L.p = a.p;
  L.rank = static_cast<long>(basis.size());
  L.trunc = trunc;
  L.vars = a.vars;
  for (const FMono& m : basis) L.basis.push_back(fmono_label(m, a.vars, c));

  auto coords = [&](const FElem& e) {
    LVec v = lvec_zero(L);
    for (const auto& [m, pl] : e) {
      auto it = std::find(basis.begin(), basis.end(), m);
      require(it != basis.end(), ErrKind::InconsistentStructure, "reduction left a monomial outside the basis");
      v[static_cast<size_t>(it - basis.begin())] = pl;
    }
    return v;
  };

  L.mult.assign(static_cast<size_t>(L.rank), std::vector<LVec>(static_cast<size_t>(L.rank)));
  for (size_t i = 0; i < basis.size(); ++i)
    for (size_t j = 0; j < basis.size(); ++j) {
      FMono prod(basis[i]);
      for (size_t u = 0; u < prod.size(); ++u) prod[u] += basis[j][u];
      L.mult[i][j] = coords(rw.reduce(rw.single(prod)));
    }
  L.aug.assign(static_cast<size_t>(L.rank), 0);
  L.aug[0] = 1;
  for (long x = 0; x < a.vars.fiber_count(); ++x) {
    FMono m(static_cast<size_t>(a.vars.fiber_count()), 0);
    m[static_cast<size_t>(x)] = 1;
    L.embed.push_back(coords(rw.reduce(rw.single(m))));
  }
  return L;
}

// ---------------------------------------------------------------------------
// Fraction-field fiber: dimension of the lambda-component of A_0 (x) E.  Used
// by the membership check; works even when A_0 has O-torsion, because rules
// may be oriented at any nonzero leading coefficient over E.
// ---------------------------------------------------------------------------

struct ERule {
  FMono lhs;
  std::map<FMono, mpq_class> rhs;
};

inline std::optional<long> fiber_component_dim_E(const AugmentedAlgebra& a) {
  const long c = a.vars.lambda_count, k = a.vars.fiber_count();
  std::vector<ERule> rules;
  for (Poly f : a.relations) {
    for (long i = 0; i < c; ++i) f = f.substitute(i, Poly(a.vars.total()));
    if (f.is_zero()) continue;
    std::map<FMono, mpq_class> e;
    for (const auto& [m, coeff] : f.terms()) {
      FMono fm(static_cast<size_t>(k), 0);
      for (long i = 0; i < k; ++i) fm[static_cast<size_t>(i)] = m[static_cast<size_t>(c + i)];
      e[fm] += coeff;
    }
    for (auto it = e.begin(); it != e.end();) it = it->second == 0 ? e.erase(it) : std::next(it);
    if (e.empty()) continue;
    FMono best = e.begin()->first;
    for (const auto& [m, q] : e)
      if (fmono_less(best, m)) best = m;
    if (mono_degree(Mono(best.begin(), best.end())) == 0) return std::nullopt;
    ERule r;
    r.lhs = best;
    mpq_class inv = -1 / e[best];
    for (const auto& [m, q] : e)
      if (!(m == best)) r.rhs[m] = q * inv;
    rules.push_back(std::move(r));
  }

  auto reduce = [&](std::map<FMono, mpq_class> e) -> std::optional<std::map<FMono, mpq_class>> {
    for (long guard = 0; guard < 100000; ++guard) {
      const FMono* target = nullptr;
      const ERule* rule = nullptr;
      for (const auto& [m, q] : e)
        for (const ERule& r : rules)
          if (fmono_divides(r.lhs, m) && (!target || fmono_less(*target, m))) {
            target = &m;
            rule = &r;
            break;
          }
      if (!target) return e;
      FMono quot(*target);
      for (size_t i = 0; i < quot.size(); ++i) quot[i] -= rule->lhs[i];
      mpq_class coeff = e[*target];
      e.erase(*target);
      for (const auto& [m, q] : rule->rhs) {
        FMono prod(m);
        for (size_t i = 0; i < prod.size(); ++i) prod[i] += quot[i];
        e[prod] += q * coeff;
        if (e[prod] == 0) e.erase(prod);
      }
    }
    return std::nullopt;
  };

  std::set<FMono, decltype(&fmono_less)> basis(&fmono_less);
  basis.insert(FMono(static_cast<size_t>(k), 0));
  for (bool grew = true; grew;) {
    grew = false;
    std::vector<FMono> snapshot(basis.begin(), basis.end());
    for (const FMono& b : snapshot)
      for (long x = 0; x < k; ++x) {
        FMono m(b);
        m[static_cast<size_t>(x)] += 1;
        std::map<FMono, mpq_class> e;
        e[m] = 1;
        auto red = reduce(e);
        if (!red) return std::nullopt;
        for (const auto& [mm, q] : *red)
          if (!basis.count(mm)) {
            basis.insert(mm);
            grew = true;
            if (basis.size() > 256) return std::nullopt;
          }
      }
  }
  std::vector<FMono> bvec(basis.begin(), basis.end());
  const long r = static_cast<long>(bvec.size());
  std::vector<QMatrix> ops;
  for (long x = 0; x < k; ++x) {
    QMatrix op(r, r);
    for (long j = 0; j < r; ++j) {
      FMono m(bvec[static_cast<size_t>(j)]);
      m[static_cast<size_t>(x)] += 1;
      std::map<FMono, mpq_class> e;
      e[m] = 1;
      auto red = reduce(e);
      if (!red) return std::nullopt;
      for (const auto& [mm, q] : *red) {
        auto it = std::find(bvec.begin(), bvec.end(), mm);
        if (it == bvec.end()) return std::nullopt;
        op.at(static_cast<long>(it - bvec.begin()), j) = q;
      }
    }
    ops.push_back(op);
  }
  return joint_generalized_kernel_dim(ops, r);
}

// ---------------------------------------------------------------------------
// Category membership
// ---------------------------------------------------------------------------

/// Selector matrix whose columns are the base-variable unit vectors.
inline OMatrix lambda_selector(const AugmentedAlgebra& a) {
  OMatrix s(a.p, a.vars.total(), a.vars.lambda_count);
  for (long i = 0; i < a.vars.lambda_count; ++i) s.at(i, i) = DvrScalar::one(a.p);
  return s;
}

/**
 * Matrix of iota^*: coordinates of the base-variable residues t_1..t_c in the
 * chosen basis of tf(p/p^2), and the length of coker(wedge^c iota^*) = the
 * valuation of its determinant.
 */
struct WedgeData {
  OMatrix matrix;
  long coker_length = 0;
};

inline WedgeData wedge_iota_star(const AugmentedAlgebra& a, const CotangentData& cot) {
  require(cot.module.free_rank == a.codim(), ErrKind::NotIndependent,
          "tf(p/p^2) has rank different from the declared codimension");
  WedgeData w;
  w.matrix = cot.pi * lambda_selector(a);
  long d = a.codim() == 0 ? 0 : det_valuation(w.matrix);
  require(d != kValInfinity, ErrKind::NotIndependent, "iota is not injective on cotangent spaces");
  w.coker_length = d;
  return w;
}

/**
 * Decide (A, lambda) in C_O(c): tf(p/p^2) free of rank c, base-variable
 * residues independent, and the lambda-component of the fiber A_0 (x) E of
 * dimension one.  The fiber condition uses the structure table when one is
 * available and fraction-field rewriting otherwise.
 */
inline long membership_check(const AugmentedAlgebra& a, const FiberAlgebra* f0) {
  CotangentData cot = cotangent(a);
  const long c = a.codim();
  if (cot.module.free_rank != c)
    fail(ErrKind::NotInCategory, "tf(p/p^2) has rank " + std::to_string(cot.module.free_rank) +
                                     ", expected the codimension " + std::to_string(c));
  if (c > 0) {
    OMatrix T = cot.pi * lambda_selector(a);
    if (rank_over_E(T) != c)
      fail(ErrKind::NotInCategory, "base-variable residues are O-linearly dependent in p/p^2");
  }
  long dim = -1;
  if (f0) {
    std::vector<QMatrix> ops;
    for (long i = 1; i < f0->rank; ++i) {
      QMatrix op = QMatrix::from(f0->mult_op[static_cast<size_t>(i)]);
      for (long d = 0; d < f0->rank; ++d) op.at(d, d) -= f0->aug[static_cast<size_t>(i)].value();
      ops.push_back(op);
    }
    dim = joint_generalized_kernel_dim(ops, f0->rank);
  } else {
    auto d = fiber_component_dim_E(a);
    require(d.has_value(), ErrKind::NotInCategory,
            "cannot compute the fiber lambda-component from this presentation");
    dim = *d;
  }
  if (dim != 1)
    fail(ErrKind::NotInCategory,
         "lambda-component of the fiber has dimension " + std::to_string(dim) + ", expected 1");
  return c;
}

}  // namespace cmodlab
