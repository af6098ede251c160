#pragma once

#include <atomic>
#include <cctype>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cmodlab/algebra.hpp"
#include "cmodlab/error.hpp"
#include "cmodlab/invariants.hpp"
#include "cmodlab/lambda_structure.hpp"
#include "cmodlab/matrix.hpp"
#include "cmodlab/module.hpp"
#include "cmodlab/poly.hpp"
#include "cmodlab/rng.hpp"

namespace cmodlab {

// ---------------------------------------------------------------------------
// generators with closed-form oracles
// ---------------------------------------------------------------------------

struct GeneratedMember {
  AugmentedAlgebra a;
  LambdaStructure L;
};

/// Glued union of r coordinate lines over O: one variable per line, lines
/// meeting pairwise at the augmentation point.
struct FiberProductSpec {
  long p = 2;
  std::vector<long> exponents;  // one positive exponent per line
};

struct FiberOracle {
  long phi = 0, psi = 0, defect = 0;
};

inline FiberOracle fiber_product_oracle(const FiberProductSpec& spec) {
  FiberOracle o;
  long mx = 0;
  for (long m : spec.exponents) {
    o.phi += m;
    mx = std::max(mx, m);
  }
  o.psi = mx;
  o.defect = o.phi - o.psi;
  return o;
}

namespace detail {

inline mpq_class q_p_pow(long p, long e) {
  mpz_class z;
  mpz_ui_pow_ui(z.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(e));
  return mpq_class(z);
}

}  // namespace detail

/// A = O[x_1..x_r]/(x_i^2 - p^{m_i} x_i, x_i x_j for i != j), basis {1, x_i}.
inline GeneratedMember gen_fiber_product(const FiberProductSpec& spec) {
  const long r = static_cast<long>(spec.exponents.size());
  require(r >= 1, ErrKind::Parse, "need at least one exponent");
  for (long m : spec.exponents)
    require(m >= 1, ErrKind::Parse, "exponents must be positive");

  GeneratedMember g;
  VarTable vars;
  vars.lambda_count = 0;
  for (long i = 1; i <= r; ++i) vars.names.push_back("x" + std::to_string(i));

  g.a.p = spec.p;
  g.a.vars = vars;
  const long nv = r;
  for (long i = 0; i < r; ++i) {
    Mono sq(static_cast<size_t>(nv), 0);
    sq[static_cast<size_t>(i)] = 2;
    Poly f = Poly::monomial(sq, 1) -
             Poly::var(nv, i) * detail::q_p_pow(spec.p, spec.exponents[static_cast<size_t>(i)]);
    g.a.relations.push_back(f);
  }
  for (long i = 0; i < r; ++i)
    for (long j = i + 1; j < r; ++j) {
      Mono m(static_cast<size_t>(nv), 0);
      m[static_cast<size_t>(i)] = 1;
      m[static_cast<size_t>(j)] = 1;
      g.a.relations.push_back(Poly::monomial(m, 1));
    }
  if (r <= 2) g.a.flags.push_back("gorenstein");
  if (r == 1) g.a.flags.push_back("ci");
  validate_algebra(g.a);

  g.L.p = spec.p;
  g.L.rank = r + 1;
  g.L.trunc = 8;
  g.L.vars = vars;
  g.L.basis.push_back("1");
  for (long i = 1; i <= r; ++i) g.L.basis.push_back("x" + std::to_string(i));
  auto zero_vec = [&] { return LVec(static_cast<size_t>(r + 1), Poly(nv)); };
  g.L.mult.assign(static_cast<size_t>(r + 1), std::vector<LVec>(static_cast<size_t>(r + 1)));
  for (long i = 0; i <= r; ++i)
    for (long j = 0; j <= r; ++j) {
      LVec v = zero_vec();
      if (i == 0)
        v[static_cast<size_t>(j)] = Poly::one(nv);
      else if (j == 0)
        v[static_cast<size_t>(i)] = Poly::one(nv);
      else if (i == j)
        v[static_cast<size_t>(i)] =
            Poly::constant(nv, detail::q_p_pow(spec.p, spec.exponents[static_cast<size_t>(i - 1)]));
      g.L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)] = v;
    }
  g.L.aug.assign(static_cast<size_t>(r + 1), mpq_class(0));
  g.L.aug[0] = 1;
  for (long i = 0; i < r; ++i) {
    LVec e = zero_vec();
    e[static_cast<size_t>(i + 1)] = Poly::one(nv);
    g.L.embed.push_back(e);
  }
  return g;
}

/// The same family emitted directly at the fiber, for fast family sweeps.
inline FiberAlgebra gen_fiber_product_fiber(const FiberProductSpec& spec) {
  const long r = static_cast<long>(spec.exponents.size());
  const long n = r + 1, p = spec.p;
  FiberAlgebra f;
  f.p = p;
  f.rank = n;
  f.mult_op.push_back(OMatrix::identity(p, n));
  for (long i = 1; i <= r; ++i) {
    OMatrix op(p, n, n);
    op.at(i, 0) = DvrScalar::one(p);
    op.at(i, i) = DvrScalar::p_pow(p, spec.exponents[static_cast<size_t>(i - 1)]);
    f.mult_op.push_back(op);
  }
  f.aug.assign(static_cast<size_t>(n), DvrScalar::zero(p));
  f.aug[0] = DvrScalar::one(p);
  for (long i = 1; i <= r; ++i) {
    std::vector<DvrScalar> e(static_cast<size_t>(n), DvrScalar::zero(p));
    e[static_cast<size_t>(i)] = DvrScalar::one(p);
    f.embed0.push_back(e);
  }
  return f;
}

/// Recompute the closed-form oracle by brute-force linear algebra and check
/// every prediction, including the explicit kernel generator
/// sum_i p^{max - m_i} x_i - p^{max}.  Throws on any mismatch.
inline InvariantReport check_fiber_product_oracle(const FiberProductSpec& spec) {
  const FiberAlgebra f = gen_fiber_product_fiber(spec);
  const FiberModule m{f.p, f.rank, f.mult_op};
  const FiberOracle o = fiber_product_oracle(spec);
  const long r = static_cast<long>(spec.exponents.size());

  C0Core core = c0_core(f.p, m.rank, shifted_basis_ops(f, m));
  assert_member_core(core);
  require(core.mu == 1, ErrKind::Computation, "glued product kernel is not a line");
  OMatrix w(f.p, f.rank, 1);
  w.at(0, 0) = -DvrScalar::p_pow(f.p, o.psi);
  for (long i = 0; i < r; ++i)
    w.at(i + 1, 0) = DvrScalar::p_pow(f.p, o.psi - spec.exponents[static_cast<size_t>(i)]);
  require(colspan_contains(core.kernel, w), ErrKind::Computation,
          "predicted kernel generator is not in the joint kernel");
  require(core.psi.free_rank == 0 && core.psi.torsion_length() == o.psi,
          ErrKind::Computation, "brute-force psi disagrees with the closed form");
  FgOModule cot = fiber_cotangent(f);
  require(cot.is_torsion() && cot.torsion_length() == o.phi, ErrKind::Computation,
          "brute-force phi disagrees with the closed form");
  require(core.rank_lambda == 1, ErrKind::Computation, "glued product must have rank one");

  InvariantReport rep = c0_invariants(f, m);
  require(rep.defect == o.defect, ErrKind::Computation,
          "defect disagrees with the closed form");
  return rep;
}

/// Parameters of one pseudo-random complete-intersection member:
/// x_j^2 - p^{a_j} x_j - sum_i p^{b_ij} t_i x_j over the base in c variables.
struct CiParams {
  long p = 3;
  long c = 1;
  std::vector<long> a;                // one diagonal exponent per fiber variable
  std::vector<std::vector<long>> b;   // b[j][i]: base-coupling exponent, 0 = absent
};

inline GeneratedMember gen_ci_member(const CiParams& par) {
  const long size = static_cast<long>(par.a.size());
  require(size <= 2, ErrKind::Parse, "at most two adjoined variables");
  GeneratedMember g;
  VarTable vars;
  vars.lambda_count = par.c;
  if (par.c == 1)
    vars.names.push_back("t");
  else
    for (long i = 1; i <= par.c; ++i) vars.names.push_back("t" + std::to_string(i));
  for (long j = 1; j <= size; ++j) vars.names.push_back("x" + std::to_string(j));
  const long nv = par.c + size;

  auto u_poly = [&](long j) {
    Poly u = Poly::constant(nv, detail::q_p_pow(par.p, par.a[static_cast<size_t>(j)]));
    for (long i = 0; i < par.c; ++i) {
      long e = par.b[static_cast<size_t>(j)][static_cast<size_t>(i)];
      if (e > 0) u += Poly::var(nv, i) * detail::q_p_pow(par.p, e);
    }
    return u;
  };

  g.a.p = par.p;
  g.a.vars = vars;
  for (long j = 0; j < size; ++j) {
    Mono sq(static_cast<size_t>(nv), 0);
    sq[static_cast<size_t>(par.c + j)] = 2;
    Poly f = Poly::monomial(sq, 1) - Poly::var(nv, par.c + j) * u_poly(j);
    g.a.relations.push_back(f);
  }
  g.a.flags = {"ci", "gorenstein"};
  validate_algebra(g.a);

  const long rank = 1L << size;
  g.L.p = par.p;
  g.L.rank = rank;
  g.L.trunc = 8;
  g.L.vars = vars;
  for (long mask = 0; mask < rank; ++mask) {
    std::string name;
    for (long j = 0; j < size; ++j)
      if (mask & (1L << j)) name += "x" + std::to_string(j + 1);
    g.L.basis.push_back(mask == 0 ? "1" : name);
  }
  g.L.mult.assign(static_cast<size_t>(rank), std::vector<LVec>(static_cast<size_t>(rank)));
  for (long s = 0; s < rank; ++s)
    for (long t = 0; t < rank; ++t) {
      LVec v(static_cast<size_t>(rank), Poly(nv));
      Poly coeff = Poly::one(nv);
      for (long j = 0; j < size; ++j)
        if ((s & t) & (1L << j)) coeff = coeff * u_poly(j);
      v[static_cast<size_t>(s | t)] = coeff;
      g.L.mult[static_cast<size_t>(s)][static_cast<size_t>(t)] = v;
    }
  g.L.aug.assign(static_cast<size_t>(rank), mpq_class(0));
  g.L.aug[0] = 1;
  for (long j = 0; j < size; ++j) {
    LVec e(static_cast<size_t>(rank), Poly(nv));
    e[static_cast<size_t>(1L << j)] = Poly::one(nv);
    g.L.embed.push_back(e);
  }
  return g;
}

inline CiParams draw_ci_params(SplitMix64& rng, long c, long size) {
  CiParams par;
  par.p = rng.pick(std::vector<long>{2, 3, 5});
  par.c = c;
  for (long j = 0; j < size; ++j) {
    par.a.push_back(rng.range(1, 6));
    std::vector<long> row;
    for (long i = 0; i < c; ++i) row.push_back(rng.coin() ? rng.range(1, 6) : 0);
    par.b.push_back(row);
  }
  return par;
}

inline GeneratedMember gen_ci(uint64_t seed, long c, long size) {
  SplitMix64 rng(seed);
  return gen_ci_member(draw_ci_params(rng, c, size));
}

/// Regular members whose base variables re-embed with positive depth:
/// t_i = p^{k_i} s_i + s_i^2.  One fiber variable per base variable.
inline GeneratedMember gen_series_member(long p, const std::vector<long>& ks) {
  const long size = static_cast<long>(ks.size());
  require(size >= 1 && size <= 2, ErrKind::Parse, "one or two series variables");
  GeneratedMember g;
  VarTable vars;
  vars.lambda_count = size;
  if (size == 1) {
    vars.names = {"t", "s"};
  } else {
    vars.names = {"t1", "t2", "s1", "s2"};
  }
  const long nv = 2 * size;
  g.a.p = p;
  g.a.vars = vars;
  for (long i = 0; i < size; ++i) {
    Mono sq(static_cast<size_t>(nv), 0);
    sq[static_cast<size_t>(size + i)] = 2;
    Poly f = Poly::var(nv, i) -
             Poly::var(nv, size + i) * detail::q_p_pow(p, ks[static_cast<size_t>(i)]) -
             Poly::monomial(sq, 1);
    g.a.relations.push_back(f);
  }
  g.a.flags = {"ci", "gorenstein"};
  validate_algebra(g.a);

  const long rank = 1L << size;
  g.L.p = p;
  g.L.rank = rank;
  g.L.trunc = 8;
  g.L.vars = vars;
  auto pk = [&](long i) { return detail::q_p_pow(p, ks[static_cast<size_t>(i)]); };
  if (size == 1) {
    g.L.basis = {"1", "s"};
    g.L.mult.assign(2, std::vector<LVec>(2));
    LVec one{Poly::one(nv), Poly(nv)};
    LVec es{Poly(nv), Poly::one(nv)};
    g.L.mult[0][0] = one;
    g.L.mult[0][1] = es;
    g.L.mult[1][0] = es;
    g.L.mult[1][1] = {Poly::var(nv, 0), Poly::constant(nv, -pk(0))};
    g.L.embed = {es};
  } else {
    g.L.basis = {"1", "s1", "s2", "s1s2"};
    g.L.mult.assign(4, std::vector<LVec>(4));
    auto unit = [&](long i) {
      LVec v(4, Poly(nv));
      v[static_cast<size_t>(i)] = Poly::one(nv);
      return v;
    };
    for (long j = 0; j < 4; ++j) {
      g.L.mult[0][static_cast<size_t>(j)] = unit(j);
      g.L.mult[static_cast<size_t>(j)][0] = unit(j);
    }
    Poly t1 = Poly::var(nv, 0), t2 = Poly::var(nv, 1);
    g.L.mult[1][1] = {t1, Poly::constant(nv, -pk(0)), Poly(nv), Poly(nv)};
    g.L.mult[2][2] = {t2, Poly(nv), Poly::constant(nv, -pk(1)), Poly(nv)};
    g.L.mult[1][2] = unit(3);
    g.L.mult[2][1] = unit(3);
    g.L.mult[1][3] = {Poly(nv), Poly(nv), t1, Poly::constant(nv, -pk(0))};
    g.L.mult[3][1] = g.L.mult[1][3];
    g.L.mult[2][3] = {Poly(nv), t2, Poly(nv), Poly::constant(nv, -pk(1))};
    g.L.mult[3][2] = g.L.mult[2][3];
    g.L.mult[3][3] = {t1 * t2, t2 * Poly::constant(nv, -pk(0)), t1 * Poly::constant(nv, -pk(1)),
                      Poly::constant(nv, pk(0) * pk(1))};
    g.L.embed = {unit(1), unit(2)};
  }
  g.L.aug.assign(static_cast<size_t>(rank), mpq_class(0));
  g.L.aug[0] = 1;
  return g;
}

/// Presentation-rescaled copy (first adjoined variable scaled by the unit
/// p + 1): an isomorphic member with a different presentation.
inline GeneratedMember rescaled_ci_member(const CiParams& par) {
  GeneratedMember g = gen_ci_member(par);
  require(!par.a.empty(), ErrKind::Parse, "nothing to rescale");
  const mpq_class u(par.p + 1);
  const long nv = g.a.vars.total();
  for (auto& coord : g.L.embed[0]) coord = coord * u;
  Poly f = g.a.relations[0];
  Poly rebuilt(nv);
  for (const auto& [mono, coeff] : f.terms()) {
    if (mono_degree(mono) == 2 && mono[static_cast<size_t>(par.c)] == 2)
      rebuilt.add_term(mono, coeff);  // the square keeps coefficient 1
    else
      rebuilt.add_term(mono, coeff * u);
  }
  g.a.relations[0] = rebuilt;
  validate_algebra(g.a);
  return g;
}

// ---------------------------------------------------------------------------
// module variants over generated members
// ---------------------------------------------------------------------------

inline LambdaModule free_square_module(const LambdaStructure& L) {
  LambdaModule reg = regular_module(L);
  LambdaModule m;
  m.name = "free2";
  m.rank = 2 * L.rank;
  const long nv = L.vars.total();
  for (long i = 0; i < L.rank; ++i) {
    std::vector<std::vector<Poly>> mat(static_cast<size_t>(m.rank),
                                       std::vector<Poly>(static_cast<size_t>(m.rank), Poly(nv)));
    for (long u = 0; u < L.rank; ++u)
      for (long v = 0; v < L.rank; ++v) {
        const Poly& e = reg.act[static_cast<size_t>(i)][static_cast<size_t>(u)][static_cast<size_t>(v)];
        mat[static_cast<size_t>(u)][static_cast<size_t>(v)] = e;
        mat[static_cast<size_t>(L.rank + u)][static_cast<size_t>(L.rank + v)] = e;
      }
    m.act.push_back(mat);
  }
  return m;
}

/// The ideal (p, x) of a one-variable member, as a rank-two lattice.
inline LambdaModule ideal_pm_module(const CiParams& par, const LambdaStructure& L) {
  require(par.a.size() == 1, ErrKind::Parse, "ideal module needs exactly one variable");
  const long nv = L.vars.total();
  Poly u = Poly::constant(nv, detail::q_p_pow(par.p, par.a[0]));
  for (long i = 0; i < par.c; ++i)
    if (par.b[0][static_cast<size_t>(i)] > 0)
      u += Poly::var(nv, i) * detail::q_p_pow(par.p, par.b[0][static_cast<size_t>(i)]);
  LambdaModule m;
  m.name = "idealP";
  m.rank = 2;
  std::vector<std::vector<Poly>> id = {{Poly::one(nv), Poly(nv)}, {Poly(nv), Poly::one(nv)}};
  std::vector<std::vector<Poly>> ax = {{Poly(nv), Poly(nv)},
                                       {Poly::constant(nv, mpq_class(par.p)), u}};
  m.act = {id, ax};
  return m;
}

/// Rank-two lattice with the variable acting through a base multiple:
/// x v1 = t_1 v2, x v2 = u v2.
inline LambdaModule twisted_module(const CiParams& par, const LambdaStructure& L) {
  require(par.a.size() == 1 && par.c >= 1, ErrKind::Parse,
          "twisted module needs one variable over a positive-dimensional base");
  const long nv = L.vars.total();
  Poly u = Poly::constant(nv, detail::q_p_pow(par.p, par.a[0]));
  for (long i = 0; i < par.c; ++i)
    if (par.b[0][static_cast<size_t>(i)] > 0)
      u += Poly::var(nv, i) * detail::q_p_pow(par.p, par.b[0][static_cast<size_t>(i)]);
  LambdaModule m;
  m.name = "twist";
  m.rank = 2;
  std::vector<std::vector<Poly>> id = {{Poly::one(nv), Poly(nv)}, {Poly(nv), Poly::one(nv)}};
  std::vector<std::vector<Poly>> ax = {{Poly(nv), Poly(nv)}, {Poly::var(nv, 0), u}};
  m.act = {id, ax};
  return m;
}

/// Over a two-line glued product: the split module on which the two lines act
/// through different coordinates; its rank at the augmentation is zero.
inline LambdaModule split_rank0_module(const FiberProductSpec& spec, const LambdaStructure& L) {
  require(spec.exponents.size() == 2, ErrKind::Parse, "split module needs two lines");
  const long nv = L.vars.total();
  std::vector<std::vector<Poly>> id = {{Poly::one(nv), Poly(nv)}, {Poly(nv), Poly::one(nv)}};
  std::vector<std::vector<Poly>> a1 = {{Poly::constant(nv, detail::q_p_pow(spec.p, spec.exponents[0])), Poly(nv)},
                                       {Poly(nv), Poly(nv)}};
  std::vector<std::vector<Poly>> a2 = {{Poly(nv), Poly(nv)},
                                       {Poly(nv), Poly::constant(nv, detail::q_p_pow(spec.p, spec.exponents[1]))}};
  LambdaModule m;
  m.name = "split0";
  m.rank = 2;
  m.act = {id, a1, a2};
  return m;
}

// ---------------------------------------------------------------------------
// corpus
// ---------------------------------------------------------------------------

enum class ModuleKind { Regular, FreeSquare, IdealP, Twisted, RankZero };

struct CorpusMember {
  std::string label;
  AugmentedAlgebra a;
  LambdaStructure L;
  LambdaModule m;
  ModuleKind kind = ModuleKind::Regular;
  bool expect_regular = false;
  bool expect_ci = false;  // delta of the regular module must vanish
  bool fiber_product = false;
  long fp_r = 0;
  std::optional<long> oracle_phi, oracle_psi, oracle_defect;
  std::optional<CiParams> ci;  // present for generated complete intersections
};

struct Corpus {
  uint64_t seed = 0;
  std::vector<CorpusMember> members;
};

inline Corpus build_corpus(uint64_t seed, long samples) {
  Corpus corpus;
  corpus.seed = seed;
  SplitMix64 rng(seed);
  auto sum = [](const std::vector<long>& v) {
    long s = 0;
    for (long x : v) s += x;
    return s;
  };
  for (long i = 0; i < samples; ++i) {
    CorpusMember mem;
    switch (i % 8) {
      case 0: {  // bare base rings
        long c = rng.range(0, 2);
        CiParams par{rng.pick(std::vector<long>{2, 3, 5}), c, {}, {}};
        GeneratedMember g = gen_ci_member(par);
        mem.label = "base-c" + std::to_string(c) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.expect_regular = true;
        mem.expect_ci = true;
        mem.oracle_phi = 0;
        mem.oracle_psi = 0;
        mem.oracle_defect = 0;
        mem.ci = par;
        break;
      }
      case 1: {  // one adjoined variable
        CiParams par = draw_ci_params(rng, rng.range(0, 2), 1);
        GeneratedMember g = gen_ci_member(par);
        mem.label = "ci1-c" + std::to_string(par.c) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.expect_ci = true;
        mem.oracle_phi = sum(par.a);
        mem.oracle_psi = sum(par.a);
        mem.oracle_defect = 0;
        mem.ci = par;
        break;
      }
      case 2: {  // two adjoined variables
        CiParams par = draw_ci_params(rng, rng.range(0, 2), 2);
        GeneratedMember g = gen_ci_member(par);
        mem.label = "ci2-c" + std::to_string(par.c) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.expect_ci = true;
        mem.oracle_phi = sum(par.a);
        mem.oracle_psi = sum(par.a);
        mem.oracle_defect = 0;
        mem.ci = par;
        break;
      }
      case 3: {  // glued products
        FiberProductSpec spec;
        spec.p = rng.pick(std::vector<long>{2, 3, 5});
        long r = rng.range(1, 4);
        for (long k = 0; k < r; ++k) spec.exponents.push_back(rng.range(1, 6));
        GeneratedMember g = gen_fiber_product(spec);
        FiberOracle o = fiber_product_oracle(spec);
        mem.label = "fp-r" + std::to_string(r) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.fiber_product = true;
        mem.fp_r = r;
        mem.expect_ci = (r == 1);
        mem.oracle_phi = o.phi;
        mem.oracle_psi = o.psi;
        mem.oracle_defect = o.defect;
        break;
      }
      case 4: {  // regular members with re-embedded base
        long size = rng.range(1, 2);
        std::vector<long> ks;
        for (long k = 0; k < size; ++k) ks.push_back(rng.range(1, 6));
        long p = rng.pick(std::vector<long>{2, 3, 5});
        GeneratedMember g = gen_series_member(p, ks);
        mem.label = "series-" + std::to_string(size) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.expect_regular = true;
        mem.expect_ci = true;
        mem.oracle_phi = 0;
        mem.oracle_psi = 0;
        mem.oracle_defect = 0;
        break;
      }
      case 5: {  // free rank-two module over a one-variable member
        CiParams par = draw_ci_params(rng, rng.range(0, 2), 1);
        GeneratedMember g = gen_ci_member(par);
        mem.label = "free2-c" + std::to_string(par.c) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.m = free_square_module(g.L);
        mem.kind = ModuleKind::FreeSquare;
        mem.oracle_phi = sum(par.a);
        mem.oracle_psi = 2 * sum(par.a);
        mem.oracle_defect = 0;
        mem.ci = par;
        break;
      }
      case 6: {  // the ideal (p, x)
        CiParams par = draw_ci_params(rng, rng.range(0, 2), 1);
        GeneratedMember g = gen_ci_member(par);
        mem.label = "idealP-c" + std::to_string(par.c) + "#" + std::to_string(i);
        mem.a = g.a;
        mem.L = g.L;
        mem.m = ideal_pm_module(par, g.L);
        mem.kind = ModuleKind::IdealP;
        mem.oracle_phi = par.a[0];
        mem.oracle_psi = par.a[0] - 1;
        mem.oracle_defect = 1;
        mem.ci = par;
        break;
      }
      default: {  // twisted lattice / split rank-zero module, alternating
        if ((i / 8) % 2 == 0) {
          CiParams par = draw_ci_params(rng, rng.range(1, 2), 1);
          GeneratedMember g = gen_ci_member(par);
          mem.label = "twist-c" + std::to_string(par.c) + "#" + std::to_string(i);
          mem.a = g.a;
          mem.L = g.L;
          mem.m = twisted_module(par, g.L);
          mem.kind = ModuleKind::Twisted;
          mem.oracle_phi = par.a[0];
          mem.oracle_psi = 0;
          mem.oracle_defect = par.a[0];
          mem.ci = par;
        } else {
          FiberProductSpec spec;
          spec.p = rng.pick(std::vector<long>{2, 3, 5});
          spec.exponents = {rng.range(1, 6), rng.range(1, 6)};
          GeneratedMember g = gen_fiber_product(spec);
          mem.label = "split0#" + std::to_string(i);
          mem.a = g.a;
          mem.L = g.L;
          mem.m = split_rank0_module(spec, g.L);
          mem.kind = ModuleKind::RankZero;
          mem.oracle_phi = spec.exponents[0] + spec.exponents[1];
          mem.oracle_psi = 0;
          mem.oracle_defect = 0;
        }
        break;
      }
    }
    if (mem.m.rank == 0) mem.m = regular_module(mem.L);
    corpus.members.push_back(std::move(mem));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// law registry
// ---------------------------------------------------------------------------

struct LawResult {
  std::string id;
  uint64_t seed = 0;
  long samples = 0;  // members the law actually exercised
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};

namespace detail {

struct MemberOutcome {
  bool applicable = false;
  std::optional<std::string> failure;
};

inline MemberOutcome law_pass() { return {true, std::nullopt}; }
inline MemberOutcome law_fail(const std::string& why) { return {true, why}; }
inline MemberOutcome law_skip() { return {false, std::nullopt}; }

inline MemberContext member_context(const CorpusMember& mem) {
  return make_context(mem.a, mem.L, mem.m);
}

/// Junk extension: adjoin one nilpotent torsion variable mapping to zero.
inline SurjectionToMember junk_extension(const CorpusMember& mem, const MemberContext& ctx,
                                         long e) {
  SurjectionToMember s;
  s.source = mem.a;
  const long nv = mem.a.vars.total();
  s.source.vars.names.push_back("yjunk");
  auto extend = [&](const Poly& f) {
    Poly out(nv + 1);
    for (const auto& [mono, coeff] : f.terms()) {
      Mono m = mono;
      m.push_back(0);
      out.add_term(m, coeff);
    }
    return out;
  };
  for (auto& f : s.source.relations) f = extend(f);
  const long y = nv;
  Mono sq(static_cast<size_t>(nv + 1), 0);
  sq[static_cast<size_t>(y)] = 2;
  s.source.relations.push_back(Poly::monomial(sq, 1));
  for (long l = mem.a.vars.lambda_count; l < nv; ++l) {
    Mono m(static_cast<size_t>(nv + 1), 0);
    m[static_cast<size_t>(l)] = 1;
    m[static_cast<size_t>(y)] = 1;
    s.source.relations.push_back(Poly::monomial(m, 1));
  }
  s.source.relations.push_back(Poly::var(nv + 1, y) * detail::q_p_pow(mem.a.p, e));

  const long n0 = ctx.m0.rank;
  for (long l = 0; l < mem.a.vars.fiber_count(); ++l) {
    OMatrix op(mem.a.p, n0, n0);
    const auto& coords = ctx.f.embed0[static_cast<size_t>(l)];
    for (long k = 0; k < ctx.f.rank; ++k) {
      if (coords[static_cast<size_t>(k)].is_zero()) continue;
      for (long r = 0; r < n0; ++r)
        for (long c = 0; c < n0; ++c) {
          DvrScalar v = ctx.m0.act[static_cast<size_t>(k)].at(r, c);
          v *= coords[static_cast<size_t>(k)];
          op.at(r, c) += v;
        }
    }
    s.source_var_actions.push_back(op);
  }
  s.source_var_actions.push_back(OMatrix(mem.a.p, n0, n0));
  return s;
}

}  // namespace detail

struct LawInfo {
  const char* id;
  const char* summary;
};

inline const std::vector<LawInfo>& law_table() {
  static const std::vector<LawInfo> t = {
      {"L1", "membership equivalences: kernel, hom, and eigenspace ranks agree"},
      {"L2", "regularity is equivalent to vanishing of both lengths"},
      {"L3", "the congruence map is injective on every member"},
      {"L4", "pairing bounds: eta <= psi <= rank * eta, equality at rank one"},
      {"L5", "surjection invariance of the fiber congruence module"},
      {"L6", "defect decomposition: delta(M) = rank * delta(A) + kernel length"},
      {"L7", "freeness length certificate on known splittings"},
      {"L8", "isomorphism criteria gating under hypothesis tags"},
      {"L9", "deformation length bookkeeping along regular elements"},
      {"L10", "defect bookkeeping: delta = rank * phi - psi"},
      {"L11", "complete intersections have zero defect; glued products do not"},
      {"L12", "descent identities between fiber and base invariants"},
  };
  return t;
}

namespace detail {

using LawBody = std::function<MemberOutcome(const CorpusMember&, uint64_t)>;

inline MemberOutcome law1(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  C0Core core = c0_core(ctx.f.p, ctx.m0.rank, shifted_basis_ops(ctx.f, ctx.m0));
  assert_member_core(core);
  if (core.mu != core.hom_rank) return law_fail("kernel and hom ranks differ");
  if (core.mu != core.rank_lambda) return law_fail("kernel and eigenspace ranks differ");
  if (!fiber_cotangent(ctx.f).is_torsion()) return law_fail("fiber cotangent has free part");
  return law_pass();
}

inline MemberOutcome law2(const CorpusMember& mem, uint64_t) {
  if (mem.kind != ModuleKind::Regular) return law_skip();
  MemberContext ctx = member_context(mem);
  InvariantReport r = congruence_module(ctx);
  bool cert = regular_certificate(mem.a).has_value();
  if (cert != mem.expect_regular)
    return law_fail("regularity certificate disagrees with the construction");
  if ((r.phi_length == 0) != cert) return law_fail("phi = 0 does not match regularity");
  if ((r.psi_length == 0) != cert) return law_fail("psi = 0 does not match regularity");
  return law_pass();
}

inline MemberOutcome law3(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  C0Core core = c0_core(ctx.f.p, ctx.m0.rank, shifted_basis_ops(ctx.f, ctx.m0));
  if (!core.injective) return law_fail("congruence map dropped rank");
  congruence_module(ctx);  // the descent path re-asserts injectivity
  return law_pass();
}

inline MemberOutcome law4(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  InvariantReport r = congruence_module(ctx);
  auto bounds = [](std::optional<long> eta, long psi, long rank) -> std::optional<std::string> {
    if (!eta) {
      if (psi != 0 || rank != 0) return "missing eta on a nonzero module";
      return std::nullopt;
    }
    if (!(*eta <= psi)) return "eta exceeds psi";
    if (!(psi <= rank * *eta)) return "psi exceeds rank * eta";
    if (rank == 1 && psi != *eta) return "rank one without equality";
    return std::nullopt;
  };
  if (auto w = bounds(r.eta_valuation, r.psi_length, r.rank_lambda)) return law_fail(*w);
  if (r.fiber)
    if (auto w = bounds(r.fiber->eta_valuation, r.fiber->psi_length, r.fiber->rank_lambda))
      return law_fail("fiber: " + *w);
  return law_pass();
}

inline MemberOutcome law5(const CorpusMember& mem, uint64_t salt) {
  if (mem.kind != ModuleKind::Regular || mem.a.vars.fiber_count() == 0) return law_skip();
  SplitMix64 rng(salt);
  MemberContext ctx = member_context(mem);
  SurjectionToMember s = junk_extension(mem, ctx, rng.range(1, 3));
  InvarianceVerdict v = invariance_check(s, ctx);
  if (!v.equal) return law_fail("fiber congruence module changed across the surjection");
  if (!(v.psi0_source == v.psi0_target)) return law_fail("normal forms differ");
  return law_pass();
}

inline MemberOutcome law6(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  DefectDecomposition dd = defect_decomposition(ctx);
  InvariantReport rm = congruence_module(ctx);
  if (dd.ker_a_length < 0) return law_fail("negative kernel length");
  if (dd.delta_m != rm.rank_lambda * dd.delta_a + dd.ker_a_length)
    return law_fail("defect decomposition identity fails");
  return law_pass();
}

inline MemberOutcome law7(const CorpusMember& mem, uint64_t) {
  if (mem.kind == ModuleKind::RankZero) return law_skip();
  MemberContext ctx = member_context(mem);
  FreenessVerdict v = freeness_check(ctx);
  switch (mem.kind) {
    case ModuleKind::Regular:
      if (!v.certified || v.mu != 1) return law_fail("regular module not certified free");
      break;
    case ModuleKind::FreeSquare:
      if (!v.certified || v.mu != 2) return law_fail("free square not certified with mu = 2");
      break;
    case ModuleKind::IdealP:
    case ModuleKind::Twisted:
      if (v.certified) return law_fail("non-split lattice certified as free");
      break;
    default:
      break;
  }
  return law_pass();
}

inline MemberOutcome law8(const CorpusMember& mem, uint64_t) {
  if (!mem.ci || mem.ci->a.empty() || mem.kind != ModuleKind::Regular) return law_skip();
  const CiParams& par = *mem.ci;
  MemberContext tgt = member_context(mem);

  GeneratedMember re = rescaled_ci_member(par);
  MemberContext src = make_context(re.a, re.L, regular_module(re.L));
  if (!iso_criteria_check(src, tgt, IsoHypothesis::GorensteinPsi).certified)
    return law_fail("rescaled presentation not certified under equal psi");
  if (!iso_criteria_check(src, tgt, IsoHypothesis::CiPhi).certified)
    return law_fail("rescaled presentation not certified under equal phi");

  CiParams bump = par;
  bump.a[0] += 1;
  GeneratedMember other = gen_ci_member(bump);
  MemberContext octx = make_context(other.a, other.L, regular_module(other.L));
  if (iso_criteria_check(octx, tgt, IsoHypothesis::GorensteinPsi).certified)
    return law_fail("distinct lengths incorrectly certified");

  try {
    iso_criteria_check(src, tgt, std::nullopt);
    return law_fail("missing hypothesis tag accepted");
  } catch (const CmodError& e) {
    if (e.kind != ErrKind::HypothesisUntagged) return law_fail("wrong error for missing tag");
  }
  AugmentedAlgebra bare = mem.a;
  bare.flags.clear();
  MemberContext bctx = make_context(bare, mem.L, regular_module(mem.L));
  try {
    iso_criteria_check(bctx, tgt, IsoHypothesis::GorensteinPsi);
    return law_fail("unflagged member accepted under the gorenstein hypothesis");
  } catch (const CmodError& e) {
    if (e.kind != ErrKind::HypothesisUntagged) return law_fail("wrong error for missing flag");
  }
  return law_pass();
}

inline MemberOutcome law9(const CorpusMember& mem, uint64_t salt) {
  if (!mem.ci || mem.ci->c == 0 || mem.kind == ModuleKind::RankZero) return law_skip();
  const CiParams& par = *mem.ci;
  SplitMix64 rng(salt);
  MemberContext ctx = member_context(mem);
  const long nv = mem.a.vars.total();
  // base-variable substitution re-derives the quotient's structure table, which
  // needs a unit leading fiber coefficient; only one-variable members keep one
  const bool a2_ok = mem.kind == ModuleKind::Regular && par.a.size() == 1;

  std::vector<Poly> fs;
  long expected_sum = 0;
  std::vector<long> expected_orders;
  auto elem_a1 = [&](long i) {
    fs.push_back(Poly::var(nv, i));
    expected_orders.push_back(0);
  };
  auto elem_a2 = [&](long i) {
    long k = rng.range(1, 4);
    fs.push_back(Poly::var(nv, i) -
                 Poly::var(nv, par.c) * detail::q_p_pow(par.p, k));
    expected_orders.push_back(0);
  };
  auto elem_b = [&](long i) {
    long k = rng.range(1, 4);
    fs.push_back(Poly::var(nv, i) * detail::q_p_pow(par.p, k));
    expected_orders.push_back(k);
    expected_sum += k;
  };

  if (par.c == 1) {
    long mode = rng.range(0, a2_ok ? 2 : 1);
    if (mode == 0)
      elem_a1(0);
    else if (mode == 1)
      elem_b(0);
    else
      elem_a2(0);
  } else {
    long mode = rng.range(0, a2_ok ? 3 : 1);
    if (mode == 0) {
      elem_a1(0);
      elem_b(1);
    } else if (mode == 1) {
      elem_a1(0);
      elem_a1(1);
    } else if (mode == 2) {
      elem_a2(0);
      elem_b(1);
    } else {
      elem_a2(0);
      elem_a2(1);
    }
  }

  DeformResult dr = deform(ctx, fs);
  if (dr.step.orders != expected_orders) return law_fail("order ideals disagree with the draw");
  if (dr.step.sum_ord != expected_sum) return law_fail("order sum disagrees with the draw");
  if (dr.after.phi_length != dr.before.phi_length + expected_sum)
    return law_fail("cotangent length did not move by the order sum");
  if (dr.after.psi_length !=
      dr.before.psi_length + dr.before.rank_lambda * expected_sum)
    return law_fail("congruence length did not move by rank times the order sum");
  if (dr.after.rank_lambda != dr.before.rank_lambda) return law_fail("rank moved");
  if (dr.after.defect != dr.before.defect) return law_fail("defect moved");
  return law_pass();
}

inline MemberOutcome law10(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  InvariantReport r = congruence_module(ctx);
  if (r.defect != r.rank_lambda * r.phi_length - r.psi_length)
    return law_fail("defect is not rank * phi - psi");
  return law_pass();
}

inline MemberOutcome law11(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  InvariantReport r = congruence_module(ctx);
  if (r.defect < 0) return law_fail("negative defect");
  if (mem.kind == ModuleKind::Regular && mem.expect_ci && r.defect != 0)
    return law_fail("complete intersection with nonzero defect");
  if (mem.fiber_product && mem.fp_r >= 2 && mem.kind == ModuleKind::Regular && r.defect <= 0)
    return law_fail("glued product without positive defect");
  if (mem.oracle_phi && r.phi_length != *mem.oracle_phi) return law_fail("phi oracle mismatch");
  if (mem.oracle_psi && r.psi_length != *mem.oracle_psi) return law_fail("psi oracle mismatch");
  if (mem.oracle_defect && r.defect != *mem.oracle_defect)
    return law_fail("defect oracle mismatch");
  return law_pass();
}

inline MemberOutcome law12(const CorpusMember& mem, uint64_t) {
  MemberContext ctx = member_context(mem);
  InvariantReport r = congruence_module(ctx);
  if (!r.fiber) return law_skip();
  const C0Summary& f0 = *r.fiber;
  if (f0.psi_length != r.psi_length + r.rank_lambda * r.coker_length)
    return law_fail("fiber psi does not descend by rank * coker");
  if (f0.phi_length != r.phi_length + r.coker_length)
    return law_fail("fiber phi does not descend by coker");
  if (f0.eta_valuation.has_value() != r.eta_valuation.has_value())
    return law_fail("eta defined on one side only");
  if (r.eta_valuation && *f0.eta_valuation != *r.eta_valuation + r.coker_length)
    return law_fail("fiber eta does not descend by coker");
  if (ctx.cot.module.free_rank != ctx.c)
    return law_fail("cotangent free rank is not the codimension");
  if (!fiber_cotangent(ctx.f).is_torsion()) return law_fail("fiber cotangent not torsion");
  return law_pass();
}

inline LawBody law_body(const std::string& id) {
  if (id == "L1") return law1;
  if (id == "L2") return law2;
  if (id == "L3") return law3;
  if (id == "L4") return law4;
  if (id == "L5") return law5;
  if (id == "L6") return law6;
  if (id == "L7") return law7;
  if (id == "L8") return law8;
  if (id == "L9") return law9;
  if (id == "L10") return law10;
  if (id == "L11") return law11;
  if (id == "L12") return law12;
  fail(ErrKind::Parse, "unknown law id '" + id + "'");
}

template <typename F>
inline std::vector<MemberOutcome> map_members(const Corpus& corpus, F fn) {
  const long n = static_cast<long>(corpus.members.size());
  std::vector<MemberOutcome> out(static_cast<size_t>(n));
  unsigned hw = std::thread::hardware_concurrency();
  long workers = std::max<long>(1, std::min<long>(n, hw ? hw : 1));
  std::atomic<long> next{0};
  auto run = [&]() {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= n) return;
      const CorpusMember& mem = corpus.members[static_cast<size_t>(i)];
      try {
        out[static_cast<size_t>(i)] = fn(mem, static_cast<size_t>(i));
      } catch (const CmodError& e) {
        out[static_cast<size_t>(i)] = {true, std::string(err_name(e.kind)) + ": " + e.what()};
      } catch (const std::exception& e) {
        out[static_cast<size_t>(i)] = {true, std::string("unexpected: ") + e.what()};
      }
    }
  };
  std::vector<std::thread> pool;
  for (long w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace detail

/// Run one law over the corpus.  Members run in parallel; outcomes are merged
/// in input order, so results are deterministic for a fixed seed.
inline LawResult run_law(const std::string& id, const Corpus& corpus) {
  LawResult res;
  res.id = id;
  res.seed = corpus.seed;
  detail::LawBody body = detail::law_body(id);
  auto outs = detail::map_members(corpus, [&](const CorpusMember& mem, size_t i) {
    uint64_t salt = corpus.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
    return body(mem, salt);
  });
  for (size_t i = 0; i < outs.size(); ++i) {
    if (!outs[i].applicable) continue;
    res.samples += 1;
    if (outs[i].failure)
      res.failures.push_back(corpus.members[i].label + ": " + *outs[i].failure);
  }
  return res;
}

/// "L3", "L1,L4", and "L2-L7" forms, comma-separable; ids must exist.
inline std::vector<std::string> parse_law_ids(const std::string& text) {
  auto is_known = [](long n) { return n >= 1 && n <= 12; };
  auto parse_one = [&](const std::string& tok) -> long {
    require(tok.size() >= 2 && (tok[0] == 'L' || tok[0] == 'l'), ErrKind::Parse,
            "law ids look like L1..L12; got '" + tok + "'");
    for (size_t i = 1; i < tok.size(); ++i)
      require(std::isdigit(static_cast<unsigned char>(tok[i])), ErrKind::Parse,
              "law ids look like L1..L12; got '" + tok + "'");
    long n = std::stol(tok.substr(1));
    require(is_known(n), ErrKind::Parse, "unknown law '" + tok + "'");
    return n;
  };
  std::vector<std::string> ids;
  std::vector<bool> seen(13, false);
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (tok.empty()) continue;
    size_t dash = tok.find('-');
    long lo, hi;
    if (dash == std::string::npos) {
      lo = hi = parse_one(tok);
    } else {
      lo = parse_one(tok.substr(0, dash));
      hi = parse_one(tok.substr(dash + 1));
      require(lo <= hi, ErrKind::Parse, "empty law range '" + tok + "'");
    }
    for (long n = lo; n <= hi; ++n)
      if (!seen[static_cast<size_t>(n)]) {
        seen[static_cast<size_t>(n)] = true;
        ids.push_back("L" + std::to_string(n));
      }
  }
  require(!ids.empty(), ErrKind::Parse, "no law ids given");
  return ids;
}

}  // namespace cmodlab
