#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmodlab/lambda_structure.hpp"

namespace cmodlab {

enum class Path { C0Direct, LambdaDescent, KoszulRegular, Ext1Truncated };

inline const char* path_name(Path p) {
  switch (p) {
    case Path::C0Direct: return "C0Direct";
    case Path::LambdaDescent: return "LambdaDescent";
    case Path::KoszulRegular: return "KoszulRegular";
    case Path::Ext1Truncated: return "Ext1Truncated";
  }
  return "?";
}

/// Invariants computed at the fiber (the codimension-zero layer).
struct C0Summary {
  FgOModule psi;                       // normal form of the fiber congruence module
  long psi_length = 0;
  std::optional<long> eta_valuation;   // null iff the pairing image is the zero ideal
  long mu = 0;                         // O-rank of M_0[p_0]
  long nu = 0;                         // O-rank of tf(M_0 / p_0 M_0)
  long rank_lambda = 0;
  long phi_length = 0;                 // torsion length of p_0/p_0^2 from the fiber table

  bool operator==(const C0Summary&) const = default;
};

struct InvariantReport {
  long phi_length = 0;
  long psi_length = 0;
  std::optional<long> eta_valuation;
  long rank_lambda = 0;
  long defect = 0;
  Path path = Path::C0Direct;
  long codim = 0;
  long coker_length = 0;               // length coker(wedge^c iota^*)
  std::optional<C0Summary> fiber;

  bool operator==(const InvariantReport&) const = default;
};

// ---------------------------------------------------------------------------
// Codimension-zero core: joint-kernel / image linear algebra on a set of
// generator action matrices for p_0 acting on M_0 = O^s.
// ---------------------------------------------------------------------------

struct C0Core {
  long p = 0, s = 0;
  OMatrix kernel;   // s x mu, O-basis of M_0[p_0]
  OMatrix images;   // horizontal stack of the generator images, colspan = p_0 M_0
  OMatrix pi;       // nu x s, tf coordinates of M_0 / p_0 M_0
  OMatrix w;        // nu x mu matrix of tf(M_0[p_0]) -> tf(M_0/p_0 M_0)
  FgOModule psi;    // coker of the columns of w
  long mu = 0, nu = 0;
  long hom_rank = 0;  // O-rank of Hom_{A_0}(M_0, O)
  std::optional<long> eta_valuation;
  long rank_lambda = 0;
  bool injective = false;  // w has full column rank over E
};

inline C0Core c0_core(long p, long s, const std::vector<OMatrix>& ops) {
  C0Core c;
  c.p = p;
  c.s = s;
  c.kernel = joint_kernel_basis(ops, p, s);
  c.images = OMatrix(p, s, 0);
  for (const OMatrix& op : ops) c.images = OMatrix::hstack(c.images, op);
  c.pi = tf_projection(c.images);
  c.w = c.pi * c.kernel;
  c.mu = c.kernel.cols();
  c.nu = c.pi.rows();
  c.psi = cokernel_of_columns(c.w);
  c.injective = rank_over_E(c.w) == c.mu;

  // Hom_{A_0}(M_0, O): functionals killing p_0 M_0, i.e. the joint kernel of
  // the transposed generator actions.
  std::vector<OMatrix> tops;
  for (const OMatrix& op : ops) tops.push_back(op.transpose());
  OMatrix h = joint_kernel_basis(tops, p, s);
  c.hom_rank = h.cols();

  // eta: image of the evaluation pairing Hom(M_0,O) x M_0[p_0] -> O
  long best = kValInfinity;
  for (long i = 0; i < h.cols(); ++i)
    for (long j = 0; j < c.kernel.cols(); ++j) {
      DvrScalar v = DvrScalar::zero(p);
      for (long k = 0; k < s; ++k) v += h.at(k, i) * c.kernel.at(k, j);
      best = std::min(best, v.valuation());
    }
  if (best != kValInfinity) c.eta_valuation = best;

  std::vector<QMatrix> qops;
  for (const OMatrix& op : ops) qops.push_back(QMatrix::from(op));
  c.rank_lambda = joint_generalized_kernel_dim(qops, s);
  return c;
}

/// Generator actions of p_0 from the basis elements: act(e_i) - lambda(e_i).
inline std::vector<OMatrix> shifted_basis_ops(const FiberAlgebra& f, const FiberModule& m) {
  std::vector<OMatrix> ops;
  for (long i = 1; i < f.rank; ++i) {
    OMatrix op = m.act[static_cast<size_t>(i)];
    if (!f.aug[static_cast<size_t>(i)].is_zero())
      for (long d = 0; d < m.rank; ++d) op.at(d, d) -= f.aug[static_cast<size_t>(i)];
    ops.push_back(op);
  }
  return ops;
}

/// Generator actions of p_0 from the fiber variables (an equivalent generating
/// set; used where the presentation, not the basis, is the reference).
inline std::vector<OMatrix> fiber_var_ops(const FiberAlgebra& f, const FiberModule& m) {
  std::vector<OMatrix> ops;
  for (const auto& coords : f.embed0) {
    OMatrix op(f.p, m.rank, m.rank);
    DvrScalar shift = DvrScalar::zero(f.p);
    for (long k = 0; k < f.rank; ++k) {
      const DvrScalar& ck = coords[static_cast<size_t>(k)];
      if (ck.is_zero()) continue;
      shift += ck * f.aug[static_cast<size_t>(k)];
      for (long u = 0; u < m.rank; ++u)
        for (long v = 0; v < m.rank; ++v) op.at(u, v) += ck * m.act[static_cast<size_t>(k)].at(u, v);
    }
    if (!shift.is_zero())
      for (long d = 0; d < m.rank; ++d) op.at(d, d) -= shift;
    ops.push_back(op);
  }
  return ops;
}

/// Cotangent module p_0/p_0^2 of the fiber computed from the structure table:
/// p_0 = ker(lambda_0) with its O-basis, p_0^2 spanned by pairwise products.
inline FgOModule fiber_cotangent(const FiberAlgebra& f) {
  const long r = f.rank;
  if (r == 1) return FgOModule{0, {}};
  OMatrix lam(f.p, 1, r);
  for (long i = 0; i < r; ++i) lam.at(0, i) = f.aug[static_cast<size_t>(i)];
  OMatrix basis = kernel_basis(lam);  // r x (r-1), saturated
  std::vector<OMatrix> shifted;
  for (long i = 1; i < r; ++i) {
    OMatrix op = f.mult_op[static_cast<size_t>(i)];
    if (!f.aug[static_cast<size_t>(i)].is_zero())
      for (long d = 0; d < r; ++d) op.at(d, d) -= f.aug[static_cast<size_t>(i)];
    shifted.push_back(op);
  }
  OMatrix rows(f.p, 0, basis.cols());
  for (const OMatrix& op : shifted) {
    OMatrix prod = op * basis;  // columns lie in p_0^2 (in particular in p_0)
    auto y = solve_in_O(basis, prod);
    require(y.has_value(), ErrKind::InconsistentStructure, "fiber product escaped the augmentation kernel");
    rows = OMatrix::vstack(rows, y->transpose());
  }
  return module_from_presentation(rows);
}

/// Hard internal checks every category-member computation must satisfy.
inline void assert_member_core(const C0Core& c) {
  require(c.injective, ErrKind::Computation,
          "internal check failed: congruence matrix does not have full column rank");
  require(c.psi.free_rank == 0, ErrKind::Computation,
          "internal check failed: fiber congruence module has a free part");
  require(c.mu == c.hom_rank, ErrKind::Computation,
          "internal check failed: rank of M_0[p_0] differs from rank of Hom(M_0, O)");
  require(c.mu == c.rank_lambda, ErrKind::Computation,
          "internal check failed: rank of M_0[p_0] differs from the module rank at lambda");
}

inline C0Summary summarize_c0(const C0Core& core, const FiberAlgebra& f) {
  C0Summary s;
  s.psi = core.psi;
  s.psi_length = core.psi.torsion_length();
  s.eta_valuation = core.eta_valuation;
  s.mu = core.mu;
  s.nu = core.nu;
  s.rank_lambda = core.rank_lambda;
  s.phi_length = fiber_cotangent(f).torsion_length();
  return s;
}

/// Direct codimension-zero computation on fiber data (the c = 0 member path).
inline InvariantReport c0_invariants(const FiberAlgebra& f, const FiberModule& m) {
  FgOModule cot0 = fiber_cotangent(f);
  require(cot0.free_rank == 0, ErrKind::NotInCategory,
          "fiber cotangent module has positive free rank; not a codimension-zero member");
  C0Core core = c0_core(f.p, m.rank, shifted_basis_ops(f, m));
  assert_member_core(core);
  InvariantReport r;
  r.path = Path::C0Direct;
  r.codim = 0;
  r.phi_length = cot0.torsion_length();
  r.psi_length = core.psi.length();
  r.eta_valuation = core.eta_valuation;
  r.rank_lambda = core.rank_lambda;
  r.defect = r.rank_lambda * r.phi_length - r.psi_length;
  r.fiber = summarize_c0(core, f);
  return r;
}

// ---------------------------------------------------------------------------
// Member context: one validated bundle (A, L, M) ready for the pipelines.
// ---------------------------------------------------------------------------

struct MemberContext {
  AugmentedAlgebra a;
  LambdaStructure L;
  LambdaModule m;
  FiberAlgebra f;
  FiberModule m0;
  long c = 0;
  CotangentData cot;
  WedgeData wedge;
};

inline MemberContext make_context(const AugmentedAlgebra& a, const LambdaStructure& L, const LambdaModule& m) {
  MemberContext ctx;
  ctx.a = a;
  ctx.L = L;
  ctx.m = m;
  ConsistencyReport cr = consistency_check(a, L);
  require(cr.pass, ErrKind::InconsistentStructure, cr.witness);
  ctx.f = fiber_algebra(L);
  ctx.m0 = fiber_module(L, m);
  ctx.c = membership_check(a, &ctx.f);
  ctx.cot = cotangent(a);
  ctx.wedge = wedge_iota_star(a, ctx.cot);
  return ctx;
}

/// Context with the structure table derived from the presentation and M = A.
inline MemberContext make_regular_context(const AugmentedAlgebra& a, long trunc) {
  LambdaStructure L = derive_lambda_structure(a, trunc);
  return make_context(a, L, regular_module(L));
}

/**
 * Primary pipeline: the congruence module of M, computed at the fiber and
 * carried down the base by the descent identities
 *   len Psi(M) = len Psi_0(M_0) - rank * len coker(wedge^c iota^*)
 *   val eta(M) = val eta_0(M_0) -        len coker(wedge^c iota^*).
 */
inline InvariantReport congruence_module(const MemberContext& ctx) {
  C0Core core = c0_core(ctx.f.p, ctx.m0.rank, shifted_basis_ops(ctx.f, ctx.m0));
  assert_member_core(core);
  InvariantReport r;
  r.codim = ctx.c;
  r.path = ctx.c == 0 ? Path::C0Direct : Path::LambdaDescent;
  r.coker_length = ctx.wedge.coker_length;
  r.phi_length = ctx.cot.module.torsion_length();
  r.rank_lambda = core.rank_lambda;
  long psi0 = core.psi.length();
  r.psi_length = psi0 - r.rank_lambda * r.coker_length;
  require(r.psi_length >= 0, ErrKind::NegativeLength,
          "descent arithmetic produced a negative congruence-module length");
  if (core.eta_valuation) {
    long e = *core.eta_valuation - r.coker_length;
    require(e >= 0, ErrKind::NegativeLength, "descent arithmetic produced a negative eta valuation");
    r.eta_valuation = e;
  }
  r.defect = r.rank_lambda * r.phi_length - r.psi_length;
  r.fiber = summarize_c0(core, ctx.f);
  return r;
}

inline long defect_identity(const InvariantReport& r) { return r.rank_lambda * r.phi_length - r.psi_length; }

// ---------------------------------------------------------------------------
// Koszul path for certified-regular algebras.
// ---------------------------------------------------------------------------

inline long binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (long i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

/**
 * Ext^i_A(O, M) from the Koszul complex on a generating regular sequence of
 * Ker(lambda), available when the presentation carries a regularity
 * certificate.  M is either O via lambda (m0 == nullptr) or a Lambda-free
 * module given by fiber data.
 */
inline FgOModule koszul_ext(const AugmentedAlgebra& a, const FiberAlgebra* f, const FiberModule* m0, long i) {
  auto cert = regular_certificate(a);
  require(cert.has_value(), ErrKind::NotRegularCase,
          "no regularity certificate: Ker(lambda) is not presented by a regular sequence");
  const long q = a.vars.total() - static_cast<long>(a.relations.size());  // length of the sequence
  require(i >= 0, ErrKind::Computation, "negative cohomological degree");
  if (m0 == nullptr) {
    // M = O: the sequence acts by zero, so all differentials vanish
    return FgOModule::free(binomial(q, i));
  }
  require(f != nullptr, ErrKind::Computation, "fiber algebra required with module data");
  if (i > q) return FgOModule{0, {}};
  if (q == 0) return FgOModule::free(m0->rank);  // A = O itself; Ext^0 = M
  if (i < q) return FgOModule{0, {}};            // M free over the regular A
  // top cohomology: M/(sequence)M = M_0 / (fiber variables) M_0
  std::vector<OMatrix> xops = fiber_var_ops(*f, *m0);
  OMatrix images(f->p, m0->rank, 0);
  for (const OMatrix& op : xops) images = OMatrix::hstack(images, op);
  return module_from_presentation(images.transpose());
}

/**
 * Independent cross-check path for certified-regular members: verifies that
 * the fiber variables span p_0 M_0, that the top Koszul cohomology has
 * torsion-free rank equal to rank_lambda, and that the cotangent module is
 * torsion-free — then reports the provably vanishing invariants.
 */
inline InvariantReport koszul_regular_report(const MemberContext& ctx) {
  auto cert = regular_certificate(ctx.a);
  require(cert.has_value(), ErrKind::NotRegularCase,
          "no regularity certificate: Ker(lambda) is not presented by a regular sequence");
  C0Core core = c0_core(ctx.f.p, ctx.m0.rank, shifted_basis_ops(ctx.f, ctx.m0));
  assert_member_core(core);

  // the fiber variables and the shifted basis elements generate the same ideal
  std::vector<OMatrix> xops = fiber_var_ops(ctx.f, ctx.m0);
  OMatrix ximages(ctx.f.p, ctx.m0.rank, 0);
  for (const OMatrix& op : xops) ximages = OMatrix::hstack(ximages, op);
  require(colspan_contains(core.images, ximages) && colspan_contains(ximages, core.images),
          ErrKind::Computation, "regular-sequence images do not span p_0 M_0");

  FgOModule top = koszul_ext(ctx.a, &ctx.f, &ctx.m0, ctx.a.vars.total() - static_cast<long>(ctx.a.relations.size()));
  require(top.free_rank == core.rank_lambda, ErrKind::Computation,
          "top Koszul cohomology rank disagrees with the module rank at lambda");
  require(ctx.cot.module.torsion_length() == 0, ErrKind::Computation,
          "certified-regular algebra has cotangent torsion");

  InvariantReport r;
  r.codim = ctx.c;
  r.path = Path::KoszulRegular;
  r.coker_length = ctx.wedge.coker_length;
  r.phi_length = 0;
  r.psi_length = 0;
  r.eta_valuation = 0;
  r.rank_lambda = core.rank_lambda;
  r.defect = 0;
  r.fiber = summarize_c0(core, ctx.f);
  return r;
}

// ---------------------------------------------------------------------------
// Deformation: quotient by a regular sequence in Ker(lambda).
// ---------------------------------------------------------------------------

struct DeformationStep {
  std::vector<Poly> elements;  // in the original variable table
  std::vector<long> orders;
  long sum_ord = 0;
};

struct DeformResult {
  InvariantReport before, after;
  DeformationStep step;
  AugmentedAlgebra quotient;
  std::optional<LambdaStructure> quotient_lambda;  // absent after a p^k t quotient
};

namespace detail {

/// Remove variable idx from a polynomial in which it no longer appears.
inline Poly drop_var(const Poly& f, long idx) {
  Poly r(f.nvars() - 1);
  for (const auto& [m, c] : f.terms()) {
    require(m[static_cast<size_t>(idx)] == 0, ErrKind::Computation, "variable still present while dropping");
    Mono m2;
    m2.reserve(m.size() - 1);
    for (size_t i = 0; i < m.size(); ++i)
      if (static_cast<long>(i) != idx) m2.push_back(m[i]);
    r.add_term(m2, c);
  }
  return r;
}

inline Poly subst_drop(const Poly& f, long idx, const Poly& value) { return drop_var(f.substitute(idx, value), idx); }

/// Substitute base variable j := value and remove it from the presentation.
inline AugmentedAlgebra substitute_lambda_var(const AugmentedAlgebra& a, long j, const Poly& value) {
  AugmentedAlgebra b;
  b.p = a.p;
  b.flags = a.flags;
  b.vars.names = a.vars.names;
  b.vars.names.erase(b.vars.names.begin() + j);
  b.vars.lambda_count = a.vars.lambda_count - 1;
  for (const Poly& f : a.relations) {
    Poly g = subst_drop(f, j, value);
    if (!g.is_zero()) b.relations.push_back(g);
  }
  validate_algebra(b);
  return b;
}

/// Specialize the structure table at t_j := 0 (all data polynomials reindex).
inline LambdaStructure specialize_structure(const LambdaStructure& L, long j) {
  LambdaStructure r;
  r.p = L.p;
  r.rank = L.rank;
  r.trunc = L.trunc;
  r.basis = L.basis;
  r.aug = L.aug;
  r.vars.names = L.vars.names;
  r.vars.names.erase(r.vars.names.begin() + j);
  r.vars.lambda_count = L.vars.lambda_count - 1;
  Poly zero(L.vars.total());
  auto conv = [&](const Poly& f) { return subst_drop(f, j, zero); };
  for (const auto& row : L.mult) {
    std::vector<LVec> nrow;
    for (const auto& v : row) {
      LVec nv;
      for (const auto& pl : v) nv.push_back(conv(pl));
      nrow.push_back(nv);
    }
    r.mult.push_back(nrow);
  }
  for (const auto& v : L.embed) {
    LVec nv;
    for (const auto& pl : v) nv.push_back(conv(pl));
    r.embed.push_back(nv);
  }
  return r;
}

inline LambdaModule specialize_module(const LambdaModule& m, long j, long nvars_old) {
  LambdaModule r;
  r.name = m.name;
  r.rank = m.rank;
  Poly zero(nvars_old);
  for (const auto& mat : m.act) {
    std::vector<std::vector<Poly>> nmat;
    for (const auto& row : mat) {
      std::vector<Poly> nrow;
      for (const auto& pl : row) nrow.push_back(subst_drop(pl, j, zero));
      nmat.push_back(nrow);
    }
    r.act.push_back(nmat);
  }
  return r;
}

inline bool is_regular_module(const LambdaStructure& L, const LambdaModule& m) {
  if (m.rank != L.rank) return false;
  LambdaModule reg = regular_module(L);
  for (size_t i = 0; i < reg.act.size(); ++i)
    for (size_t u = 0; u < reg.act[i].size(); ++u)
      for (size_t v = 0; v < reg.act[i][u].size(); ++v)
        if (!(reg.act[i][u][v] == m.act[i][u][v])) return false;
  return true;
}

struct ElementShape {
  int kind = 0;  // 1: t_j, 2: t_j - p^k x_l, 3: p^k t_j
  long j = 0;    // base-variable index
  long k = 0;    // valuation for kinds 2 and 3
  Poly value;    // substitution value for kinds 1 and 2
};

inline ElementShape classify_element(const AugmentedAlgebra& a, const Poly& f) {
  const auto& terms = f.terms();
  auto bad = [&]() -> ElementShape {
    fail(ErrKind::NotRegularElement,
         "unsupported deformation element '" + f.str(a.vars) +
             "': expected a form u*t, u*t - p^k*x, or p^k*t");
  };
  auto linear_var = [&](const Mono& m) -> long {
    if (mono_degree(m) != 1) return -1;
    for (size_t i = 0; i < m.size(); ++i)
      if (m[i]) return static_cast<long>(i);
    return -1;
  };
  if (terms.size() == 1) {
    long v = linear_var(terms.begin()->first);
    if (v < 0 || v >= a.vars.lambda_count) return bad();
    DvrScalar c = DvrScalar::from_mpq(a.p, terms.begin()->second);
    ElementShape s;
    s.j = v;
    if (c.valuation() == 0) {
      s.kind = 1;
      s.value = Poly(a.vars.total());
    } else {
      s.kind = 3;
      s.k = c.valuation();
    }
    return s;
  }
  if (terms.size() == 2) {
    long vt = -1, vx = -1;
    mpq_class ct, cx;
    for (const auto& [m, c] : terms) {
      long v = linear_var(m);
      if (v < 0) return bad();
      if (v < a.vars.lambda_count) {
        vt = v;
        ct = c;
      } else {
        vx = v;
        cx = c;
      }
    }
    if (vt < 0 || vx < 0) return bad();
    DvrScalar st = DvrScalar::from_mpq(a.p, ct), sx = DvrScalar::from_mpq(a.p, cx);
    if (st.valuation() != 0 || sx.valuation() < 1) return bad();
    ElementShape s;
    s.kind = 2;
    s.j = vt;
    s.k = sx.valuation();
    s.value = Poly::var(a.vars.total(), vx) * (-cx / ct);
    return s;
  }
  return bad();
}

}  // namespace detail

/**
 * Quotient (A, M) by a sequence of elements of Ker(lambda) with independent
 * cotangent residues, recompute all invariants on the quotient, and verify the
 * deformation identities
 *   len Phi(A/f) = len Phi(A) + sum ord(f_i)
 *   len Psi(M/f) = len Psi(M) + rank * sum ord(f_i)
 *   defect unchanged.
 */
inline DeformResult deform(const MemberContext& ctx, const std::vector<Poly>& fs) {
  require(!fs.empty(), ErrKind::Computation, "empty deformation sequence");
  require(static_cast<long>(fs.size()) <= ctx.c, ErrKind::DependentResidues,
          "more deformation elements than the codimension");
  DeformResult out;
  out.before = congruence_module(ctx);
  out.step.elements = fs;

  // shape check up front, against the original presentation
  for (const Poly& f : fs) (void)detail::classify_element(ctx.a, f);

  for (const Poly& f : fs) {
    long o = order_of(ctx.cot, ctx.a, f);
    out.step.orders.push_back(o);
    out.step.sum_ord += o;
  }

  // independence of the residues in tf(p/p^2)
  OMatrix stacked(ctx.a.p, 0, ctx.c);
  for (const Poly& f : fs)
    stacked = OMatrix::vstack(stacked, residue_tf_coords(ctx.cot, ctx.a, f).transpose());
  require(rank_over_E(stacked) == static_cast<long>(fs.size()), ErrKind::DependentResidues,
          "deformation residues are O-linearly dependent in p/p^2");

  // apply the elements in sequence
  AugmentedAlgebra cur_a = ctx.a;
  LambdaStructure cur_L = ctx.L;
  LambdaModule cur_m = ctx.m;
  std::vector<Poly> pending(fs);
  std::optional<std::pair<long, long>> shape_b;  // (variable index, exponent)
  for (size_t step = 0; step < pending.size(); ++step) {
    require(!shape_b.has_value(), ErrKind::NotRegularElement,
            "a p^k t element must come last in the deformation sequence");
    detail::ElementShape sh = detail::classify_element(cur_a, pending[step]);
    if (sh.kind == 3) {
      require(cur_a.codim() == 1, ErrKind::NotRegularElement,
              "p^k t deformations are supported only in codimension 1");
      shape_b = std::make_pair(sh.j, sh.k);
      continue;
    }
    if (sh.kind == 2) {
      require(detail::is_regular_module(cur_L, cur_m), ErrKind::Computation,
              "t - p^k x deformations are supported for M = A only");
      cur_a = detail::substitute_lambda_var(cur_a, sh.j, sh.value);
      cur_L = derive_lambda_structure(cur_a, cur_L.trunc);
      ConsistencyReport cr = consistency_check(cur_a, cur_L);
      require(cr.pass, ErrKind::InconsistentStructure, cr.witness);
      cur_m = regular_module(cur_L);
    } else {
      cur_a = detail::substitute_lambda_var(cur_a, sh.j, sh.value);
      long nv_old = cur_L.vars.total();
      cur_L = detail::specialize_structure(cur_L, sh.j);
      cur_m = detail::specialize_module(cur_m, sh.j, nv_old);
    }
    // rewrite the remaining elements through the substitution
    for (size_t rest = step + 1; rest < pending.size(); ++rest)
      pending[rest] = detail::subst_drop(pending[rest], sh.j, sh.value);
  }

  if (!shape_b) {
    MemberContext qctx = make_context(cur_a, cur_L, cur_m);
    out.after = congruence_module(qctx);
    out.quotient = cur_a;
    out.quotient_lambda = cur_L;
  } else {
    // quotient by p^k t: t survives as a presentation variable with the extra
    // relation p^k t; the quotient leaves the category, so the after-report is
    // derived at the fiber of the current member
    auto [j, k] = *shape_b;
    MemberContext mctx = make_context(cur_a, cur_L, cur_m);
    C0Core core = c0_core(mctx.f.p, mctx.m0.rank, shifted_basis_ops(mctx.f, mctx.m0));
    assert_member_core(core);
    AugmentedAlgebra q = cur_a;
    q.relations.push_back(Poly::var(q.vars.total(), j) * mpq_class(DvrScalar::p_pow(q.p, k).value()));
    q.vars.lambda_count = 0;  // the base variable becomes an ordinary one
    out.quotient = q;

    // the quotient has p-torsion, so no fiber summary is reported for it; the
    // lengths follow from M[p_q] = p^k * (lifts of M_0[p_0])
    InvariantReport r;
    r.codim = 0;
    r.path = Path::C0Direct;
    r.phi_length = cotangent(q).module.torsion_length();
    r.psi_length = core.psi.length() + k * core.mu;
    if (core.eta_valuation) r.eta_valuation = *core.eta_valuation + k;
    r.rank_lambda = core.rank_lambda;
    r.defect = r.rank_lambda * r.phi_length - r.psi_length;
    out.after = r;
  }

  require(out.after.phi_length == out.before.phi_length + out.step.sum_ord, ErrKind::Computation,
          "deformation identity failed for the cotangent torsion length");
  require(out.after.psi_length == out.before.psi_length + out.before.rank_lambda * out.step.sum_ord,
          ErrKind::Computation, "deformation identity failed for the congruence-module length");
  require(out.after.rank_lambda == out.before.rank_lambda, ErrKind::Computation,
          "deformation changed the module rank at lambda");
  require(out.after.defect == out.before.defect, ErrKind::Computation, "deformation changed the defect");
  return out;
}

// ---------------------------------------------------------------------------
// Derived certificates: defect decomposition, freeness, isomorphism criteria,
// invariance under surjections.
// ---------------------------------------------------------------------------

struct DefectDecomposition {
  long delta_a = 0;
  long delta_m = 0;
  long ker_a_length = 0;
};

/// delta(M) = rank(M) * delta(A) + len ker(a_lambda); the kernel length is
/// rank(M) * len Psi(A) - len Psi(M) and must be nonnegative.
inline DefectDecomposition defect_decomposition(const MemberContext& ctx) {
  InvariantReport rm = congruence_module(ctx);
  MemberContext actx = make_context(ctx.a, ctx.L, regular_module(ctx.L));
  InvariantReport ra = congruence_module(actx);
  require(ra.rank_lambda == 1, ErrKind::Computation, "regular module must have rank 1 at lambda");
  DefectDecomposition d;
  d.delta_a = ra.defect;
  d.delta_m = rm.defect;
  d.ker_a_length = rm.rank_lambda * ra.psi_length - rm.psi_length;
  require(d.ker_a_length >= 0, ErrKind::NegativeKernel,
          "negative kernel length in the defect decomposition");
  require(d.delta_m == rm.rank_lambda * d.delta_a + d.ker_a_length, ErrKind::Computation,
          "defect decomposition identity failed");
  return d;
}

struct FreenessVerdict {
  bool certified = false;
  long mu = 0;  // rank at lambda; the certified free-summand multiplicity
};

/// Length criterion for M = A^mu + (lambda-torsion): len Psi(M) = mu * len Psi(A).
inline FreenessVerdict freeness_check(const MemberContext& ctx) {
  InvariantReport rm = congruence_module(ctx);
  MemberContext actx = make_context(ctx.a, ctx.L, regular_module(ctx.L));
  InvariantReport ra = congruence_module(actx);
  FreenessVerdict v;
  v.mu = rm.rank_lambda;
  v.certified = rm.psi_length == rm.rank_lambda * ra.psi_length;
  return v;
}

enum class IsoHypothesis { GorensteinPsi, CiPhi };

struct IsoVerdict {
  bool certified = false;
  std::string detail;
};

/**
 * Isomorphism criterion for a caller-supplied surjection between two members
 * sharing the base: under the Gorenstein hypothesis equal Psi certifies, under
 * the complete-intersection hypothesis equal Phi certifies.  The hypotheses
 * are flags on the inputs; an untagged or mistagged call is rejected.
 */
inline IsoVerdict iso_criteria_check(const MemberContext& source, const MemberContext& target,
                                     std::optional<IsoHypothesis> tag) {
  require(tag.has_value(), ErrKind::HypothesisUntagged,
          "surjection must carry a hypothesis tag (gorenstein-psi or ci-phi)");
  require(source.c == target.c, ErrKind::NotInCategory, "algebras have different codimension");
  IsoVerdict v;
  if (*tag == IsoHypothesis::GorensteinPsi) {
    require(source.a.has_flag("gorenstein") && target.a.has_flag("gorenstein"), ErrKind::HypothesisUntagged,
            "gorenstein-psi hypothesis requires the gorenstein flag on both algebras");
    long s = congruence_module(source).psi_length;
    long t = congruence_module(target).psi_length;
    v.certified = s == t;
    v.detail = "psi " + std::to_string(s) + " vs " + std::to_string(t);
  } else {
    require(source.a.has_flag("ci") && target.a.has_flag("ci"), ErrKind::HypothesisUntagged,
            "ci-phi hypothesis requires the ci flag on both algebras");
    long s = congruence_module(source).phi_length;
    long t = congruence_module(target).phi_length;
    v.certified = s == t;
    v.detail = "phi " + std::to_string(s) + " vs " + std::to_string(t);
  }
  return v;
}

/// A surjection from a presented algebra onto the member that owns a module:
/// each source fiber variable acts on M'_0 through its image.
struct SurjectionToMember {
  AugmentedAlgebra source;
  std::vector<OMatrix> source_var_actions;  // one per source fiber variable
};

struct InvarianceVerdict {
  bool equal = false;
  InvariantReport via_source, via_target;
  FgOModule psi0_source, psi0_target;  // fiber congruence modules, compared as normal forms
};

/**
 * The congruence module of M' does not depend on whether it is computed over
 * its own algebra or over a member surjecting onto it.  Both sides are
 * computed independently (the source side through the action matrices of the
 * source variables) and compared as normal forms at the fiber.
 */
inline InvarianceVerdict invariance_check(const SurjectionToMember& s, const MemberContext& target) {
  validate_algebra(s.source);
  require(static_cast<long>(s.source_var_actions.size()) == s.source.vars.fiber_count(), ErrKind::IllFormedMap,
          "need one action matrix per source fiber variable");
  long cs = membership_check(s.source, nullptr);
  require(cs == target.c, ErrKind::NotInCategory, "source and target have different codimension");

  InvarianceVerdict v;
  v.via_target = congruence_module(target);

  C0Core core = c0_core(s.source.p, target.m0.rank, s.source_var_actions);
  assert_member_core(core);
  CotangentData cot = cotangent(s.source);
  WedgeData wedge = wedge_iota_star(s.source, cot);
  InvariantReport r;
  r.codim = cs;
  r.path = cs == 0 ? Path::C0Direct : Path::LambdaDescent;
  r.coker_length = wedge.coker_length;
  r.phi_length = cot.module.torsion_length();
  r.rank_lambda = core.rank_lambda;
  r.psi_length = core.psi.length() - r.rank_lambda * r.coker_length;
  require(r.psi_length >= 0, ErrKind::NegativeLength, "descent arithmetic produced a negative length");
  if (core.eta_valuation) r.eta_valuation = *core.eta_valuation - r.coker_length;
  r.defect = r.rank_lambda * r.phi_length - r.psi_length;
  v.via_source = r;  // no fiber summary: the source has no structure table

  v.psi0_source = core.psi;
  v.psi0_target = v.via_target.fiber->psi;
  v.equal = v.via_source.psi_length == v.via_target.psi_length &&
            v.via_source.eta_valuation == v.via_target.eta_valuation &&
            v.via_source.rank_lambda == v.via_target.rank_lambda && v.psi0_source == v.psi0_target;
  return v;
}

}  // namespace cmodlab
