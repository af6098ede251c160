#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "cmodlab/dvr.hpp"
#include "cmodlab/error.hpp"
#include "cmodlab/invariants.hpp"
#include "cmodlab/lambda_structure.hpp"
#include "cmodlab/matrix.hpp"
#include "cmodlab/module.hpp"
#include "cmodlab/poly.hpp"

namespace cmodlab {

/*
 * An independent route to the congruence-module length for codimension-1
 * members, working entirely inside the Artinian model A/(p^N, t^D).
 *
 * A map out of the augmentation ideal I = (t, e_2 - l_2, ..., e_r - l_r) is
 * pinned down by its values w_j on the generators.  Because A is free over
 * the base on the lattice basis, the full syzygy module of the generators is
 * spanned by the commutators t g_j = g_j t together with one block per
 * ordered basis pair (i, j) rewriting e_i * g_j through the structure table:
 *   e_i g_j = tau_ij * t + sum_u T_u g_u,   T = table row for e_i e_j,
 * so the solution set of those blocks is exactly Hom(I, M) in the model.
 * The multiplication-by-m maps M -> Hom(I, M) land inside it, and they die
 * after passing to M/IM, so the cokernel of M -> Hom(I, M) is measured by
 * evaluating solutions at a generator of the free part of I/I^2 and
 * projecting to the free quotient of M/IM.
 *
 * Truncation makes the solver see slightly wrong solution sets near the
 * cutoff degrees, so a level is trusted only when two successive precision
 * levels (N, D) and (N+4, D+4) report the same length.
 */

struct TruncationContext {
  long n = 20;  // scalars are kept modulo p^n
  long d = 8;   // series are cut at degree d in the base variable
};

namespace detail {

/// Canonical representative of a p-integral scalar modulo p^n.
inline DvrScalar reduce_mod_pn(const DvrScalar& s, long p, long n) {
  if (s.valuation() >= n) return DvrScalar::zero(p);
  mpz_class pn;
  mpz_ui_pow_ui(pn.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(n));
  const mpq_class& q = s.value();
  mpz_class inv;
  int ok = mpz_invert(inv.get_mpz_t(), q.get_den().get_mpz_t(), pn.get_mpz_t());
  require(ok != 0, ErrKind::Computation, "scalar is not p-integral in the Artinian model");
  mpz_class r = (q.get_num() * inv) % pn;
  if (r < 0) r += pn;
  return DvrScalar::from_mpq(p, mpq_class(r));
}

/// M/(p^n, t^d) as a finite free O-lattice with explicit operators.
/// Coordinate (u, a) -> u*d + a holds the coefficient of m_u * t^a.
struct ArtinModel {
  long p = 0, n = 0, d = 0;
  long arank = 0, mrank = 0, nm = 0;
  OMatrix shift;                // multiplication by t
  std::vector<OMatrix> basis;   // action of each algebra basis element
  std::vector<OMatrix> gens;    // action of each ideal generator
};

inline ArtinModel artin_model(const MemberContext& ctx, long n, long d) {
  const LambdaStructure& L = ctx.L;
  ArtinModel md;
  md.p = L.p;
  md.n = n;
  md.d = d;
  md.arank = L.rank;
  md.mrank = ctx.m.rank;
  md.nm = md.mrank * d;
  auto red = [&](const mpq_class& q) {
    return reduce_mod_pn(DvrScalar::from_mpq(md.p, q), md.p, n);
  };

  md.shift = OMatrix(md.p, md.nm, md.nm);
  for (long u = 0; u < md.mrank; ++u)
    for (long a = 0; a + 1 < d; ++a)
      md.shift.at(u * d + a + 1, u * d + a) = DvrScalar::one(md.p);

  for (long i = 0; i < md.arank; ++i) {
    OMatrix op(md.p, md.nm, md.nm);
    for (long u = 0; u < md.mrank; ++u)
      for (long v = 0; v < md.mrank; ++v) {
        const Poly& entry = ctx.m.act[static_cast<size_t>(i)][static_cast<size_t>(u)]
                                     [static_cast<size_t>(v)];
        for (const auto& [mono, coeff] : entry.terms()) {
          long a = mono_degree(mono);
          DvrScalar c = red(coeff);
          if (c.is_zero()) continue;
          for (long b = 0; a + b < d; ++b) op.at(u * d + a + b, v * d + b) += c;
        }
      }
    md.basis.push_back(op);
  }

  md.gens.push_back(md.shift);
  for (long i = 1; i < md.arank; ++i) {
    OMatrix op = md.basis[static_cast<size_t>(i)];
    DvrScalar lam = red(L.aug[static_cast<size_t>(i)]);
    for (long t = 0; t < md.nm; ++t) op.at(t, t) -= lam;
    md.gens.push_back(op);
  }
  return md;
}

/// O-basis of the lattice {x : mat*x = 0 modulo p^n}.
inline OMatrix kernel_lattice_mod_pn(const OMatrix& mat, long n) {
  SnfResult s = smith_normal_form(mat);
  OMatrix v = s.v;
  for (long i = 0; i < s.rank(); ++i) {
    long e = s.pivot_exponents[static_cast<size_t>(i)];
    long sc = std::max(n - e, 0L);
    if (sc == 0) continue;
    DvrScalar f = DvrScalar::p_pow(mat.p(), sc);
    for (long r = 0; r < v.rows(); ++r) v.at(r, i) *= f;
  }
  return v;
}

inline OMatrix drop_zero_rows(const OMatrix& m) {
  std::vector<long> keep;
  for (long r = 0; r < m.rows(); ++r) {
    bool nz = false;
    for (long c = 0; c < m.cols() && !nz; ++c) nz = !m.at(r, c).is_zero();
    if (nz) keep.push_back(r);
  }
  OMatrix out(m.p(), static_cast<long>(keep.size()), m.cols());
  for (size_t i = 0; i < keep.size(); ++i)
    for (long c = 0; c < m.cols(); ++c)
      out.at(static_cast<long>(i), c) = m.at(keep[i], c);
  return out;
}

}  // namespace detail

/// Length estimate at one precision level; empty when the level is too
/// coarse to isolate the rank-one free part of I/I^2 or leaves a free
/// contribution in the cokernel.
inline std::optional<long> ext1_level(const MemberContext& ctx, long n, long d) {
  using namespace detail;
  const ArtinModel md = artin_model(ctx, n, d);
  const long r = md.arank, nm = md.nm;

  std::vector<OMatrix> shift_pow;
  {
    OMatrix power = OMatrix::identity(md.p, nm);
    for (long a = 0; a < d; ++a) {
      shift_pow.push_back(power);
      power = md.shift * power;
    }
  }
  auto red = [&](const mpq_class& c) {
    return reduce_mod_pn(DvrScalar::from_mpq(md.p, c), md.p, n);
  };
  // action on the model of a polynomial in the base variable
  auto base_action = [&](const Poly& q) {
    OMatrix acc(md.p, nm, nm);
    for (const auto& [mono, coeff] : q.terms()) {
      for (size_t v = 1; v < mono.size(); ++v)
        require(mono[v] == 0, ErrKind::InconsistentStructure,
                "structure table coordinate is not a base polynomial");
      if (mono[0] >= d) continue;
      DvrScalar c = red(coeff);
      if (c.is_zero()) continue;
      const OMatrix& pw = shift_pow[static_cast<size_t>(mono[0])];
      for (long a = 0; a < nm; ++a)
        for (long b = 0; b < nm; ++b) {
          DvrScalar v = pw.at(a, b);
          v *= c;
          acc.at(a, b) += v;
        }
    }
    return acc;
  };
  auto accumulate = [&](OMatrix& dst, const OMatrix& src, int sign) {
    for (long a = 0; a < nm; ++a)
      for (long b = 0; b < nm; ++b)
        dst.at(a, b) += sign < 0 ? -src.at(a, b) : src.at(a, b);
  };

  // commutator syzygies t*g_j = g_j*t, one per non-unit generator
  std::vector<std::vector<OMatrix>> blocks;
  std::vector<std::vector<DvrScalar>> aug_rows;
  for (long j = 1; j < r; ++j) {
    std::vector<OMatrix> blk(static_cast<size_t>(r), OMatrix(md.p, nm, nm));
    blk[static_cast<size_t>(j)] = md.shift;
    accumulate(blk[0], md.gens[static_cast<size_t>(j)], -1);
    blocks.push_back(std::move(blk));
  }

  // one block per ordered basis pair (i, j): substituting e_u = g_u + a_u
  // into the table row for e_i * e_j gives
  //   e_i g_j = a_j g_i + sum_u T_u g_u + tau g_0,  t * tau = kappa,
  // and kappa(0) = 0 is forced because the augmentation is a ring map
  const long nv = ctx.L.vars.total();
  for (long i = 1; i < r; ++i)
    for (long j = 1; j < r; ++j) {
      const LVec& T = ctx.L.mult[static_cast<size_t>(i)][static_cast<size_t>(j)];
      Poly kappa = T[0];
      for (long u = 1; u < r; ++u)
        kappa += T[static_cast<size_t>(u)] * ctx.L.aug[static_cast<size_t>(u)];
      kappa += Poly::constant(nv, -ctx.L.aug[static_cast<size_t>(i)] *
                                      ctx.L.aug[static_cast<size_t>(j)]);
      require(kappa.constant_term() == 0, ErrKind::InconsistentStructure,
              "structure table is not compatible with the augmentation");
      Poly tau(nv);
      for (const auto& [mono, coeff] : kappa.terms()) {
        require(mono[0] > 0, ErrKind::InconsistentStructure,
                "structure table coordinate is not a base polynomial");
        Mono m = mono;
        --m[0];
        tau.add_term(m, coeff);
      }

      std::vector<OMatrix> blk(static_cast<size_t>(r), OMatrix(md.p, nm, nm));
      std::vector<DvrScalar> row(static_cast<size_t>(r), DvrScalar::zero(md.p));
      accumulate(blk[static_cast<size_t>(j)], md.basis[static_cast<size_t>(i)], +1);
      row[static_cast<size_t>(j)] += red(ctx.L.aug[static_cast<size_t>(i)]);
      DvrScalar aj = red(ctx.L.aug[static_cast<size_t>(j)]);
      for (long a = 0; a < nm; ++a) blk[static_cast<size_t>(i)].at(a, a) += -aj;
      row[static_cast<size_t>(i)] += -aj;
      for (long u = 1; u < r; ++u) {
        const Poly& Tu = T[static_cast<size_t>(u)];
        if (Tu.is_zero()) continue;
        accumulate(blk[static_cast<size_t>(u)], base_action(Tu), -1);
        row[static_cast<size_t>(u)] += -red(Tu.constant_term());
      }
      if (!tau.is_zero()) {
        accumulate(blk[0], base_action(tau), -1);
        row[0] += -red(tau.constant_term());
      }
      for (auto& x : row) x = reduce_mod_pn(x, md.p, n);
      blocks.push_back(std::move(blk));
      aug_rows.push_back(std::move(row));
    }

  OMatrix cons(md.p, static_cast<long>(blocks.size()) * nm, r * nm);
  for (size_t b = 0; b < blocks.size(); ++b)
    for (long j = 0; j < r; ++j)
      for (long a = 0; a < nm; ++a)
        for (long c = 0; c < nm; ++c)
          cons.at(static_cast<long>(b) * nm + a, j * nm + c) =
              blocks[b][static_cast<size_t>(j)].at(a, c);
  cons = drop_zero_rows(cons);
  OMatrix homs = kernel_lattice_mod_pn(cons, n);

  // generator residues in the free part of I/I^2
  OMatrix rel(md.p, static_cast<long>(aug_rows.size()), r);
  for (size_t i = 0; i < aug_rows.size(); ++i)
    for (long j = 0; j < r; ++j) rel.at(static_cast<long>(i), j) = aug_rows[i][static_cast<size_t>(j)];
  OMatrix cot_pi = tf_projection(rel.transpose());
  if (cot_pi.rows() != 1) return std::nullopt;
  long slot = -1;
  for (long j = 0; j < r; ++j)
    if (cot_pi.at(0, j).valuation() == 0) {
      slot = j;
      break;
    }
  if (slot < 0) return std::nullopt;

  // evaluate at the chosen generator and project to the free part of M/IM
  OMatrix images(md.p, nm, 0);
  for (long j = 0; j < r; ++j) images = OMatrix::hstack(images, md.gens[static_cast<size_t>(j)]);
  OMatrix pi = tf_projection(images);
  OMatrix ev = pi * homs.row_slice(slot * nm, (slot + 1) * nm);
  FgOModule q = cokernel_of_columns(ev);
  if (!q.is_torsion()) return std::nullopt;
  return q.torsion_length();
}

struct Ext1Result {
  long length = 0;
  bool stabilized = false;
  long n = 0, d = 0;  // first level of the agreeing pair
};

struct SweepRow {
  long n = 0, d = 0;
  std::optional<long> estimate;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool stabilized = false;
  long length = 0;
  long n = 0, d = 0;
};

/// Run the precision ladder: compare (n, d) against (n+4, d+4) and escalate
/// up to three times.  Never throws on failure to stabilize; callers that
/// need a hard answer use ext1_truncated.
inline SweepResult ext1_sweep(const MemberContext& ctx, TruncationContext tc = {}) {
  require(ctx.c == 1, ErrKind::Computation,
          "the truncated Ext^1 estimator needs exactly one base variable");
  require(tc.n >= 4, ErrKind::Computation, "modulus exponent must be at least 4");
  require(tc.d >= 2, ErrKind::Computation, "degree cutoff must be at least 2");
  SweepResult out;
  long n = tc.n, d = tc.d;
  std::optional<long> prev = ext1_level(ctx, n, d);
  out.rows.push_back({n, d, prev});
  for (int step = 0; step < 4; ++step) {
    std::optional<long> cur = ext1_level(ctx, n + 4, d + 4);
    out.rows.push_back({n + 4, d + 4, cur});
    if (prev && cur && *prev == *cur) {
      out.stabilized = true;
      out.length = *cur;
      out.n = n;
      out.d = d;
      return out;
    }
    n += 4;
    d += 4;
    prev = cur;
  }
  return out;
}

inline Ext1Result ext1_truncated(const MemberContext& ctx, TruncationContext tc = {}) {
  SweepResult s = ext1_sweep(ctx, tc);
  require(s.stabilized, ErrKind::PrecisionExhausted,
          "length estimate did not stabilize after three precision escalations");
  return Ext1Result{s.length, true, s.n, s.d};
}

}  // namespace cmodlab
