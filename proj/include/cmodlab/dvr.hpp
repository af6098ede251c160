#pragma once

#include <gmpxx.h>

#include <cassert>
#include <limits>
#include <string>

#include "cmodlab/error.hpp"

namespace cmodlab {

/// Valuation of the zero element.
constexpr long kValInfinity = std::numeric_limits<long>::max();

/**
 * Exact element of O = Z_(p), the integers localized at a prime p.
 *
 * The value is a rational a/b with p coprime to b; nonzero elements factor
 * uniquely as p^e * u with u a unit of O.  The valuation e is cached next to
 * the rational so pivot searches never re-factor.  Valuations are always
 * >= 0: constructors reject rationals with p in the denominator.
 */
class DvrScalar {
 public:
  DvrScalar() : p_(0), val_(kValInfinity) {}

  static DvrScalar zero(long p) { return DvrScalar(p, mpq_class(0)); }
  static DvrScalar one(long p) { return DvrScalar(p, mpq_class(1)); }

  static DvrScalar from_int(long p, long n) { return DvrScalar(p, mpq_class(n)); }

  static DvrScalar from_mpq(long p, const mpq_class& q) {
    DvrScalar s(p, q);
    require(s.val_ == kValInfinity || s.val_ >= 0, ErrKind::Parse,
            "coefficient " + s.str() + " is not integral at p=" + std::to_string(p));
    return s;
  }

  /// p^e for e >= 0.
  static DvrScalar p_pow(long p, long e) {
    assert(e >= 0);
    mpz_class z;
    mpz_ui_pow_ui(z.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(e));
    return DvrScalar(p, mpq_class(z));
  }

  long p() const { return p_; }
  bool is_zero() const { return val_ == kValInfinity; }
  bool is_unit() const { return val_ == 0; }
  long valuation() const { return val_; }
  const mpq_class& value() const { return v_; }

  /// The unit cofactor u with value == p^val * u; zero for the zero element.
  mpq_class unit() const {
    if (is_zero()) return mpq_class(0);
    mpz_class pe;
    mpz_ui_pow_ui(pe.get_mpz_t(), static_cast<unsigned long>(p_), static_cast<unsigned long>(val_));
    mpq_class u = v_ / mpq_class(pe);
    u.canonicalize();
    return u;
  }

  DvrScalar operator-() const { return DvrScalar(p_, mpq_class(-v_)); }

  DvrScalar operator+(const DvrScalar& o) const {
    assert(compatible(o));
    return DvrScalar(pick_p(o), v_ + o.v_);
  }
  DvrScalar operator-(const DvrScalar& o) const {
    assert(compatible(o));
    return DvrScalar(pick_p(o), v_ - o.v_);
  }
  DvrScalar operator*(const DvrScalar& o) const {
    assert(compatible(o));
    return DvrScalar(pick_p(o), v_ * o.v_);
  }
  DvrScalar& operator+=(const DvrScalar& o) { return *this = *this + o; }
  DvrScalar& operator-=(const DvrScalar& o) { return *this = *this - o; }
  DvrScalar& operator*=(const DvrScalar& o) { return *this = *this * o; }

  /// Division a/b valid in O, i.e. requires val(a) >= val(b).
  DvrScalar div_exact(const DvrScalar& o) const {
    assert(!o.is_zero());
    assert(is_zero() || val_ >= o.val_);
    return DvrScalar(pick_p(o), v_ / o.v_);
  }

  /// Inverse of a unit of O.
  DvrScalar inverse() const {
    assert(is_unit());
    return DvrScalar(p_, 1 / v_);
  }

  DvrScalar times_p_pow(long e) const {
    if (is_zero()) return *this;
    return *this * p_pow(p_, e);
  }

  bool operator==(const DvrScalar& o) const { return v_ == o.v_; }
  bool operator!=(const DvrScalar& o) const { return v_ != o.v_; }

  std::string str() const { return v_.get_str(); }

 private:
  DvrScalar(long p, const mpq_class& v) : p_(p), v_(v) {
    v_.canonicalize();
    val_ = compute_valuation(p_, v_);
  }

  static long compute_valuation(long p, const mpq_class& v) {
    if (v == 0) return kValInfinity;
    assert(p >= 2);
    mpz_class pz(p), rem;
    long vn = static_cast<long>(mpz_remove(rem.get_mpz_t(), v.get_num().get_mpz_t(), pz.get_mpz_t()));
    if (vn > 0) return vn;
    long vd = static_cast<long>(mpz_remove(rem.get_mpz_t(), v.get_den().get_mpz_t(), pz.get_mpz_t()));
    return -vd;
  }

  // Zero values produced by default construction carry p = 0 and adopt the
  // other operand's prime, so containers can be resized cheaply.
  bool compatible(const DvrScalar& o) const { return p_ == o.p_ || p_ == 0 || o.p_ == 0; }
  long pick_p(const DvrScalar& o) const { return p_ ? p_ : o.p_; }

  long p_;
  mpq_class v_;
  long val_;
};

inline long valuation(const DvrScalar& s) { return s.valuation(); }

}  // namespace cmodlab
