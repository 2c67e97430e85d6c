#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>

namespace bpdep {

/// Real number with an extended base-2 exponent.
///
/// Inside/outside scores and their adjoints are products over derivations and
/// can leave the double range long before the quantities of interest
/// (marginals, weight adjoints) do, e.g. under annealed-risk edge weights at
/// low temperature. A ScaledReal stores value = mant * 2^(512 * chunk) with
/// the mantissa kept inside [2^-256, 2^256), so a product or an aligned sum of
/// two normalized values never overflows a double before renormalization.
/// Addition drops a term whose magnitude is more than ~2^768 below the other,
/// which is far beyond the 2^-53 relative rounding already inherent in the
/// mantissa arithmetic.
class ScaledReal {
 public:
  ScaledReal() = default;
  ScaledReal(double v) : mant_(v), chunk_(0) { normalize(); }  // NOLINT: implicit by design

  static ScaledReal from_parts(double mant, int32_t chunk) {
    ScaledReal r;
    r.mant_ = mant;
    r.chunk_ = chunk;
    r.normalize();
    return r;
  }

  bool is_zero() const { return mant_ == 0.0; }
  bool positive() const { return mant_ > 0.0; }
  double mantissa() const { return mant_; }
  int32_t chunk() const { return chunk_; }

  ScaledReal operator*(const ScaledReal& o) const {
    return from_parts(mant_ * o.mant_, chunk_ + o.chunk_);
  }
  ScaledReal& operator*=(const ScaledReal& o) { return *this = *this * o; }

  /// Fast path: scale by a double already inside the mantissa window.
  ScaledReal operator*(double v) const {
    const double a = std::fabs(v);
    if (a >= kLo && a < kHi) return from_parts(mant_ * v, chunk_);
    return *this * ScaledReal(v);
  }
  ScaledReal& operator*=(double v) { return *this = *this * v; }

  ScaledReal operator/(const ScaledReal& o) const {
    assert(!o.is_zero());
    return from_parts(mant_ / o.mant_, chunk_ - o.chunk_);
  }

  ScaledReal operator+(const ScaledReal& o) const {
    if (is_zero()) return o;
    if (o.is_zero()) return *this;
    if (chunk_ == o.chunk_) return from_parts(mant_ + o.mant_, chunk_);
    const ScaledReal& hi = chunk_ > o.chunk_ ? *this : o;
    const ScaledReal& lo = chunk_ > o.chunk_ ? o : *this;
    if (hi.chunk_ - lo.chunk_ >= 2) return hi;
    return from_parts(hi.mant_ + lo.mant_ * 0x1p-512, hi.chunk_);
  }
  ScaledReal& operator+=(const ScaledReal& o) { return *this = *this + o; }

  ScaledReal operator-() const {
    ScaledReal r = *this;
    r.mant_ = -r.mant_;
    return r;
  }
  ScaledReal operator-(const ScaledReal& o) const { return *this + (-o); }
  ScaledReal& operator-=(const ScaledReal& o) { return *this = *this - o; }

  double to_double() const {
    if (mant_ == 0.0) return 0.0;
    if (chunk_ > 3) return mant_ > 0 ? HUGE_VAL : -HUGE_VAL;
    if (chunk_ < -3) return 0.0;
    return std::ldexp(mant_, 512 * chunk_);
  }

  /// Natural log; requires a strictly positive value.
  double log() const {
    assert(mant_ > 0.0);
    return std::log(mant_) + static_cast<double>(chunk_) * (512.0 * M_LN2);
  }

 private:
  static constexpr double kHi = 0x1p256;
  static constexpr double kLo = 0x1p-256;

  void normalize() {
    double a = std::fabs(mant_);
    if (a >= kLo && a < kHi) return;  // common case
    if (mant_ == 0.0) {
      chunk_ = 0;
      return;
    }
    // Power-of-two scaling is exact; one step suffices after any single
    // multiply or aligned add of normalized values.
    while (a >= kHi) {
      mant_ *= 0x1p-512;
      a = std::fabs(mant_);
      ++chunk_;
    }
    while (a < kLo) {
      mant_ *= 0x1p512;
      a = std::fabs(mant_);
      --chunk_;
    }
  }

  double mant_ = 0.0;
  int32_t chunk_ = 0;
};

inline ScaledReal operator*(double a, const ScaledReal& b) { return b * a; }

}  // namespace bpdep
