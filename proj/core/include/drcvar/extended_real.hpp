#pragma once

#include <compare>
#include <limits>
#include <stdexcept>

namespace drcvar {

/// A real number or +infinity.
///
/// Infinity is a flag, never an IEEE inf, so arithmetic saturates instead of
/// producing NaN (inf - inf) inside the scalar minimizers.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}

  static constexpr ExtendedReal infinity() {
    ExtendedReal e;
    e.infinite_ = true;
    return e;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// Throws std::domain_error when infinite.
  double value() const {
    if (infinite_) throw std::domain_error("value() on an infinite ExtendedReal");
    return value_;
  }
  constexpr double value_or(double fallback) const { return infinite_ ? fallback : value_; }

  constexpr ExtendedReal operator+(ExtendedReal o) const {
    return (infinite_ || o.infinite_) ? infinity() : ExtendedReal(value_ + o.value_);
  }
  constexpr ExtendedReal operator+(double d) const { return infinite_ ? infinity() : ExtendedReal(value_ + d); }

  constexpr bool operator==(const ExtendedReal& o) const {
    return infinite_ == o.infinite_ && (infinite_ || value_ == o.value_);
  }
  constexpr std::partial_ordering operator<=>(const ExtendedReal& o) const {
    if (infinite_ && o.infinite_) return std::partial_ordering::equivalent;
    if (infinite_) return std::partial_ordering::greater;
    if (o.infinite_) return std::partial_ordering::less;
    return value_ <=> o.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace drcvar
