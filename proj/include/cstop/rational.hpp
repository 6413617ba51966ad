#pragma once

#include <gmpxx.h>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace cstop {

using Rational = mpq_class;

/// num/den in canonical form (gmpxx's two-argument constructor does not reduce).
Rational ratio(long num, long den);

/// Parses "3/2", "-7", "0.125", "1e-3" exactly. Throws Error(ParseError) on junk.
Rational parse_rational(std::string_view text);

/// Canonical "num/den" form; integers print without a denominator.
std::string to_string(const Rational& q);

double to_double(const Rational& q);

/// Exact binary value of `x` when `bits` is empty, otherwise the nearest
/// multiple of 2^-bits.
Rational snap(double x, std::optional<int> bits = std::nullopt);

/// A value in [-inf, +inf] with exact finite part.
///
/// Addition uses the integration convention (+inf) + (-inf) = -inf.
/// Multiplication uses 0 * (+-inf) = 0.
class ExtendedReal {
public:
    enum class Kind { NegInf, Finite, PosInf };

    ExtendedReal() = default;
    ExtendedReal(Rational v) : value_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
    ExtendedReal(long v) : value_(v) {}                  // NOLINT(google-explicit-constructor)
    ExtendedReal(int v) : value_(v) {}                   // NOLINT(google-explicit-constructor)

    static ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf); }
    static ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::Finite; }
    bool is_pos_inf() const { return kind_ == Kind::PosInf; }
    bool is_neg_inf() const { return kind_ == Kind::NegInf; }

    /// Finite part; throws Error(NonFinite) for infinities.
    const Rational& finite() const;

    double to_double() const;
    std::string to_string() const;

    friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b);
    friend ExtendedReal operator-(const ExtendedReal& a);
    friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }
    friend ExtendedReal operator*(const ExtendedReal& a, const ExtendedReal& b);
    ExtendedReal& operator+=(const ExtendedReal& o) { return *this = *this + o; }

    friend bool operator==(const ExtendedReal& a, const ExtendedReal& b);
    friend std::strong_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b);

private:
    explicit ExtendedReal(Kind k) : kind_(k) {}

    Kind kind_ = Kind::Finite;
    Rational value_ = 0;
};

/// Accepts everything parse_rational does plus "inf", "+inf", "-inf".
ExtendedReal parse_extended(std::string_view text);

}  // namespace cstop
