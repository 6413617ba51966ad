#include "cstop/rational.hpp"

#include "cstop/error.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace cstop {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

[[noreturn]] void bad(std::string_view text) {
    throw Error(ErrorCode::ParseError, "not a rational: '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = trim(text);
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.empty()) bad(text);

    Rational out;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::string_view num = s.substr(0, slash);
        std::string_view den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) bad(text);
        mpz_class d(std::string(den), 10);
        if (d == 0) bad(text);
        out = Rational(mpz_class(std::string(num), 10), d);
        out.canonicalize();
    } else {
        std::string_view mantissa = s;
        long exponent = 0;
        if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
            mantissa = s.substr(0, e);
            std::string_view ex = s.substr(e + 1);
            bool exp_neg = false;
            if (!ex.empty() && (ex.front() == '-' || ex.front() == '+')) {
                exp_neg = ex.front() == '-';
                ex.remove_prefix(1);
            }
            if (!all_digits(ex) || ex.size() > 6) bad(text);
            exponent = std::stol(std::string(ex));
            if (exp_neg) exponent = -exponent;
        }
        std::string digits;
        if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
            std::string_view ip = mantissa.substr(0, dot);
            std::string_view fp = mantissa.substr(dot + 1);
            if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) ||
                (ip.empty() && fp.empty())) {
                bad(text);
            }
            digits = std::string(ip) + std::string(fp);
            exponent -= static_cast<long>(fp.size());
        } else {
            if (!all_digits(mantissa)) bad(text);
            digits = std::string(mantissa);
        }
        mpz_class n(digits, 10);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
        if (exponent >= 0) {
            out = Rational(n * scale);
        } else {
            out = Rational(n, scale);
            out.canonicalize();
        }
    }
    if (negative) out = -out;
    return out;
}

Rational ratio(long num, long den) {
    if (den == 0) throw Error(ErrorCode::NonFinite, "zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

double to_double(const Rational& q) { return q.get_d(); }

Rational snap(double x, std::optional<int> bits) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "cannot snap a non-finite double");
    Rational exact(x);
    if (!bits) return exact;
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 2, static_cast<unsigned long>(*bits));
    Rational scaled = exact * scale + Rational(1, 2);
    mpz_class rounded;
    mpz_fdiv_q(rounded.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    Rational out(rounded, scale);
    out.canonicalize();
    return out;
}

const Rational& ExtendedReal::finite() const {
    if (kind_ != Kind::Finite) throw Error(ErrorCode::NonFinite, "value is " + to_string());
    return value_;
}

double ExtendedReal::to_double() const {
    switch (kind_) {
        case Kind::PosInf: return std::numeric_limits<double>::infinity();
        case Kind::NegInf: return -std::numeric_limits<double>::infinity();
        case Kind::Finite: break;
    }
    return value_.get_d();
}

std::string ExtendedReal::to_string() const {
    switch (kind_) {
        case Kind::PosInf: return "inf";
        case Kind::NegInf: return "-inf";
        case Kind::Finite: break;
    }
    return cstop::to_string(value_);
}

ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    using K = ExtendedReal::Kind;
    if (a.kind_ == K::NegInf || b.kind_ == K::NegInf) return ExtendedReal::neg_inf();
    if (a.kind_ == K::PosInf || b.kind_ == K::PosInf) return ExtendedReal::pos_inf();
    return ExtendedReal(Rational(a.value_ + b.value_));
}

ExtendedReal operator-(const ExtendedReal& a) {
    using K = ExtendedReal::Kind;
    switch (a.kind_) {
        case K::PosInf: return ExtendedReal::neg_inf();
        case K::NegInf: return ExtendedReal::pos_inf();
        case K::Finite: break;
    }
    return ExtendedReal(Rational(-a.value_));
}

ExtendedReal operator*(const ExtendedReal& a, const ExtendedReal& b) {
    using K = ExtendedReal::Kind;
    if (a.is_finite() && b.is_finite()) return ExtendedReal(Rational(a.value_ * b.value_));
    auto sign = [](const ExtendedReal& v) {
        if (v.kind_ == K::PosInf) return 1;
        if (v.kind_ == K::NegInf) return -1;
        return sgn(v.value_);
    };
    int s = sign(a) * sign(b);
    if (s == 0) return ExtendedReal(0);
    return s > 0 ? ExtendedReal::pos_inf() : ExtendedReal::neg_inf();
}

bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.kind_ != b.kind_) return false;
    return !a.is_finite() || a.value_ == b.value_;
}

std::strong_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    auto rank = [](ExtendedReal::Kind k) {
        switch (k) {
            case ExtendedReal::Kind::NegInf: return 0;
            case ExtendedReal::Kind::Finite: return 1;
            case ExtendedReal::Kind::PosInf: return 2;
        }
        return 1;
    };
    if (a.kind_ != b.kind_) return rank(a.kind_) <=> rank(b.kind_);
    if (!a.is_finite()) return std::strong_ordering::equal;
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

ExtendedReal parse_extended(std::string_view text) {
    std::string_view s = trim(text);
    if (s == "inf" || s == "+inf" || s == "infinity" || s == "+infinity") return ExtendedReal::pos_inf();
    if (s == "-inf" || s == "-infinity") return ExtendedReal::neg_inf();
    return ExtendedReal(parse_rational(s));
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::InvalidBranching: return "InvalidBranching";
        case ErrorCode::InvalidHorizon: return "InvalidHorizon";
        case ErrorCode::InvalidInstance: return "InvalidInstance";
        case ErrorCode::WordTooLong: return "WordTooLong";
        case ErrorCode::NodeNotInTree: return "NodeNotInTree";
        case ErrorCode::RuleShapeMismatch: return "RuleShapeMismatch";
        case ErrorCode::EquivalenceViolation: return "EquivalenceViolation";
        case ErrorCode::EmptyFamily: return "EmptyFamily";
        case ErrorCode::BudgetBelowDomain: return "BudgetBelowDomain";
        case ErrorCode::UnsupportedConstraintShape: return "UnsupportedConstraintShape";
        case ErrorCode::NonFiniteConstraintAccrual: return "NonFiniteConstraintAccrual";
        case ErrorCode::SubproblemInfeasible: return "SubproblemInfeasible";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DegreeTooHigh: return "DegreeTooHigh";
        case ErrorCode::ShapeTooLarge: return "ShapeTooLarge";
        case ErrorCode::NoInstances: return "NoInstances";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace cstop
