#include "cstop/expression.hpp"

#include "cstop/error.hpp"

#include <cctype>
#include <cmath>
#include <functional>

namespace cstop {

struct Expression::Node {
    enum class Op { Constant, Time, Current, Sup, Inf, Add, Sub, Mul, Div, Pow, Neg, Call };
    Op op = Op::Constant;
    ExtendedReal constant;
    std::size_t index = 0;
    std::string function;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_constant(ExtendedReal v) {
    auto n = std::make_shared<Node>();
    n->op = Node::Op::Constant;
    n->constant = std::move(v);
    return n;
}

NodePtr make_op(Node::Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
}

NodePtr make_var(Node::Op op, std::size_t index) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->index = index;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::ParseError,
                    why + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make_op(Node::Op::Add, {lhs, term()});
            } else if (accept('-')) {
                lhs = make_op(Node::Op::Sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_op(Node::Op::Mul, {lhs, unary()});
            } else if (accept('/')) {
                lhs = make_op(Node::Op::Div, {lhs, unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_op(Node::Op::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_op(Node::Op::Pow, {base, unary()});
        return base;
    }

    std::size_t index_suffix() {
        expect('[');
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected index");
        std::size_t idx = std::stoul(std::string(text_.substr(start, pos_ - start)));
        expect(']');
        return idx;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
                ++pos_;
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t save = pos_;
                ++pos_;
                if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
                std::size_t digits = pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
                if (digits == pos_) pos_ = save;
            }
            return make_constant(parse_rational(text_.substr(start, pos_ - start)));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            std::string name(text_.substr(start, pos_ - start));
            skip_ws();
            bool indexed = pos_ < text_.size() && text_[pos_] == '[';
            bool call = pos_ < text_.size() && text_[pos_] == '(';
            if (call) {
                ++pos_;
                auto n = std::make_shared<Node>();
                n->op = Node::Op::Call;
                n->function = name;
                if (!accept(')')) {
                    do {
                        n->args.push_back(expr());
                    } while (accept(','));
                    expect(')');
                }
                return n;
            }
            if (name == "t") return make_var(Node::Op::Time, 0);
            if (name == "inf") {
                return indexed ? make_var(Node::Op::Inf, index_suffix()) : make_constant(ExtendedReal::pos_inf());
            }
            if (name == "x" || name == "x_current") {
                return make_var(Node::Op::Current, indexed ? index_suffix() : 0);
            }
            if (name == "x_sup" || name == "sup") {
                return make_var(Node::Op::Sup, indexed ? index_suffix() : 0);
            }
            if (name == "x_inf") return make_var(Node::Op::Inf, 0);
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

NodePtr parse_builtin(std::string_view text) {
    if (text == "zero") return make_constant(0);
    if (text == "coord") return make_var(Node::Op::Current, 0);
    if (text == "sup") return make_var(Node::Op::Sup, 0);
    if (text.starts_with("const:")) return make_constant(parse_extended(text.substr(6)));
    if (text.starts_with("power:")) {
        std::string_view rest = text.substr(6);
        std::vector<Rational> parts;
        while (true) {
            auto comma = rest.find(',');
            parts.push_back(parse_rational(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (parts.size() != 3) throw Error(ErrorCode::ParseError, "power:a,q,lambda needs three numbers");
        const Rational& a = parts[0];
        const Rational& q = parts[1];
        const Rational& lambda = parts[2];
        NodePtr tpow = make_op(Node::Op::Pow, {make_var(Node::Op::Time, 0), make_constant(Rational(q - 1))});
        NodePtr scaled = make_op(Node::Op::Mul, {make_constant(Rational(a * q)), tpow});
        return make_op(Node::Op::Add, {scaled, make_constant(lambda)});
    }
    return nullptr;
}

Rational snapped(double v, std::optional<int> bits, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string(what) + " produced a non-finite value");
    return snap(v, bits);
}

Rational integer_power(const Rational& base, const mpz_class& e) {
    if (!e.fits_slong_p()) throw Error(ErrorCode::NonFinite, "exponent too large");
    long k = e.get_si();
    bool invert = k < 0;
    unsigned long n = static_cast<unsigned long>(invert ? -k : k);
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), n);
    mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), n);
    if (invert) {
        if (num == 0) throw Error(ErrorCode::NonFinite, "zero raised to a negative power");
        std::swap(num, den);
    }
    Rational out(num, den);
    out.canonicalize();
    return out;
}

struct Evaluator {
    const Rational& t;
    const Path& path;
    std::optional<int> bits;

    const State& current() const {
        if (path.empty()) throw Error(ErrorCode::InvalidInstance, "empty path");
        return path.back();
    }

    static void check_index(std::size_t i, std::size_t dim) {
        if (i >= dim) throw Error(ErrorCode::InvalidInstance, "state index " + std::to_string(i) + " out of range");
    }

    ExtendedReal eval(const Node& n) const {
        using Op = Node::Op;
        switch (n.op) {
            case Op::Constant: return n.constant;
            case Op::Time: return t;
            case Op::Current: {
                const State& s = current();
                check_index(n.index, s.size());
                return s[n.index];
            }
            case Op::Sup:
            case Op::Inf: {
                check_index(n.index, current().size());
                Rational best = path.front()[n.index];
                for (const State& s : path) {
                    if (n.op == Op::Sup ? s[n.index] > best : s[n.index] < best) best = s[n.index];
                }
                return best;
            }
            case Op::Add: return eval(*n.args[0]) + eval(*n.args[1]);
            case Op::Sub: return eval(*n.args[0]) - eval(*n.args[1]);
            case Op::Mul: return eval(*n.args[0]) * eval(*n.args[1]);
            case Op::Neg: return -eval(*n.args[0]);
            case Op::Div: {
                ExtendedReal a = eval(*n.args[0]);
                ExtendedReal b = eval(*n.args[1]);
                if (!b.is_finite()) {
                    if (!a.is_finite()) throw Error(ErrorCode::NonFinite, "inf / inf");
                    return 0;
                }
                if (b.finite() == 0) throw Error(ErrorCode::NonFinite, "division by zero");
                if (!a.is_finite()) return (sgn(b.finite()) > 0) ? a : -a;
                return Rational(a.finite() / b.finite());
            }
            case Op::Pow: {
                Rational base = eval(*n.args[0]).finite();
                Rational e = eval(*n.args[1]).finite();
                if (e.get_den() == 1) {
                    if (e == 0) return 1;
                    return integer_power(base, e.get_num());
                }
                return snapped(std::pow(base.get_d(), e.get_d()), bits, "^");
            }
            case Op::Call: return call(n);
        }
        return 0;
    }

    ExtendedReal call(const Node& n) const {
        const std::string& f = n.function;
        std::vector<ExtendedReal> a;
        a.reserve(n.args.size());
        for (const auto& arg : n.args) a.push_back(eval(*arg));
        auto need = [&](std::size_t k) {
            if (a.size() != k) throw Error(ErrorCode::ParseError, f + " expects " + std::to_string(k) + " arguments");
        };
        if (f == "min" || f == "max") {
            if (a.empty()) throw Error(ErrorCode::ParseError, f + " needs arguments");
            ExtendedReal best = a[0];
            for (const auto& v : a) {
                if (f == "min" ? v < best : v > best) best = v;
            }
            return best;
        }
        if (f == "abs") {
            need(1);
            return a[0] < ExtendedReal(0) ? -a[0] : a[0];
        }
        if (f == "pow") {
            need(2);
            Node tmp;
            tmp.op = Node::Op::Pow;
            tmp.args = {make_constant(a[0]), make_constant(a[1])};
            return eval(tmp);
        }
        using Fn = double (*)(double);
        Fn fn = nullptr;
        if (f == "sqrt") fn = [](double v) { return std::sqrt(v); };
        if (f == "exp") fn = [](double v) { return std::exp(v); };
        if (f == "log") fn = [](double v) { return std::log(v); };
        if (f == "sin") fn = [](double v) { return std::sin(v); };
        if (f == "cos") fn = [](double v) { return std::cos(v); };
        if (fn == nullptr) throw Error(ErrorCode::ParseError, "unknown function '" + f + "'");
        need(1);
        return snapped(fn(a[0].finite().get_d()), bits, f.c_str());
    }
};

}  // namespace

Expression::Expression() : root_(make_constant(0)), source_("zero") {}

Expression Expression::parse(std::string_view text, std::optional<int> snap_bits) {
    Expression e;
    e.source_ = std::string(text);
    e.snap_bits_ = snap_bits;
    NodePtr builtin = parse_builtin(text);
    e.root_ = builtin ? builtin : Parser(text).parse();
    return e;
}

ExtendedReal Expression::evaluate(const Rational& t, const Path& path) const {
    return Evaluator{t, path, snap_bits_}.eval(*root_);
}

Rational Expression::evaluate_finite(const Rational& t, const Path& path) const {
    ExtendedReal v = evaluate(t, path);
    if (!v.is_finite()) throw Error(ErrorCode::NonFinite, "'" + source_ + "' evaluated to " + v.to_string());
    return v.finite();
}

bool Expression::is_zero() const {
    return root_->op == Node::Op::Constant && root_->constant == ExtendedReal(0);
}

}  // namespace cstop
