#pragma once

/**
 * @file expression.hpp
 * @brief User-supplied scalar expressions over (t, q1..qn, p1..pn, z, parameters).
 *
 * Grammar (precedence ^ > unary minus > * / > + -; ^ is right-associative,
 * the others left-associative):
 *
 *     expr   := term (("+" | "-") term)*
 *     term   := unary (("*" | "/") unary)*
 *     unary  := "-" unary | power
 *     power  := atom ("^" unary)?
 *     atom   := number | ident | ident "(" expr ")" | "(" expr ")"
 *
 * Identifiers `t`, `z`, `q<i>`, `p<i>` (1 <= i <= n) are coordinates, `pi` is
 * the constant, the names exp log sin cos sinh cosh sqrt abs are functions,
 * and every other identifier is a named parameter bound at evaluation time.
 *
 * Expressions are immutable after parsing and may be evaluated concurrently.
 */

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "cocontact/dual.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/scalar_field.hpp"
#include "cocontact/smooth_map.hpp"

namespace cocontact {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}
    [[nodiscard]] std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Raised when evaluation leaves a function's domain; names the offending node.
class DomainError : public std::domain_error {
public:
    DomainError(const std::string& message, std::string node)
        : std::domain_error(message + " in `" + node + "`"), node_(std::move(node)) {}
    [[nodiscard]] const std::string& node() const { return node_; }

private:
    std::string node_;
};

using Parameters = std::map<std::string, double, std::less<>>;

enum class Coordinate { time, position, momentum, action };

struct Node {
    enum class Kind { number, variable, parameter, add, sub, mul, div, pow, neg, call };
    enum class Function { exp, log, sin, cos, sinh, cosh, sqrt, abs };

    Kind kind = Kind::number;
    double number = 0.0;
    Coordinate coordinate = Coordinate::time;
    std::size_t index = 0;     // coordinate index (0-based) or parameter slot
    std::string name;          // parameter name
    Function function = Function::exp;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    bool coordinate_free = true;  // subtree mentions no coordinate
};

namespace detail {

inline const char* function_name(Node::Function f) {
    switch (f) {
        case Node::Function::exp: return "exp";
        case Node::Function::log: return "log";
        case Node::Function::sin: return "sin";
        case Node::Function::cos: return "cos";
        case Node::Function::sinh: return "sinh";
        case Node::Function::cosh: return "cosh";
        case Node::Function::sqrt: return "sqrt";
        case Node::Function::abs: return "abs";
    }
    return "?";
}

inline std::optional<Node::Function> lookup_function(std::string_view name) {
    static constexpr std::pair<std::string_view, Node::Function> table[] = {
        {"exp", Node::Function::exp},   {"log", Node::Function::log},   {"sin", Node::Function::sin},
        {"cos", Node::Function::cos},   {"sinh", Node::Function::sinh}, {"cosh", Node::Function::cosh},
        {"sqrt", Node::Function::sqrt}, {"abs", Node::Function::abs}};
    for (const auto& [n, f] : table)
        if (n == name) return f;
    return std::nullopt;
}

/// Shortest round-trip decimal; exponents always carry a sign.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace detail

inline std::string unparse(const Node& node);

class Expr {
public:
    Expr() = default;
    Expr(std::shared_ptr<const Node> root, std::size_t n, std::vector<std::string> parameters)
        : root_(std::move(root)), n_(n), parameters_(std::move(parameters)) {}

    [[nodiscard]] const Node& root() const { return *root_; }
    [[nodiscard]] std::size_t dimension() const { return n_; }
    /// Parameter names in slot order.
    [[nodiscard]] const std::vector<std::string>& parameters() const { return parameters_; }

    [[nodiscard]] bool uses(Coordinate c) const { return uses(*root_, c); }

    /// Largest 1-based q/p index mentioned (0 if none).
    [[nodiscard]] std::size_t max_index() const { return max_index(*root_); }

    [[nodiscard]] std::string to_string() const { return unparse(*root_); }

    /// Parameter values in slot order; throws if any parameter is unbound.
    [[nodiscard]] std::vector<double> bind(const Parameters& params) const {
        std::vector<double> values;
        values.reserve(parameters_.size());
        for (const auto& name : parameters_) {
            auto it = params.find(name);
            if (it == params.end()) throw std::invalid_argument("unbound parameter `" + name + "`");
            values.push_back(it->second);
        }
        return values;
    }

    /// Evaluates with `slot(coordinate, index)` mapping coordinates into `inputs`.
    template <class T, class Slot>
    T evaluate(std::span<const T> inputs, std::span<const double> params, const Slot& slot) const {
        return eval(*root_, inputs, params, slot);
    }

private:
    static bool uses(const Node& n, Coordinate c) {
        if (n.kind == Node::Kind::variable) return n.coordinate == c;
        return (n.lhs && uses(*n.lhs, c)) || (n.rhs && uses(*n.rhs, c));
    }
    static std::size_t max_index(const Node& n) {
        std::size_t m = 0;
        if (n.kind == Node::Kind::variable &&
            (n.coordinate == Coordinate::position || n.coordinate == Coordinate::momentum))
            m = n.index + 1;
        if (n.lhs) m = std::max(m, max_index(*n.lhs));
        if (n.rhs) m = std::max(m, max_index(*n.rhs));
        return m;
    }

    template <class T, class Slot>
    static T eval(const Node& n, std::span<const T> in, std::span<const double> params, const Slot& slot) {
        using std::abs, std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh, std::sqrt;
        switch (n.kind) {
            case Node::Kind::number: return T(n.number);
            case Node::Kind::variable: return in[slot(n.coordinate, n.index)];
            case Node::Kind::parameter: return T(params[n.index]);
            case Node::Kind::neg: return -eval(*n.lhs, in, params, slot);
            case Node::Kind::add: return eval(*n.lhs, in, params, slot) + eval(*n.rhs, in, params, slot);
            case Node::Kind::sub: return eval(*n.lhs, in, params, slot) - eval(*n.rhs, in, params, slot);
            case Node::Kind::mul: return eval(*n.lhs, in, params, slot) * eval(*n.rhs, in, params, slot);
            case Node::Kind::div: {
                T num = eval(*n.lhs, in, params, slot);
                T den = eval(*n.rhs, in, params, slot);
                if (value_of(den) == 0.0) throw DomainError("division by zero", unparse(n));
                return num / den;
            }
            case Node::Kind::pow: {
                T base = eval(*n.lhs, in, params, slot);
                T expo = eval(*n.rhs, in, params, slot);
                const double e = value_of(expo);
                if (n.rhs->coordinate_free && e == std::floor(e) && std::abs(e) <= 1e9) {
                    const auto k = static_cast<long long>(e);
                    if (k < 0 && value_of(base) == 0.0) throw DomainError("division by zero", unparse(n));
                    return ipow(base, k);
                }
                if (!(value_of(base) > 0.0))
                    throw DomainError("non-integer power of non-positive base", unparse(n));
                return exp(expo * log(base));
            }
            case Node::Kind::call: {
                T a = eval(*n.lhs, in, params, slot);
                const double v = value_of(a);
                switch (n.function) {
                    case Node::Function::exp: return exp(a);
                    case Node::Function::log:
                        if (!(v > 0.0)) throw DomainError("log of non-positive argument", unparse(n));
                        return log(a);
                    case Node::Function::sin: return sin(a);
                    case Node::Function::cos: return cos(a);
                    case Node::Function::sinh: return sinh(a);
                    case Node::Function::cosh: return cosh(a);
                    case Node::Function::sqrt:
                        if (v < 0.0) throw DomainError("sqrt of negative argument", unparse(n));
                        return sqrt(a);
                    case Node::Function::abs: return abs(a);
                }
            }
        }
        throw std::logic_error("corrupt expression node");
    }

    std::shared_ptr<const Node> root_;
    std::size_t n_ = 0;
    std::vector<std::string> parameters_;
};

inline std::string unparse(const Node& node) {
    switch (node.kind) {
        case Node::Kind::number: return detail::format_double(node.number);
        case Node::Kind::variable:
            switch (node.coordinate) {
                case Coordinate::time: return "t";
                case Coordinate::action: return "z";
                case Coordinate::position: return "q" + std::to_string(node.index + 1);
                case Coordinate::momentum: return "p" + std::to_string(node.index + 1);
            }
            break;
        case Node::Kind::parameter: return node.name;
        case Node::Kind::neg: return "(-" + unparse(*node.lhs) + ")";
        case Node::Kind::call: return std::string(detail::function_name(node.function)) + "(" + unparse(*node.lhs) + ")";
        default: break;
    }
    const char* op = node.kind == Node::Kind::add   ? " + "
                     : node.kind == Node::Kind::sub ? " - "
                     : node.kind == Node::Kind::mul ? " * "
                     : node.kind == Node::Kind::div ? " / "
                                                     : " ^ ";
    return "(" + unparse(*node.lhs) + op + unparse(*node.rhs) + ")";
}

/// Structural equality of two syntax trees.
inline bool same_structure(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Node::Kind::number: return a.number == b.number;
        case Node::Kind::variable: return a.coordinate == b.coordinate && a.index == b.index;
        case Node::Kind::parameter: return a.name == b.name;
        case Node::Kind::call:
            if (a.function != b.function) return false;
            break;
        default: break;
    }
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    return (!a.lhs || same_structure(*a.lhs, *b.lhs)) && (!a.rhs || same_structure(*a.rhs, *b.rhs));
}

namespace detail {

class Parser {
public:
    Parser(std::string_view src, std::size_t n) : src_(src), n_(n) {}

    Expr run() {
        skip_space();
        if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
        auto root = expr();
        skip_space();
        if (pos_ < src_.size()) {
            if (src_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected `)`", pos_);
            throw ParseError(std::string("unexpected character `") + src_[pos_] + "`", pos_);
        }
        return Expr(std::move(root), n_, std::move(parameters_));
    }

private:
    using Ptr = std::shared_ptr<const Node>;

    Ptr expr() {
        Ptr lhs = term();
        for (;;) {
            skip_space();
            if (accept('+')) lhs = binary(Node::Kind::add, lhs, term());
            else if (accept('-')) lhs = binary(Node::Kind::sub, lhs, term());
            else return lhs;
        }
    }

    Ptr term() {
        Ptr lhs = unary();
        for (;;) {
            skip_space();
            if (accept('*')) lhs = binary(Node::Kind::mul, lhs, unary());
            else if (accept('/')) lhs = binary(Node::Kind::div, lhs, unary());
            else return lhs;
        }
    }

    Ptr unary() {
        skip_space();
        if (accept('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::neg;
            n->lhs = unary();
            n->coordinate_free = n->lhs->coordinate_free;
            return n;
        }
        return power();
    }

    Ptr power() {
        Ptr base = atom();
        skip_space();
        if (accept('^')) return binary(Node::Kind::pow, base, unary());
        return base;
    }

    Ptr atom() {
        skip_space();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            const std::size_t open = pos_++;
            Ptr inner = expr();
            skip_space();
            if (!accept(')')) throw ParseError("unbalanced parentheses: missing `)` for `(`", open);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (c == ')') throw ParseError("unbalanced parentheses: unexpected `)`", pos_);
        throw ParseError(std::string("unexpected character `") + c + "`", pos_);
    }

    Ptr number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        std::string_view text = src_.substr(start, pos_ - start);
        // from_chars rejects a leading '+'; the grammar never produces one here.
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw ParseError("malformed number `" + std::string(text) + "`", start);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::number;
        n->number = value;
        return n;
    }

    Ptr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            auto f = lookup_function(name);
            if (!f) throw ParseError("unknown identifier `" + name + "`", start);
            const std::size_t open = pos_++;
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::call;
            n->function = *f;
            n->lhs = expr();
            n->coordinate_free = n->lhs->coordinate_free;
            skip_space();
            if (!accept(')')) throw ParseError("unbalanced parentheses: missing `)` for `(`", open);
            return n;
        }
        if (lookup_function(name)) throw ParseError("function `" + name + "` needs an argument", start);

        auto n = std::make_shared<Node>();
        if (name == "t" || name == "z") {
            n->kind = Node::Kind::variable;
            n->coordinate = name == "t" ? Coordinate::time : Coordinate::action;
            n->coordinate_free = false;
            return n;
        }
        if (name == "pi") {
            n->kind = Node::Kind::number;
            n->number = std::numbers::pi;
            return n;
        }
        if ((name[0] == 'q' || name[0] == 'p') && name.size() > 1 &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            std::size_t index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec != std::errc() || index == 0 || index > n_) {
                throw ParseError("variable `" + name + "` out of range (dimension " + std::to_string(n_) + ")", start);
            }
            n->kind = Node::Kind::variable;
            n->coordinate = name[0] == 'q' ? Coordinate::position : Coordinate::momentum;
            n->index = index - 1;
            n->coordinate_free = false;
            return n;
        }
        n->kind = Node::Kind::parameter;
        n->name = name;
        std::size_t slot = 0;
        while (slot < parameters_.size() && parameters_[slot] != name) ++slot;
        if (slot == parameters_.size()) parameters_.push_back(name);
        n->index = slot;
        return n;
    }

    static Ptr binary(Node::Kind kind, Ptr lhs, Ptr rhs) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->coordinate_free = lhs->coordinate_free && rhs->coordinate_free;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    bool accept(char c) {
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    std::string_view src_;
    std::size_t n_;
    std::size_t pos_ = 0;
    std::vector<std::string> parameters_;
};

}  // namespace detail

inline Expr parse(std::string_view source, std::size_t n) {
    if (n < 1) throw std::invalid_argument("parse: dimension must be at least 1");
    return detail::Parser(source, n).run();
}

/// Which coordinates an expression may read, and in which input slots.
enum class Layout {
    phase,       ///< [t, q..., p..., z]
    base_t,      ///< [t, q...]
    base_tz,     ///< [t, q..., z]
    config,      ///< [q...]
    time_only,   ///< [t]
};

inline std::size_t layout_size(Layout layout, std::size_t n) {
    switch (layout) {
        case Layout::phase: return 2 * n + 2;
        case Layout::base_t: return n + 1;
        case Layout::base_tz: return n + 2;
        case Layout::config: return n;
        case Layout::time_only: return 1;
    }
    return 0;
}

/// Compiles an expression into a scalar SmoothMap over `layout`.
inline SmoothMap to_map(const Expr& e, Layout layout, const Parameters& params) {
    const std::size_t n = e.dimension();
    auto reject = [&](Coordinate c, const char* what) {
        if (e.uses(c)) throw std::invalid_argument(std::string("expression `") + e.to_string() + "` may not use " + what);
    };
    switch (layout) {
        case Layout::phase: break;
        case Layout::base_t: reject(Coordinate::momentum, "momenta"); reject(Coordinate::action, "z"); break;
        case Layout::base_tz: reject(Coordinate::momentum, "momenta"); break;
        case Layout::config:
            reject(Coordinate::momentum, "momenta");
            reject(Coordinate::action, "z");
            reject(Coordinate::time, "t");
            break;
        case Layout::time_only:
            reject(Coordinate::momentum, "momenta");
            reject(Coordinate::action, "z");
            reject(Coordinate::position, "positions");
            break;
    }
    auto values = std::make_shared<const std::vector<double>>(e.bind(params));
    auto slot = [layout, n](Coordinate c, std::size_t i) -> std::size_t {
        switch (c) {
            case Coordinate::time: return 0;
            case Coordinate::position: return layout == Layout::config ? i : 1 + i;
            case Coordinate::momentum: return 1 + n + i;
            case Coordinate::action: return layout == Layout::phase ? 2 * n + 1 : n + 1;
        }
        return 0;
    };
    return SmoothMap::from_generic(layout_size(layout, n), 1, [e, values, slot](auto in, auto out) {
        using T = std::remove_cvref_t<decltype(in[0])>;
        out[0] = e.template evaluate<T>(in, *values, slot);
    });
}

inline ScalarField to_field(const Expr& e, const Parameters& params) {
    return ScalarField(e.dimension(), to_map(e, Layout::phase, params));
}

/// Plain evaluation at a phase point.
inline double evaluate(const Expr& e, const PhasePoint& x, const Parameters& params) {
    return to_field(e, params).value(x);
}

/// Value and exact gradient (t, q, p, z) at a phase point.
inline ValueAndGradient eval_with_grad(const Expr& e, const PhasePoint& x, const Parameters& params) {
    return to_field(e, params).value_and_gradient(x);
}

}  // namespace cocontact
