// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <set>

namespace plantbus::appmods {

namespace {

ExprPtr makeNumber(double v) {
    auto node = std::make_shared<Expr>();
    node->kind = Expr::Kind::number;
    node->number = v;
    return node;
}

ExprPtr makeIdentifier(std::string name) {
    auto node = std::make_shared<Expr>();
    node->kind = Expr::Kind::identifier;
    node->name = std::move(name);
    return node;
}

ExprPtr makeUnary(ExprPtr operand) {
    auto node = std::make_shared<Expr>();
    node->kind = Expr::Kind::negate;
    node->lhs = std::move(operand);
    return node;
}

ExprPtr makeBinary(Expr::Kind kind, ExprPtr lhs, ExprPtr rhs) {
    auto node = std::make_shared<Expr>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

bool identStart(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

// Dots are allowed inside identifiers; plant variables are dotted paths.
bool identBody(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprPtr parse() {
        ExprPtr e = parseSum();
        skipSpace();
        if (pos_ != text_.size()) {
            throw ExprSyntaxError("unexpected character", pos_);
        }
        return e;
    }

private:
    void skipSpace() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::optional<char> peek() {
        skipSpace();
        if (pos_ >= text_.size()) return std::nullopt;
        return text_[pos_];
    }

    ExprPtr parseSum() {
        ExprPtr lhs = parseProduct();
        for (;;) {
            auto c = peek();
            if (c == '+' || c == '-') {
                ++pos_;
                ExprPtr rhs = parseProduct();
                lhs = makeBinary(*c == '+' ? Expr::Kind::add : Expr::Kind::sub, std::move(lhs),
                                 std::move(rhs));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parseProduct() {
        ExprPtr lhs = parseFactor();
        for (;;) {
            auto c = peek();
            if (c == '*' || c == '/') {
                ++pos_;
                ExprPtr rhs = parseFactor();
                lhs = makeBinary(*c == '*' ? Expr::Kind::mul : Expr::Kind::div, std::move(lhs),
                                 std::move(rhs));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parseFactor() {
        auto c = peek();
        if (!c) throw ExprSyntaxError("expected a value", pos_);
        if (*c == '-') {
            ++pos_;
            return makeUnary(parseFactor());
        }
        if (*c == '(') {
            ++pos_;
            ExprPtr inner = parseSum();
            if (peek() != ')') throw ExprSyntaxError("expected ')'", pos_);
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(*c)) || *c == '.') {
            return parseNumber();
        }
        if (identStart(*c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && identBody(text_[pos_])) ++pos_;
            return makeIdentifier(std::string(text_.substr(start, pos_ - start)));
        }
        throw ExprSyntaxError("expected a value", pos_);
    }

    ExprPtr parseNumber() {
        // strtod accepts leading signs and hex floats; restrict to a plain
        // decimal shape first so "1e+2" works but "+1" and "0x1p3" do not.
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            } else {
                pos_ = mark;  // trailing 'e' belongs to something else
            }
        }
        std::string token(text_.substr(start, pos_ - start));
        char* end = nullptr;
        double value = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || token == ".") {
            throw ExprSyntaxError("malformed number", start);
        }
        return makeNumber(value);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parseExpr(std::string_view text) { return Parser(text).parse(); }

double evalExpr(const Expr& expr, const std::map<std::string, double>& env) {
    switch (expr.kind) {
        case Expr::Kind::number:
            return expr.number;
        case Expr::Kind::identifier: {
            auto it = env.find(expr.name);
            if (it == env.end()) throw UnknownIdentifierError("unknown identifier: " + expr.name);
            return it->second;
        }
        case Expr::Kind::negate:
            return -evalExpr(*expr.lhs, env);
        case Expr::Kind::add:
            return evalExpr(*expr.lhs, env) + evalExpr(*expr.rhs, env);
        case Expr::Kind::sub:
            return evalExpr(*expr.lhs, env) - evalExpr(*expr.rhs, env);
        case Expr::Kind::mul:
            return evalExpr(*expr.lhs, env) * evalExpr(*expr.rhs, env);
        case Expr::Kind::div: {
            double divisor = evalExpr(*expr.rhs, env);
            if (divisor == 0.0) throw EvalError("division by zero");
            return evalExpr(*expr.lhs, env) / divisor;
        }
    }
    throw EvalError("corrupt expression tree");
}

namespace {

void collectIdentifiers(const Expr& expr, std::set<std::string>& out) {
    switch (expr.kind) {
        case Expr::Kind::identifier:
            out.insert(expr.name);
            return;
        case Expr::Kind::number:
            return;
        default:
            if (expr.lhs) collectIdentifiers(*expr.lhs, out);
            if (expr.rhs) collectIdentifiers(*expr.rhs, out);
            return;
    }
}

// Precedence for printing: sum 1, product 2, unary 3, leaf 4.
int precedence(Expr::Kind kind) {
    switch (kind) {
        case Expr::Kind::add:
        case Expr::Kind::sub:
            return 1;
        case Expr::Kind::mul:
        case Expr::Kind::div:
            return 2;
        case Expr::Kind::negate:
            return 3;
        default:
            return 4;
    }
}

void printNode(const Expr& expr, std::string& out) {
    switch (expr.kind) {
        case Expr::Kind::number: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", expr.number);
            out += buf;
            return;
        }
        case Expr::Kind::identifier:
            out += expr.name;
            return;
        case Expr::Kind::negate: {
            out += '-';
            bool wrap = precedence(expr.lhs->kind) < precedence(Expr::Kind::negate);
            if (wrap) out += '(';
            printNode(*expr.lhs, out);
            if (wrap) out += ')';
            return;
        }
        default: {
            const int prec = precedence(expr.kind);
            bool wrap_l = precedence(expr.lhs->kind) < prec;
            if (wrap_l) out += '(';
            printNode(*expr.lhs, out);
            if (wrap_l) out += ')';
            switch (expr.kind) {
                case Expr::Kind::add: out += " + "; break;
                case Expr::Kind::sub: out += " - "; break;
                case Expr::Kind::mul: out += " * "; break;
                default: out += " / "; break;
            }
            // Right side needs parens at equal precedence too: (a - b) - c
            // prints as a - b - c but a - (b - c) must keep its parens.
            bool wrap_r = precedence(expr.rhs->kind) <= prec;
            if (wrap_r) out += '(';
            printNode(*expr.rhs, out);
            if (wrap_r) out += ')';
            return;
        }
    }
}

}  // namespace

std::vector<std::string> exprIdentifiers(const Expr& expr) {
    std::set<std::string> names;
    collectIdentifiers(expr, names);
    return {names.begin(), names.end()};
}

std::string printExpr(const Expr& expr) {
    std::string out;
    printNode(expr, out);
    return out;
}

bool exprEquals(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::number:
            return a.number == b.number;
        case Expr::Kind::identifier:
            return a.name == b.name;
        case Expr::Kind::negate:
            return exprEquals(*a.lhs, *b.lhs);
        default:
            return exprEquals(*a.lhs, *b.lhs) && exprEquals(*a.rhs, *b.rhs);
    }
}

namespace {

// Constant-folds identifier-free subtrees; nullopt when a name is involved.
std::optional<double> foldConstant(const Expr& expr) {
    switch (expr.kind) {
        case Expr::Kind::number:
            return expr.number;
        case Expr::Kind::identifier:
            return std::nullopt;
        case Expr::Kind::negate: {
            auto v = foldConstant(*expr.lhs);
            return v ? std::optional<double>(-*v) : std::nullopt;
        }
        default: {
            auto l = foldConstant(*expr.lhs);
            auto r = foldConstant(*expr.rhs);
            if (!l || !r) return std::nullopt;
            switch (expr.kind) {
                case Expr::Kind::add: return *l + *r;
                case Expr::Kind::sub: return *l - *r;
                case Expr::Kind::mul: return *l * *r;
                default: return *r == 0.0 ? std::nullopt : std::optional<double>(*l / *r);
            }
        }
    }
}

}  // namespace

bool hasConstantZeroDivisor(const Expr& expr) {
    switch (expr.kind) {
        case Expr::Kind::number:
        case Expr::Kind::identifier:
            return false;
        case Expr::Kind::negate:
            return hasConstantZeroDivisor(*expr.lhs);
        case Expr::Kind::div: {
            auto divisor = foldConstant(*expr.rhs);
            if (divisor && *divisor == 0.0) return true;
            return hasConstantZeroDivisor(*expr.lhs) || hasConstantZeroDivisor(*expr.rhs);
        }
        default:
            return hasConstantZeroDivisor(*expr.lhs) || hasConstantZeroDivisor(*expr.rhs);
    }
}

}  // namespace plantbus::appmods
