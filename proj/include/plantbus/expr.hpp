// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "plantbus/errors.hpp"

// Arithmetic over variable names: + - * /, parentheses, unary minus, with
// the usual precedence and left associativity. Deliberately total and tiny;
// computed variables must stay auditable.

namespace plantbus::appmods {

class ExprSyntaxError : public Error {
public:
    ExprSyntaxError(const std::string& what, std::size_t position)
        : Error(what + " (position " + std::to_string(position) + ")"), position_(position) {}
    /// 0-based byte offset of the offending character.
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class UnknownIdentifierError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { number, identifier, negate, add, sub, mul, div };

    Kind kind = Kind::number;
    double number = 0.0;    // Kind::number
    std::string name;       // Kind::identifier
    ExprPtr lhs;            // unary operand or left operand
    ExprPtr rhs;            // right operand of binary kinds
};

ExprPtr parseExpr(std::string_view text);

/// Evaluates under the environment; an identifier missing from env raises
/// UnknownIdentifierError, a zero divisor raises EvalError.
double evalExpr(const Expr& expr, const std::map<std::string, double>& env);

/// Identifier names used by the expression, sorted, deduplicated.
std::vector<std::string> exprIdentifiers(const Expr& expr);

/// Text form that parses back to an equal tree, with minimal parentheses.
std::string printExpr(const Expr& expr);

bool exprEquals(const Expr& a, const Expr& b);

/// True when some division's divisor is a constant subexpression equal to 0.
bool hasConstantZeroDivisor(const Expr& expr);

}  // namespace plantbus::appmods
