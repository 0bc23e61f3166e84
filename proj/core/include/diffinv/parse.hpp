#pragma once

#include <string_view>

#include "diffinv/expr.hpp"

namespace diffinv {

/// Parses infix text into a normalized expression.
///
/// Grammar: `+ - * / ^`, parentheses, calls `f(arg)` for the functions in
/// FuncKind, identifiers `[A-Za-z][A-Za-z0-9_]*`, numeric literals (integer,
/// decimal, scientific). `^` is right-associative and binds tighter than
/// unary minus, which binds tighter than `*` and `/`.
///
/// Jet coordinates: an identifier may carry a multi-index suffix `u1[1,0]`,
/// or (one independent variable) primes `u'`, `u2''`. A bare `u` before a
/// suffix means `u1`, so `u'`, `u[1]` and `u1[1]` name the same symbol.
///
/// Integer literals become exact rationals; literals with a '.' or exponent
/// become decimals.
Expr parse(std::string_view text);

}  // namespace diffinv
