#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"

namespace diffinv::cli {

using Report = nlohmann::ordered_json;

/// JSON with every floating-point value printed to 17 significant digits.
std::string render_json(const Report& r);
/// Indented key: value listing of the same report.
std::string render_text(const Report& r);

Report to_report(const Bindings& b);
Report to_report(const std::vector<Expr>& es);

}  // namespace diffinv::cli
