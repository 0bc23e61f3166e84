#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace diffinv::cli {

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string scalar(const Report& r) {
  if (r.is_number_float()) return number(r.get<double>());
  if (r.is_string()) return r.get<std::string>();
  return r.dump();
}

void json_rec(const Report& r, std::ostringstream& os, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  if (r.is_object()) {
    if (r.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (const auto& [k, v] : r.items()) {
      if (!first) os << ",\n";
      first = false;
      os << pad << Report(k).dump() << ": ";
      json_rec(v, os, indent + 2);
    }
    os << "\n" << close << "}";
  } else if (r.is_array()) {
    if (r.empty()) {
      os << "[]";
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ",\n";
      os << pad;
      json_rec(r[i], os, indent + 2);
    }
    os << "\n" << close << "]";
  } else if (r.is_number_float()) {
    double v = r.get<double>();
    // Non-finite values are not valid JSON numbers.
    if (std::isfinite(v)) {
      os << number(v);
    } else {
      os << '"' << number(v) << '"';
    }
  } else {
    os << r.dump();
  }
}

bool is_flat(const Report& r) { return !r.is_object() && !r.is_array(); }

void text_rec(const Report& r, std::ostringstream& os, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (r.is_object()) {
    for (const auto& [k, v] : r.items()) {
      if (is_flat(v)) {
        os << pad << k << ": " << scalar(v) << "\n";
      } else if (v.empty()) {
        os << pad << k << ": " << (v.is_array() ? "[]" : "{}") << "\n";
      } else {
        os << pad << k << ":\n";
        text_rec(v, os, indent + 2);
      }
    }
  } else if (r.is_array()) {
    for (const auto& v : r) {
      if (is_flat(v)) {
        os << pad << "- " << scalar(v) << "\n";
      } else {
        os << pad << "-\n";
        text_rec(v, os, indent + 2);
      }
    }
  } else {
    os << pad << scalar(r) << "\n";
  }
}

}  // namespace

std::string render_json(const Report& r) {
  std::ostringstream os;
  json_rec(r, os, 0);
  os << "\n";
  return os.str();
}

std::string render_text(const Report& r) {
  std::ostringstream os;
  text_rec(r, os, 0);
  return os.str();
}

Report to_report(const Bindings& b) {
  Report out = Report::object();
  for (const auto& [k, v] : b.values()) out[k] = v;
  return out;
}

Report to_report(const std::vector<Expr>& es) {
  Report out = Report::array();
  for (const auto& e : es) out.push_back(render(e));
  return out;
}

}  // namespace diffinv::cli
