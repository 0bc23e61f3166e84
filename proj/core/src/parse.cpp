#include "diffinv/parse.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string>
#include <vector>

#include "diffinv/error.hpp"

namespace diffinv {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", pos_});
        return out;
      }
      char c = src_[pos_];
      std::size_t start = pos_;
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        out.push_back({Tok::Number, number(), start});
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        out.push_back({Tok::Ident, identifier(), start});
      } else {
        ++pos_;
        switch (c) {
          case '+': out.push_back({Tok::Plus, "+", start}); break;
          case '-': out.push_back({Tok::Minus, "-", start}); break;
          case '*': out.push_back({Tok::Star, "*", start}); break;
          case '/': out.push_back({Tok::Slash, "/", start}); break;
          case '^': out.push_back({Tok::Caret, "^", start}); break;
          case '(': out.push_back({Tok::LParen, "(", start}); break;
          case ')': out.push_back({Tok::RParen, ")", start}); break;
          default:
            throw SyntaxError(start, {"number", "identifier", "'('", "'-'"}, "'" + std::string(1, c) + "'");
        }
      }
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  std::string number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        throw SyntaxError(pos_, {"exponent digits"}, pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input");
      }
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  // Identifier with an optional jet suffix; returns the canonical symbol name.
  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    std::string name(src_.substr(start, pos_ - start));
    if (pos_ < src_.size() && src_[pos_] == '[') {
      ++pos_;
      std::string idx;
      bool expect_digit = true;
      while (true) {
        skip_space();
        if (pos_ >= src_.size()) throw SyntaxError(pos_, {"digit", "']'"}, "end of input");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
          if (!expect_digit) throw SyntaxError(pos_, {"','", "']'"}, "'" + std::string(1, c) + "'");
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            idx += src_[pos_++];
          }
          expect_digit = false;
        } else if (c == ',' && !expect_digit) {
          idx += ',';
          ++pos_;
          expect_digit = true;
        } else if (c == ']' && !expect_digit) {
          ++pos_;
          break;
        } else {
          throw SyntaxError(pos_, expect_digit ? std::vector<std::string>{"digit"}
                                               : std::vector<std::string>{"','", "']'"},
                            "'" + std::string(1, c) + "'");
        }
      }
      return canonical_index(name, idx);
    }
    if (pos_ < src_.size() && src_[pos_] == '\'') {
      int primes = 0;
      while (pos_ < src_.size() && src_[pos_] == '\'') {
        ++primes;
        ++pos_;
      }
      return jet_base(name) + "[" + std::to_string(primes) + "]";
    }
    return name;
  }

  static std::string jet_base(const std::string& name) { return name == "u" ? "u1" : name; }

  static std::string canonical_index(const std::string& name, const std::string& idx) {
    std::string out = jet_base(name) + "[";
    std::size_t i = 0;
    bool first = true;
    while (i <= idx.size()) {
      std::size_t j = idx.find(',', i);
      if (j == std::string::npos) j = idx.size();
      std::string part = idx.substr(i, j - i);
      std::size_t nz = part.find_first_not_of('0');
      part = nz == std::string::npos ? "0" : part.substr(nz);
      if (!first) out += ",";
      out += part;
      first = false;
      i = j + 1;
    }
    return out + "]";
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

constexpr int kBpAdd = 10;
constexpr int kBpMul = 20;
constexpr int kBpUnary = 30;
constexpr int kBpPow = 40;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Expr run() {
    Expr e = expression(0);
    if (peek().kind != Tok::End) {
      throw SyntaxError(peek().offset, {"operator", "end of input"}, describe(peek()));
    }
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }

  static int infix_bp(Tok k) {
    switch (k) {
      case Tok::Plus:
      case Tok::Minus: return kBpAdd;
      case Tok::Star:
      case Tok::Slash: return kBpMul;
      case Tok::Caret: return kBpPow;
      default: return -1;
    }
  }

  // A chain of * and / is folded by one n-ary mul so the result does not
  // depend on association. A unary minus in front of the chain's first factor
  // is kept raw until the chain is known.
  Expr expression(int min_bp) {
    bool pending_neg = false;
    Expr lhs = prefix(pending_neg);
    while (true) {
      Tok k = peek().kind;
      int bp = infix_bp(k);
      if (bp < 0 || bp <= min_bp) break;
      if (k == Tok::Star || k == Tok::Slash) {
        std::vector<Expr> factors{lhs};
        while ((peek().kind == Tok::Star || peek().kind == Tok::Slash) && kBpMul > min_bp) {
          bool divide = next().kind == Tok::Slash;
          Expr f = expression(kBpMul);
          factors.push_back(divide ? pow(f, Expr(-1)) : f);
        }
        lhs = mul(std::move(factors));
        pending_neg = false;
        continue;
      }
      if (pending_neg) {
        lhs = neg(lhs.argument());
        pending_neg = false;
      }
      next();
      switch (k) {
        case Tok::Plus: lhs = lhs + expression(kBpAdd); break;
        case Tok::Minus: lhs = lhs - expression(kBpAdd); break;
        // right-associative
        case Tok::Caret: lhs = pow(lhs, expression(kBpPow - 1)); break;
        default: break;
      }
    }
    if (pending_neg) lhs = neg(lhs.argument());
    return lhs;
  }

  Expr prefix(bool& pending_neg) {
    Token t = next();
    switch (t.kind) {
      case Tok::Number:
        return literal(t);
      case Tok::Ident: {
        if (peek().kind == Tok::LParen) {
          auto kind = func_from_name(t.text);
          if (!kind) throw UnknownFunction(t.text, t.offset);
          next();
          Expr arg = expression(0);
          expect(Tok::RParen, "')'");
          return apply_func(*kind, arg);
        }
        return Expr::symbol(t.text);
      }
      case Tok::Minus:
        pending_neg = true;
        return Expr::raw_neg(expression(kBpUnary));
      case Tok::Plus:
        return expression(kBpUnary);
      case Tok::LParen: {
        Expr e = expression(0);
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        throw SyntaxError(t.offset, {"number", "identifier", "'('", "'-'"}, describe(t));
    }
  }

  void expect(Tok k, const char* what) {
    if (peek().kind != k) throw SyntaxError(peek().offset, {what}, describe(peek()));
    next();
  }

  static Expr literal(const Token& t) {
    const std::string& s = t.text;
    if (s.find_first_of(".eE") == std::string::npos) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec == std::errc() && p == s.data() + s.size()) return Expr(v);
    }
    return Expr::decimal(std::strtod(s.c_str(), nullptr));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

}  // namespace diffinv
