#include "sizerforge/spec_expr.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "sizerforge/error.hpp"
#include "sizerforge/numeric.hpp"

namespace sizerforge {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
  }
  return "?";
}

bool is_lower_bound(CompareOp op) {
  return op == CompareOp::Greater || op == CompareOp::GreaterEqual;
}

bool Comparison::holds(double value) const {
  switch (op) {
    case CompareOp::Greater: return value > threshold;
    case CompareOp::GreaterEqual: return value >= threshold;
    case CompareOp::Less: return value < threshold;
    case CompareOp::LessEqual: return value <= threshold;
  }
  return false;
}

std::string to_string(const SpecExpr& spec) {
  std::string out;
  for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
    if (i) out += " AND ";
    const auto& c = spec.clauses[i];
    out += c.metric;
    out += ' ';
    out += to_string(c.op);
    out += ' ';
    out += format_number(c.threshold);
  }
  return out;
}

namespace {

enum class TokKind { Ident, Op, Number, And, Or, Not, LParen, RParen, End, Bad };

struct Token {
  TokKind kind;
  std::string text;
  std::size_t pos;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) ++i;
      std::string word(src.substr(start, i - start));
      const std::string up = upper(word);
      TokKind kind = TokKind::Ident;
      if (up == "AND") kind = TokKind::And;
      else if (up == "OR") kind = TokKind::Or;
      else if (up == "NOT") kind = TokKind::Not;
      out.push_back({kind, std::move(word), start});
    } else if (c == '<' || c == '>' || c == '=' || c == '!') {
      // Maximal munch over operator characters so that `>>` or `=<` surface
      // as one malformed operator at the right column.
      while (i < src.size() && (src[i] == '<' || src[i] == '>' || src[i] == '=' || src[i] == '!')) ++i;
      out.push_back({TokKind::Op, std::string(src.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') {
      ++i;
      while (i < src.size()) {
        const char d = src[i];
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
          ++i;
        } else if ((d == 'e' || d == 'E') && i + 1 < src.size()) {
          ++i;
          if (src[i] == '+' || src[i] == '-') ++i;
        } else {
          break;
        }
      }
      out.push_back({TokKind::Number, std::string(src.substr(start, i - start)), start});
    } else if (c == '(') {
      out.push_back({TokKind::LParen, "(", start});
      ++i;
    } else if (c == ')') {
      out.push_back({TokKind::RParen, ")", start});
      ++i;
    } else if (c == '&' || c == '|') {
      while (i < src.size() && src[i] == c) ++i;
      out.push_back({c == '&' ? TokKind::Bad : TokKind::Or, std::string(src.substr(start, i - start)), start});
    } else {
      out.push_back({TokKind::Bad, std::string(1, c), start});
      ++i;
    }
  }
  out.push_back({TokKind::End, "", src.size()});
  return out;
}

[[noreturn]] void fail(std::size_t pos, const std::string& reason) {
  throw Error(ErrorCode::SpecParseError, "at column " + std::to_string(pos) + ": " + reason);
}

[[noreturn]] void unsupported(const Token& t) {
  throw Error(ErrorCode::UnsupportedCombinator,
              "'" + t.text + "' at column " + std::to_string(t.pos) +
                  " (only AND-joined comparisons are supported)");
}

}  // namespace

SpecExpr parse_spec(std::string_view text) {
  const auto toks = lex(text);
  // Reject unsupported combinators up front so the error names them instead
  // of whatever token happens to follow.
  for (const auto& t : toks) {
    if (t.kind == TokKind::Or || t.kind == TokKind::Not || t.kind == TokKind::LParen ||
        t.kind == TokKind::RParen) {
      unsupported(t);
    }
  }

  SpecExpr spec;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (true) {
    const Token& name = toks[i];
    if (name.kind != TokKind::Ident) {
      fail(name.pos, name.kind == TokKind::End ? "expected metric name, got end of input"
                                               : "expected metric name, got '" + name.text + "'");
    }
    const Token& op = toks[i + 1];
    if (op.kind != TokKind::Op) {
      fail(op.pos, "expected comparison operator after '" + name.text + "'");
    }
    Comparison cmp;
    cmp.metric = name.text;
    if (op.text == ">") cmp.op = CompareOp::Greater;
    else if (op.text == ">=") cmp.op = CompareOp::GreaterEqual;
    else if (op.text == "<") cmp.op = CompareOp::Less;
    else if (op.text == "<=") cmp.op = CompareOp::LessEqual;
    else fail(op.pos, "unknown operator '" + op.text + "'");

    const Token& num = toks[i + 2];
    if (num.kind != TokKind::Number || !parse_number(num.text, cmp.threshold)) {
      fail(num.pos, "expected number after '" + op.text + "'");
    }
    if (!std::isfinite(cmp.threshold)) fail(num.pos, "threshold must be finite");
    if (!seen.insert(cmp.metric).second) {
      fail(name.pos, "metric '" + cmp.metric + "' appears twice");
    }
    spec.clauses.push_back(std::move(cmp));

    i += 3;
    if (toks[i].kind == TokKind::End) break;
    if (toks[i].kind != TokKind::And) {
      fail(toks[i].pos, "expected AND, got '" + toks[i].text + "'");
    }
    ++i;
  }
  return spec;
}

SpecVerdict evaluate_spec(const SpecExpr& spec, const std::map<std::string, double>& metrics) {
  SpecVerdict verdict;
  verdict.pass = true;
  for (const auto& clause : spec.clauses) {
    auto it = metrics.find(clause.metric);
    if (it == metrics.end()) throw Error(ErrorCode::MissingMetric, clause.metric);
    ClauseResult r{clause, it->second, clause.holds(it->second)};
    verdict.pass = verdict.pass && r.pass;
    verdict.clauses.push_back(std::move(r));
  }
  return verdict;
}

SpecDirections split_directions(const SpecExpr& spec) {
  SpecDirections dirs;
  for (const auto& c : spec.clauses) {
    MetricTarget t{c.metric, c.threshold, c.op};
    (is_lower_bound(c.op) ? dirs.maximize : dirs.minimize).push_back(std::move(t));
  }
  return dirs;
}

}  // namespace sizerforge
