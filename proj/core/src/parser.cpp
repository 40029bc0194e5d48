#include "strsynth/parser.hpp"

#include <cctype>

namespace strsynth {

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

struct Parser {
  std::string_view text;
  size_t pos = 0;
  size_t err_offset = 0;
  std::string err_expected;
  bool failed = false;

  bool fail(const std::string& expected) {
    if (!failed) {
      failed = true;
      err_offset = pos;
      err_expected = expected;
    }
    return false;
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool expect(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return fail(std::string("'") + c + "'");
  }

  bool peek(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  bool keyword(std::string_view kw) {
    skip_ws();
    if (text.substr(pos, kw.size()) == kw) {
      pos += kw.size();
      return true;
    }
    return false;
  }

  std::string read_ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
      ++pos;
    }
    return std::string(text.substr(start, pos - start));
  }

  bool parse_int(int& out) {
    skip_ws();
    size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    size_t digits = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == digits) {
      pos = start;
      return fail("integer");
    }
    out = std::stoi(std::string(text.substr(start, pos - start)));
    return true;
  }

  bool parse_string(std::string& out) {
    skip_ws();
    if (pos >= text.size() || text[pos] != '"') return fail("string literal");
    ++pos;
    out.clear();
    while (pos < text.size() && text[pos] != '"') {
      char c = text[pos];
      if (c == '\\') {
        ++pos;
        if (pos >= text.size()) return fail("escape character");
        switch (text[pos]) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: return fail("valid escape (one of \" \\ n t r)");
        }
        ++pos;
      } else {
        out += c;
        ++pos;
      }
    }
    if (pos >= text.size()) return fail("closing '\"'");
    ++pos;
    return true;
  }

  bool parse_position(PositionLogic& out) {
    skip_ws();
    size_t at = pos;
    std::string head = read_ident();
    if (head == "ConstPos") {
      int k = 0;
      if (!expect('(') || !parse_int(k) || !expect(')')) return false;
      out = ConstPos{k};
      return true;
    }
    if (head == "Match") {
      if (!expect('(')) return false;
      RegexToken tok;
      skip_ws();
      size_t tok_at = pos;
      std::string name = read_ident();
      if (name == "Tok") {
        std::string lit;
        if (!expect('(') || !parse_string(lit) || !expect(')')) return false;
        if (lit.empty()) {
          pos = tok_at;
          return fail("non-empty token literal");
        }
        tok = RegexToken{TokenKind::ConstTok, lit};
      } else if (auto kind = token_kind_from_name(name);
                 kind && *kind != TokenKind::ConstTok) {
        tok = RegexToken{*kind, {}};
      } else {
        pos = tok_at;
        return fail("token name or Tok(\"...\")");
      }
      int k = 0;
      if (!expect(',') || !parse_int(k)) return false;
      if (k == 0) return fail("nonzero match count");
      if (!expect(',')) return false;
      skip_ws();
      size_t dir_at = pos;
      std::string dir = read_ident();
      Direction d;
      if (dir == "Start") {
        d = Direction::Start;
      } else if (dir == "End") {
        d = Direction::End;
      } else {
        pos = dir_at;
        return fail("Start or End");
      }
      if (!expect(')')) return false;
      out = TokenMatch{tok, k, d};
      return true;
    }
    pos = at;
    return fail("ConstPos or Match");
  }

  bool parse_part(SubstringExpr& out) {
    skip_ws();
    size_t at = pos;
    std::string head = read_ident();
    if (head == "ConstStr") {
      std::string s;
      if (!expect('(') || !parse_string(s)) return false;
      if (s.empty()) {
        pos = at;
        return fail("non-empty constant string");
      }
      if (!expect(')')) return false;
      out = ConstStr{s};
      return true;
    }
    if (head == "SubStr") {
      PositionLogic l, r;
      if (!expect('(') || !parse_position(l) || !expect(',') || !parse_position(r) ||
          !expect(')')) {
        return false;
      }
      out = SubStr{l, r};
      return true;
    }
    pos = at;
    return fail("ConstStr or SubStr");
  }

  bool parse_top(Program& out) {
    if (!keyword("Concat")) return fail("Concat");
    if (!expect('(')) return false;
    if (peek(')')) return fail("at least one part");
    while (true) {
      SubstringExpr part;
      if (!parse_part(part)) return false;
      out.parts.push_back(std::move(part));
      if (peek(',')) {
        expect(',');
        continue;
      }
      break;
    }
    if (!expect(')')) return false;
    skip_ws();
    if (pos != text.size()) return fail("end of input");
    return true;
  }
};

}  // namespace

std::string ParseResult::message() const {
  if (ok()) return "ok";
  return "syntax error at offset " + std::to_string(offset) + ": expected " + expected;
}

ParseResult parse_program(std::string_view text) {
  Parser p{text, 0, 0, {}, false};
  Program prog;
  if (p.parse_top(prog)) return {std::move(prog), 0, {}};
  return {std::nullopt, p.err_offset, p.err_expected};
}

std::string serialize_position(const PositionLogic& p) {
  if (const auto* cp = std::get_if<ConstPos>(&p)) {
    return "ConstPos(" + std::to_string(cp->offset) + ")";
  }
  const auto& tm = std::get<TokenMatch>(p);
  std::string tok = tm.token.kind == TokenKind::ConstTok
                        ? "Tok(" + quote(tm.token.literal) + ")"
                        : token_kind_name(tm.token.kind);
  std::string dir = tm.dir == Direction::Start ? "Start" : "End";
  return "Match(" + tok + ", " + std::to_string(tm.k) + ", " + dir + ")";
}

std::string serialize_substring(const SubstringExpr& f) {
  if (const auto* cs = std::get_if<ConstStr>(&f)) {
    return "ConstStr(" + quote(cs->value) + ")";
  }
  const auto& ss = std::get<SubStr>(f);
  return "SubStr(" + serialize_position(ss.left) + ", " + serialize_position(ss.right) + ")";
}

std::string serialize_program(const Program& prog) {
  std::string out = "Concat(";
  for (size_t i = 0; i < prog.parts.size(); ++i) {
    if (i) out += ", ";
    out += serialize_substring(prog.parts[i]);
  }
  out += ")";
  return out;
}

}  // namespace strsynth
