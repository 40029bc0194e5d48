#include "strsynth/dsl.hpp"

#include <cctype>
#include <stdexcept>

namespace strsynth {

namespace {

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
inline bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

template <typename Pred>
std::vector<Span> maximal_runs(std::string_view v, Pred in_class) {
  std::vector<Span> spans;
  int n = static_cast<int>(v.size());
  int i = 0;
  while (i < n) {
    if (!in_class(v[i])) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && in_class(v[j])) ++j;
    spans.push_back({i, j});
    i = j;
  }
  return spans;
}

// ProperCase: one uppercase letter followed by one or more lowercase letters.
// Maximality: the lowercase tail is extended as far as possible.
std::vector<Span> proper_case_runs(std::string_view v) {
  std::vector<Span> spans;
  int n = static_cast<int>(v.size());
  int i = 0;
  while (i + 1 < n) {
    if (is_upper(v[i]) && is_lower(v[i + 1])) {
      int j = i + 1;
      while (j < n && is_lower(v[j])) ++j;
      spans.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return spans;
}

std::vector<Span> const_tok_occurrences(std::string_view v, std::string_view lit) {
  std::vector<Span> spans;
  if (lit.empty()) return spans;
  size_t pos = 0;
  while ((pos = v.find(lit, pos)) != std::string_view::npos) {
    spans.push_back({static_cast<int>(pos), static_cast<int>(pos + lit.size())});
    pos += lit.size();  // non-overlapping
  }
  return spans;
}

}  // namespace

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::ProperCase: return "ProperCase";
    case TokenKind::Caps: return "CAPS";
    case TokenKind::Lowercase: return "Lowercase";
    case TokenKind::Digits: return "Digits";
    case TokenKind::Alphabets: return "Alphabets";
    case TokenKind::Alphanumeric: return "Alphanumeric";
    case TokenKind::StartOfString: return "StartOfString";
    case TokenKind::EndOfString: return "EndOfString";
    case TokenKind::ConstTok: return "Tok";
  }
  return "?";
}

std::optional<TokenKind> token_kind_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(TokenKind::ConstTok); ++i) {
    auto k = static_cast<TokenKind>(i);
    if (name == token_kind_name(k)) return k;
  }
  return std::nullopt;
}

std::vector<Span> match_token(const RegexToken& token, std::string_view v) {
  int n = static_cast<int>(v.size());
  switch (token.kind) {
    case TokenKind::ProperCase: return proper_case_runs(v);
    case TokenKind::Caps: return maximal_runs(v, is_upper);
    case TokenKind::Lowercase: return maximal_runs(v, is_lower);
    case TokenKind::Digits: return maximal_runs(v, is_digit);
    case TokenKind::Alphabets: return maximal_runs(v, is_alpha);
    case TokenKind::Alphanumeric: return maximal_runs(v, is_alnum);
    case TokenKind::StartOfString: return {{0, 0}};
    case TokenKind::EndOfString: return {{n, n}};
    case TokenKind::ConstTok: return const_tok_occurrences(v, token.literal);
  }
  return {};
}

const char* eval_error_name(EvalError e) {
  switch (e) {
    case EvalError::None: return "none";
    case EvalError::MatchNotFound: return "match_not_found";
    case EvalError::IndexOutOfRange: return "index_out_of_range";
    case EvalError::EmptyRange: return "empty_range";
  }
  return "?";
}

PosResult eval_position(const PositionLogic& p, std::string_view v) {
  int n = static_cast<int>(v.size());
  if (const auto* cp = std::get_if<ConstPos>(&p)) {
    int idx = cp->offset >= 0 ? cp->offset : n + cp->offset + 1;
    if (idx < 0 || idx > n) return {idx, EvalError::IndexOutOfRange};
    return {idx, EvalError::None};
  }
  const auto& tm = std::get<TokenMatch>(p);
  std::vector<Span> spans = match_token(tm.token, v);
  int m = static_cast<int>(spans.size());
  int abs_k = tm.k > 0 ? tm.k : -tm.k;
  if (abs_k == 0 || abs_k > m) return {0, EvalError::MatchNotFound};
  const Span& s = tm.k > 0 ? spans[tm.k - 1] : spans[m - abs_k];
  int idx = tm.dir == Direction::Start ? s.start : s.end;
  if (idx < 0 || idx > n) return {idx, EvalError::IndexOutOfRange};
  return {idx, EvalError::None};
}

EvalResult eval_substring(const SubstringExpr& f, std::string_view v) {
  if (const auto* cs = std::get_if<ConstStr>(&f)) {
    return {cs->value, EvalError::None};
  }
  const auto& ss = std::get<SubStr>(f);
  PosResult left = eval_position(ss.left, v);
  if (!left.ok()) return {{}, left.error};
  PosResult right = eval_position(ss.right, v);
  if (!right.ok()) return {{}, right.error};
  if (left.index > right.index) return {{}, EvalError::EmptyRange};
  return {std::string(v.substr(left.index, right.index - left.index)), EvalError::None};
}

EvalResult eval_program(const Program& prog, std::string_view v) {
  std::string out;
  for (const SubstringExpr& f : prog.parts) {
    EvalResult part = eval_substring(f, v);
    if (!part.ok()) return {{}, part.error};
    out += part.output;
  }
  return {std::move(out), EvalError::None};
}

}  // namespace strsynth
