#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace strsynth {

// The nine regex token kinds. The first eight are fixed character-class
// matchers; ConstTok matches a literal string from the constant universe.
enum class TokenKind : uint8_t {
  ProperCase,
  Caps,
  Lowercase,
  Digits,
  Alphabets,
  Alphanumeric,
  StartOfString,
  EndOfString,
  ConstTok,
};

constexpr int kNumClassTokenKinds = 8;

const char* token_kind_name(TokenKind k);
std::optional<TokenKind> token_kind_from_name(std::string_view name);

struct RegexToken {
  TokenKind kind = TokenKind::ProperCase;
  std::string literal;  // only for ConstTok, non-empty

  bool operator==(const RegexToken&) const = default;
};

struct Span {
  int start = 0;
  int end = 0;  // exclusive

  bool operator==(const Span&) const = default;
};

// All maximal, disjoint, left-to-right matches of `token` in `v`.
// StartOfString yields [(0,0)], EndOfString [(len,len)]. ConstTok yields the
// non-overlapping occurrences scanning from the left. Empty vector when there
// is no match.
std::vector<Span> match_token(const RegexToken& token, std::string_view v);

enum class Direction : uint8_t { Start, End };

// Position logics evaluate to an index into the input string.
struct ConstPos {
  int offset = 0;

  bool operator==(const ConstPos&) const = default;
};

struct TokenMatch {
  RegexToken token;
  int k = 1;  // 1-indexed; k < 0 counts matches from the end. Never 0.
  Direction dir = Direction::Start;

  bool operator==(const TokenMatch&) const = default;
};

using PositionLogic = std::variant<ConstPos, TokenMatch>;

struct ConstStr {
  std::string value;  // non-empty, drawn from the constant universe

  bool operator==(const ConstStr&) const = default;
};

struct SubStr {
  PositionLogic left;
  PositionLogic right;

  bool operator==(const SubStr&) const = default;
};

using SubstringExpr = std::variant<ConstStr, SubStr>;

// A program is a concatenation of one or more substring expressions.
struct Program {
  std::vector<SubstringExpr> parts;

  bool operator==(const Program&) const = default;
};

enum class EvalError : uint8_t {
  None,
  MatchNotFound,
  IndexOutOfRange,
  EmptyRange,
};

const char* eval_error_name(EvalError e);

struct PosResult {
  int index = 0;
  EvalError error = EvalError::None;

  bool ok() const { return error == EvalError::None; }
};

// ConstPos(k) maps to k for k >= 0 and to len(v)+k+1 for k < 0, so that
// ConstPos(-1) addresses the end of the string. TokenMatch selects the k-th
// match from the front (k > 0) or the |k|-th from the back (k < 0) and
// returns its start or end per `dir`.
PosResult eval_position(const PositionLogic& p, std::string_view v);

struct EvalResult {
  std::string output;
  EvalError error = EvalError::None;

  bool ok() const { return error == EvalError::None; }
};

EvalResult eval_substring(const SubstringExpr& f, std::string_view v);

// Concatenation of the parts' evaluations; the first error aborts evaluation.
EvalResult eval_program(const Program& prog, std::string_view v);

}  // namespace strsynth
