#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "strsynth/dsl.hpp"

namespace strsynth {

// Result of parsing the canonical surface syntax:
//   Concat(part, ...)            parts are ConstStr("...") or SubStr(pos, pos)
//   ConstPos(int)                constant position
//   Match(TOKEN, int, Start|End) TOKEN is a class token name or Tok("...")
// String literals use backslash escapes (\" \\ \n \t \r).
struct ParseResult {
  std::optional<Program> program;
  size_t offset = 0;      // byte offset of the failure
  std::string expected;   // what the parser was looking for

  bool ok() const { return program.has_value(); }
  std::string message() const;
};

ParseResult parse_program(std::string_view text);

// Canonical, whitespace-normalized text. Injective over ASTs;
// parse_program(serialize_program(p)) reproduces p exactly.
std::string serialize_program(const Program& prog);

std::string serialize_substring(const SubstringExpr& f);
std::string serialize_position(const PositionLogic& p);

}  // namespace strsynth
