#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strsynth/dsl.hpp"

namespace strsynth {

// Bounds and value universes that instantiate the grammar.
struct DslConfig {
  std::string charset;                 // allowed input characters
  std::vector<std::string> constants;  // constant-string universe, sorted + unique
  int max_concat_parts = 6;            // cap on Concat arity
  int const_pos_max = 5;               // |k| bound for ConstPos
  int match_k_max = 3;                 // |k| bound for token matches
  int max_string_len = 32;             // string length bound T

  static DslConfig defaults();
};

enum class RuleKind : uint8_t {
  ConcatLast,  // e -> f
  ConcatCons,  // e -> f e
  FConstStr,   // f -> ConstStr(s)
  FSubStr,     // f -> SubStr(p, p)
  PConstPos,   // p -> ConstPos(kp)
  PMatch,      // p -> Match(r, k, d)
  RClassTok,   // r -> one of the 8 class tokens
  RConstTok,   // r -> Tok(s)
  SLiteral,    // s -> "<lit>"
  KMatchInt,   // k -> <int>, match count
  KPosInt,     // kp -> <int>, constant position offset
  DStart,      // d -> Start
  DEnd,        // d -> End
};

struct Rule {
  int id = -1;
  int lhs = -1;
  std::vector<int> rhs;  // symbol ids; always non-empty
  RuleKind kind = RuleKind::ConcatLast;
  int int_value = 0;          // KMatchInt / KPosInt
  TokenKind token_kind{};     // RClassTok
  std::string str_value;      // SLiteral

  int arity() const { return static_cast<int>(rhs.size()); }
};

// Explicit context-free grammar for the DSL. Every AST corresponds to exactly
// one derivation tree; value-carrying terminals (constants, integers) are
// modelled as dedicated rules so the rule inventory is finite.
class Grammar {
 public:
  static Grammar build(const DslConfig& config);

  const DslConfig& config() const { return config_; }

  int start() const { return sym_e_; }
  int num_symbols() const { return static_cast<int>(symbol_names_.size()); }
  int num_rules() const { return static_cast<int>(rules_.size()); }

  bool is_nonterminal(int sym) const { return nonterminal_[sym]; }
  const std::string& symbol_name(int sym) const { return symbol_names_[sym]; }
  const Rule& rule(int id) const { return rules_[id]; }
  const std::vector<Rule>& rules() const { return rules_; }

  // Rule ids with the given lhs, in declaration order. Empty for terminals.
  const std::vector<int>& rules_for(int sym) const { return rules_for_[sym]; }

  // Minimum number of rule nodes in any complete derivation of `sym`
  // (0 for terminals).
  int min_derivation_size(int sym) const { return min_size_[sym]; }

  int sym_e() const { return sym_e_; }
  int sym_f() const { return sym_f_; }
  int sym_p() const { return sym_p_; }
  int sym_r() const { return sym_r_; }
  int sym_s() const { return sym_s_; }
  int sym_k() const { return sym_k_; }
  int sym_kp() const { return sym_kp_; }
  int sym_d() const { return sym_d_; }

  // Rule lookup helpers used when converting ASTs to derivations.
  int rule_concat_last() const { return rule_concat_last_; }
  int rule_concat_cons() const { return rule_concat_cons_; }
  int rule_f_const_str() const { return rule_f_const_str_; }
  int rule_f_sub_str() const { return rule_f_sub_str_; }
  int rule_p_const_pos() const { return rule_p_const_pos_; }
  int rule_p_match() const { return rule_p_match_; }
  int rule_r_class(TokenKind k) const;
  int rule_r_const_tok() const { return rule_r_const_tok_; }
  int rule_s_literal(const std::string& lit) const;  // -1 if not in universe
  int rule_k_match(int k) const;                     // -1 if out of range
  int rule_kp(int k) const;                          // -1 if out of range
  int rule_d(Direction d) const;

  // Stable content hash over symbols and rules (used to pair checkpoints
  // with the grammar they were trained against).
  uint64_t hash() const;

  // Rule list as JSON (symbols, rules with names and arities).
  std::string dump_json() const;

 private:
  Grammar() = default;

  int add_symbol(const std::string& name, bool nonterminal);
  int add_rule(Rule r);
  void compute_min_sizes();

  DslConfig config_;
  std::vector<std::string> symbol_names_;
  std::vector<bool> nonterminal_;
  std::vector<Rule> rules_;
  std::vector<std::vector<int>> rules_for_;
  std::vector<int> min_size_;

  int sym_e_ = -1, sym_f_ = -1, sym_p_ = -1, sym_r_ = -1;
  int sym_s_ = -1, sym_k_ = -1, sym_kp_ = -1, sym_d_ = -1;
  int rule_concat_last_ = -1, rule_concat_cons_ = -1;
  int rule_f_const_str_ = -1, rule_f_sub_str_ = -1;
  int rule_p_const_pos_ = -1, rule_p_match_ = -1;
  int rule_r_class_[kNumClassTokenKinds] = {};
  int rule_r_const_tok_ = -1;
  int rule_d_start_ = -1, rule_d_end_ = -1;
  std::vector<int> rule_s_literal_;   // index into constants -> rule id
  std::vector<int> rule_k_match_;     // offset-indexed
  std::vector<int> rule_kp_;          // offset-indexed
};

}  // namespace strsynth
