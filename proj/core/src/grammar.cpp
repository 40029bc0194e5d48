#include "strsynth/grammar.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace strsynth {

DslConfig DslConfig::defaults() {
  DslConfig c;
  for (char ch = 0x20; ch <= 0x7e; ++ch) c.charset.push_back(ch);
  std::set<std::string> universe;
  for (char ch : c.charset) universe.insert(std::string(1, ch));
  universe.insert(", ");
  universe.insert(". ");
  universe.insert("0x");
  c.constants.assign(universe.begin(), universe.end());
  return c;
}

int Grammar::add_symbol(const std::string& name, bool nonterminal) {
  symbol_names_.push_back(name);
  nonterminal_.push_back(nonterminal);
  rules_for_.emplace_back();
  return static_cast<int>(symbol_names_.size()) - 1;
}

int Grammar::add_rule(Rule r) {
  r.id = static_cast<int>(rules_.size());
  rules_for_[r.lhs].push_back(r.id);
  rules_.push_back(std::move(r));
  return rules_.back().id;
}

Grammar Grammar::build(const DslConfig& config) {
  Grammar g;
  g.config_ = config;
  std::sort(g.config_.constants.begin(), g.config_.constants.end());
  g.config_.constants.erase(
      std::unique(g.config_.constants.begin(), g.config_.constants.end()),
      g.config_.constants.end());
  const auto& cfg = g.config_;
  if (cfg.constants.empty()) throw std::invalid_argument("empty constant universe");
  for (const auto& lit : cfg.constants) {
    if (lit.empty()) throw std::invalid_argument("empty constant literal");
  }

  g.sym_e_ = g.add_symbol("e", true);
  g.sym_f_ = g.add_symbol("f", true);
  g.sym_p_ = g.add_symbol("p", true);
  g.sym_r_ = g.add_symbol("r", true);
  g.sym_s_ = g.add_symbol("s", true);
  g.sym_k_ = g.add_symbol("k", true);
  g.sym_kp_ = g.add_symbol("kp", true);
  g.sym_d_ = g.add_symbol("d", true);

  // Terminals for the 8 class tokens and the two directions.
  int tok_terms[kNumClassTokenKinds];
  for (int i = 0; i < kNumClassTokenKinds; ++i) {
    tok_terms[i] =
        g.add_symbol(std::string("T_") + token_kind_name(static_cast<TokenKind>(i)), false);
  }
  int term_start = g.add_symbol("T_Start", false);
  int term_end = g.add_symbol("T_End", false);

  // One terminal per constant literal.
  std::vector<int> lit_terms;
  lit_terms.reserve(cfg.constants.size());
  for (const auto& lit : cfg.constants) lit_terms.push_back(g.add_symbol("lit:" + lit, false));

  // One terminal per integer value used by either k inventory.
  int lo = -cfg.const_pos_max, hi = cfg.const_pos_max;
  lo = std::min(lo, -cfg.match_k_max);
  hi = std::max(hi, cfg.match_k_max);
  std::vector<int> int_terms(hi - lo + 1, -1);
  for (int v = lo; v <= hi; ++v) int_terms[v - lo] = g.add_symbol("int:" + std::to_string(v), false);

  // Rules, in a fixed declaration order.
  {
    Rule r;
    r.lhs = g.sym_e_;
    r.rhs = {g.sym_f_};
    r.kind = RuleKind::ConcatLast;
    g.rule_concat_last_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_e_;
    r.rhs = {g.sym_f_, g.sym_e_};
    r.kind = RuleKind::ConcatCons;
    g.rule_concat_cons_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_f_;
    r.rhs = {g.sym_s_};
    r.kind = RuleKind::FConstStr;
    g.rule_f_const_str_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_f_;
    r.rhs = {g.sym_p_, g.sym_p_};
    r.kind = RuleKind::FSubStr;
    g.rule_f_sub_str_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_p_;
    r.rhs = {g.sym_kp_};
    r.kind = RuleKind::PConstPos;
    g.rule_p_const_pos_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_p_;
    r.rhs = {g.sym_r_, g.sym_k_, g.sym_d_};
    r.kind = RuleKind::PMatch;
    g.rule_p_match_ = g.add_rule(r);
  }
  for (int i = 0; i < kNumClassTokenKinds; ++i) {
    Rule r;
    r.lhs = g.sym_r_;
    r.rhs = {tok_terms[i]};
    r.kind = RuleKind::RClassTok;
    r.token_kind = static_cast<TokenKind>(i);
    g.rule_r_class_[i] = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_r_;
    r.rhs = {g.sym_s_};
    r.kind = RuleKind::RConstTok;
    g.rule_r_const_tok_ = g.add_rule(r);
  }
  g.rule_s_literal_.resize(cfg.constants.size());
  for (size_t i = 0; i < cfg.constants.size(); ++i) {
    Rule r;
    r.lhs = g.sym_s_;
    r.rhs = {lit_terms[i]};
    r.kind = RuleKind::SLiteral;
    r.str_value = cfg.constants[i];
    g.rule_s_literal_[i] = g.add_rule(r);
  }
  g.rule_k_match_.assign(2 * cfg.match_k_max + 1, -1);
  for (int v = -cfg.match_k_max; v <= cfg.match_k_max; ++v) {
    if (v == 0) continue;
    Rule r;
    r.lhs = g.sym_k_;
    r.rhs = {int_terms[v - lo]};
    r.kind = RuleKind::KMatchInt;
    r.int_value = v;
    g.rule_k_match_[v + cfg.match_k_max] = g.add_rule(r);
  }
  g.rule_kp_.assign(2 * cfg.const_pos_max + 1, -1);
  for (int v = -cfg.const_pos_max; v <= cfg.const_pos_max; ++v) {
    Rule r;
    r.lhs = g.sym_kp_;
    r.rhs = {int_terms[v - lo]};
    r.kind = RuleKind::KPosInt;
    r.int_value = v;
    g.rule_kp_[v + cfg.const_pos_max] = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_d_;
    r.rhs = {term_start};
    r.kind = RuleKind::DStart;
    g.rule_d_start_ = g.add_rule(r);
  }
  {
    Rule r;
    r.lhs = g.sym_d_;
    r.rhs = {term_end};
    r.kind = RuleKind::DEnd;
    g.rule_d_end_ = g.add_rule(r);
  }

  g.compute_min_sizes();
  return g;
}

void Grammar::compute_min_sizes() {
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  min_size_.assign(num_symbols(), kInf);
  for (int s = 0; s < num_symbols(); ++s) {
    if (!nonterminal_[s]) min_size_[s] = 0;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : rules_) {
      int total = 1;
      for (int c : r.rhs) {
        if (min_size_[c] >= kInf) {
          total = kInf;
          break;
        }
        total += min_size_[c];
      }
      if (total < min_size_[r.lhs]) {
        min_size_[r.lhs] = total;
        changed = true;
      }
    }
  }
  for (int s = 0; s < num_symbols(); ++s) {
    if (min_size_[s] >= kInf) throw std::logic_error("symbol with no complete derivation");
  }
}

int Grammar::rule_r_class(TokenKind k) const {
  int i = static_cast<int>(k);
  if (i < 0 || i >= kNumClassTokenKinds) return -1;
  return rule_r_class_[i];
}

int Grammar::rule_s_literal(const std::string& lit) const {
  auto it = std::lower_bound(config_.constants.begin(), config_.constants.end(), lit);
  if (it == config_.constants.end() || *it != lit) return -1;
  return rule_s_literal_[it - config_.constants.begin()];
}

int Grammar::rule_k_match(int k) const {
  if (k == 0 || k < -config_.match_k_max || k > config_.match_k_max) return -1;
  return rule_k_match_[k + config_.match_k_max];
}

int Grammar::rule_kp(int k) const {
  if (k < -config_.const_pos_max || k > config_.const_pos_max) return -1;
  return rule_kp_[k + config_.const_pos_max];
}

int Grammar::rule_d(Direction d) const {
  return d == Direction::Start ? rule_d_start_ : rule_d_end_;
}

uint64_t Grammar::hash() const {
  // FNV-1a over the canonical dump; stable across builds.
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0xff;
    h *= 0x100000001b3ull;
  };
  for (const auto& name : symbol_names_) mix(name);
  for (const Rule& r : rules_) {
    mix(symbol_names_[r.lhs]);
    for (int c : r.rhs) mix(symbol_names_[c]);
  }
  return h;
}

std::string Grammar::dump_json() const {
  nlohmann::json j;
  j["start"] = symbol_names_[sym_e_];
  j["symbols"] = nlohmann::json::array();
  for (int s = 0; s < num_symbols(); ++s) {
    j["symbols"].push_back({{"id", s},
                            {"name", symbol_names_[s]},
                            {"nonterminal", static_cast<bool>(nonterminal_[s])}});
  }
  j["rules"] = nlohmann::json::array();
  for (const Rule& r : rules_) {
    nlohmann::json rhs = nlohmann::json::array();
    for (int c : r.rhs) rhs.push_back(symbol_names_[c]);
    j["rules"].push_back({{"id", r.id},
                          {"lhs", symbol_names_[r.lhs]},
                          {"rhs", rhs},
                          {"arity", r.arity()}});
  }
  j["hash"] = hash();
  return j.dump(2);
}

}  // namespace strsynth
