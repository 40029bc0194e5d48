#include "strsynth/ppt.hpp"

#include <functional>

namespace strsynth {

Ppt::Ppt(const Grammar& g) : grammar_(&g) {
  nodes_.push_back(PptNode{g.start(), -1, {}});
}

bool Ppt::complete() const {
  for (const PptNode& n : nodes_) {
    if (n.rule == -1 && grammar_->is_nonterminal(n.symbol)) return false;
  }
  return true;
}

void Ppt::collect_leaves(int n, std::vector<int>& out) const {
  const PptNode& node = nodes_[n];
  if (node.rule == -1) {
    out.push_back(n);
    return;
  }
  for (int c : node.children) collect_leaves(c, out);
}

std::vector<int> Ppt::leaves() const {
  std::vector<int> out;
  collect_leaves(root(), out);
  return out;
}

std::vector<int> Ppt::nonterminal_leaves() const {
  std::vector<int> out;
  for (int l : leaves()) {
    if (grammar_->is_nonterminal(nodes_[l].symbol)) out.push_back(l);
  }
  return out;
}

void Ppt::apply(const Expansion& e) {
  if (e.leaf < 0 || e.leaf >= num_nodes()) throw InvalidExpansion("expansion leaf out of range");
  PptNode& leaf = nodes_[e.leaf];
  if (leaf.rule != -1) throw InvalidExpansion("expansion target is not a leaf");
  if (e.rule < 0 || e.rule >= grammar_->num_rules()) throw InvalidExpansion("unknown rule");
  const Rule& r = grammar_->rule(e.rule);
  if (r.lhs != leaf.symbol) throw InvalidExpansion("rule lhs does not match leaf symbol");
  std::vector<int> children;
  children.reserve(r.rhs.size());
  for (int sym : r.rhs) {
    nodes_.push_back(PptNode{sym, -1, {}});
    children.push_back(num_nodes() - 1);
  }
  nodes_[e.leaf].rule = e.rule;
  nodes_[e.leaf].children = std::move(children);
  ++rule_nodes_;
}

int Ppt::min_completion_size() const {
  int total = rule_nodes_;
  for (const PptNode& n : nodes_) {
    if (n.rule == -1 && grammar_->is_nonterminal(n.symbol)) {
      total += grammar_->min_derivation_size(n.symbol);
    }
  }
  return total;
}

int Ppt::concat_parts_lower_bound() const {
  int parts = 0;
  int n = root();
  while (true) {
    const PptNode& node = nodes_[n];
    if (node.rule == -1) return parts + 1;  // pending e leaf: at least one more part
    const Rule& r = grammar_->rule(node.rule);
    if (r.kind == RuleKind::ConcatLast) return parts + 1;
    if (r.kind != RuleKind::ConcatCons) return parts;  // not an e node
    ++parts;
    n = node.children[1];
  }
}

std::string Ppt::key() const {
  std::string out;
  out.reserve(nodes_.size() * 4);
  std::function<void(int)> rec = [&](int i) {
    const PptNode& n = nodes_[i];
    if (n.rule == -1) {
      out += '?';
      out += std::to_string(n.symbol);
      return;
    }
    out += '(';
    out += std::to_string(n.rule);
    for (int c : n.children) {
      out += ' ';
      rec(c);
    }
    out += ')';
  };
  rec(root());
  return out;
}

bool Ppt::well_formed() const {
  for (const PptNode& n : nodes_) {
    if (n.rule == -1) {
      if (!n.children.empty()) return false;
      continue;
    }
    const Rule& r = grammar_->rule(n.rule);
    if (r.lhs != n.symbol) return false;
    if (static_cast<int>(n.children.size()) != r.arity()) return false;
    for (int i = 0; i < r.arity(); ++i) {
      if (nodes_[n.children[i]].symbol != r.rhs[i]) return false;
    }
  }
  return true;
}

std::vector<Expansion> valid_expansions(const Ppt& ppt) {
  std::vector<Expansion> out;
  const Grammar& g = ppt.grammar();
  for (int leaf : ppt.nonterminal_leaves()) {
    for (int rule : g.rules_for(ppt.node(leaf).symbol)) out.push_back({leaf, rule});
  }
  return out;
}

namespace {

// Expands the given leaf with `rule` and returns the fresh child node ids.
std::vector<int> expand(Ppt& ppt, int leaf, int rule) {
  int before = ppt.num_nodes();
  ppt.apply({leaf, rule});
  std::vector<int> children;
  for (int i = before; i < ppt.num_nodes(); ++i) children.push_back(i);
  return children;
}

void build_position(Ppt& ppt, int leaf, const PositionLogic& p, const Grammar& g) {
  if (const auto* cp = std::get_if<ConstPos>(&p)) {
    int rule = g.rule_kp(cp->offset);
    if (rule < 0) throw std::invalid_argument("ConstPos offset outside grammar bounds");
    auto kids = expand(ppt, leaf, g.rule_p_const_pos());
    expand(ppt, kids[0], rule);
    return;
  }
  const auto& tm = std::get<TokenMatch>(p);
  auto kids = expand(ppt, leaf, g.rule_p_match());
  if (tm.token.kind == TokenKind::ConstTok) {
    auto rkids = expand(ppt, kids[0], g.rule_r_const_tok());
    int lit = g.rule_s_literal(tm.token.literal);
    if (lit < 0) throw std::invalid_argument("token literal outside constant universe");
    expand(ppt, rkids[0], lit);
  } else {
    expand(ppt, kids[0], g.rule_r_class(tm.token.kind));
  }
  int krule = g.rule_k_match(tm.k);
  if (krule < 0) throw std::invalid_argument("match count outside grammar bounds");
  expand(ppt, kids[1], krule);
  expand(ppt, kids[2], g.rule_d(tm.dir));
}

void build_part(Ppt& ppt, int leaf, const SubstringExpr& f, const Grammar& g) {
  if (const auto* cs = std::get_if<ConstStr>(&f)) {
    auto kids = expand(ppt, leaf, g.rule_f_const_str());
    int lit = g.rule_s_literal(cs->value);
    if (lit < 0) throw std::invalid_argument("constant outside universe: " + cs->value);
    expand(ppt, kids[0], lit);
    return;
  }
  const auto& ss = std::get<SubStr>(f);
  auto kids = expand(ppt, leaf, g.rule_f_sub_str());
  build_position(ppt, kids[0], ss.left, g);
  build_position(ppt, kids[1], ss.right, g);
}

PositionLogic position_of(const Ppt& ppt, int n) {
  const Grammar& g = ppt.grammar();
  const PptNode& node = ppt.node(n);
  const Rule& r = g.rule(node.rule);
  if (r.kind == RuleKind::PConstPos) {
    return ConstPos{g.rule(ppt.node(node.children[0]).rule).int_value};
  }
  const PptNode& rnode = ppt.node(node.children[0]);
  const Rule& rrule = g.rule(rnode.rule);
  RegexToken tok;
  if (rrule.kind == RuleKind::RConstTok) {
    tok.kind = TokenKind::ConstTok;
    tok.literal = g.rule(ppt.node(rnode.children[0]).rule).str_value;
  } else {
    tok.kind = rrule.token_kind;
  }
  int k = g.rule(ppt.node(node.children[1]).rule).int_value;
  Direction dir = g.rule(ppt.node(node.children[2]).rule).kind == RuleKind::DStart
                      ? Direction::Start
                      : Direction::End;
  return TokenMatch{tok, k, dir};
}

SubstringExpr part_of(const Ppt& ppt, int n) {
  const Grammar& g = ppt.grammar();
  const PptNode& node = ppt.node(n);
  const Rule& r = g.rule(node.rule);
  if (r.kind == RuleKind::FConstStr) {
    return ConstStr{g.rule(ppt.node(node.children[0]).rule).str_value};
  }
  return SubStr{position_of(ppt, node.children[0]), position_of(ppt, node.children[1])};
}

}  // namespace

Ppt derivation_of(const Program& prog, const Grammar& g) {
  if (prog.parts.empty()) throw std::invalid_argument("program has no parts");
  Ppt ppt(g);
  int e_leaf = ppt.root();
  for (size_t i = 0; i < prog.parts.size(); ++i) {
    bool last = i + 1 == prog.parts.size();
    auto kids = expand(ppt, e_leaf, last ? g.rule_concat_last() : g.rule_concat_cons());
    build_part(ppt, kids[0], prog.parts[i], g);
    if (!last) e_leaf = kids[1];
  }
  return ppt;
}

Program program_of(const Ppt& ppt) {
  if (!ppt.complete()) throw std::invalid_argument("tree is not complete");
  const Grammar& g = ppt.grammar();
  Program prog;
  int n = ppt.root();
  while (true) {
    const PptNode& node = ppt.node(n);
    const Rule& r = g.rule(node.rule);
    prog.parts.push_back(part_of(ppt, node.children[0]));
    if (r.kind == RuleKind::ConcatLast) break;
    n = node.children[1];
  }
  return prog;
}

int program_size(const Program& prog, const Grammar& g) {
  return derivation_of(prog, g).rule_node_count();
}

std::vector<int> derivation_trace(const Program& prog, const Grammar& g) {
  // Preorder rule sequence of the derivation tree = leftmost derivation.
  Ppt ppt = derivation_of(prog, g);
  std::vector<int> trace;
  trace.reserve(ppt.rule_node_count());
  std::function<void(int)> rec = [&](int i) {
    const PptNode& n = ppt.node(i);
    if (n.rule == -1) return;
    trace.push_back(n.rule);
    for (int c : n.children) rec(c);
  };
  rec(ppt.root());
  return trace;
}

}  // namespace strsynth
