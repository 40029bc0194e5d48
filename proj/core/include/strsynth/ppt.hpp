#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "strsynth/grammar.hpp"

namespace strsynth {

// A (partial) program tree: leaves carry grammar symbols, inner nodes carry
// production rules. The tree is complete once every leaf is a terminal.
struct PptNode {
  int symbol = -1;            // leaf symbol, or the rule's lhs for inner nodes
  int rule = -1;              // -1 for leaves
  std::vector<int> children;  // node indices; empty for leaves
};

struct Expansion {
  int leaf = -1;  // node index of a nonterminal leaf
  int rule = -1;  // production rule with lhs == leaf symbol

  bool operator==(const Expansion&) const = default;
};

struct InvalidExpansion : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class Ppt {
 public:
  explicit Ppt(const Grammar& g);

  const Grammar& grammar() const { return *grammar_; }
  int root() const { return 0; }
  const PptNode& node(int i) const { return nodes_[i]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // Number of rule applications so far (inner nodes).
  int rule_node_count() const { return rule_nodes_; }

  bool complete() const;

  // Leaves in left-to-right (in-order) position.
  std::vector<int> leaves() const;
  std::vector<int> nonterminal_leaves() const;

  // Replaces leaf e.leaf by an inner node carrying e.rule with fresh leaves
  // for each RHS symbol. Throws InvalidExpansion when e is not applicable.
  void apply(const Expansion& e);

  // rule_node_count() plus the minimal completion cost of every remaining
  // nonterminal leaf; equals the final size for complete trees.
  int min_completion_size() const;

  // Depth of the e -> f e chain, i.e. the number of Concat parts this tree
  // commits to (counting unexpanded e leaves as one pending part).
  int concat_parts_lower_bound() const;

  // Compact injective encoding of the tree (rule ids with placeholders for
  // unexpanded leaves); used as a dedup key by the enumerator.
  std::string key() const;

  // Validates structure: child symbols match each inner node's rule RHS.
  bool well_formed() const;

 private:
  void collect_leaves(int n, std::vector<int>& out) const;

  const Grammar* grammar_;
  std::vector<PptNode> nodes_;
  int rule_nodes_ = 0;
};

// All valid expansions: every (nonterminal leaf, applicable rule) pair,
// leaves left-to-right, rules in declaration order. Empty iff complete.
std::vector<Expansion> valid_expansions(const Ppt& ppt);

// The unique derivation tree of a program. Throws std::invalid_argument when
// the program uses values outside the grammar's universe.
Ppt derivation_of(const Program& prog, const Grammar& g);

// AST of a complete tree.
Program program_of(const Ppt& ppt);

// Number of production-rule applications in the canonical derivation.
int program_size(const Program& prog, const Grammar& g);

// Leftmost derivation: rule ids in the order that rebuilds `prog` by always
// expanding the leftmost nonterminal leaf. Its length equals program_size.
std::vector<int> derivation_trace(const Program& prog, const Grammar& g);

}  // namespace strsynth
