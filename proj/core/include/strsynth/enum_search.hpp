#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "strsynth/datagen.hpp"
#include "strsynth/grammar.hpp"
#include "strsynth/ppt.hpp"

namespace strsynth {

struct SearchLimits {
  int max_size = 13;
  long max_expansions = 2'000'000;
  long time_budget_ms = 60'000;
};

struct EnumResult {
  enum class Status { Found, NotFound } status = Status::NotFound;
  std::optional<Program> program;
  long expansions = 0;
  long millis = 0;
  std::string reason;  // exhaustion reason when NotFound

  bool found() const { return status == Status::Found; }
  std::string to_json() const;
};

// Ranking hooks; the defaults are leftmost-first leaves and rules ordered by
// minimal completion size with declaration order breaking ties.
using RankNonterminals = std::function<std::vector<int>(const Ppt&)>;
using RankRules = std::function<std::vector<int>(int symbol, const Grammar&)>;

std::vector<int> rank_nonterminals(const Ppt& ppt);
std::vector<int> rank_rules(int symbol, const Grammar& g);

// Dedup store for the search: canonical keys of every enqueued derivation
// plus output signatures of complete programs already examined.
struct SeenStore {
  std::unordered_set<std::string> enqueued;
  std::unordered_set<std::string> signatures;
};

// True iff the candidate's canonical serialization was already enqueued, or —
// for complete candidates — its output signature on the task inputs matches a
// previously recorded one. Pure check; callers record keys separately.
bool subsumed(const Ppt& candidate, const SeenStore& store, const Task& task);

// Output signature of a complete tree's program on the task inputs (errors
// are encoded distinctly from outputs).
std::string output_signature(const Program& prog, const Task& task);

struct EnumHooks {
  RankNonterminals rank_leaves = rank_nonterminals;
  RankRules rank_rules_for = rank_rules;
};

// Best-first top-down enumeration over partial derivations, ordered by
// (min completion size, insertion order). Returns the first complete program
// consistent with every task example; by the queue ordering it is
// size-minimal under the derivation-node metric.
EnumResult enum_search(const Grammar& g, const Task& task, const SearchLimits& limits,
                       const EnumHooks& hooks = {});

}  // namespace strsynth
