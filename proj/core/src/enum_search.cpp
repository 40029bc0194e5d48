#include "strsynth/enum_search.hpp"

#include <algorithm>
#include <chrono>
#include <queue>

#include <nlohmann/json.hpp>

#include "strsynth/parser.hpp"

namespace strsynth {

std::string EnumResult::to_json() const {
  nlohmann::json j;
  j["status"] = found() ? "found" : "not_found";
  j["program"] = program ? nlohmann::json(serialize_program(*program)) : nlohmann::json(nullptr);
  j["expansions"] = expansions;
  j["millis"] = millis;
  if (!reason.empty()) j["reason"] = reason;
  return j.dump();
}

std::vector<int> rank_nonterminals(const Ppt& ppt) {
  return ppt.nonterminal_leaves();  // already left-to-right
}

std::vector<int> rank_rules(int symbol, const Grammar& g) {
  std::vector<int> rules = g.rules_for(symbol);
  std::stable_sort(rules.begin(), rules.end(), [&g](int a, int b) {
    auto completion = [&g](int rid) {
      const Rule& r = g.rule(rid);
      int total = 1;
      for (int c : r.rhs) total += g.min_derivation_size(c);
      return total;
    };
    return completion(a) < completion(b);
  });
  return rules;
}

std::string output_signature(const Program& prog, const Task& task) {
  std::string sig;
  for (const Example& e : task.examples) {
    EvalResult r = eval_program(prog, e.input);
    if (r.ok()) {
      sig += 'o';
      sig += std::to_string(r.output.size());
      sig += ':';
      sig += r.output;
    } else {
      sig += 'e';
      sig += std::to_string(static_cast<int>(r.error));
    }
    sig += '\x1f';
  }
  return sig;
}

bool subsumed(const Ppt& candidate, const SeenStore& store, const Task& task) {
  if (store.enqueued.count(candidate.key())) return true;
  if (candidate.complete()) {
    Program prog = program_of(candidate);
    if (store.signatures.count(output_signature(prog, task))) return true;
  }
  return false;
}

namespace {

struct QueueItem {
  int priority;  // min completion size
  long seq;      // insertion order
  Ppt ppt;
};

struct QueueCmp {
  bool operator()(const QueueItem& a, const QueueItem& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

bool consistent(const Program& prog, const Task& task) {
  for (const Example& e : task.examples) {
    EvalResult r = eval_program(prog, e.input);
    if (!r.ok() || r.output != e.output) return false;
  }
  return true;
}

}  // namespace

EnumResult enum_search(const Grammar& g, const Task& task, const SearchLimits& limits,
                       const EnumHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  auto t0 = Clock::now();
  auto elapsed_ms = [&t0] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
  };

  EnumResult result;
  if (task.examples.empty()) {
    result.reason = "task has no examples";
    return result;
  }

  std::priority_queue<QueueItem, std::vector<QueueItem>, QueueCmp> queue;
  SeenStore seen;
  long seq = 0;

  Ppt start(g);
  seen.enqueued.insert(start.key());
  queue.push({start.min_completion_size(), seq++, std::move(start)});

  while (!queue.empty()) {
    if (result.expansions >= limits.max_expansions) {
      result.reason = "expansion budget exhausted";
      break;
    }
    if (elapsed_ms() > limits.time_budget_ms) {
      result.reason = "time budget exhausted";
      break;
    }
    Ppt current = queue.top().ppt;
    queue.pop();

    if (current.complete()) {
      Program prog = program_of(current);
      // Signature pruning happens when completes are dequeued: the queue pops
      // in size order, so the first program of each signature is minimal and
      // later duplicates can never beat it.
      std::string sig = output_signature(prog, task);
      if (seen.signatures.count(sig)) continue;
      seen.signatures.insert(sig);
      if (consistent(prog, task)) {
        result.status = EnumResult::Status::Found;
        result.program = std::move(prog);
        break;
      }
      continue;
    }

    for (int leaf : hooks.rank_leaves(current)) {
      int symbol = current.node(leaf).symbol;
      for (int rule : hooks.rank_rules_for(symbol, g)) {
        Ppt next = current;
        next.apply({leaf, rule});
        ++result.expansions;
        if (result.expansions > limits.max_expansions) break;
        if (next.min_completion_size() > limits.max_size) continue;
        if (next.concat_parts_lower_bound() > g.config().max_concat_parts) continue;
        std::string key = next.key();
        if (seen.enqueued.count(key)) continue;  // syntactic subsumption
        seen.enqueued.insert(std::move(key));
        queue.push({next.min_completion_size(), seq++, std::move(next)});
      }
    }
  }

  if (!result.found() && result.reason.empty()) result.reason = "search space exhausted";
  result.millis = elapsed_ms();
  return result;
}

}  // namespace strsynth
