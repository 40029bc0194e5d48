#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "strsynth/grammar.hpp"
#include "strsynth/ppt.hpp"
#include "strsynth/rng.hpp"

namespace strsynth {

using BigInt = boost::multiprecision::cpp_int;

struct Example {
  std::string input;
  std::string output;

  bool operator==(const Example&) const = default;
};

struct Task {
  std::optional<Program> program;  // absent for real benchmarks
  std::vector<Example> examples;
};

// Exact number of complete derivations per (symbol, rule-node count),
// computed bottom-up by convolving RHS size splits. Also keeps the per-rule
// suffix tables the uniform sampler needs to weight size splits.
class DerivationCountTable {
 public:
  static DerivationCountTable build(const Grammar& g, int max_size);

  int max_size() const { return max_size_; }

  // Complete derivations of `symbol` with exactly `size` rule nodes.
  // Terminals count one derivation of size 0.
  const BigInt& count(int symbol, int size) const;

  // Complete programs (start symbol) with size <= `max_size`.
  BigInt total_programs(int max_size) const;

  // Ways for rule `r`'s RHS suffix starting at child `child` to consume
  // exactly `size` rule nodes in total.
  const BigInt& suffix_ways(int rule, int child, int size) const;

 private:
  int max_size_ = 0;
  int num_symbols_ = 0;
  std::vector<std::vector<BigInt>> counts_;               // [symbol][size]
  std::vector<std::vector<std::vector<BigInt>>> suffix_;  // [rule][child][size]
  BigInt zero_;
};

struct NoProgramsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exactly uniform over complete programs of size <= max_size that respect the
// Concat-arity cap: total size is drawn proportionally to the counts, then
// rules and child-size splits are chosen weighted by the table. Trees whose
// part count exceeds the cap are rejected and redrawn, which keeps the
// distribution uniform over the admissible set.
Program sample_program_uniform(const Grammar& g, const DerivationCountTable& table,
                               int max_size, Rng& rng);

// Input-generation knobs; retry_cap bounds the resampling loop.
struct GenOptions {
  int retry_cap = 50;
  int min_len = 1;
  int max_len = 0;  // 0: use grammar config max_string_len
};

// Builds an input on which `prog` evaluates without error: plants |k| matches
// for every token-match in the program with non-extending filler in between,
// then validates by execution and resamples on failure. nullopt after the
// retry cap (the caller discards the program).
std::optional<std::string> gen_input(const Program& prog, Rng& rng, const Grammar& g,
                                     const GenOptions& opts = {});

// n distinct inputs with their outputs; every pair satisfies
// eval_program(prog, in) == out by construction.
std::optional<Task> gen_task(const Program& prog, int n_examples, Rng& rng, const Grammar& g,
                             const GenOptions& opts = {});

struct CorpusConfig {
  int n_train_tasks = 0;
  int n_valid_tasks = 0;
  int n_test_tasks = 0;
  int max_size = 13;
  int n_examples = 5;
  uint64_t seed = 1;
};

struct Corpus {
  std::vector<Task> train, valid, test;
  int dropped_programs = 0;  // programs discarded after generation failures
};

// Samples programs uniformly, generates examples, and partitions by program
// identity (hash of canonical text) so test programs are unseen in training.
Corpus generate_corpus(const Grammar& g, const DerivationCountTable& table,
                       const CorpusConfig& cfg);

struct FormatError : std::runtime_error {
  FormatError(const std::string& what, int line_) : std::runtime_error(what), line(line_) {}
  int line;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON Lines, one task per line:
//   {"program": <canonical text or null>, "examples": [{"in":..,"out":..}, ...]}
void write_dataset(const std::vector<Task>& tasks, const std::string& path);
std::vector<Task> read_dataset(const std::string& path);

}  // namespace strsynth
