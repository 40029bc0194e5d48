#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strsynth/nn.hpp"
#include "strsynth/ppt.hpp"

namespace strsynth {

enum class Conditioning { None, Pre, Root, Post };

const char* conditioning_name(Conditioning c);
std::optional<Conditioning> conditioning_from_name(std::string_view name);

struct R3nnConfig {
  int M = 64;                // symbol/rule embedding dimension
  int io_dim = 0;            // conditioning vector dimension (0: unconditioned)
  int hidden_layers = 1;     // depth of the per-rule networks
  bool leaf_lstm = false;    // bi-LSTM over leaf vectors before scoring
  bool cond_lstm = false;    // bi-LSTM conditioning network instead of feedforward
  Conditioning conditioning = Conditioning::Pre;
};

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct CompleteTree : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Recursive-reverse-recursive network over partial program trees. Parameters:
// one embedding per grammar symbol and per rule, a forward net f_r (QM -> M)
// and a reverse net g_r (M -> QM) per rule, plus the conditioning network.
class R3nn {
 public:
  R3nn(const Grammar& g, R3nnConfig cfg);

  const R3nnConfig& config() const { return cfg_; }
  const Grammar& grammar() const { return *grammar_; }

  void init(ParamStore& store, Rng& rng) const;

  // Per-leaf input vectors (pre-conditioned when configured); indexed by PPT
  // node id. `io_enc` may be invalid only when io_dim == 0 or conditioning
  // skips the leaves.
  std::vector<Tensor> leaf_inputs(Tape& tape, ParamStore& store, const Ppt& ppt,
                                  Tensor io_enc) const;

  // Bottom-up pass: value(n) = f_rule(concat(child values)); returns vectors
  // indexed by node id, root value = global tree representation.
  std::vector<Tensor> recursive_pass(Tape& tape, ParamStore& store, const Ppt& ppt,
                                     const std::vector<Tensor>& leaf_vecs) const;

  // Top-down pass from phi(root); splits g_rule output across children in
  // RHS order, giving every leaf a globally informed vector.
  std::vector<Tensor> reverse_recursive_pass(Tape& tape, ParamStore& store, const Ppt& ppt,
                                             const std::vector<Tensor>& values,
                                             Tensor io_enc) const;

  struct Step {
    Tensor probs;       // softmax over expansions
    Tensor log_probs;   // log of the same, stable form
    std::vector<Expansion> expansions;
  };

  // Full forward pass: distribution over every valid expansion of the PPT.
  // Throws CompleteTree when the tree has no nonterminal leaves.
  Step step(Tape& tape, ParamStore& store, const Ppt& ppt, Tensor io_enc) const;

  enum class Mode { Greedy, Sample };

  struct Generated {
    enum class Status { Complete, Incomplete } status = Status::Incomplete;
    std::optional<Program> program;
    double log_prob = 0.0;
    int steps = 0;

    bool complete() const { return status == Status::Complete; }
  };

  // Iterates step -> pick -> apply until the tree completes or the size cap
  // is hit. Greedy mode is deterministic; Sample mode draws from the step
  // distribution using `rng`.
  Generated generate(ParamStore& store, const std::vector<double>& io_values, Mode mode,
                     int max_size, Rng& rng) const;

  std::string hyper_json() const;

 private:
  Tensor condition_vector(Tape& tape, ParamStore& store, const std::string& net, Tensor vec,
                          Tensor io_enc) const;

  const Grammar* grammar_;
  R3nnConfig cfg_;
};

}  // namespace strsynth
