#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strsynth/nn.hpp"
#include "strsynth/ppt.hpp"

namespace strsynth {

// Typed-parenthesis linearization of a derivation tree: every rule node emits
// Open/Close with its rule tag, terminal leaves emit Terminal with the symbol
// tag, and sequences end with Eos.
struct LinearToken {
  enum class Type { Open, Close, Terminal, Eos } type = Type::Eos;
  int tag = -1;  // rule id for Open/Close, symbol id for Terminal

  bool operator==(const LinearToken&) const = default;
};

std::vector<LinearToken> linearize(const Program& prog, const Grammar& g);

struct Delinearized {
  std::optional<Program> program;
  std::string reason;  // first offense when invalid
  int index = -1;      // token index of the offense

  bool ok() const { return program.has_value(); }
};

// Parses a token sequence back into a program; any malformed sequence yields
// Invalid with the first offending index, never a crash.
Delinearized delinearize(std::span<const LinearToken> tokens, const Grammar& g);

struct Io2SeqConfig {
  int hidden = 64;      // decoder LSTM hidden size
  int layers = 2;       // decoder depth
  int embed = 32;       // token embedding size
  int io_dim = 0;       // conditioning vector dimension
};

// LSTM decoder whose initial hidden and cell states are tanh-affine maps of
// the I/O encoding; emits the linearized tree token by token.
class Io2Seq {
 public:
  Io2Seq(const Grammar& g, Io2SeqConfig cfg);

  const Io2SeqConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }  // output vocabulary incl. Eos
  int eos_id() const { return eos_id_; }
  int sos_id() const { return sos_id_; }

  int token_id(const LinearToken& t) const;
  LinearToken token_of(int id) const;
  std::string token_name(int id) const;
  std::string vocab_json() const;

  void init(ParamStore& store, Rng& rng) const;

  // Teacher-forced negative log likelihood of the token sequence (with Eos
  // appended), summed over steps; `steps_out` reports the step count.
  Tensor sequence_loss(Tape& tape, ParamStore& store, std::span<const LinearToken> tokens,
                       Tensor io_enc, int* steps_out = nullptr) const;

  enum class Mode { Greedy, Sample };

  struct Generated {
    enum class Status { Program, Invalid, Incomplete } status = Status::Incomplete;
    std::optional<Program> program;
    std::vector<LinearToken> tokens;
    std::string reason;
    double log_prob = 0.0;

    bool ok() const { return status == Status::Program; }
  };

  // Emits tokens until Eos or the cap; the emission is then delinearized.
  Generated generate(ParamStore& store, const std::vector<double>& io_values, Mode mode,
                     int max_tokens, Rng& rng) const;

  std::string hyper_json() const;

 private:
  struct DecoderState {
    std::vector<LstmState> layers;
  };
  DecoderState initial_state(Tape& tape, ParamStore& store, Tensor io_enc) const;
  Tensor decode_logits(Tape& tape, ParamStore& store, int prev_token,
                       DecoderState& state) const;

  const Grammar* grammar_;
  Io2SeqConfig cfg_;
  int vocab_size_ = 0;
  int eos_id_ = 0;
  int sos_id_ = 0;
};

}  // namespace strsynth
