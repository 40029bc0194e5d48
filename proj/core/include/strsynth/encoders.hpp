#pragma once

#include <string>
#include <vector>

#include "strsynth/datagen.hpp"
#include "strsynth/nn.hpp"

namespace strsynth {

enum class EncoderVariant {
  Lstm,
  Cc,
  DiffusedCc,
  LstmSumCc,
  AugmentedDiffusedCc,
};

const char* encoder_variant_name(EncoderVariant v);
std::optional<EncoderVariant> encoder_variant_from_name(std::string_view name);

struct StringTooLong : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnknownChar : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct TooManyPairs : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EncoderConfig {
  int T = 32;        // padded string length
  int H = 32;        // LSTM hidden size
  int E = 16;        // character embedding size
  int n_pairs = 5;   // examples per task (pad by repeating the last pair)
  int lstm_layers = 2;
  EncoderVariant variant = EncoderVariant::Cc;
  std::string charset;  // indexable character universe

  // Per-pair feature dimension for the active variant.
  int per_pair_dim() const;
  // Dimension of the whole-set encoding: n_pairs * per_pair_dim().
  int io_dim() const;
};

// Encodes sets of input-output string pairs into fixed-dimension vectors.
// One deep bidirectional LSTM per stream feeds every variant; the
// cross-correlation variants combine the two T x 2H feature blocks through
// all 2(T-1) relative alignments.
class IoEncoder {
 public:
  explicit IoEncoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }

  void init(ParamStore& store, Rng& rng) const;

  // T x E character embeddings (zero rows at padding) plus the real length.
  struct Embedded {
    std::vector<Tensor> rows;  // length T, each {E}
    int len = 0;
  };
  Embedded embed_string(Tape& tape, ParamStore& store, const std::string& s) const;

  // T x 2H feature block per string: topmost bi-LSTM states, zero rows at
  // padding positions.
  std::vector<Tensor> feature_block(Tape& tape, ParamStore& store, const std::string& s,
                                    bool output_stream) const;

  Tensor lstm_encode_pair(Tape& tape, ParamStore& store, const Example& pair) const;
  Tensor cc_encode(Tape& tape, ParamStore& store, const Example& pair) const;
  Tensor diffused_cc(Tape& tape, ParamStore& store, const Example& pair) const;
  Tensor lstm_sum_cc(Tape& tape, ParamStore& store, const Example& pair) const;
  Tensor augmented_diffused_cc(Tape& tape, ParamStore& store, const Example& pair) const;

  // Active-variant encoding of one pair.
  Tensor encode_pair(Tape& tape, ParamStore& store, const Example& pair) const;

  // Concatenation of per-pair encodings in example order. Fewer than n_pairs
  // examples repeat the last pair; more is an error.
  Tensor encode_io_set(Tape& tape, ParamStore& store, const std::vector<Example>& examples) const;

 private:
  Tensor correlation_matrix(Tape& tape, std::span<const Tensor> in_block,
                            std::span<const Tensor> out_block) const;  // {T,T}

  EncoderConfig cfg_;
  std::vector<int> char_id_;  // byte -> charset index or -1
};

}  // namespace strsynth
