#pragma once

#include <span>
#include <string>
#include <vector>

#include "strsynth/params.hpp"

namespace strsynth {

// Affine layer <prefix>.W {out,in}, <prefix>.b {out}; Xavier weights, zero bias.
void define_linear(ParamStore& store, const std::string& prefix, size_t in, size_t out,
                   Rng& rng);
Tensor linear(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x);

// tanh MLP with `hidden_layers` hidden layers of width `hidden` and a tanh
// output layer: <prefix>.l0 .. <prefix>.l<n>.
void define_mlp(ParamStore& store, const std::string& prefix, size_t in, size_t hidden,
                size_t out, int hidden_layers, Rng& rng);
Tensor mlp_tanh(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x,
                int hidden_layers);

// LSTM cell parameters: <prefix>.W {4H,in}, <prefix>.U {4H,H}, <prefix>.b {4H}.
// Gate order i,f,g,o; forget-gate bias initialized to 1.
struct LstmSpec {
  size_t input = 0;
  size_t hidden = 0;
};

void define_lstm(ParamStore& store, const std::string& prefix, const LstmSpec& spec, Rng& rng);

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_zero_state(Tape& tape, size_t hidden);
LstmState lstm_step(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x,
                    const LstmState& state);

// Deep bidirectional LSTM: <prefix>.l<layer>.fwd / .bwd cells. Layer 0 reads
// `input`-dim vectors, deeper layers read the 2H outputs of the layer below.
void define_bilstm(ParamStore& store, const std::string& prefix, size_t input, size_t hidden,
                   int layers, Rng& rng);

// Per-timestep concat(h_fwd[t], h_bwd[t]) of the topmost layer, each {2H}.
std::vector<Tensor> bilstm_run(Tape& tape, ParamStore& store, const std::string& prefix,
                               std::span<const Tensor> xs, size_t hidden, int layers);

// concat(final forward hidden, final backward hidden) of the topmost layer;
// zeros for an empty sequence.
Tensor bilstm_final(Tape& tape, ParamStore& store, const std::string& prefix,
                    std::span<const Tensor> xs, size_t hidden, int layers);

}  // namespace strsynth
