#include "strsynth/nn.hpp"

namespace strsynth {

void define_linear(ParamStore& store, const std::string& prefix, size_t in, size_t out,
                   Rng& rng) {
  store.define(prefix + ".W", {out, in});
  store.define(prefix + ".b", {out});
  init_xavier(store, prefix + ".W", in, out, rng);
}

Tensor linear(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x) {
  Tensor w = store.use(tape, prefix + ".W");
  Tensor b = store.use(tape, prefix + ".b");
  return tape.add(tape.matmul(w, x), b);
}

void define_mlp(ParamStore& store, const std::string& prefix, size_t in, size_t hidden,
                size_t out, int hidden_layers, Rng& rng) {
  size_t cur = in;
  for (int l = 0; l < hidden_layers; ++l) {
    define_linear(store, prefix + ".l" + std::to_string(l), cur, hidden, rng);
    cur = hidden;
  }
  define_linear(store, prefix + ".l" + std::to_string(hidden_layers), cur, out, rng);
}

Tensor mlp_tanh(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x,
                int hidden_layers) {
  Tensor h = x;
  for (int l = 0; l <= hidden_layers; ++l) {
    h = tape.tanh(linear(tape, store, prefix + ".l" + std::to_string(l), h));
  }
  return h;
}

void define_lstm(ParamStore& store, const std::string& prefix, const LstmSpec& spec, Rng& rng) {
  size_t h4 = 4 * spec.hidden;
  store.define(prefix + ".W", {h4, spec.input});
  store.define(prefix + ".U", {h4, spec.hidden});
  store.define(prefix + ".b", {h4});
  init_xavier(store, prefix + ".W", spec.input, h4, rng);
  init_xavier(store, prefix + ".U", spec.hidden, h4, rng);
  auto& b = store.value(prefix + ".b");
  for (size_t i = spec.hidden; i < 2 * spec.hidden; ++i) b[i] = 1.0;  // forget gate
}

LstmState lstm_zero_state(Tape& tape, size_t hidden) {
  return {tape.zeros({hidden}), tape.zeros({hidden})};
}

LstmState lstm_step(Tape& tape, ParamStore& store, const std::string& prefix, Tensor x,
                    const LstmState& state) {
  Tensor w = store.use(tape, prefix + ".W");
  Tensor u = store.use(tape, prefix + ".U");
  Tensor b = store.use(tape, prefix + ".b");
  Tensor gates = tape.add(tape.add(tape.matmul(w, x), tape.matmul(u, state.h)), b);
  size_t hidden = state.h.size();
  std::vector<size_t> sizes(4, hidden);
  auto parts = tape.split(gates, sizes);
  Tensor i = tape.sigmoid(parts[0]);
  Tensor f = tape.sigmoid(parts[1]);
  Tensor g = tape.tanh(parts[2]);
  Tensor o = tape.sigmoid(parts[3]);
  Tensor c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
  Tensor h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

void define_bilstm(ParamStore& store, const std::string& prefix, size_t input, size_t hidden,
                   int layers, Rng& rng) {
  size_t cur = input;
  for (int l = 0; l < layers; ++l) {
    std::string base = prefix + ".l" + std::to_string(l);
    define_lstm(store, base + ".fwd", {cur, hidden}, rng);
    define_lstm(store, base + ".bwd", {cur, hidden}, rng);
    cur = 2 * hidden;
  }
}

namespace {

struct BiLstmOut {
  std::vector<Tensor> steps;  // per-timestep {2H}
  Tensor final_fwd, final_bwd;
};

BiLstmOut bilstm_layers(Tape& tape, ParamStore& store, const std::string& prefix,
                        std::span<const Tensor> xs, size_t hidden, int layers) {
  std::vector<Tensor> cur(xs.begin(), xs.end());
  BiLstmOut out;
  for (int l = 0; l < layers; ++l) {
    std::string base = prefix + ".l" + std::to_string(l);
    size_t n = cur.size();
    std::vector<Tensor> fwd(n), bwd(n);
    LstmState s = lstm_zero_state(tape, hidden);
    for (size_t t = 0; t < n; ++t) {
      s = lstm_step(tape, store, base + ".fwd", cur[t], s);
      fwd[t] = s.h;
    }
    out.final_fwd = n ? fwd[n - 1] : tape.zeros({hidden});
    s = lstm_zero_state(tape, hidden);
    for (size_t t = n; t-- > 0;) {
      s = lstm_step(tape, store, base + ".bwd", cur[t], s);
      bwd[t] = s.h;
    }
    out.final_bwd = n ? bwd[0] : tape.zeros({hidden});
    std::vector<Tensor> next(n);
    for (size_t t = 0; t < n; ++t) {
      Tensor pair[] = {fwd[t], bwd[t]};
      next[t] = tape.concat(pair);
    }
    cur = std::move(next);
  }
  out.steps = std::move(cur);
  return out;
}

}  // namespace

std::vector<Tensor> bilstm_run(Tape& tape, ParamStore& store, const std::string& prefix,
                               std::span<const Tensor> xs, size_t hidden, int layers) {
  return bilstm_layers(tape, store, prefix, xs, hidden, layers).steps;
}

Tensor bilstm_final(Tape& tape, ParamStore& store, const std::string& prefix,
                    std::span<const Tensor> xs, size_t hidden, int layers) {
  if (xs.empty()) return tape.zeros({2 * hidden});
  BiLstmOut out = bilstm_layers(tape, store, prefix, xs, hidden, layers);
  Tensor pair[] = {out.final_fwd, out.final_bwd};
  return tape.concat(pair);
}

}  // namespace strsynth
