#include "strsynth/r3nn.hpp"

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

namespace strsynth {

const char* conditioning_name(Conditioning c) {
  switch (c) {
    case Conditioning::None: return "none";
    case Conditioning::Pre: return "pre";
    case Conditioning::Root: return "root";
    case Conditioning::Post: return "post";
  }
  return "?";
}

std::optional<Conditioning> conditioning_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Conditioning::Post); ++i) {
    auto c = static_cast<Conditioning>(i);
    if (name == conditioning_name(c)) return c;
  }
  return std::nullopt;
}

R3nn::R3nn(const Grammar& g, R3nnConfig cfg) : grammar_(&g), cfg_(cfg) {
  if (cfg_.M < 2) throw std::invalid_argument("M must be >= 2");
  if (cfg_.M % 2 != 0 && (cfg_.leaf_lstm || cfg_.cond_lstm)) {
    throw std::invalid_argument("bi-LSTM processing requires even M");
  }
  if (cfg_.conditioning != Conditioning::None && cfg_.io_dim <= 0) {
    throw std::invalid_argument("conditioning requires io_dim > 0");
  }
}

void R3nn::init(ParamStore& store, Rng& rng) const {
  const Grammar& g = *grammar_;
  size_t M = static_cast<size_t>(cfg_.M);
  store.define("r3nn.phi", {static_cast<size_t>(g.num_symbols()), M});
  init_xavier(store, "r3nn.phi", g.num_symbols(), cfg_.M, rng);
  store.define("r3nn.omega", {static_cast<size_t>(g.num_rules()), M});
  init_xavier(store, "r3nn.omega", g.num_rules(), cfg_.M, rng);
  for (const Rule& r : g.rules()) {
    size_t q = static_cast<size_t>(r.arity());
    define_mlp(store, "r3nn.f." + std::to_string(r.id), q * M, M, M, cfg_.hidden_layers, rng);
    define_mlp(store, "r3nn.g." + std::to_string(r.id), M, M, q * M, cfg_.hidden_layers, rng);
  }
  size_t io = static_cast<size_t>(cfg_.io_dim);
  switch (cfg_.conditioning) {
    case Conditioning::Pre:
      if (cfg_.cond_lstm) {
        define_bilstm(store, "r3nn.cond", M + io, M / 2, 1, rng);
      } else {
        define_mlp(store, "r3nn.cond", M + io, M, M, 1, rng);
      }
      break;
    case Conditioning::Root:
      define_mlp(store, "r3nn.cond_root", M + io, M, M, 1, rng);
      break;
    case Conditioning::Post:
      define_mlp(store, "r3nn.cond_post", M + io, M, M, 1, rng);
      break;
    case Conditioning::None:
      break;
  }
  if (cfg_.leaf_lstm) define_bilstm(store, "r3nn.leaf_lstm", M, M / 2, 1, rng);
}

Tensor R3nn::condition_vector(Tape& tape, ParamStore& store, const std::string& net,
                              Tensor vec, Tensor io_enc) const {
  if (static_cast<int>(io_enc.size()) != cfg_.io_dim) {
    throw DimensionMismatch("io encoding has dimension " + std::to_string(io_enc.size()) +
                            ", expected " + std::to_string(cfg_.io_dim));
  }
  Tensor both[] = {vec, io_enc};
  return mlp_tanh(tape, store, net, tape.concat(both), 1);
}

std::vector<Tensor> R3nn::leaf_inputs(Tape& tape, ParamStore& store, const Ppt& ppt,
                                      Tensor io_enc) const {
  std::vector<int> leaves = ppt.leaves();
  Tensor phi = store.use(tape, "r3nn.phi");
  std::vector<int> symbols;
  symbols.reserve(leaves.size());
  for (int l : leaves) symbols.push_back(ppt.node(l).symbol);
  Tensor rows = tape.embedding_lookup(phi, symbols);

  std::vector<Tensor> by_node(ppt.num_nodes());
  bool pre = cfg_.conditioning == Conditioning::Pre;
  if (pre && cfg_.cond_lstm) {
    std::vector<Tensor> seq;
    seq.reserve(leaves.size());
    for (size_t i = 0; i < leaves.size(); ++i) {
      Tensor both[] = {tape.row(rows, i), io_enc};
      seq.push_back(tape.concat(both));
    }
    std::vector<Tensor> states =
        bilstm_run(tape, store, "r3nn.cond", seq, static_cast<size_t>(cfg_.M) / 2, 1);
    for (size_t i = 0; i < leaves.size(); ++i) by_node[leaves[i]] = states[i];
    return by_node;
  }
  for (size_t i = 0; i < leaves.size(); ++i) {
    Tensor v = tape.row(rows, i);
    if (pre) v = condition_vector(tape, store, "r3nn.cond", v, io_enc);
    by_node[leaves[i]] = v;
  }
  return by_node;
}

std::vector<Tensor> R3nn::recursive_pass(Tape& tape, ParamStore& store, const Ppt& ppt,
                                         const std::vector<Tensor>& leaf_vecs) const {
  std::vector<Tensor> values = leaf_vecs;
  values.resize(ppt.num_nodes());
  std::function<void(int)> rec = [&](int n) {
    const PptNode& node = ppt.node(n);
    if (node.rule == -1) return;  // leaf vector already assigned
    std::vector<Tensor> kids;
    kids.reserve(node.children.size());
    for (int c : node.children) {
      rec(c);
      kids.push_back(values[c]);
    }
    Tensor input = kids.size() == 1 ? kids[0] : tape.concat(kids);
    values[n] = mlp_tanh(tape, store, "r3nn.f." + std::to_string(node.rule), input,
                         cfg_.hidden_layers);
  };
  rec(ppt.root());
  return values;
}

std::vector<Tensor> R3nn::reverse_recursive_pass(Tape& tape, ParamStore& store, const Ppt& ppt,
                                                 const std::vector<Tensor>& values,
                                                 Tensor io_enc) const {
  std::vector<Tensor> rev(ppt.num_nodes());
  Tensor root_vec = values[ppt.root()];
  if (cfg_.conditioning == Conditioning::Root) {
    root_vec = condition_vector(tape, store, "r3nn.cond_root", root_vec, io_enc);
  }
  rev[ppt.root()] = root_vec;
  size_t M = static_cast<size_t>(cfg_.M);
  std::function<void(int)> rec = [&](int n) {
    const PptNode& node = ppt.node(n);
    if (node.rule == -1) return;
    Tensor out = mlp_tanh(tape, store, "r3nn.g." + std::to_string(node.rule), rev[n],
                          cfg_.hidden_layers);
    std::vector<size_t> sizes(node.children.size(), M);
    std::vector<Tensor> blocks = tape.split(out, sizes);
    for (size_t i = 0; i < node.children.size(); ++i) {
      rev[node.children[i]] = blocks[i];  // children in RHS order
      rec(node.children[i]);
    }
  };
  rec(ppt.root());
  return rev;
}

R3nn::Step R3nn::step(Tape& tape, ParamStore& store, const Ppt& ppt, Tensor io_enc) const {
  std::vector<Expansion> expansions = valid_expansions(ppt);
  if (expansions.empty()) throw CompleteTree("no valid expansions: tree is complete");

  std::vector<Tensor> leaf_vecs = leaf_inputs(tape, store, ppt, io_enc);
  std::vector<Tensor> values = recursive_pass(tape, store, ppt, leaf_vecs);
  std::vector<Tensor> rev = reverse_recursive_pass(tape, store, ppt, values, io_enc);

  std::vector<int> leaves = ppt.leaves();
  std::vector<Tensor> leaf_final(ppt.num_nodes());
  for (int l : leaves) leaf_final[l] = rev[l];
  if (cfg_.conditioning == Conditioning::Post) {
    for (int l : leaves) {
      leaf_final[l] = condition_vector(tape, store, "r3nn.cond_post", leaf_final[l], io_enc);
    }
  }
  if (cfg_.leaf_lstm) {
    std::vector<Tensor> seq;
    seq.reserve(leaves.size());
    for (int l : leaves) seq.push_back(leaf_final[l]);
    std::vector<Tensor> states =
        bilstm_run(tape, store, "r3nn.leaf_lstm", seq, static_cast<size_t>(cfg_.M) / 2, 1);
    for (size_t i = 0; i < leaves.size(); ++i) leaf_final[leaves[i]] = states[i];
  }

  // z_e = <leaf vector, omega(rule)>, grouped per leaf over its rules.
  Tensor omega = store.use(tape, "r3nn.omega");
  std::vector<Tensor> score_chunks;
  int prev_leaf = -1;
  std::vector<int> rule_ids;
  auto flush = [&](int leaf) {
    if (prev_leaf != -1 && !rule_ids.empty()) {
      Tensor w = tape.embedding_lookup(omega, rule_ids);
      score_chunks.push_back(tape.matmul(w, leaf_final[prev_leaf]));
    }
    rule_ids.clear();
    prev_leaf = leaf;
  };
  for (const Expansion& e : expansions) {
    if (e.leaf != prev_leaf) flush(e.leaf);
    rule_ids.push_back(e.rule);
  }
  flush(-1);
  Tensor scores = score_chunks.size() == 1 ? score_chunks[0] : tape.concat(score_chunks);

  Step s;
  s.expansions = std::move(expansions);
  s.probs = tape.softmax(scores);
  s.log_probs = tape.log(s.probs);
  return s;
}

R3nn::Generated R3nn::generate(ParamStore& store, const std::vector<double>& io_values,
                               Mode mode, int max_size, Rng& rng) const {
  Generated out;
  Ppt ppt(*grammar_);
  while (true) {
    if (ppt.complete()) {
      out.status = Generated::Status::Complete;
      out.program = program_of(ppt);
      return out;
    }
    if (ppt.rule_node_count() >= max_size || ppt.min_completion_size() > max_size) {
      return out;  // Incomplete
    }
    Tape tape;
    Tensor io_enc;
    if (cfg_.io_dim > 0) {
      io_enc = tape.constant({io_values.size()}, io_values);
    }
    Step s = step(tape, store, ppt, io_enc);
    const auto& probs = s.probs.values();
    size_t pick = 0;
    if (mode == Mode::Greedy) {
      for (size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[pick]) pick = i;
      }
    } else {
      double u = uniform_real(rng, 0.0, 1.0);
      double acc = 0.0;
      pick = probs.size() - 1;
      for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    out.log_prob += std::log(std::max(probs[pick], 1e-300));
    ppt.apply(s.expansions[pick]);
    ++out.steps;
  }
}

std::string R3nn::hyper_json() const {
  nlohmann::json j;
  j["M"] = cfg_.M;
  j["io_dim"] = cfg_.io_dim;
  j["hidden_layers"] = cfg_.hidden_layers;
  j["leaf_lstm"] = cfg_.leaf_lstm;
  j["cond_lstm"] = cfg_.cond_lstm;
  j["conditioning"] = conditioning_name(cfg_.conditioning);
  return j.dump();
}

}  // namespace strsynth
