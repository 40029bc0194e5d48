#include "strsynth/io2seq.hpp"

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

namespace strsynth {

std::vector<LinearToken> linearize(const Program& prog, const Grammar& g) {
  Ppt ppt = derivation_of(prog, g);
  std::vector<LinearToken> out;
  std::function<void(int)> rec = [&](int n) {
    const PptNode& node = ppt.node(n);
    if (node.rule == -1) {
      out.push_back({LinearToken::Type::Terminal, node.symbol});
      return;
    }
    out.push_back({LinearToken::Type::Open, node.rule});
    for (int c : node.children) rec(c);
    out.push_back({LinearToken::Type::Close, node.rule});
  };
  rec(ppt.root());
  return out;
}

Delinearized delinearize(std::span<const LinearToken> tokens, const Grammar& g) {
  size_t pos = 0;
  Ppt ppt(g);
  std::string reason;
  int bad_index = -1;
  auto fail = [&](const std::string& r, size_t at) {
    if (bad_index < 0) {
      reason = r;
      bad_index = static_cast<int>(at);
    }
    return false;
  };

  std::function<bool(int)> parse_symbol = [&](int expected_sym) -> bool {
    if (pos >= tokens.size()) return fail("unexpected end of sequence", tokens.size());
    const LinearToken& t = tokens[pos];
    if (t.type == LinearToken::Type::Terminal) {
      if (g.is_nonterminal(expected_sym)) {
        return fail("terminal token where nonterminal '" + g.symbol_name(expected_sym) +
                        "' was expected",
                    pos);
      }
      if (t.tag != expected_sym) {
        return fail("terminal tag mismatch: got '" +
                        (t.tag >= 0 && t.tag < g.num_symbols() ? g.symbol_name(t.tag)
                                                               : std::string("<bad>")) +
                        "', expected '" + g.symbol_name(expected_sym) + "'",
                    pos);
      }
      ++pos;
      return true;
    }
    if (t.type != LinearToken::Type::Open) return fail("expected an opening token", pos);
    if (t.tag < 0 || t.tag >= g.num_rules()) return fail("unknown rule tag", pos);
    const Rule& r = g.rule(t.tag);
    if (r.lhs != expected_sym) {
      return fail("rule '" + std::to_string(t.tag) + "' does not expand '" +
                      g.symbol_name(expected_sym) + "'",
                  pos);
    }
    // Preorder application: expanding the leftmost nonterminal leaf mirrors
    // the token order.
    auto nts = ppt.nonterminal_leaves();
    ppt.apply({nts.front(), t.tag});
    ++pos;
    for (int c : r.rhs) {
      if (!parse_symbol(c)) return false;
    }
    if (pos >= tokens.size()) return fail("missing closing token", tokens.size());
    const LinearToken& close = tokens[pos];
    if (close.type != LinearToken::Type::Close || close.tag != t.tag) {
      return fail("mismatched closing tag for rule " + std::to_string(t.tag), pos);
    }
    ++pos;
    return true;
  };

  if (!parse_symbol(g.start())) return {std::nullopt, reason, bad_index};
  if (pos != tokens.size()) {
    return {std::nullopt, "trailing tokens after a complete tree", static_cast<int>(pos)};
  }
  return {program_of(ppt), {}, -1};
}

namespace {

int terminal_index(const Grammar& g, int symbol) {
  // Dense index over terminal symbols, in symbol order.
  int idx = 0;
  for (int s = 0; s < g.num_symbols(); ++s) {
    if (g.is_nonterminal(s)) continue;
    if (s == symbol) return idx;
    ++idx;
  }
  return -1;
}

int terminal_by_index(const Grammar& g, int index) {
  int idx = 0;
  for (int s = 0; s < g.num_symbols(); ++s) {
    if (g.is_nonterminal(s)) continue;
    if (idx == index) return s;
    ++idx;
  }
  return -1;
}

int count_terminals(const Grammar& g) {
  int n = 0;
  for (int s = 0; s < g.num_symbols(); ++s) {
    if (!g.is_nonterminal(s)) ++n;
  }
  return n;
}

}  // namespace

Io2Seq::Io2Seq(const Grammar& g, Io2SeqConfig cfg) : grammar_(&g), cfg_(cfg) {
  int R = g.num_rules();
  int T = count_terminals(g);
  eos_id_ = 2 * R + T;
  vocab_size_ = eos_id_ + 1;
  sos_id_ = vocab_size_;  // embedding-only token, never emitted
}

int Io2Seq::token_id(const LinearToken& t) const {
  const Grammar& g = *grammar_;
  switch (t.type) {
    case LinearToken::Type::Open: return t.tag;
    case LinearToken::Type::Close: return g.num_rules() + t.tag;
    case LinearToken::Type::Terminal: return 2 * g.num_rules() + terminal_index(g, t.tag);
    case LinearToken::Type::Eos: return eos_id_;
  }
  return eos_id_;
}

LinearToken Io2Seq::token_of(int id) const {
  const Grammar& g = *grammar_;
  int R = g.num_rules();
  if (id < R) return {LinearToken::Type::Open, id};
  if (id < 2 * R) return {LinearToken::Type::Close, id - R};
  if (id < eos_id_) return {LinearToken::Type::Terminal, terminal_by_index(g, id - 2 * R)};
  return {LinearToken::Type::Eos, -1};
}

std::string Io2Seq::token_name(int id) const {
  const Grammar& g = *grammar_;
  LinearToken t = token_of(id);
  switch (t.type) {
    case LinearToken::Type::Open: return "(_r" + std::to_string(t.tag);
    case LinearToken::Type::Close: return ")_r" + std::to_string(t.tag);
    case LinearToken::Type::Terminal: return "t:" + g.symbol_name(t.tag);
    case LinearToken::Type::Eos: return "<eos>";
  }
  return "?";
}

std::string Io2Seq::vocab_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (int id = 0; id < vocab_size_; ++id) {
    j.push_back({{"id", id}, {"token", token_name(id)}});
  }
  return j.dump();
}

void Io2Seq::init(ParamStore& store, Rng& rng) const {
  size_t H = static_cast<size_t>(cfg_.hidden);
  size_t E = static_cast<size_t>(cfg_.embed);
  size_t V = static_cast<size_t>(vocab_size_);
  store.define("io2seq.embed", {V + 1, E});  // +1 for the start token
  init_xavier(store, "io2seq.embed", V + 1, E, rng);
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string base = "io2seq.l" + std::to_string(l);
    define_lstm(store, base, {l == 0 ? E : H, H}, rng);
    define_linear(store, base + ".h0", static_cast<size_t>(cfg_.io_dim), H, rng);
    define_linear(store, base + ".c0", static_cast<size_t>(cfg_.io_dim), H, rng);
  }
  define_linear(store, "io2seq.out", H, V, rng);
}

Io2Seq::DecoderState Io2Seq::initial_state(Tape& tape, ParamStore& store, Tensor io_enc) const {
  if (static_cast<int>(io_enc.size()) != cfg_.io_dim) {
    throw std::invalid_argument("io2seq conditioning dimension mismatch");
  }
  DecoderState st;
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string base = "io2seq.l" + std::to_string(l);
    Tensor h = tape.tanh(linear(tape, store, base + ".h0", io_enc));
    Tensor c = tape.tanh(linear(tape, store, base + ".c0", io_enc));
    st.layers.push_back({h, c});
  }
  return st;
}

Tensor Io2Seq::decode_logits(Tape& tape, ParamStore& store, int prev_token,
                             DecoderState& state) const {
  Tensor table = store.use(tape, "io2seq.embed");
  Tensor x = tape.row(tape.embedding_lookup(table, {prev_token}), 0);
  for (int l = 0; l < cfg_.layers; ++l) {
    state.layers[l] = lstm_step(tape, store, "io2seq.l" + std::to_string(l), x, state.layers[l]);
    x = state.layers[l].h;
  }
  return linear(tape, store, "io2seq.out", x);
}

Tensor Io2Seq::sequence_loss(Tape& tape, ParamStore& store, std::span<const LinearToken> tokens,
                             Tensor io_enc, int* steps_out) const {
  DecoderState st = initial_state(tape, store, io_enc);
  std::vector<Tensor> losses;
  int prev = sos_id_;
  auto step_loss = [&](int target) {
    Tensor logits = decode_logits(tape, store, prev, st);
    Tensor lp = tape.log(tape.softmax(logits));
    losses.push_back(tape.neg(tape.pick(lp, target)));
    prev = target;
  };
  for (const LinearToken& t : tokens) step_loss(token_id(t));
  step_loss(eos_id_);
  if (steps_out) *steps_out = static_cast<int>(losses.size());
  return tape.sum(tape.concat(losses));
}

Io2Seq::Generated Io2Seq::generate(ParamStore& store, const std::vector<double>& io_values,
                                   Mode mode, int max_tokens, Rng& rng) const {
  Generated out;
  Tape tape;
  Tensor io_enc = tape.constant({io_values.size()}, io_values);
  DecoderState st = initial_state(tape, store, io_enc);
  int prev = sos_id_;
  for (int step = 0; step < max_tokens; ++step) {
    Tensor probs = tape.softmax(decode_logits(tape, store, prev, st));
    const auto& p = probs.values();
    size_t pick = 0;
    if (mode == Mode::Greedy) {
      for (size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[pick]) pick = i;
      }
    } else {
      double u = uniform_real(rng, 0.0, 1.0);
      double acc = 0.0;
      pick = p.size() - 1;
      for (size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    out.log_prob += std::log(std::max(p[pick], 1e-300));
    if (static_cast<int>(pick) == eos_id_) {
      Delinearized d = delinearize(out.tokens, *grammar_);
      if (d.ok()) {
        out.status = Generated::Status::Program;
        out.program = std::move(d.program);
      } else {
        out.status = Generated::Status::Invalid;
        out.reason = d.reason;
      }
      return out;
    }
    out.tokens.push_back(token_of(static_cast<int>(pick)));
    prev = static_cast<int>(pick);
  }
  return out;  // Incomplete: cap reached without Eos
}

std::string Io2Seq::hyper_json() const {
  nlohmann::json j;
  j["hidden"] = cfg_.hidden;
  j["layers"] = cfg_.layers;
  j["embed"] = cfg_.embed;
  j["io_dim"] = cfg_.io_dim;
  return j.dump();
}

}  // namespace strsynth
