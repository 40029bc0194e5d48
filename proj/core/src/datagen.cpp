#include "strsynth/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "strsynth/parser.hpp"

namespace strsynth {

DerivationCountTable DerivationCountTable::build(const Grammar& g, int max_size) {
  DerivationCountTable t;
  t.max_size_ = max_size;
  t.num_symbols_ = g.num_symbols();
  t.counts_.assign(g.num_symbols(), std::vector<BigInt>(max_size + 1, 0));
  t.suffix_.resize(g.num_rules());
  for (const Rule& r : g.rules()) {
    t.suffix_[r.id].assign(r.arity() + 1, std::vector<BigInt>(max_size, 0));
  }
  for (int s = 0; s < g.num_symbols(); ++s) {
    if (!g.is_nonterminal(s)) t.counts_[s][0] = 1;
  }
  // counts[A][n] = sum over rules A -> X1..Xq of the ways the RHS consumes
  // n-1 rule nodes; suffix_[r][i][m] = ways for children i.. to consume m.
  for (int n = 1; n <= max_size; ++n) {
    int m = n - 1;
    for (const Rule& r : g.rules()) {
      auto& suf = t.suffix_[r.id];
      suf[r.arity()][m] = (m == 0) ? 1 : 0;
      for (int i = r.arity() - 1; i >= 0; --i) {
        BigInt acc = 0;
        const auto& child_counts = t.counts_[r.rhs[i]];
        for (int a = 0; a <= m; ++a) {
          if (child_counts[a] == 0) continue;
          const BigInt& rest = suf[i + 1][m - a];
          if (rest != 0) acc += child_counts[a] * rest;
        }
        suf[i][m] = std::move(acc);
      }
    }
    for (int sym = 0; sym < g.num_symbols(); ++sym) {
      if (!g.is_nonterminal(sym)) continue;
      BigInt acc = 0;
      for (int rid : g.rules_for(sym)) acc += t.suffix_[rid][0][m];
      t.counts_[sym][n] = std::move(acc);
    }
  }
  return t;
}

const BigInt& DerivationCountTable::count(int symbol, int size) const {
  if (size < 0 || size > max_size_) return zero_;
  return counts_[symbol][size];
}

BigInt DerivationCountTable::total_programs(int max_size) const {
  BigInt total = 0;
  for (int s = 0; s <= std::min(max_size, max_size_); ++s) total += counts_[0][s];
  return total;
}

const BigInt& DerivationCountTable::suffix_ways(int rule, int child, int size) const {
  if (size < 0 || size >= max_size_) return zero_;
  return suffix_[rule][child][size];
}

namespace {

// Uniform in [0, bound) by rejection over the minimal bit width.
BigInt uniform_big(Rng& rng, const BigInt& bound) {
  if (bound <= 1) return 0;
  unsigned bits = boost::multiprecision::msb(bound - 1) + 1;
  unsigned words = (bits + 63) / 64;
  while (true) {
    BigInt x = 0;
    for (unsigned w = 0; w < words; ++w) {
      x <<= 64;
      x |= rng();
    }
    x >>= (words * 64 - bits);
    if (x < bound) return x;
  }
}

void sample_symbol(const Grammar& g, const DerivationCountTable& table, Ppt& ppt, int leaf,
                   int size, Rng& rng) {
  int sym = ppt.node(leaf).symbol;
  if (!g.is_nonterminal(sym)) return;  // terminal: size 0, nothing to do
  int m = size - 1;
  // Pick the rule proportionally to the number of completions it admits.
  BigInt total = 0;
  for (int rid : g.rules_for(sym)) total += table.suffix_ways(rid, 0, m);
  BigInt draw = uniform_big(rng, total);
  int rule_id = -1;
  for (int rid : g.rules_for(sym)) {
    const BigInt& w = table.suffix_ways(rid, 0, m);
    if (draw < w) {
      rule_id = rid;
      break;
    }
    draw -= w;
  }
  const Rule& r = g.rule(rule_id);
  int before = ppt.num_nodes();
  ppt.apply({leaf, rule_id});
  // Split the remaining size among the children, weighting each child size by
  // (ways for this child) * (ways for the rest of the RHS).
  int remaining = m;
  for (int i = 0; i < r.arity(); ++i) {
    int child_leaf = before + i;
    BigInt pick = uniform_big(rng, table.suffix_ways(rule_id, i, remaining));
    int child_size = -1;
    for (int a = 0; a <= remaining; ++a) {
      const BigInt& ca = table.count(r.rhs[i], a);
      if (ca == 0) continue;
      BigInt w = ca * table.suffix_ways(rule_id, i + 1, remaining - a);
      if (pick < w) {
        child_size = a;
        break;
      }
      pick -= w;
    }
    if (child_size < 0) throw std::logic_error("inconsistent derivation count table");
    sample_symbol(g, table, ppt, child_leaf, child_size, rng);
    remaining -= child_size;
  }
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

Program sample_program_uniform(const Grammar& g, const DerivationCountTable& table,
                               int max_size, Rng& rng) {
  if (max_size > table.max_size()) throw std::invalid_argument("table does not cover max_size");
  BigInt total = table.total_programs(max_size);
  if (total == 0) throw NoProgramsError("no programs within the size bound");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    BigInt draw = uniform_big(rng, total);
    int size = -1;
    for (int s = 0; s <= max_size; ++s) {
      const BigInt& c = table.count(g.start(), s);
      if (draw < c) {
        size = s;
        break;
      }
      draw -= c;
    }
    Ppt ppt(g);
    sample_symbol(g, table, ppt, ppt.root(), size, rng);
    Program prog = program_of(ppt);
    if (static_cast<int>(prog.parts.size()) <= g.config().max_concat_parts) return prog;
  }
  throw NoProgramsError("no programs satisfy the concat-arity cap");
}

namespace {

struct PlantBlock {
  RegexToken token;
  int count = 0;
};

void collect_position_tokens(const PositionLogic& p, std::vector<PlantBlock>& out,
                             int& min_len) {
  if (const auto* cp = std::get_if<ConstPos>(&p)) {
    min_len = std::max(min_len, cp->offset >= 0 ? cp->offset : -cp->offset - 1);
    return;
  }
  const auto& tm = std::get<TokenMatch>(p);
  int need = tm.k > 0 ? tm.k : -tm.k;
  for (auto& b : out) {
    if (b.token == tm.token) {
      b.count = std::max(b.count, need);
      return;
    }
  }
  out.push_back({tm.token, need});
}

std::string realize_block(const RegexToken& tok, Rng& rng) {
  auto take = [&rng](const char* alphabet, int len) {
    std::string s;
    int n = static_cast<int>(std::string_view(alphabet).size());
    for (int i = 0; i < len; ++i) s += alphabet[uniform_int(rng, 0, n - 1)];
    return s;
  };
  switch (tok.kind) {
    case TokenKind::ProperCase:
      return take("ABCDEFGHIJKLMNOPQRSTUVWXYZ", 1) + take("abcdefghijklmnopqrstuvwxyz", uniform_int(rng, 1, 3));
    case TokenKind::Caps:
      return take("ABCDEFGHIJKLMNOPQRSTUVWXYZ", uniform_int(rng, 1, 3));
    case TokenKind::Lowercase:
      return take("abcdefghijklmnopqrstuvwxyz", uniform_int(rng, 1, 4));
    case TokenKind::Digits:
      return take("0123456789", uniform_int(rng, 1, 4));
    case TokenKind::Alphabets:
      return take("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ", uniform_int(rng, 1, 4));
    case TokenKind::Alphanumeric:
      return take("abcdefghijklmnopqrstuvwxyz0123456789", uniform_int(rng, 1, 4));
    case TokenKind::ConstTok:
      return tok.literal;
    case TokenKind::StartOfString:
    case TokenKind::EndOfString:
      return {};
  }
  return {};
}

// Filler must not extend a planted run into its neighbours. Lowercase+space
// is the default; classes planted by the program knock their characters out.
std::string filler_alphabet(const std::vector<PlantBlock>& blocks) {
  bool no_lower = false, no_digit = false, letters_banned = false, alnum_banned = false;
  for (const auto& b : blocks) {
    switch (b.token.kind) {
      case TokenKind::ProperCase:
      case TokenKind::Lowercase:
        no_lower = true;
        break;
      case TokenKind::Digits:
        no_digit = true;
        break;
      case TokenKind::Alphabets:
        letters_banned = true;
        break;
      case TokenKind::Alphanumeric:
        alnum_banned = true;
        break;
      default:
        break;
    }
  }
  std::string out;
  if (!no_lower && !letters_banned && !alnum_banned) out += "abcdefghijklmnopqrstuvwxyz";
  out += ' ';
  if (!no_digit && !alnum_banned) out += "0123456789";
  return out;
}

}  // namespace

std::optional<std::string> gen_input(const Program& prog, Rng& rng, const Grammar& g,
                                     const GenOptions& opts) {
  const DslConfig& cfg = g.config();
  int max_len = opts.max_len > 0 ? opts.max_len : cfg.max_string_len;

  std::vector<PlantBlock> blocks;
  int min_len = opts.min_len;
  for (const SubstringExpr& part : prog.parts) {
    if (const auto* ss = std::get_if<SubStr>(&part)) {
      collect_position_tokens(ss->left, blocks, min_len);
      collect_position_tokens(ss->right, blocks, min_len);
    }
  }
  // Anchors match exactly once; more than one required match is unsatisfiable.
  for (const auto& b : blocks) {
    if ((b.token.kind == TokenKind::StartOfString || b.token.kind == TokenKind::EndOfString) &&
        b.count > 1) {
      return std::nullopt;
    }
  }
  std::string filler = filler_alphabet(blocks);

  for (int attempt = 0; attempt < opts.retry_cap; ++attempt) {
    std::string input;
    std::vector<std::string> pieces;
    for (const auto& b : blocks) {
      if (b.token.kind == TokenKind::StartOfString || b.token.kind == TokenKind::EndOfString) {
        continue;
      }
      for (int j = 0; j < b.count; ++j) pieces.push_back(realize_block(b.token, rng));
    }
    std::shuffle(pieces.begin(), pieces.end(), rng);
    auto add_filler = [&](int lo, int hi) {
      int len = uniform_int(rng, lo, hi);
      for (int i = 0; i < len; ++i) {
        input += filler[uniform_int(rng, 0, static_cast<int>(filler.size()) - 1)];
      }
    };
    if (pieces.empty()) {
      add_filler(std::max(1, min_len), std::max<int>(std::max(1, min_len), std::min(max_len, 12)));
    } else {
      add_filler(0, 2);
      for (size_t i = 0; i < pieces.size(); ++i) {
        if (i) add_filler(1, 3);  // at least one separator so planted runs stay distinct
        input += pieces[i];
      }
      add_filler(0, 2);
    }
    while (static_cast<int>(input.size()) < min_len) {
      input += filler[uniform_int(rng, 0, static_cast<int>(filler.size()) - 1)];
    }
    if (input.empty() || static_cast<int>(input.size()) > max_len) continue;
    EvalResult r = eval_program(prog, input);
    if (!r.ok()) continue;
    if (static_cast<int>(r.output.size()) > max_len) continue;
    return input;
  }
  return std::nullopt;
}

std::optional<Task> gen_task(const Program& prog, int n_examples, Rng& rng, const Grammar& g,
                             const GenOptions& opts) {
  if (n_examples < 1) throw std::invalid_argument("n_examples must be >= 1");
  Task task;
  task.program = prog;
  std::set<std::string> seen;
  int failures = 0;
  while (static_cast<int>(task.examples.size()) < n_examples) {
    auto input = gen_input(prog, rng, g, opts);
    if (!input || seen.count(*input)) {
      if (++failures > opts.retry_cap) return std::nullopt;
      continue;
    }
    seen.insert(*input);
    EvalResult r = eval_program(prog, *input);
    task.examples.push_back({*input, r.output});
  }
  return task;
}

Corpus generate_corpus(const Grammar& g, const DerivationCountTable& table,
                       const CorpusConfig& cfg) {
  Corpus corpus;
  auto bucket_of = [](const Program& p) {
    uint64_t h = fnv1a(serialize_program(p));
    int r = static_cast<int>(h % 10);
    if (r < 8) return 0;
    if (r < 9) return 1;
    return 2;
  };
  int want[3] = {cfg.n_train_tasks, cfg.n_valid_tasks, cfg.n_test_tasks};
  std::vector<Task>* out[3] = {&corpus.train, &corpus.valid, &corpus.test};
  int total_want = want[0] + want[1] + want[2];
  int made = 0;
  long guard = 0;
  while (made < total_want) {
    if (++guard > 1000L * total_want + 10000L) {
      throw std::runtime_error("corpus generation stalled; check config bounds");
    }
    Rng task_rng(mix_seed(cfg.seed, static_cast<uint64_t>(guard)));
    Program prog = sample_program_uniform(g, table, cfg.max_size, task_rng);
    int b = bucket_of(prog);
    if (static_cast<int>(out[b]->size()) >= want[b]) continue;
    auto task = gen_task(prog, cfg.n_examples, task_rng, g);
    if (!task) {
      ++corpus.dropped_programs;
      continue;
    }
    out[b]->push_back(std::move(*task));
    ++made;
  }
  return corpus;
}

void write_dataset(const std::vector<Task>& tasks, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (const Task& t : tasks) {
    nlohmann::json j;
    if (t.program) {
      j["program"] = serialize_program(*t.program);
    } else {
      j["program"] = nullptr;
    }
    j["examples"] = nlohmann::json::array();
    for (const Example& e : t.examples) {
      j["examples"].push_back({{"in", e.input}, {"out", e.output}});
    }
    f << j.dump() << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

std::vector<Task> read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::vector<Task> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("examples")) {
      throw FormatError("malformed task record", line_no);
    }
    Task t;
    if (j.contains("program") && !j["program"].is_null()) {
      if (!j["program"].is_string()) throw FormatError("program must be text or null", line_no);
      ParseResult pr = parse_program(j["program"].get<std::string>());
      if (!pr.ok()) throw FormatError("bad program text: " + pr.message(), line_no);
      t.program = std::move(pr.program);
    }
    if (!j["examples"].is_array() || j["examples"].empty()) {
      throw FormatError("examples must be a non-empty array", line_no);
    }
    for (const auto& e : j["examples"]) {
      if (!e.is_object() || !e.contains("in") || !e.contains("out") || !e["in"].is_string() ||
          !e["out"].is_string()) {
        throw FormatError("example must carry string fields 'in' and 'out'", line_no);
      }
      t.examples.push_back({e["in"].get<std::string>(), e["out"].get<std::string>()});
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace strsynth
