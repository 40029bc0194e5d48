#include "strsynth/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "strsynth/enum_search.hpp"
#include "strsynth/parser.hpp"

namespace strsynth {

std::vector<std::pair<Ppt, Expansion>> trace_steps(const Program& prog, const Grammar& g) {
  std::vector<int> rules = derivation_trace(prog, g);
  std::vector<std::pair<Ppt, Expansion>> steps;
  steps.reserve(rules.size());
  Ppt ppt(g);
  for (int rule : rules) {
    int leaf = ppt.nonterminal_leaves().front();
    steps.emplace_back(ppt, Expansion{leaf, rule});
    ppt.apply({leaf, rule});
  }
  return steps;
}

Tensor step_loss(Tape& tape, ParamStore& store, const R3nn& model, const Ppt& ppt,
                 const Expansion& target, Tensor io_enc) {
  R3nn::Step s = model.step(tape, store, ppt, io_enc);
  auto it = std::find(s.expansions.begin(), s.expansions.end(), target);
  if (it == s.expansions.end()) throw InvalidExpansion("target expansion is not valid here");
  int idx = static_cast<int>(it - s.expansions.begin());
  return tape.neg(tape.pick(s.log_probs, idx));
}

namespace {

struct CurveTracker {
  double sum_loss = 0.0;
  long steps = 0;

  void add(double loss, long n) {
    sum_loss += loss;
    steps += n;
  }
  double mean() const { return steps ? sum_loss / static_cast<double>(steps) : 0.0; }
};

[[noreturn]] void abort_non_finite(const char* what, int epoch, size_t task_idx, double loss) {
  std::cerr << "{\"error\":\"non_finite_loss\",\"stage\":\"" << what << "\",\"epoch\":" << epoch
            << ",\"task\":" << task_idx << ",\"loss\":" << loss << "}\n";
  throw std::runtime_error("non-finite training loss");
}

std::vector<size_t> epoch_order(size_t n, Rng& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

void train_r3nn(const std::vector<Task>& tasks, const Grammar& g, const IoEncoder& encoder,
                const R3nn& model, ParamStore& store, const TrainConfig& cfg,
                const TrainLogger& log) {
  if (tasks.empty()) throw std::invalid_argument("empty training set");
  for (const Task& t : tasks) {
    if (!t.program) throw std::invalid_argument("training tasks must carry programs");
  }
  Adam adam({cfg.lr, 0.9, 0.999, 1e-8});
  Rng order_rng(mix_seed(cfg.seed, 0x5eed));

  auto greedy_accuracy = [&]() {
    int hit = 0;
    Rng dummy(0);
    for (const Task& t : tasks) {
      Tape tape;
      Tensor enc = encoder.encode_io_set(tape, store, t.examples);
      auto gen = model.generate(store, enc.values(), R3nn::Mode::Greedy, cfg.gen_max_size, dummy);
      if (gen.complete() &&
          serialize_program(*gen.program) == serialize_program(*t.program)) {
        ++hit;
      }
    }
    return static_cast<double>(hit) / static_cast<double>(tasks.size());
  };

  double acc = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    CurveTracker curve;
    std::vector<size_t> order = epoch_order(tasks.size(), order_rng);
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      size_t end = std::min(order.size(), begin + cfg.batch_size);
      store.zero_grads();
      long batch_steps = 0;
      double batch_loss = 0.0;
      for (size_t bi = begin; bi < end; ++bi) {
        const Task& task = tasks[order[bi]];
        Tape tape;
        Tensor io_enc = encoder.encode_io_set(tape, store, task.examples);
        std::vector<Tensor> losses;
        Ppt ppt(g);
        for (int rule : derivation_trace(*task.program, g)) {
          int leaf = ppt.nonterminal_leaves().front();
          losses.push_back(step_loss(tape, store, model, ppt, {leaf, rule}, io_enc));
          ppt.apply({leaf, rule});
        }
        Tensor task_loss = tape.sum(tape.concat(losses));
        double lv = task_loss.scalar();
        if (!std::isfinite(lv)) abort_non_finite("r3nn", epoch, order[bi], lv);
        tape.backward(task_loss);
        store.accumulate_from(tape);
        batch_loss += lv;
        batch_steps += static_cast<long>(losses.size());
      }
      // Mean step loss over the batch.
      for (auto& [name, e] : store.entries()) {
        for (double& gv : e.grad) gv /= static_cast<double>(batch_steps);
      }
      adam.step(store);
      curve.add(batch_loss, batch_steps);
    }
    bool last = epoch == cfg.epochs;
    if (epoch % cfg.acc_every == 0 || last) acc = greedy_accuracy();
    if (log) log({epoch, curve.mean(), acc});
    if (cfg.stop_at_acc > 0 && acc >= cfg.stop_at_acc) break;
  }
}

void train_io2seq(const std::vector<Task>& tasks, const Grammar& g, const IoEncoder& encoder,
                  const Io2Seq& model, ParamStore& store, const TrainConfig& cfg,
                  const TrainLogger& log) {
  if (tasks.empty()) throw std::invalid_argument("empty training set");
  Adam adam({cfg.lr, 0.9, 0.999, 1e-8});
  Rng order_rng(mix_seed(cfg.seed, 0x5eed));

  auto greedy_accuracy = [&]() {
    int hit = 0;
    Rng dummy(0);
    for (const Task& t : tasks) {
      Tape tape;
      Tensor enc = encoder.encode_io_set(tape, store, t.examples);
      auto gen = model.generate(store, enc.values(), Io2Seq::Mode::Greedy, 4 * cfg.gen_max_size,
                                dummy);
      if (gen.ok() && serialize_program(*gen.program) == serialize_program(*t.program)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(tasks.size());
  };

  double acc = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    CurveTracker curve;
    std::vector<size_t> order = epoch_order(tasks.size(), order_rng);
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      size_t end = std::min(order.size(), begin + cfg.batch_size);
      store.zero_grads();
      long batch_steps = 0;
      double batch_loss = 0.0;
      for (size_t bi = begin; bi < end; ++bi) {
        const Task& task = tasks[order[bi]];
        Tape tape;
        Tensor io_enc = encoder.encode_io_set(tape, store, task.examples);
        std::vector<LinearToken> tokens = linearize(*task.program, g);
        int steps = 0;
        Tensor loss = model.sequence_loss(tape, store, tokens, io_enc, &steps);
        double lv = loss.scalar();
        if (!std::isfinite(lv)) abort_non_finite("io2seq", epoch, order[bi], lv);
        tape.backward(loss);
        store.accumulate_from(tape);
        batch_loss += lv;
        batch_steps += steps;
      }
      for (auto& [name, e] : store.entries()) {
        for (double& gv : e.grad) gv /= static_cast<double>(batch_steps);
      }
      adam.step(store);
      curve.add(batch_loss, batch_steps);
    }
    bool last = epoch == cfg.epochs;
    if (epoch % cfg.acc_every == 0 || last) acc = greedy_accuracy();
    if (log) log({epoch, curve.mean(), acc});
    if (cfg.stop_at_acc > 0 && acc >= cfg.stop_at_acc) break;
  }
}

bool equivalent_wrt(const Program& a, const Program& b, std::span<const std::string> inputs) {
  for (const std::string& in : inputs) {
    EvalResult ra = eval_program(a, in);
    EvalResult rb = eval_program(b, in);
    if (!ra.ok() || !rb.ok() || ra.output != rb.output) return false;
  }
  return true;
}

namespace {

// Cached per-task I/O encodings keyed by the example set.
class EncodingCache {
 public:
  EncodingCache(const IoEncoder& encoder, ParamStore& store)
      : encoder_(&encoder), store_(&store) {}

  const std::vector<double>& get(const Task& task) {
    std::string key;
    for (const Example& e : task.examples) {
      key += e.input;
      key += '\x1f';
      key += e.output;
      key += '\x1e';
    }
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Tape tape;
    Tensor enc = encoder_->encode_io_set(tape, *store_, task.examples);
    return cache_.emplace(std::move(key), enc.values()).first->second;
  }

 private:
  const IoEncoder* encoder_;
  ParamStore* store_;
  std::map<std::string, std::vector<double>> cache_;
};

bool consistent_with(const Program& p, const Task& task) {
  for (const Example& e : task.examples) {
    EvalResult r = eval_program(p, e.input);
    if (!r.ok() || r.output != e.output) return false;
  }
  return true;
}

}  // namespace

Engine make_r3nn_engine(const Grammar& g, const IoEncoder& encoder, const R3nn& model,
                        ParamStore& store, int max_size) {
  auto cache = std::make_shared<EncodingCache>(encoder, store);
  Engine e;
  e.sample = [&model, &store, cache, max_size](const Task& task,
                                               uint64_t seed) -> std::optional<ScoredProgram> {
    Rng rng(seed);
    auto gen = model.generate(store, cache->get(task), R3nn::Mode::Sample, max_size, rng);
    if (!gen.complete()) return std::nullopt;
    return ScoredProgram{*gen.program, gen.log_prob, false};
  };
  e.greedy = [&model, &store, cache, max_size](const Task& task) -> std::optional<ScoredProgram> {
    Rng rng(0);
    auto gen = model.generate(store, cache->get(task), R3nn::Mode::Greedy, max_size, rng);
    if (!gen.complete()) return std::nullopt;
    return ScoredProgram{*gen.program, gen.log_prob, true};
  };
  return e;
}

Engine make_io2seq_engine(const Grammar& g, const IoEncoder& encoder, const Io2Seq& model,
                          ParamStore& store, int max_tokens) {
  auto cache = std::make_shared<EncodingCache>(encoder, store);
  Engine e;
  e.sample = [&model, &store, cache, max_tokens](
                 const Task& task, uint64_t seed) -> std::optional<ScoredProgram> {
    Rng rng(seed);
    auto gen = model.generate(store, cache->get(task), Io2Seq::Mode::Sample, max_tokens, rng);
    if (!gen.ok()) return std::nullopt;
    return ScoredProgram{*gen.program, gen.log_prob, false};
  };
  e.greedy = [&model, &store, cache,
              max_tokens](const Task& task) -> std::optional<ScoredProgram> {
    Rng rng(0);
    auto gen = model.generate(store, cache->get(task), Io2Seq::Mode::Greedy, max_tokens, rng);
    if (!gen.ok()) return std::nullopt;
    return ScoredProgram{*gen.program, gen.log_prob, true};
  };
  return e;
}

std::vector<ScoredProgram> synthesize(const Engine& engine, const Task& task, int k,
                                      uint64_t seed) {
  std::vector<ScoredProgram> candidates;
  if (auto g = engine.greedy(task)) candidates.push_back(std::move(*g));
  for (int i = 0; i < k; ++i) {
    if (auto s = engine.sample(task, mix_seed(seed, static_cast<uint64_t>(i)))) {
      candidates.push_back(std::move(*s));
    }
  }
  std::vector<ScoredProgram> out;
  std::unordered_set<std::string> signatures;
  for (auto& c : candidates) {
    if (!consistent_with(c.program, task)) continue;
    std::string sig = output_signature(c.program, task);
    if (!signatures.insert(sig).second) continue;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredProgram& a, const ScoredProgram& b) {
                     return a.log_prob > b.log_prob;
                   });
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (size_t i = 0; i < k_list.size(); ++i) {
    nlohmann::json entry;
    entry["k"] = k_list[i];
    entry["solved"] = solved[i];
    entry["total"] = total;
    nlohmann::json per_task = nlohmann::json::array();
    for (const auto& t : tasks) {
      per_task.push_back({{"solved", t.solved_at[i] != 0}});
    }
    entry["tasks"] = per_task;
    j.push_back(entry);
  }
  return j.dump();
}

EvalReport evaluate(const Engine& engine, const std::vector<Task>& tasks,
                    const std::vector<int>& k_list, uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: no tasks");
  EvalReport report;
  report.k_list = k_list;
  report.solved.assign(k_list.size(), 0);
  report.total = static_cast<int>(tasks.size());
  int k_max = *std::max_element(k_list.begin(), k_list.end());

  for (size_t ti = 0; ti < tasks.size(); ++ti) {
    const Task& task = tasks[ti];
    uint64_t task_seed = mix_seed(seed, ti);
    bool greedy_ok = false;
    if (auto g = engine.greedy(task)) greedy_ok = consistent_with(g->program, task);
    // Shared nested sample stream: the first k draws decide solve@k.
    int first_hit = -1;
    std::string best;
    for (int i = 0; i < k_max; ++i) {
      auto s = engine.sample(task, mix_seed(task_seed, static_cast<uint64_t>(i)));
      if (!s) continue;
      if (consistent_with(s->program, task)) {
        first_hit = i;
        best = serialize_program(s->program);
        break;
      }
    }
    EvalTaskDetail detail;
    for (size_t ki = 0; ki < k_list.size(); ++ki) {
      bool ok = greedy_ok || (first_hit >= 0 && first_hit < k_list[ki]);
      detail.solved_at.push_back(ok ? 1 : 0);
      if (ok) ++report.solved[ki];
    }
    detail.best_program = best;
    report.tasks.push_back(std::move(detail));
  }
  return report;
}

double io2seq_validity_rate(const Grammar&, const IoEncoder& encoder, const Io2Seq& model,
                            ParamStore& store, const std::vector<Task>& tasks,
                            int samples_per_task, int max_tokens, uint64_t seed) {
  EncodingCache cache(encoder, store);
  long valid = 0, total = 0;
  for (size_t ti = 0; ti < tasks.size(); ++ti) {
    const auto& enc = cache.get(tasks[ti]);
    for (int i = 0; i < samples_per_task; ++i) {
      Rng rng(mix_seed(mix_seed(seed, ti), static_cast<uint64_t>(i)));
      auto gen = model.generate(store, enc, Io2Seq::Mode::Sample, max_tokens, rng);
      ++total;
      if (gen.ok()) ++valid;
    }
  }
  return total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
}

}  // namespace strsynth
