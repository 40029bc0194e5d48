#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "strsynth/datagen.hpp"
#include "strsynth/encoders.hpp"
#include "strsynth/io2seq.hpp"
#include "strsynth/r3nn.hpp"

namespace strsynth {

struct TrainConfig {
  int batch_size = 8;
  int epochs = 100;
  double lr = 1e-3;
  uint64_t seed = 1;
  int gen_max_size = 13;       // size cap for the greedy reconstruction metric
  double stop_at_acc = -1.0;   // early stop once greedy accuracy reaches this
  int acc_every = 1;           // epochs between greedy-accuracy evaluations
};

struct TrainLogRow {
  int epoch = 0;
  double mean_loss = 0.0;
  double greedy_train_acc = 0.0;
};

using TrainLogger = std::function<void(const TrainLogRow&)>;

// Replays the leftmost derivation of `prog`, returning the per-step target
// expansions against the evolving PPT.
std::vector<std::pair<Ppt, Expansion>> trace_steps(const Program& prog, const Grammar& g);

// -log pi(target) for one PPT state. Throws InvalidExpansion when the target
// does not apply to the tree.
Tensor step_loss(Tape& tape, ParamStore& store, const R3nn& model, const Ppt& ppt,
                 const Expansion& target, Tensor io_enc);

// Minimizes mean step loss over all trace steps of all tasks, conditioned on
// each task's encoded examples; batches accumulate gradients across their
// variable-length traces. Aborts on non-finite loss with a diagnostic dump.
void train_r3nn(const std::vector<Task>& tasks, const Grammar& g, const IoEncoder& encoder,
                const R3nn& model, ParamStore& store, const TrainConfig& cfg,
                const TrainLogger& log = {});

// Teacher-forced training of the io2seq decoder on linearized programs.
void train_io2seq(const std::vector<Task>& tasks, const Grammar& g, const IoEncoder& encoder,
                  const Io2Seq& model, ParamStore& store, const TrainConfig& cfg,
                  const TrainLogger& log = {});

// True iff both programs evaluate without error on every input and produce
// identical outputs.
bool equivalent_wrt(const Program& a, const Program& b, std::span<const std::string> inputs);

struct ScoredProgram {
  Program program;
  double log_prob = 0.0;
  bool from_greedy = false;
};

// One generation engine (R3NN or io2seq) behind a uniform sampling facade.
struct Engine {
  std::function<std::optional<ScoredProgram>(const Task&, uint64_t seed)> sample;
  std::function<std::optional<ScoredProgram>(const Task&)> greedy;
};

Engine make_r3nn_engine(const Grammar& g, const IoEncoder& encoder, const R3nn& model,
                        ParamStore& store, int max_size);
Engine make_io2seq_engine(const Grammar& g, const IoEncoder& encoder, const Io2Seq& model,
                          ParamStore& store, int max_tokens);

// Draws k samples plus the greedy candidate, keeps programs consistent with
// every example, dedupes by output signature, ranks by model log-probability.
// k == 0 means greedy only.
std::vector<ScoredProgram> synthesize(const Engine& engine, const Task& task, int k,
                                      uint64_t seed);

struct EvalTaskDetail {
  std::vector<int> solved_at;  // parallel to k_list: 1 solved / 0 not
  std::string best_program;    // best consistent program at the largest k, if any
};

struct EvalReport {
  std::vector<int> k_list;
  std::vector<int> solved;  // per k
  int total = 0;
  std::vector<EvalTaskDetail> tasks;

  std::string to_json() const;
};

// Nested sampling: for each k the first k draws of a shared per-task stream
// count, so success is non-decreasing in k by construction.
EvalReport evaluate(const Engine& engine, const std::vector<Task>& tasks,
                    const std::vector<int>& k_list, uint64_t seed);

// Fraction of sampled io2seq emissions that delinearize into valid programs.
double io2seq_validity_rate(const Grammar& g, const IoEncoder& encoder, const Io2Seq& model,
                            ParamStore& store, const std::vector<Task>& tasks, int samples_per_task,
                            int max_tokens, uint64_t seed);

}  // namespace strsynth
