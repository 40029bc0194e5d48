#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "strsynth/rng.hpp"
#include "strsynth/tensor.hpp"

namespace strsynth {

// Named parameter tensors with gradient buffers. Iteration is in name order,
// which keeps initialization, updates and checkpoints deterministic.
class ParamStore {
 public:
  struct Entry {
    Shape shape;
    std::shared_ptr<std::vector<double>> value;
    std::vector<double> grad;
  };

  // Defines a zero-initialized parameter; name must be fresh.
  Entry& define(const std::string& name, Shape shape);
  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;
  std::vector<double>& value(const std::string& name) { return *entry(name).value; }
  std::vector<double>& grad(const std::string& name) { return entry(name).grad; }

  // Registers the parameter as a grad-tracked leaf on the tape.
  Tensor use(Tape& tape, const std::string& name);

  void zero_grads();

  // Adds the tape's parameter-leaf gradients into the store (gradient
  // accumulation across tapes). Call after tape.backward().
  void accumulate_from(const Tape& tape);

  size_t total_parameters() const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void init_xavier(ParamStore& store, const std::string& name, size_t fan_in, size_t fan_out,
                 Rng& rng);
void init_uniform(ParamStore& store, const std::string& name, double lo, double hi, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update over every parameter from the accumulated gradients.
  void step(ParamStore& store);

  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::map<std::string, std::vector<double>> m_, v_;
  long t_ = 0;
};

// Builds the forward graph on the given tape and returns the scalar loss.
using LossFn = std::function<Tensor(Tape&, ParamStore&)>;

// Central-difference gradient check. Checks every coordinate when
// max_coords == 0, otherwise a seeded random subset of at least
// min(max_coords, total) coordinates. Returns the maximum of
// |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
double grad_check(const LossFn& fn, ParamStore& store, double eps = 1e-5,
                  size_t max_coords = 0, uint64_t seed = 0);

// Versioned checkpoint container: magic "NSPS1", little-endian u64 manifest
// length, JSON manifest (names, shapes, dtype, hyperparameters, grammar
// hash), then raw little-endian float64 blobs in manifest order.
struct CheckpointMeta {
  uint64_t grammar_hash = 0;
  std::string model_type;   // "r3nn" | "io2seq"
  std::string hyper_json;   // model + encoder hyperparameters
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const CheckpointMeta& meta);
CheckpointMeta load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace strsynth
