#pragma once

#include <string>

#include "strsynth/encoders.hpp"
#include "strsynth/grammar.hpp"
#include "strsynth/io2seq.hpp"
#include "strsynth/r3nn.hpp"
#include "strsynth/train.hpp"

namespace strsynth {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run configuration: DSL bounds plus datagen, encoder, model and training
// settings. Every field has a default; a JSON config file overrides fields
// selectively.
struct RunConfig {
  DslConfig dsl = DslConfig::defaults();

  // datagen
  int n_tasks = 100;
  double split_train = 0.8, split_valid = 0.1, split_test = 0.1;
  int max_size = 13;
  int n_examples = 5;
  uint64_t seed = 1;

  // encoder
  EncoderConfig encoder;

  // models
  R3nnConfig r3nn;
  Io2SeqConfig io2seq;

  // training
  TrainConfig train;

  // synthesis defaults
  int samples = 100;
  int gen_max_size = 13;

  static RunConfig defaults();
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json() const;

  // Derived values that must stay consistent.
  void finalize();
};

}  // namespace strsynth
