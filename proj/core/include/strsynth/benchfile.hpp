#pragma once

#include <string>
#include <vector>

#include "strsynth/datagen.hpp"

namespace strsynth {

// One benchmark task: training examples drive synthesis, held-out examples
// (optional) check generalization.
struct BenchmarkFile {
  std::string name;
  std::vector<Example> train;
  std::vector<Example> test;

  Task as_task() const { return Task{std::nullopt, train}; }
};

// JSON format: {"name": str, "train": [{"in","out"}...], "test": [...]}
BenchmarkFile read_benchmark(const std::string& path);
void write_benchmark(const BenchmarkFile& bench, const std::string& path);

// All *.json files in a directory, sorted by filename.
std::vector<BenchmarkFile> read_benchmark_dir(const std::string& dir);

}  // namespace strsynth
