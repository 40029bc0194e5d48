#include "strsynth/benchfile.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace strsynth {

namespace {

std::vector<Example> parse_examples(const nlohmann::json& arr, const std::string& path) {
  std::vector<Example> out;
  if (!arr.is_array()) throw IoError("examples must be an array in " + path);
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("in") || !e.contains("out")) {
      throw IoError("example needs 'in' and 'out' fields in " + path);
    }
    out.push_back({e["in"].get<std::string>(), e["out"].get<std::string>()});
  }
  return out;
}

}  // namespace

BenchmarkFile read_benchmark(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open benchmark: " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw IoError("unparseable benchmark: " + path);
  BenchmarkFile b;
  b.name = j.value("name", std::filesystem::path(path).stem().string());
  if (!j.contains("train")) throw IoError("benchmark lacks 'train' examples: " + path);
  b.train = parse_examples(j["train"], path);
  if (b.train.empty()) throw IoError("benchmark has no training examples: " + path);
  if (j.contains("test")) b.test = parse_examples(j["test"], path);
  return b;
}

void write_benchmark(const BenchmarkFile& bench, const std::string& path) {
  nlohmann::json j;
  j["name"] = bench.name;
  auto dump = [](const std::vector<Example>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Example& e : v) arr.push_back({{"in", e.input}, {"out", e.output}});
    return arr;
  };
  j["train"] = dump(bench.train);
  j["test"] = dump(bench.test);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write benchmark: " + path);
  f << j.dump(2) << '\n';
}

std::vector<BenchmarkFile> read_benchmark_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<BenchmarkFile> out;
  for (const auto& p : paths) out.push_back(read_benchmark(p));
  return out;
}

}  // namespace strsynth
