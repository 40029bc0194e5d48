#include "strsynth/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace strsynth {

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.encoder.charset = c.dsl.charset;
  c.encoder.T = c.dsl.max_string_len;
  c.finalize();
  return c;
}

void RunConfig::finalize() {
  if (encoder.charset.empty()) encoder.charset = dsl.charset;
  encoder.T = dsl.max_string_len;
  r3nn.io_dim = encoder.io_dim();
  io2seq.io_dim = encoder.io_dim();
  if (split_train <= 0 || split_valid < 0 || split_test < 0 ||
      split_train + split_valid + split_test > 1.0 + 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to at most 1");
  }
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("unparseable config JSON");
  RunConfig c = RunConfig::defaults();

  if (j.contains("charset")) c.dsl.charset = j["charset"].get<std::string>();
  if (j.contains("constants")) c.dsl.constants = j["constants"].get<std::vector<std::string>>();
  if (j.contains("N_max")) c.dsl.max_concat_parts = j["N_max"].get<int>();
  if (j.contains("K_max")) c.dsl.const_pos_max = j["K_max"].get<int>();
  if (j.contains("match_k_max")) c.dsl.match_k_max = j["match_k_max"].get<int>();
  if (j.contains("T")) c.dsl.max_string_len = j["T"].get<int>();

  if (j.contains("n_tasks")) c.n_tasks = j["n_tasks"].get<int>();
  if (j.contains("split")) {
    auto s = j["split"].get<std::vector<double>>();
    if (s.size() != 3) throw ConfigError("split must have three ratios");
    c.split_train = s[0];
    c.split_valid = s[1];
    c.split_test = s[2];
  }
  if (j.contains("max_size")) c.max_size = j["max_size"].get<int>();
  if (j.contains("n_examples")) c.n_examples = j["n_examples"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();

  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    if (e.contains("variant")) {
      auto v = encoder_variant_from_name(e["variant"].get<std::string>());
      if (!v) throw ConfigError("unknown encoder variant: " + e["variant"].get<std::string>());
      c.encoder.variant = *v;
    }
    if (e.contains("H")) c.encoder.H = e["H"].get<int>();
    if (e.contains("E")) c.encoder.E = e["E"].get<int>();
    if (e.contains("n_pairs")) c.encoder.n_pairs = e["n_pairs"].get<int>();
    if (e.contains("lstm_layers")) c.encoder.lstm_layers = e["lstm_layers"].get<int>();
  }

  if (j.contains("r3nn")) {
    const auto& r = j["r3nn"];
    if (r.contains("M")) c.r3nn.M = r["M"].get<int>();
    if (r.contains("hidden_layers")) c.r3nn.hidden_layers = r["hidden_layers"].get<int>();
    if (r.contains("leaf_lstm")) c.r3nn.leaf_lstm = r["leaf_lstm"].get<bool>();
    if (r.contains("cond_lstm")) c.r3nn.cond_lstm = r["cond_lstm"].get<bool>();
    if (r.contains("conditioning")) {
      auto v = conditioning_from_name(r["conditioning"].get<std::string>());
      if (!v) throw ConfigError("unknown conditioning: " + r["conditioning"].get<std::string>());
      c.r3nn.conditioning = *v;
    }
  }

  if (j.contains("io2seq")) {
    const auto& r = j["io2seq"];
    if (r.contains("hidden")) c.io2seq.hidden = r["hidden"].get<int>();
    if (r.contains("layers")) c.io2seq.layers = r["layers"].get<int>();
    if (r.contains("embed")) c.io2seq.embed = r["embed"].get<int>();
  }

  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int>();
    if (t.contains("epochs")) c.train.epochs = t["epochs"].get<int>();
    if (t.contains("lr")) c.train.lr = t["lr"].get<double>();
    if (t.contains("seed")) c.train.seed = t["seed"].get<uint64_t>();
    if (t.contains("stop_at_acc")) c.train.stop_at_acc = t["stop_at_acc"].get<double>();
    if (t.contains("acc_every")) c.train.acc_every = t["acc_every"].get<int>();
  }

  if (j.contains("samples")) c.samples = j["samples"].get<int>();
  if (j.contains("gen_max_size")) c.gen_max_size = j["gen_max_size"].get<int>();

  c.encoder.charset = c.dsl.charset;
  c.finalize();
  c.train.gen_max_size = c.gen_max_size;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json() const {
  nlohmann::json j;
  j["charset"] = dsl.charset;
  j["constants"] = dsl.constants;
  j["N_max"] = dsl.max_concat_parts;
  j["K_max"] = dsl.const_pos_max;
  j["match_k_max"] = dsl.match_k_max;
  j["T"] = dsl.max_string_len;
  j["n_tasks"] = n_tasks;
  j["split"] = {split_train, split_valid, split_test};
  j["max_size"] = max_size;
  j["n_examples"] = n_examples;
  j["seed"] = seed;
  j["encoder"] = {{"variant", encoder_variant_name(encoder.variant)},
                  {"H", encoder.H},
                  {"E", encoder.E},
                  {"n_pairs", encoder.n_pairs},
                  {"lstm_layers", encoder.lstm_layers}};
  j["r3nn"] = {{"M", r3nn.M},
               {"hidden_layers", r3nn.hidden_layers},
               {"leaf_lstm", r3nn.leaf_lstm},
               {"cond_lstm", r3nn.cond_lstm},
               {"conditioning", conditioning_name(r3nn.conditioning)}};
  j["io2seq"] = {{"hidden", io2seq.hidden}, {"layers", io2seq.layers}, {"embed", io2seq.embed}};
  j["train"] = {{"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"lr", train.lr},
                {"seed", train.seed},
                {"stop_at_acc", train.stop_at_acc},
                {"acc_every", train.acc_every}};
  j["samples"] = samples;
  j["gen_max_size"] = gen_max_size;
  return j.dump(2);
}

}  // namespace strsynth
