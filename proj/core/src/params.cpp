#include "strsynth/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace strsynth {

ParamStore::Entry& ParamStore::define(const std::string& name, Shape shape) {
  if (entries_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  size_t n = 1;
  for (size_t d : shape) n *= d;
  Entry e;
  e.shape = std::move(shape);
  e.value = std::make_shared<std::vector<double>>(n, 0.0);
  e.grad.assign(n, 0.0);
  return entries_.emplace(name, std::move(e)).first->second;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

Tensor ParamStore::use(Tape& tape, const std::string& name) {
  Entry& e = entry(name);
  Tensor t = tape.leaf(e.shape, e.value, /*needs_grad=*/true);
  tape.bind_param(t.node(), name);
  return t;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

void ParamStore::accumulate_from(const Tape& tape) {
  // A tape may bind the same parameter more than once; each binding is its
  // own leaf node and contributes its own gradient.
  for (const auto& [node, name] : tape.param_bindings()) {
    std::span<const double> g = tape.grad_of_node(node);
    if (g.empty()) continue;
    Entry& e = entry(name);
    for (size_t i = 0; i < g.size(); ++i) e.grad[i] += g[i];
  }
}

size_t ParamStore::total_parameters() const {
  size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value->size();
  return n;
}

void init_xavier(ParamStore& store, const std::string& name, size_t fan_in, size_t fan_out,
                 Rng& rng) {
  double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  init_uniform(store, name, -a, a, rng);
}

void init_uniform(ParamStore& store, const std::string& name, double lo, double hi, Rng& rng) {
  for (double& v : store.value(name)) v = uniform_real(rng, lo, hi);
}

void Adam::step(ParamStore& store) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto& [name, e] : store.entries()) {
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(e.value->size(), 0.0);
      v.assign(e.value->size(), 0.0);
    }
    auto& val = *e.value;
    for (size_t i = 0; i < val.size(); ++i) {
      double g = e.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      val[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

double grad_check(const LossFn& fn, ParamStore& store, double eps, size_t max_coords,
                  uint64_t seed) {
  store.zero_grads();
  {
    Tape tape;
    Tensor loss = fn(tape, store);
    tape.backward(loss);
    store.accumulate_from(tape);
  }
  auto eval_loss = [&]() {
    Tape tape;
    return fn(tape, store).scalar();
  };

  // Enumerate (name, index) coordinates, optionally subsampled.
  std::vector<std::pair<std::string, size_t>> coords;
  for (const auto& [name, e] : store.entries()) {
    for (size_t i = 0; i < e.value->size(); ++i) coords.emplace_back(name, i);
  }
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }

  double worst = 0.0;
  for (const auto& [name, i] : coords) {
    auto& val = store.value(name);
    double saved = val[i];
    val[i] = saved + eps;
    double up = eval_loss();
    val[i] = saved - eps;
    double down = eval_loss();
    val[i] = saved;
    double numeric = (up - down) / (2.0 * eps);
    double analytic = store.grad(name)[i];
    double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

namespace {

constexpr char kMagic[5] = {'N', 'S', 'P', 'S', '1'};

void write_u64(std::ostream& os, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const CheckpointMeta& meta) {
  nlohmann::json manifest;
  manifest["format"] = "NSPS1";
  manifest["dtype"] = "float64";
  manifest["grammar_hash"] = meta.grammar_hash;
  manifest["model_type"] = meta.model_type;
  manifest["hyper"] =
      meta.hyper_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta.hyper_json);
  manifest["tensors"] = nlohmann::json::array();
  for (const auto& [name, e] : store.entries()) {
    manifest["tensors"].push_back({{"name", name}, {"shape", e.shape}});
  }
  std::string mtext = manifest.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  write_u64(f, mtext.size());
  f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& [name, e] : store.entries()) {
    f.write(reinterpret_cast<const char*>(e.value->data()),
            static_cast<std::streamsize>(e.value->size() * sizeof(double)));
  }
  if (!f) throw CheckpointError("checkpoint write failed: " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[5];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path);
  }
  uint64_t mlen = read_u64(f);
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw CheckpointError("truncated checkpoint manifest in " + path);
  nlohmann::json manifest = nlohmann::json::parse(mtext, nullptr, false);
  if (manifest.is_discarded()) throw CheckpointError("unparseable manifest in " + path);
  if (manifest.value("dtype", "") != "float64") {
    throw CheckpointError("unsupported dtype in " + path);
  }

  CheckpointMeta meta;
  meta.grammar_hash = manifest.value("grammar_hash", 0ull);
  meta.model_type = manifest.value("model_type", "");
  meta.hyper_json = manifest.contains("hyper") ? manifest["hyper"].dump() : "{}";

  store = ParamStore{};
  for (const auto& t : manifest["tensors"]) {
    Shape shape = t["shape"].get<Shape>();
    auto& e = store.define(t["name"].get<std::string>(), shape);
    f.read(reinterpret_cast<char*>(e.value->data()),
           static_cast<std::streamsize>(e.value->size() * sizeof(double)));
    if (!f) throw CheckpointError("truncated tensor data in " + path);
  }
  return meta;
}

}  // namespace strsynth
