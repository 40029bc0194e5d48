#include "strsynth/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace strsynth {

namespace {

size_t shape_size(const Shape& s) {
  size_t n = 1;
  for (size_t d : s) n *= d;
  return n;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "{";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

const Shape& Tensor::shape() const { return tape_->shape_of(node_); }
size_t Tensor::size() const { return tape_->value_of(node_).size(); }
const std::vector<double>& Tensor::values() const { return tape_->value_of(node_); }

double Tensor::scalar() const {
  const auto& v = values();
  if (v.size() != 1) throw ShapeError("scalar() on tensor of shape " + shape_str(shape()));
  return v[0];
}

Tensor Tape::push(Shape shape, std::vector<double> value, bool needs_grad,
                  std::function<void(Tape&, int)> backprop) {
  if (shape_size(shape) != value.size()) {
    throw ShapeError("value size does not match shape " + shape_str(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::make_shared<std::vector<double>>(std::move(value));
  n.backprop = std::move(backprop);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

std::vector<double>& Tape::grad_buf(int node) {
  if (grads_[node].empty()) grads_[node].assign(nodes_[node].value->size(), 0.0);
  return grads_[node];
}

bool Tape::wants_grad(int node) const { return nodes_[node].needs_grad; }

void Tape::check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Tensor Tape::leaf(Shape shape, std::shared_ptr<std::vector<double>> data, bool needs_grad) {
  if (shape_size(shape) != data->size()) {
    throw ShapeError("leaf data does not match shape " + shape_str(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(data);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::constant(Shape shape, std::vector<double> data) {
  return push(std::move(shape), std::move(data), false, {});
}

Tensor Tape::constant_scalar(double v) { return constant({1}, {v}); }

Tensor Tape::zeros(Shape shape) {
  size_t n = shape_size(shape);
  return push(std::move(shape), std::vector<double>(n, 0.0), false, {});
}

Tensor Tape::add(Tensor a, Tensor b) {
  check_same_shape(a, b, "add");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  int an = a.node(), bn = b.node();
  return push(a.shape(), std::move(out), wants_grad(an) || wants_grad(bn),
              [an, bn](Tape& t, int self) {
                const auto& dy = t.grads_[self];
                if (t.wants_grad(an)) {
                  auto& da = t.grad_buf(an);
                  for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                }
                if (t.wants_grad(bn)) {
                  auto& db = t.grad_buf(bn);
                  for (size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
                }
              });
}

Tensor Tape::sub(Tensor a, Tensor b) {
  check_same_shape(a, b, "sub");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  int an = a.node(), bn = b.node();
  return push(a.shape(), std::move(out), wants_grad(an) || wants_grad(bn),
              [an, bn](Tape& t, int self) {
                const auto& dy = t.grads_[self];
                if (t.wants_grad(an)) {
                  auto& da = t.grad_buf(an);
                  for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
                }
                if (t.wants_grad(bn)) {
                  auto& db = t.grad_buf(bn);
                  for (size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
                }
              });
}

Tensor Tape::neg(Tensor a) { return scale(a, -1.0); }

Tensor Tape::mul(Tensor a, Tensor b) {
  check_same_shape(a, b, "mul");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  int an = a.node(), bn = b.node();
  auto asave = nodes_[an].value, bsave = nodes_[bn].value;
  return push(a.shape(), std::move(out), wants_grad(an) || wants_grad(bn),
              [an, bn, asave, bsave](Tape& t, int self) {
                const auto& dy = t.grads_[self];
                if (t.wants_grad(an)) {
                  auto& da = t.grad_buf(an);
                  for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (*bsave)[i];
                }
                if (t.wants_grad(bn)) {
                  auto& db = t.grad_buf(bn);
                  for (size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * (*asave)[i];
                }
              });
}

Tensor Tape::scale(Tensor a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = c * av[i];
  int an = a.node();
  return push(a.shape(), std::move(out), wants_grad(an), [an, c](Tape& t, int self) {
    const auto& dy = t.grads_[self];
    if (!t.wants_grad(an)) return;
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += c * dy[i];
  });
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || (sb.size() != 1 && sb.size() != 2)) {
    throw ShapeError("matmul: unsupported shapes " + shape_str(sa) + " x " + shape_str(sb));
  }
  size_t m = sa[0], n = sa[1];
  bool vec = sb.size() == 1;
  size_t p = vec ? 1 : sb[1];
  if ((vec ? sb[0] : sb[0]) != n) {
    throw ShapeError("matmul: inner dimension mismatch " + shape_str(sa) + " x " + shape_str(sb));
  }
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(m * p, 0.0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t k = 0; k < n; ++k) {
      double aik = av[i * n + k];
      if (aik == 0.0) continue;
      const double* brow = &bv[k * p];
      double* orow = &out[i * p];
      for (size_t j = 0; j < p; ++j) orow[j] += aik * brow[j];
    }
  }
  int an = a.node(), bn = b.node();
  auto asave = nodes_[an].value, bsave = nodes_[bn].value;
  Shape out_shape = vec ? Shape{m} : Shape{m, p};
  return push(std::move(out_shape), std::move(out), wants_grad(an) || wants_grad(bn),
              [an, bn, asave, bsave, m, n, p](Tape& t, int self) {
                const auto& dy = t.grads_[self];
                if (t.wants_grad(an)) {
                  auto& da = t.grad_buf(an);  // dA = dY B^T
                  for (size_t i = 0; i < m; ++i) {
                    for (size_t k = 0; k < n; ++k) {
                      double acc = 0.0;
                      const double* dyrow = &dy[i * p];
                      const double* brow = &(*bsave)[k * p];
                      for (size_t j = 0; j < p; ++j) acc += dyrow[j] * brow[j];
                      da[i * n + k] += acc;
                    }
                  }
                }
                if (t.wants_grad(bn)) {
                  auto& db = t.grad_buf(bn);  // dB = A^T dY
                  for (size_t i = 0; i < m; ++i) {
                    const double* dyrow = &dy[i * p];
                    for (size_t k = 0; k < n; ++k) {
                      double aik = (*asave)[i * n + k];
                      if (aik == 0.0) continue;
                      double* dbrow = &db[k * p];
                      for (size_t j = 0; j < p; ++j) dbrow[j] += aik * dyrow[j];
                    }
                  }
                }
              });
}

Tensor Tape::dot(Tensor a, Tensor b) {
  if (a.shape().size() != 1 || b.shape().size() != 1) {
    throw ShapeError("dot: expected vectors, got " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  check_same_shape(a, b, "dot");
  const auto& av = a.values();
  const auto& bv = b.values();
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  int an = a.node(), bn = b.node();
  auto asave = nodes_[an].value, bsave = nodes_[bn].value;
  return push({1}, {acc}, wants_grad(an) || wants_grad(bn),
              [an, bn, asave, bsave](Tape& t, int self) {
                double dy = t.grads_[self][0];
                if (t.wants_grad(an)) {
                  auto& da = t.grad_buf(an);
                  for (size_t i = 0; i < da.size(); ++i) da[i] += dy * (*bsave)[i];
                }
                if (t.wants_grad(bn)) {
                  auto& db = t.grad_buf(bn);
                  for (size_t i = 0; i < db.size(); ++i) db[i] += dy * (*asave)[i];
                }
              });
}

Tensor Tape::tanh(Tensor a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  int an = a.node();
  return push(a.shape(), std::move(out), wants_grad(an), [an](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    const auto& y = *t.nodes_[self].value;
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Tensor Tape::sigmoid(Tensor a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  int an = a.node();
  return push(a.shape(), std::move(out), wants_grad(an), [an](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    const auto& y = *t.nodes_[self].value;
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor Tape::log(Tensor a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = std::log(av[i]);
  int an = a.node();
  auto x = nodes_[an].value;
  return push(a.shape(), std::move(out), wants_grad(an), [an, x](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] / (*x)[i];
  });
}

Tensor Tape::softmax(Tensor a) {
  if (a.shape().size() != 1) {
    throw ShapeError("softmax: expected vector, got " + shape_str(a.shape()));
  }
  const auto& av = a.values();
  double mx = *std::max_element(av.begin(), av.end());
  std::vector<double> out(av.size());
  double z = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    out[i] = std::exp(av[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  int an = a.node();
  return push(a.shape(), std::move(out), wants_grad(an), [an](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    const auto& y = *t.nodes_[self].value;
    auto& da = t.grad_buf(an);
    double inner = 0.0;
    for (size_t i = 0; i < dy.size(); ++i) inner += dy[i] * y[i];
    for (size_t i = 0; i < dy.size(); ++i) da[i] += y[i] * (dy[i] - inner);
  });
}

Tensor Tape::sum(Tensor a) {
  const auto& av = a.values();
  double acc = 0.0;
  for (double v : av) acc += v;
  int an = a.node();
  return push({1}, {acc}, wants_grad(an), [an](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    double dy = t.grads_[self][0];
    auto& da = t.grad_buf(an);
    for (double& g : da) g += dy;
  });
}

Tensor Tape::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<double> out;
  std::vector<int> pnodes;
  std::vector<size_t> sizes;
  bool ng = false;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 1) {
      throw ShapeError("concat: expected vectors, got " + shape_str(p.shape()));
    }
    const auto& pv = p.values();
    out.insert(out.end(), pv.begin(), pv.end());
    pnodes.push_back(p.node());
    sizes.push_back(pv.size());
    ng = ng || wants_grad(p.node());
  }
  size_t total = out.size();
  return push({total}, std::move(out), ng, [pnodes, sizes](Tape& t, int self) {
    const auto& dy = t.grads_[self];
    size_t off = 0;
    for (size_t i = 0; i < pnodes.size(); ++i) {
      if (t.wants_grad(pnodes[i])) {
        auto& dp = t.grad_buf(pnodes[i]);
        for (size_t j = 0; j < sizes[i]; ++j) dp[j] += dy[off + j];
      }
      off += sizes[i];
    }
  });
}

Tensor Tape::slice(Tensor a, size_t offset, size_t len) {
  if (a.shape().size() != 1) throw ShapeError("slice: expected vector");
  const auto& av = a.values();
  if (offset + len > av.size()) throw ShapeError("slice: out of range");
  std::vector<double> out(av.begin() + offset, av.begin() + offset + len);
  int an = a.node();
  return push({len}, std::move(out), wants_grad(an), [an, offset, len](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < len; ++i) da[offset + i] += dy[i];
  });
}

std::vector<Tensor> Tape::split(Tensor a, std::span<const size_t> sizes) {
  size_t total = 0;
  for (size_t s : sizes) total += s;
  if (total != a.size()) {
    throw ShapeError("split: sizes sum " + std::to_string(total) + " != tensor size " +
                     std::to_string(a.size()));
  }
  std::vector<Tensor> out;
  size_t off = 0;
  for (size_t s : sizes) {
    out.push_back(slice(a, off, s));
    off += s;
  }
  return out;
}

Tensor Tape::stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  size_t n = rows[0].size();
  std::vector<double> out;
  std::vector<int> pnodes;
  bool ng = false;
  for (const Tensor& r : rows) {
    if (r.shape().size() != 1 || r.size() != n) {
      throw ShapeError("stack_rows: inconsistent row shape " + shape_str(r.shape()));
    }
    const auto& rv = r.values();
    out.insert(out.end(), rv.begin(), rv.end());
    pnodes.push_back(r.node());
    ng = ng || wants_grad(r.node());
  }
  return push({rows.size(), n}, std::move(out), ng, [pnodes, n](Tape& t, int self) {
    const auto& dy = t.grads_[self];
    for (size_t i = 0; i < pnodes.size(); ++i) {
      if (!t.wants_grad(pnodes[i])) continue;
      auto& dp = t.grad_buf(pnodes[i]);
      for (size_t j = 0; j < n; ++j) dp[j] += dy[i * n + j];
    }
  });
}

Tensor Tape::row(Tensor a, size_t r) {
  if (a.shape().size() != 2) throw ShapeError("row: expected matrix");
  size_t m = a.shape()[0], n = a.shape()[1];
  if (r >= m) throw ShapeError("row: index out of range");
  const auto& av = a.values();
  std::vector<double> out(av.begin() + r * n, av.begin() + (r + 1) * n);
  int an = a.node();
  return push({n}, std::move(out), wants_grad(an), [an, r, n](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    auto& da = t.grad_buf(an);
    for (size_t j = 0; j < n; ++j) da[r * n + j] += dy[j];
  });
}

Tensor Tape::transpose(Tensor a) {
  if (a.shape().size() != 2) throw ShapeError("transpose: expected matrix");
  size_t m = a.shape()[0], n = a.shape()[1];
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  int an = a.node();
  return push({n, m}, std::move(out), wants_grad(an), [an, m, n](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < n; ++j) da[i * n + j] += dy[j * m + i];
    }
  });
}

Tensor Tape::reshape(Tensor a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: size mismatch " + shape_str(a.shape()) + " -> " +
                     shape_str(shape));
  }
  const auto& av = a.values();
  int an = a.node();
  return push(std::move(shape), av, wants_grad(an), [an](Tape& t, int self) {
    if (!t.wants_grad(an)) return;
    const auto& dy = t.grads_[self];
    auto& da = t.grad_buf(an);
    for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
  });
}

Tensor Tape::gather(Tensor a, std::vector<int> idx) {
  if (a.shape().size() != 1) throw ShapeError("gather: expected vector");
  const auto& av = a.values();
  std::vector<double> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<size_t>(idx[i]) >= av.size()) {
      throw ShapeError("gather: index out of range");
    }
    out[i] = av[idx[i]];
  }
  int an = a.node();
  return push({idx.size()}, std::move(out), wants_grad(an),
              [an, idx = std::move(idx)](Tape& t, int self) {
                if (!t.wants_grad(an)) return;
                const auto& dy = t.grads_[self];
                auto& da = t.grad_buf(an);
                for (size_t i = 0; i < idx.size(); ++i) da[idx[i]] += dy[i];
              });
}

Tensor Tape::pick(Tensor a, int i) {
  Tensor g = gather(a, {i});
  return reshape(g, {1});
}

Tensor Tape::embedding_lookup(Tensor table, std::vector<int> ids) {
  if (table.shape().size() != 2) throw ShapeError("embedding_lookup: expected matrix table");
  size_t v = table.shape()[0], e = table.shape()[1];
  const auto& tv = table.values();
  std::vector<double> out;
  out.reserve(ids.size() * e);
  for (int id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= v) {
      throw ShapeError("embedding_lookup: id out of range");
    }
    out.insert(out.end(), tv.begin() + id * e, tv.begin() + (id + 1) * e);
  }
  int tn = table.node();
  return push({ids.size(), e}, std::move(out), wants_grad(tn),
              [tn, e, ids = std::move(ids)](Tape& t, int self) {
                if (!t.wants_grad(tn)) return;
                const auto& dy = t.grads_[self];
                auto& dt = t.grad_buf(tn);
                for (size_t i = 0; i < ids.size(); ++i) {
                  for (size_t j = 0; j < e; ++j) dt[ids[i] * e + j] += dy[i * e + j];
                }
              });
}

void Tape::bind_param(int node, const std::string& name) {
  param_bindings_.emplace_back(node, name);
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw std::logic_error("loss belongs to a different tape");
  if (loss.size() != 1) {
    throw NonScalarLoss("loss has shape " + shape_str(loss.shape()) + ", expected scalar");
  }
  if (backward_done_) {
    throw std::logic_error("backward() called twice on the same tape; rebuild the forward graph");
  }
  backward_done_ = true;
  grads_.assign(nodes_.size(), {});
  grad_buf(loss.node())[0] = 1.0;
  for (int i = loss.node(); i >= 0; --i) {
    if (!nodes_[i].needs_grad || grads_[i].empty()) continue;
    if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
  }
}

std::span<const double> Tape::grad(const Tensor& t) const { return grad_of_node(t.node()); }

std::span<const double> Tape::grad_of_node(int node) const {
  if (!backward_done_) throw std::logic_error("grad() before backward()");
  const auto& g = grads_[node];
  return {g.data(), g.size()};
}

}  // namespace strsynth
