#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace strsynth {

using Shape = std::vector<size_t>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonScalarLoss : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class Tape;

// Lightweight handle onto a tape node. Values are 64-bit floats, row-major.
class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return tape_ != nullptr; }
  const Shape& shape() const;
  size_t size() const;
  const std::vector<double>& values() const;
  double scalar() const;  // pre: size() == 1
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;
  Tensor(Tape* t, int n) : tape_(t), node_(n) {}

  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode differentiation record. Nodes are appended in topological
// order during the forward pass; backward() visits each node exactly once in
// reverse. A tape can run backward once; re-running without re-building the
// forward graph is an error.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. Parameter leaves share storage with their owner and are tracked
  // so gradients can be pulled out after backward().
  Tensor leaf(Shape shape, std::shared_ptr<std::vector<double>> data, bool needs_grad);
  Tensor constant(Shape shape, std::vector<double> data);
  Tensor constant_scalar(double v);
  Tensor zeros(Shape shape);

  // Elementwise and linear algebra primitives.
  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor neg(Tensor a);
  Tensor mul(Tensor a, Tensor b);
  Tensor scale(Tensor a, double c);
  Tensor matmul(Tensor a, Tensor b);  // {m,n}x{n,p} -> {m,p} or {m,n}x{n} -> {m}
  Tensor dot(Tensor a, Tensor b);     // 1-D pair -> scalar
  Tensor tanh(Tensor a);
  Tensor sigmoid(Tensor a);
  Tensor log(Tensor a);
  Tensor softmax(Tensor a);  // 1-D
  Tensor sum(Tensor a);      // -> scalar

  // Structure.
  Tensor concat(std::span<const Tensor> parts);  // 1-D, axis 0
  Tensor slice(Tensor a, size_t offset, size_t len);  // 1-D
  std::vector<Tensor> split(Tensor a, std::span<const size_t> sizes);  // 1-D
  Tensor stack_rows(std::span<const Tensor> rows);  // k vectors {n} -> {k,n}
  Tensor row(Tensor a, size_t r);                   // {m,n} -> {n}
  Tensor transpose(Tensor a);                       // 2-D
  Tensor reshape(Tensor a, Shape shape);
  Tensor gather(Tensor a, std::vector<int> idx);  // 1-D -> {idx.size()}
  Tensor pick(Tensor a, int i);                   // 1-D -> scalar
  Tensor embedding_lookup(Tensor table, std::vector<int> ids);  // {V,E} -> {n,E}

  // Reverse sweep from a scalar loss. Throws NonScalarLoss for non-scalars
  // and std::logic_error when called twice on the same forward graph.
  void backward(const Tensor& loss);

  bool backward_done() const { return backward_done_; }
  std::span<const double> grad(const Tensor& t) const;
  std::span<const double> grad_of_node(int node) const;

  void bind_param(int node, const std::string& name);
  const std::vector<std::pair<int, std::string>>& param_bindings() const {
    return param_bindings_;
  }

  size_t num_nodes() const { return nodes_.size(); }

  const Shape& shape_of(int node) const { return nodes_[node].shape; }
  const std::vector<double>& value_of(int node) const { return *nodes_[node].value; }

 private:
  struct Node {
    Shape shape;
    std::shared_ptr<std::vector<double>> value;
    std::function<void(Tape&, int)> backprop;  // accumulates into parent grads
    bool needs_grad = false;
  };

  Tensor push(Shape shape, std::vector<double> value, bool needs_grad,
              std::function<void(Tape&, int)> backprop);
  std::vector<double>& grad_buf(int node);
  bool wants_grad(int node) const;
  static void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<std::pair<int, std::string>> param_bindings_;
  bool backward_done_ = false;
};

std::string shape_str(const Shape& s);

}  // namespace strsynth
