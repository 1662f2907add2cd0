#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "stsc/tensor.hpp"

namespace stsc {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  std::size_t rank() const { return value().rank(); }
};

/// Records one forward pass. Every node holds its value, a lazily
/// allocated gradient, and a closure that pushes its gradient to its
/// inputs. backward() runs the closures in reverse recording order, which
/// is a valid reverse topological order since inputs are always recorded
/// before their consumers.
template <typename T>
class Tape {
 public:
  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return {this, nodes_.size() - 1};
  }

  /// Records an op output. `backward` is dropped when no input needs a
  /// gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                std::function<void()> backward) {
    bool rg = false;
    for (const auto& v : inputs) rg = rg || nodes_.at(v.id).requires_grad;
    nodes_.push_back(Node{std::move(value), {}, rg, rg ? std::move(backward) : nullptr});
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_.at(id).grad.empty(); }

  /// Gradient buffer of node `id`, zero-initialised on first access.
  Tensor<T>& grad(std::size_t id) {
    auto& n = nodes_.at(id);
    if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  /// Gradient of a leaf after backward(); zeros if it was never reached.
  Tensor<T> gradient(Var<T> v) {
    return has_grad(v.id) ? nodes_[v.id].grad : Tensor<T>(value(v.id).shape());
  }

  void backward(Var<T> loss) {
    require(value(loss.id).size() == 1, ErrorCode::invalid_input,
            "backward needs a scalar loss, got shape " + shape_str(value(loss.id).shape()));
    for (auto& n : nodes_) n.grad = Tensor<T>();
    grad(loss.id)[0] = T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward();
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };
  std::deque<Node> nodes_;  // deque: references from value() and grad() survive later records
};

}  // namespace stsc
