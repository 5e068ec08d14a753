#pragma once

// Reverse-mode differentiation over a fixed set of primitives. A Tape records
// operations in creation order, which is already a topological order, so the
// backward pass is a single reverse sweep that touches each node once.
//
// A tape belongs to one thread. Values are immutable once recorded.

#include "sinevid/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sinevid {

struct Var {
    std::uint32_t index = 0;
};

template <class T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) noexcept = default;
    Tape& operator=(Tape&&) noexcept = default;

    // Owned input.
    Var leaf(Tensor<T> value, bool requires_grad = false);
    // Borrowed input: `value` must outlive the tape and stay unmodified.
    Var leaf_ref(const Tensor<T>& value, bool requires_grad = false);

    Var matmul(Var a, Var b);    // [m x k] . [k x n]
    Var matmul_bt(Var a, Var b); // [m x k] . [n x k]^T
    Var add(Var a, Var b);
    // a: [R x C], b: [G x C] with R % G == 0; row i of a gets row i / (R/G) of b.
    Var add_rows(Var a, Var b);
    Var mul(Var a, Var b);
    Var sine(Var x, T omega); // sin(omega * x)
    Var relu(Var x);
    Var scale(Var x, T factor);
    Var sum(Var x);
    Var mean(Var x);
    Var squared_error(Var a, Var b);   // elementwise (a - b)^2
    Var mse(Var a, Var b);             // mean((a - b)^2), fused
    Var bce_with_logits(Var logits, Var labels); // mean binary cross-entropy

    const Tensor<T>& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Accumulates d loss / d node into every node that requires a gradient.
    // Throws ContractError unless `loss` holds exactly one element.
    void backward(Var loss);
    // Gradient of a leaf from the last backward(); exact zeros if the leaf was
    // not reached or does not require a gradient. Interior gradients are
    // released during the sweep.
    Tensor<T> grad(Var v) const;
    // backward(loss) followed by grad() for each requested parameter.
    std::vector<Tensor<T>> backward(Var loss, std::span<const Var> params);

private:
    enum class Op : std::uint8_t {
        leaf, matmul, matmul_bt, add, add_rows, mul, sine, relu, scale, sum, mean, squared_error, mse, bce
    };

    struct Node {
        Op op = Op::leaf;
        std::uint32_t lhs = 0;
        std::uint32_t rhs = 0;
        T param = 0;
        bool requires_grad = false;
        const Tensor<T>* borrowed = nullptr;
        Tensor<T> owned;
        Tensor<T> grad;
    };

    Var push(Op op, Var lhs, Var rhs, T param, Tensor<T> value, bool requires_grad);
    const Node& node(Var v) const { return nodes_.at(v.index); }
    const Tensor<T>& value_of(const Node& n) const { return n.borrowed ? *n.borrowed : n.owned; }
    Tensor<T>& grad_buffer(std::uint32_t index);
    void propagate(std::uint32_t index);

    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

} // namespace sinevid
