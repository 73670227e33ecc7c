// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense reverse-mode automatic differentiation over a flat tape.
//
// Nodes are appended in creation order, so the tape is topologically sorted by
// construction: every parent index is smaller than its child's index. Values
// are computed eagerly when a node is recorded; `Tape::evaluate()` re-runs the
// forward rules after leaf values have been replaced with `set_value`.
//
// Tensors are row-major arrays of doubles with rank 1 or 2. The only implicit
// broadcast is the bias add of a rank-1 (or [1, c]) tensor over the rows of a
// [r, c] tensor; every other broadcast has to be spelled out with
// `Tape::broadcast`.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpfl::ad {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t element_count(const Shape& shape);
[[nodiscard]] std::string to_string(const Shape& shape);

enum class OpKind : std::uint8_t {
    leaf,
    matmul,
    transpose,
    reshape,
    add,
    sub,
    mul,
    div,
    scale,
    shift,
    pow,
    relu,
    gelu,
    sigmoid,
    softmax,
    sqrt,
    square,
    sin,
    cos,
    concat,
    slice,
    mean,
    sum,
    hard_max,
    broadcast,
};

[[nodiscard]] std::string_view op_name(OpKind op);

struct NodeId {
    std::uint32_t index = 0;
    friend bool operator==(NodeId, NodeId) = default;
};

struct Node {
    Shape shape;
    std::vector<double> value;
    OpKind op = OpKind::leaf;
    std::vector<NodeId> parents;
    bool requires_grad = false;

    // Op attributes; which ones are meaningful depends on `op`.
    std::size_t axis = 0;
    std::size_t start = 0;
    std::size_t length = 0;
    double scalar = 0.0;
    // hard_max: flat input index routed to each output element.
    std::vector<std::size_t> argmax;
};

/// Result of a backward pass: one gradient array per node that lies on a
/// path from a `requires_grad` leaf to the loss.
class Gradients {
public:
    Gradients() = default;
    explicit Gradients(std::vector<std::vector<double>> grads) : grads_(std::move(grads)) {}

    /// Gradient of `id`; empty when the node received none.
    [[nodiscard]] std::span<const double> operator[](NodeId id) const;
    [[nodiscard]] bool has(NodeId id) const;

private:
    std::vector<std::vector<double>> grads_;
};

class Tape {
public:
    Tape() = default;

    NodeId leaf(Shape shape, std::vector<double> value, bool requires_grad = false);
    NodeId constant(Shape shape, std::vector<double> value) { return leaf(std::move(shape), std::move(value), false); }
    NodeId scalar(double v) { return leaf({1}, {v}, false); }

    /// Replace the value of a leaf. Call `evaluate()` afterwards to refresh
    /// the derived nodes.
    void set_value(NodeId leaf, std::span<const double> value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId reshape(NodeId a, Shape shape);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId shift(NodeId a, double offset);
    NodeId pow(NodeId a, double exponent);
    NodeId relu(NodeId a);
    NodeId gelu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId softmax(NodeId a, std::size_t axis);
    NodeId sqrt(NodeId a);
    NodeId square(NodeId a);
    NodeId sin(NodeId a);
    NodeId cos(NodeId a);
    NodeId concat(std::span<const NodeId> parts, std::size_t axis);
    NodeId slice(NodeId a, std::size_t axis, std::size_t start, std::size_t length);
    NodeId mean(NodeId a, std::size_t axis);
    NodeId sum(NodeId a, std::size_t axis);
    NodeId hard_max(NodeId a, std::size_t axis);
    NodeId broadcast(NodeId a, Shape shape);

    /// Recompute every derived node from the current leaf values.
    void evaluate();

    /// Reverse sweep from a scalar node. Throws on a non-scalar loss and on a
    /// non-finite gradient (the error carries the offending node index).
    [[nodiscard]] Gradients backward(NodeId loss) const;

    [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id.index); }
    [[nodiscard]] std::span<const double> value(NodeId id) const { return nodes_.at(id.index).value; }
    [[nodiscard]] const Shape& shape(NodeId id) const { return nodes_.at(id.index).shape; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

private:
    NodeId record(Node node);
    [[nodiscard]] const Node& parent(const Node& n, std::size_t i) const { return nodes_[n.parents[i].index]; }
    void compute(Node& n) const;
    void propagate(std::size_t index, std::span<const double> grad, std::vector<std::vector<double>>& grads) const;

    std::vector<Node> nodes_;
};

} // namespace cpfl::ad
