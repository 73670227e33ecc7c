// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"

namespace cpfl::ad {
namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
const double kSigmoidHi = std::nextafter(1.0, 0.0);
constexpr double kSigmoidLo = std::numeric_limits<double>::denorm_min();

struct AxisSplit {
    std::size_t outer;
    std::size_t len;
    std::size_t inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    AxisSplit a{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
    return a;
}

Shape reduce_shape(const Shape& s, std::size_t axis) {
    Shape out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i != axis) out.push_back(s[i]);
    }
    if (out.empty()) out.push_back(1);
    return out;
}

// Rank-2 view used by broadcasting: rank-1 shapes are treated as one row.
std::pair<std::size_t, std::size_t> as_rows_cols(const Shape& s) {
    if (s.size() == 1) return {1, s[0]};
    return {s[0], s[1]};
}

double gelu_value(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_derivative(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

double sigmoid_value(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    // Saturate inside the open interval so box constraints hold for any input.
    return std::clamp(s, kSigmoidLo, kSigmoidHi);
}

[[noreturn]] void shape_error(std::size_t node, OpKind op, std::string_view what,
                              std::initializer_list<std::reference_wrapper<const Shape>> shapes) {
    std::string list;
    for (const auto& s : shapes) {
        if (!list.empty()) list += ", ";
        list += to_string(s.get());
    }
    throw ShapeError(node, fmt::format("node {}: {} {} (operand shapes {})", node, op_name(op), what, list));
}

} // namespace

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    return fmt::format("[{}]", fmt::join(shape, ", "));
}

std::string_view op_name(OpKind op) {
    switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::transpose: return "transpose";
    case OpKind::reshape: return "reshape";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::scale: return "scale";
    case OpKind::shift: return "shift";
    case OpKind::pow: return "pow";
    case OpKind::relu: return "relu";
    case OpKind::gelu: return "gelu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::softmax: return "softmax";
    case OpKind::sqrt: return "sqrt";
    case OpKind::square: return "square";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::mean: return "mean";
    case OpKind::sum: return "sum";
    case OpKind::hard_max: return "hard_max";
    case OpKind::broadcast: return "broadcast";
    }
    return "unknown";
}

std::span<const double> Gradients::operator[](NodeId id) const {
    if (id.index >= grads_.size()) return {};
    return grads_[id.index];
}

bool Gradients::has(NodeId id) const {
    return id.index < grads_.size() && !grads_[id.index].empty();
}

NodeId Tape::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
    const std::size_t id = nodes_.size();
    if (shape.empty() || shape.size() > 2 ||
        std::any_of(shape.begin(), shape.end(), [](std::size_t d) { return d == 0; })) {
        throw ShapeError(id, fmt::format("node {}: leaf shape {} must have rank 1 or 2 with positive extents", id,
                                         to_string(shape)));
    }
    if (value.size() != element_count(shape)) {
        throw ShapeError(id, fmt::format("node {}: leaf shape {} needs {} values, got {}", id, to_string(shape),
                                         element_count(shape), value.size()));
    }
    Node n;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<std::uint32_t>(id)};
}

void Tape::set_value(NodeId id, std::span<const double> value) {
    Node& n = nodes_.at(id.index);
    if (n.op != OpKind::leaf) {
        throw InvalidArgument(fmt::format("node {} is not a leaf", id.index));
    }
    if (value.size() != n.value.size()) {
        throw ShapeError(id.index, fmt::format("node {}: set_value with {} values for shape {}", id.index,
                                               value.size(), to_string(n.shape)));
    }
    std::copy(value.begin(), value.end(), n.value.begin());
}

NodeId Tape::record(Node n) {
    compute(n);
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
        shape_error(size(), OpKind::matmul, "needs [p,q] x [q,r]", {sa, sb});
    }
    Node n;
    n.op = OpKind::matmul;
    n.parents = {a, b};
    n.shape = {sa[0], sb[1]};
    return record(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
    const Shape& sa = shape(a);
    if (sa.size() != 2) shape_error(size(), OpKind::transpose, "needs a rank-2 operand", {sa});
    Node n;
    n.op = OpKind::transpose;
    n.parents = {a};
    n.shape = {sa[1], sa[0]};
    return record(std::move(n));
}

NodeId Tape::reshape(NodeId a, Shape s) {
    if (s.empty() || s.size() > 2 || element_count(s) != element_count(shape(a))) {
        shape_error(size(), OpKind::reshape, fmt::format("cannot produce {}", to_string(s)), {shape(a)});
    }
    Node n;
    n.op = OpKind::reshape;
    n.parents = {a};
    n.shape = std::move(s);
    return record(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa != sb) {
        // Bias add: [r, c] + [c] or [r, c] + [1, c].
        const bool bias = sa.size() == 2 && ((sb.size() == 1 && sb[0] == sa[1]) ||
                                             (sb.size() == 2 && sb[0] == 1 && sb[1] == sa[1]));
        if (!bias) shape_error(size(), OpKind::add, "needs equal shapes or a row bias", {sa, sb});
    }
    Node n;
    n.op = OpKind::add;
    n.parents = {a, b};
    n.shape = sa;
    return record(std::move(n));
}

namespace {
Node binary_same_shape(const Tape& t, OpKind op, NodeId a, NodeId b) {
    if (t.shape(a) != t.shape(b)) shape_error(t.size(), op, "needs equal shapes", {t.shape(a), t.shape(b)});
    Node n;
    n.op = op;
    n.parents = {a, b};
    n.shape = t.shape(a);
    return n;
}

Node unary(const Tape& t, OpKind op, NodeId a, double scalar = 0.0) {
    Node n;
    n.op = op;
    n.parents = {a};
    n.shape = t.shape(a);
    n.scalar = scalar;
    return n;
}
} // namespace

NodeId Tape::sub(NodeId a, NodeId b) { return record(binary_same_shape(*this, OpKind::sub, a, b)); }
NodeId Tape::mul(NodeId a, NodeId b) { return record(binary_same_shape(*this, OpKind::mul, a, b)); }
NodeId Tape::div(NodeId a, NodeId b) { return record(binary_same_shape(*this, OpKind::div, a, b)); }
NodeId Tape::scale(NodeId a, double factor) { return record(unary(*this, OpKind::scale, a, factor)); }
NodeId Tape::shift(NodeId a, double offset) { return record(unary(*this, OpKind::shift, a, offset)); }
NodeId Tape::pow(NodeId a, double exponent) { return record(unary(*this, OpKind::pow, a, exponent)); }
NodeId Tape::relu(NodeId a) { return record(unary(*this, OpKind::relu, a)); }
NodeId Tape::gelu(NodeId a) { return record(unary(*this, OpKind::gelu, a)); }
NodeId Tape::sigmoid(NodeId a) { return record(unary(*this, OpKind::sigmoid, a)); }
NodeId Tape::sqrt(NodeId a) { return record(unary(*this, OpKind::sqrt, a)); }
NodeId Tape::square(NodeId a) { return record(unary(*this, OpKind::square, a)); }
NodeId Tape::sin(NodeId a) { return record(unary(*this, OpKind::sin, a)); }
NodeId Tape::cos(NodeId a) { return record(unary(*this, OpKind::cos, a)); }

NodeId Tape::softmax(NodeId a, std::size_t axis) {
    if (axis >= shape(a).size()) shape_error(size(), OpKind::softmax, fmt::format("axis {} out of range", axis), {shape(a)});
    Node n = unary(*this, OpKind::softmax, a);
    n.axis = axis;
    return record(std::move(n));
}

NodeId Tape::concat(std::span<const NodeId> parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError(size(), fmt::format("node {}: concat of zero tensors", size()));
    Shape out = shape(parts[0]);
    if (axis >= out.size()) shape_error(size(), OpKind::concat, fmt::format("axis {} out of range", axis), {out});
    out[axis] = 0;
    for (NodeId p : parts) {
        const Shape& s = shape(p);
        bool ok = s.size() == out.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == out[i];
        if (!ok) shape_error(size(), OpKind::concat, "needs matching extents off the concat axis", {shape(parts[0]), s});
        out[axis] += s[axis];
    }
    Node n;
    n.op = OpKind::concat;
    n.parents.assign(parts.begin(), parts.end());
    n.axis = axis;
    n.shape = std::move(out);
    return record(std::move(n));
}

NodeId Tape::slice(NodeId a, std::size_t axis, std::size_t start, std::size_t length) {
    const Shape& s = shape(a);
    if (axis >= s.size() || length == 0 || start + length > s[axis]) {
        shape_error(size(), OpKind::slice, fmt::format("range [{}, {}) on axis {} is invalid", start, start + length, axis), {s});
    }
    Node n;
    n.op = OpKind::slice;
    n.parents = {a};
    n.axis = axis;
    n.start = start;
    n.length = length;
    n.shape = s;
    n.shape[axis] = length;
    return record(std::move(n));
}

namespace {
Node reduction(const Tape& t, OpKind op, NodeId a, std::size_t axis) {
    const Shape& s = t.shape(a);
    if (axis >= s.size()) shape_error(t.size(), op, fmt::format("axis {} out of range", axis), {s});
    Node n;
    n.op = op;
    n.parents = {a};
    n.axis = axis;
    n.shape = reduce_shape(s, axis);
    return n;
}
} // namespace

NodeId Tape::mean(NodeId a, std::size_t axis) { return record(reduction(*this, OpKind::mean, a, axis)); }
NodeId Tape::sum(NodeId a, std::size_t axis) { return record(reduction(*this, OpKind::sum, a, axis)); }
NodeId Tape::hard_max(NodeId a, std::size_t axis) { return record(reduction(*this, OpKind::hard_max, a, axis)); }

NodeId Tape::broadcast(NodeId a, Shape target) {
    const Shape& s = shape(a);
    bool ok = !target.empty() && target.size() <= 2;
    if (ok && !(s.size() == 1 && s[0] == 1)) {
        ok = s.size() == target.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = s[i] == target[i] || s[i] == 1;
    }
    if (!ok) shape_error(size(), OpKind::broadcast, fmt::format("cannot expand to {}", to_string(target)), {s});
    Node n;
    n.op = OpKind::broadcast;
    n.parents = {a};
    n.shape = std::move(target);
    return record(std::move(n));
}

void Tape::evaluate() {
    for (Node& n : nodes_) {
        if (n.op != OpKind::leaf) compute(n);
    }
}

void Tape::compute(Node& n) const {
    auto& out = n.value;
    out.assign(element_count(n.shape), 0.0);
    switch (n.op) {
    case OpKind::leaf:
        return;
    case OpKind::matmul: {
        const Node& a = parent(n, 0);
        const Node& b = parent(n, 1);
        const std::size_t p = a.shape[0], q = a.shape[1], r = b.shape[1];
        for (std::size_t i = 0; i < p; ++i) {
            double* row = out.data() + i * r;
            for (std::size_t k = 0; k < q; ++k) {
                const double aik = a.value[i * q + k];
                const double* brow = b.value.data() + k * r;
                for (std::size_t j = 0; j < r; ++j) row[j] += aik * brow[j];
            }
        }
        return;
    }
    case OpKind::transpose: {
        const Node& a = parent(n, 0);
        const std::size_t rows = a.shape[0], cols = a.shape[1];
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a.value[i * cols + j];
        return;
    }
    case OpKind::reshape:
        out = parent(n, 0).value;
        return;
    case OpKind::add: {
        const Node& a = parent(n, 0);
        const Node& b = parent(n, 1);
        if (a.shape == b.shape) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value[i] + b.value[i];
        } else {
            const std::size_t cols = b.value.size();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value[i] + b.value[i % cols];
        }
        return;
    }
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div: {
        const auto& a = parent(n, 0).value;
        const auto& b = parent(n, 1).value;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = n.op == OpKind::sub ? a[i] - b[i] : n.op == OpKind::mul ? a[i] * b[i] : a[i] / b[i];
        }
        return;
    }
    case OpKind::scale:
    case OpKind::shift:
    case OpKind::pow:
    case OpKind::relu:
    case OpKind::gelu:
    case OpKind::sigmoid:
    case OpKind::sqrt:
    case OpKind::square:
    case OpKind::sin:
    case OpKind::cos: {
        const auto& a = parent(n, 0).value;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = a[i];
            switch (n.op) {
            case OpKind::scale: out[i] = n.scalar * x; break;
            case OpKind::shift: out[i] = x + n.scalar; break;
            case OpKind::pow: out[i] = std::pow(x, n.scalar); break;
            case OpKind::relu: out[i] = x > 0.0 ? x : 0.0; break;
            case OpKind::gelu: out[i] = gelu_value(x); break;
            case OpKind::sigmoid: out[i] = sigmoid_value(x); break;
            case OpKind::sqrt: out[i] = std::sqrt(x); break;
            case OpKind::square: out[i] = x * x; break;
            case OpKind::sin: out[i] = std::sin(x); break;
            default: out[i] = std::cos(x); break;
            }
        }
        return;
    }
    case OpKind::softmax: {
        const Node& a = parent(n, 0);
        const AxisSplit s = split_axis(a.shape, n.axis);
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t l = 0; l < s.len; ++l) mx = std::max(mx, a.value[base + l * s.inner]);
                double total = 0.0;
                for (std::size_t l = 0; l < s.len; ++l) {
                    const double e = std::exp(a.value[base + l * s.inner] - mx);
                    out[base + l * s.inner] = e;
                    total += e;
                }
                for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
            }
        }
        return;
    }
    case OpKind::concat: {
        const AxisSplit so = split_axis(n.shape, n.axis);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < n.parents.size(); ++p) {
            const Node& part = parent(n, p);
            const std::size_t len = part.shape[n.axis];
            for (std::size_t o = 0; o < so.outer; ++o) {
                std::copy_n(part.value.data() + o * len * so.inner, len * so.inner,
                            out.data() + (o * so.len + offset) * so.inner);
            }
            offset += len;
        }
        return;
    }
    case OpKind::slice: {
        const Node& a = parent(n, 0);
        const AxisSplit s = split_axis(a.shape, n.axis);
        for (std::size_t o = 0; o < s.outer; ++o) {
            std::copy_n(a.value.data() + (o * s.len + n.start) * s.inner, n.length * s.inner,
                        out.data() + o * n.length * s.inner);
        }
        return;
    }
    case OpKind::mean:
    case OpKind::sum:
    case OpKind::hard_max: {
        const Node& a = parent(n, 0);
        const AxisSplit s = split_axis(a.shape, n.axis);
        if (n.op == OpKind::hard_max) n.argmax.assign(out.size(), 0);
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                const std::size_t dst = o * s.inner + in;
                if (n.op == OpKind::hard_max) {
                    // Strict comparison keeps the lowest index on ties.
                    std::size_t best = base;
                    for (std::size_t l = 1; l < s.len; ++l) {
                        const std::size_t idx = base + l * s.inner;
                        if (a.value[idx] > a.value[best]) best = idx;
                    }
                    out[dst] = a.value[best];
                    n.argmax[dst] = best;
                } else {
                    double acc = 0.0;
                    for (std::size_t l = 0; l < s.len; ++l) acc += a.value[base + l * s.inner];
                    out[dst] = n.op == OpKind::mean ? acc / static_cast<double>(s.len) : acc;
                }
            }
        }
        return;
    }
    case OpKind::broadcast: {
        const Node& a = parent(n, 0);
        const auto [tr, tc] = as_rows_cols(n.shape);
        const auto [sr, sc] = as_rows_cols(a.shape);
        for (std::size_t i = 0; i < tr; ++i)
            for (std::size_t j = 0; j < tc; ++j) out[i * tc + j] = a.value[(sr == 1 ? 0 : i) * sc + (sc == 1 ? 0 : j)];
        return;
    }
    }
}

Gradients Tape::backward(NodeId loss) const {
    const Node& root = node(loss);
    if (root.value.size() != 1) {
        throw ShapeError(loss.index, fmt::format("node {}: backward needs a scalar loss, got shape {}", loss.index,
                                                 to_string(root.shape)));
    }
    const std::size_t count = static_cast<std::size_t>(loss.index) + 1;
    std::vector<char> needs(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        const Node& n = nodes_[i];
        if (n.op == OpKind::leaf) {
            needs[i] = n.requires_grad ? 1 : 0;
        } else {
            for (NodeId p : n.parents) needs[i] |= needs[p.index];
        }
    }

    std::vector<std::vector<double>> grads(count);
    grads[loss.index] = {1.0};
    for (std::size_t i = count; i-- > 0;) {
        if (!needs[i] || grads[i].empty() || nodes_[i].op == OpKind::leaf) continue;
        propagate(i, grads[i], grads);
        for (NodeId p : nodes_[i].parents) {
            if (!needs[p.index]) {
                grads[p.index].clear();
                continue;
            }
            for (double g : grads[p.index]) {
                if (!std::isfinite(g)) {
                    throw NumericError(i, fmt::format("node {} ({}): non-finite gradient reached parent {}", i,
                                                      op_name(nodes_[i].op), p.index));
                }
            }
        }
    }
    // Drop intermediate gradients for nodes that do not lead back to a leaf.
    for (std::size_t i = 0; i < count; ++i) {
        if (!needs[i]) grads[i].clear();
        if (nodes_[i].op == OpKind::leaf && nodes_[i].requires_grad && grads[i].empty()) {
            grads[i].assign(nodes_[i].value.size(), 0.0);
        }
    }
    return Gradients(std::move(grads));
}

void Tape::propagate(std::size_t index, std::span<const double> g, std::vector<std::vector<double>>& grads) const {
    const Node& n = nodes_[index];
    auto slot = [&](std::size_t p) -> std::vector<double>& {
        auto& s = grads[n.parents[p].index];
        if (s.empty()) s.assign(parent(n, p).value.size(), 0.0);
        return s;
    };

    switch (n.op) {
    case OpKind::leaf:
        return;
    case OpKind::matmul: {
        const Node& a = parent(n, 0);
        const Node& b = parent(n, 1);
        const std::size_t p = a.shape[0], q = a.shape[1], r = b.shape[1];
        auto& ga = slot(0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < q; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < r; ++j) acc += g[i * r + j] * b.value[k * r + j];
                ga[i * q + k] += acc;
            }
        auto& gb = slot(1);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < q; ++k) {
                const double aik = a.value[i * q + k];
                for (std::size_t j = 0; j < r; ++j) gb[k * r + j] += aik * g[i * r + j];
            }
        return;
    }
    case OpKind::transpose: {
        const std::size_t rows = parent(n, 0).shape[0], cols = parent(n, 0).shape[1];
        auto& ga = slot(0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j * rows + i];
        return;
    }
    case OpKind::reshape: {
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        return;
    }
    case OpKind::add: {
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = slot(1);
        const std::size_t cols = gb.size();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
        return;
    }
    case OpKind::sub: {
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = slot(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        return;
    }
    case OpKind::mul: {
        const auto& a = parent(n, 0).value;
        const auto& b = parent(n, 1).value;
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        auto& gb = slot(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        return;
    }
    case OpKind::div: {
        const auto& a = parent(n, 0).value;
        const auto& b = parent(n, 1).value;
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b[i];
        auto& gb = slot(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * a[i] / (b[i] * b[i]);
        return;
    }
    case OpKind::scale:
    case OpKind::shift:
    case OpKind::pow:
    case OpKind::relu:
    case OpKind::gelu:
    case OpKind::sigmoid:
    case OpKind::sqrt:
    case OpKind::square:
    case OpKind::sin:
    case OpKind::cos: {
        const auto& x = parent(n, 0).value;
        const auto& y = n.value;
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double d;
            switch (n.op) {
            case OpKind::scale: d = n.scalar; break;
            case OpKind::shift: d = 1.0; break;
            case OpKind::pow: d = n.scalar * std::pow(x[i], n.scalar - 1.0); break;
            case OpKind::relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
            case OpKind::gelu: d = gelu_derivative(x[i]); break;
            case OpKind::sigmoid: d = y[i] * (1.0 - y[i]); break;
            case OpKind::sqrt: d = 0.5 / y[i]; break;
            case OpKind::square: d = 2.0 * x[i]; break;
            case OpKind::sin: d = std::cos(x[i]); break;
            default: d = -std::sin(x[i]); break;
            }
            ga[i] += g[i] * d;
        }
        return;
    }
    case OpKind::softmax: {
        const AxisSplit s = split_axis(n.shape, n.axis);
        auto& ga = slot(0);
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double dot = 0.0;
                for (std::size_t l = 0; l < s.len; ++l) dot += g[base + l * s.inner] * n.value[base + l * s.inner];
                for (std::size_t l = 0; l < s.len; ++l) {
                    const std::size_t idx = base + l * s.inner;
                    ga[idx] += n.value[idx] * (g[idx] - dot);
                }
            }
        return;
    }
    case OpKind::concat: {
        const AxisSplit so = split_axis(n.shape, n.axis);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < n.parents.size(); ++p) {
            const std::size_t len = parent(n, p).shape[n.axis];
            auto& gp = slot(p);
            for (std::size_t o = 0; o < so.outer; ++o) {
                const double* src = g.data() + (o * so.len + offset) * so.inner;
                double* dst = gp.data() + o * len * so.inner;
                for (std::size_t k = 0; k < len * so.inner; ++k) dst[k] += src[k];
            }
            offset += len;
        }
        return;
    }
    case OpKind::slice: {
        const AxisSplit s = split_axis(parent(n, 0).shape, n.axis);
        auto& ga = slot(0);
        for (std::size_t o = 0; o < s.outer; ++o) {
            const double* src = g.data() + o * n.length * s.inner;
            double* dst = ga.data() + (o * s.len + n.start) * s.inner;
            for (std::size_t k = 0; k < n.length * s.inner; ++k) dst[k] += src[k];
        }
        return;
    }
    case OpKind::mean:
    case OpKind::sum: {
        const AxisSplit s = split_axis(parent(n, 0).shape, n.axis);
        const double w = n.op == OpKind::mean ? 1.0 / static_cast<double>(s.len) : 1.0;
        auto& ga = slot(0);
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t in = 0; in < s.inner; ++in)
                for (std::size_t l = 0; l < s.len; ++l) ga[(o * s.len + l) * s.inner + in] += w * g[o * s.inner + in];
        return;
    }
    case OpKind::hard_max: {
        auto& ga = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[n.argmax[i]] += g[i];
        return;
    }
    case OpKind::broadcast: {
        const auto [tr, tc] = as_rows_cols(n.shape);
        const auto [sr, sc] = as_rows_cols(parent(n, 0).shape);
        auto& ga = slot(0);
        for (std::size_t i = 0; i < tr; ++i)
            for (std::size_t j = 0; j < tc; ++j) ga[(sr == 1 ? 0 : i) * sc + (sc == 1 ? 0 : j)] += g[i * tc + j];
        return;
    }
    }
}

} // namespace cpfl::ad
