// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/hypernet/forward.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::hn {
namespace {

class Builder {
public:
    Builder(ad::Tape& tape, const ParameterBundle& params, bool trainable, ForwardGraph& graph)
        : t_(tape), p_(params), trainable_(trainable), g_(graph) {}

    ad::NodeId param(std::string_view name) {
        const auto& layout = p_.layout();
        for (std::size_t i = 0; i < layout.size(); ++i) {
            if (layout[i].name != name) continue;
            const auto v = p_.values().subspan(layout[i].offset, layout[i].size());
            const ad::NodeId id = t_.leaf(layout[i].shape, {v.begin(), v.end()}, trainable_);
            g_.leaves.emplace_back(i, id);
            return id;
        }
        throw InvalidArgument(fmt::format("no parameter tensor named '{}'", name));
    }

    // x: [rows, in] -> [rows, out]
    ad::NodeId linear(ad::NodeId x, const std::string& prefix) {
        return t_.add(t_.matmul(x, param(prefix + ".weight")), param(prefix + ".bias"));
    }

    ad::NodeId act(ad::NodeId x) {
        return p_.arch().activation == Activation::relu ? t_.relu(x) : t_.gelu(x);
    }

    ad::Tape& tape() { return t_; }

private:
    ad::Tape& t_;
    const ParameterBundle& p_;
    bool trainable_;
    ForwardGraph& g_;
};

} // namespace

ad::NodeId constraint_layer(ad::Tape& tape, ad::NodeId raw, OutputConstraint kind) {
    switch (kind) {
    case OutputConstraint::nonneg: return tape.relu(raw);
    case OutputConstraint::box01: return tape.sigmoid(raw);
    case OutputConstraint::simplex: return tape.softmax(raw, 0);
    case OutputConstraint::simplex_sphere: return tape.sqrt(tape.softmax(raw, 0));
    }
    return raw;
}

ForwardGraph build_forward(ad::Tape& tape, const ParameterBundle& params, const ForwardInput& in, bool trainable) {
    const ArchitectureSpec& arch = params.arch();
    const auto m = static_cast<std::size_t>(arch.m);
    const auto n = static_cast<std::size_t>(arch.n);
    const auto d = static_cast<std::size_t>(arch.d);
    if (in.r.size() != m) {
        throw InvalidArgument(fmt::format("hypernetwork expects r of length {}, got {}", m, in.r.size()));
    }
    if (params.size() != param_count(arch)) {
        throw LayoutError(fmt::format("parameter bundle has {} values, architecture needs {}", params.size(),
                                      param_count(arch)));
    }
    if (arch.kind == Kind::trans_joint && in.a.size() != m) {
        throw InvalidArgument(fmt::format("trans-joint expects a of length {}, got {}", m, in.a.size()));
    }
    if (arch.kind == Kind::trans_moe) {
        if (!in.expert || *in.expert >= static_cast<std::size_t>(arch.experts)) {
            throw InvalidArgument(fmt::format("trans-moe needs an expert id in [0, {})", arch.experts));
        }
    }

    ForwardGraph graph;
    Builder b(tape, params, trainable, graph);
    ad::Tape& t = tape;
    ad::NodeId head_in;

    if (arch.kind == Kind::mlp) {
        ad::NodeId h = t.constant({1, m}, {in.r.begin(), in.r.end()});
        h = b.act(b.linear(h, "mlp.0"));
        for (int i = 1; i <= 6; ++i) h = b.act(b.linear(h, fmt::format("mlp.{}", i)));
        head_in = h;
    } else {
        // Tokens: row i is the embedding of coordinate i.
        auto column = [&](std::span<const double> v) {
            return t.broadcast(t.constant({m, 1}, {v.begin(), v.end()}), {m, d});
        };
        ad::NodeId tokens;
        if (arch.kind == Kind::trans_joint) {
            tokens = t.add(t.add(t.mul(column(in.r), b.param("embed.weight_r")),
                                 t.mul(column(in.a), b.param("embed.weight_a"))),
                           b.param("embed.bias"));
        } else {
            tokens = t.add(t.mul(column(in.r), b.param("embed.weight")), b.param("embed.bias"));
        }

        const ad::NodeId q = b.linear(tokens, "attn.q");
        const ad::NodeId k = b.linear(tokens, "attn.k");
        const ad::NodeId v = b.linear(tokens, "attn.v");
        const auto heads = static_cast<std::size_t>(arch.heads);
        const std::size_t hs = d / heads;
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hs));
        std::vector<ad::NodeId> outs;
        for (std::size_t h = 0; h < heads; ++h) {
            const ad::NodeId qh = t.slice(q, 1, h * hs, hs);
            const ad::NodeId kh = t.slice(k, 1, h * hs, hs);
            const ad::NodeId vh = t.slice(v, 1, h * hs, hs);
            const ad::NodeId weights = t.softmax(t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt), 1);
            graph.attention.push_back(weights);
            outs.push_back(t.matmul(weights, vh));
        }
        const ad::NodeId merged = heads == 1 ? outs[0] : t.concat(outs, 1);
        const ad::NodeId h1 = t.add(tokens, b.linear(merged, "attn.o"));
        const ad::NodeId h2 = t.add(h1, b.linear(b.act(b.linear(h1, "ffn.0")), "ffn.1"));
        head_in = t.reshape(t.mean(h2, 0), {1, d});
    }

    ad::NodeId out;
    if (arch.kind == Kind::trans_moe) {
        const std::string prefix = fmt::format("expert.{}", *in.expert);
        out = b.linear(b.act(b.linear(head_in, prefix + ".0")), prefix + ".1");
    } else {
        out = b.linear(head_in, "head");
    }
    graph.raw = t.reshape(out, {n});
    graph.x = constraint_layer(t, graph.raw, arch.constraint);
    return graph;
}

std::vector<double> gather_gradients(const ParameterBundle& params, const ForwardGraph& graph,
                                     const ad::Gradients& grads) {
    std::vector<double> flat(params.size(), 0.0);
    for (const auto& [slot_index, node] : graph.leaves) {
        const TensorSlot& s = params.layout()[slot_index];
        const auto g = grads[node];
        for (std::size_t i = 0; i < g.size(); ++i) flat[s.offset + i] += g[i];
    }
    return flat;
}

std::vector<double> predict(const ParameterBundle& params, const ForwardInput& in) {
    ad::Tape tape;
    const ForwardGraph g = build_forward(tape, params, in, false);
    const auto v = tape.value(g.x);
    return {v.begin(), v.end()};
}

} // namespace cpfl::hn
