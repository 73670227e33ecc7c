// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/hypernet/architecture.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::hn {
namespace {

constexpr int kMlpHidden = 6;  // Linear(d, d) blocks between input and head

void linear(std::vector<TensorSlot>& out, const std::string& prefix, std::size_t in, std::size_t outdim) {
    out.push_back({prefix + ".weight", {in, outdim}, 0, in, false});
    out.push_back({prefix + ".bias", {outdim}, 0, in, true});
}

} // namespace

std::string_view kind_name(Kind k) {
    switch (k) {
    case Kind::mlp: return "mlp";
    case Kind::trans: return "trans";
    case Kind::trans_joint: return "trans-joint";
    case Kind::trans_moe: return "trans-moe";
    }
    return "unknown";
}

std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

std::string_view constraint_name(OutputConstraint c) {
    switch (c) {
    case OutputConstraint::nonneg: return "nonneg";
    case OutputConstraint::box01: return "box01";
    case OutputConstraint::simplex: return "simplex";
    case OutputConstraint::simplex_sphere: return "simplex-sphere";
    }
    return "unknown";
}

Kind parse_kind(std::string_view s) {
    for (Kind k : {Kind::mlp, Kind::trans, Kind::trans_joint, Kind::trans_moe}) {
        if (s == kind_name(k)) return k;
    }
    throw ValidationError(fmt::format("unknown architecture kind '{}'", s));
}

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "gelu") return Activation::gelu;
    throw ValidationError(fmt::format("unknown activation '{}'", s));
}

OutputConstraint parse_constraint(std::string_view s) {
    for (OutputConstraint c : {OutputConstraint::nonneg, OutputConstraint::box01, OutputConstraint::simplex,
                               OutputConstraint::simplex_sphere}) {
        if (s == constraint_name(c)) return c;
    }
    throw ValidationError(fmt::format("unknown constraint layer '{}'", s));
}

void ArchitectureSpec::validate() const {
    if (m < 2) throw ValidationError(fmt::format("architecture needs m >= 2, got {}", m));
    if (n < 1) throw ValidationError(fmt::format("architecture needs n >= 1, got {}", n));
    if (d < 1) throw ValidationError(fmt::format("architecture needs d >= 1, got {}", d));
    if (is_transformer()) {
        if (heads < 1 || d % heads != 0) {
            throw ValidationError(fmt::format("hidden width d={} is not divisible by heads={}", d, heads));
        }
    }
    if (kind == Kind::trans_moe && experts < 1) {
        throw ValidationError(fmt::format("trans-moe needs at least one expert, got {}", experts));
    }
}

std::vector<TensorSlot> make_layout(const ArchitectureSpec& arch) {
    arch.validate();
    const auto m = static_cast<std::size_t>(arch.m);
    const auto n = static_cast<std::size_t>(arch.n);
    const auto d = static_cast<std::size_t>(arch.d);
    std::vector<TensorSlot> out;
    if (arch.kind == Kind::mlp) {
        linear(out, "mlp.0", m, d);
        for (int i = 1; i <= kMlpHidden; ++i) linear(out, fmt::format("mlp.{}", i), d, d);
        linear(out, "head", d, n);
    } else {
        if (arch.kind == Kind::trans_joint) {
            out.push_back({"embed.weight_r", {m, d}, 0, 2, false});
            out.push_back({"embed.weight_a", {m, d}, 0, 2, false});
        } else {
            out.push_back({"embed.weight", {m, d}, 0, 1, false});
        }
        out.push_back({"embed.bias", {m, d}, 0, 1, true});
        for (const char* p : {"attn.q", "attn.k", "attn.v", "attn.o"}) linear(out, p, d, d);
        linear(out, "ffn.0", d, d);
        linear(out, "ffn.1", d, d);
        if (arch.kind == Kind::trans_moe) {
            for (int e = 0; e < arch.experts; ++e) {
                linear(out, fmt::format("expert.{}.0", e), d, d);
                linear(out, fmt::format("expert.{}.1", e), d, n);
            }
        } else {
            linear(out, "head", d, n);
        }
    }
    std::size_t offset = 0;
    for (TensorSlot& s : out) {
        s.offset = offset;
        offset += s.size();
    }
    return out;
}

std::size_t param_count(const ArchitectureSpec& arch) {
    arch.validate();
    const auto m = static_cast<std::size_t>(arch.m);
    const auto n = static_cast<std::size_t>(arch.n);
    const auto d = static_cast<std::size_t>(arch.d);
    const std::size_t trunk = 6 * d * d + 6 * d;
    const std::size_t head = (d + 1) * n;
    switch (arch.kind) {
    case Kind::mlp: return trunk + (m + 1) * d + head;
    case Kind::trans: return trunk + 2 * m * d + head;
    case Kind::trans_joint: return trunk + 3 * m * d + head;
    case Kind::trans_moe:
        return trunk + 2 * m * d + static_cast<std::size_t>(arch.experts) * ((d * d + d) + head);
    }
    return 0;
}

ParameterBundle::ParameterBundle(const ArchitectureSpec& arch)
    : arch_(arch), layout_(make_layout(arch)), values_(param_count(arch), 0.0) {}

ParameterBundle::ParameterBundle(const ArchitectureSpec& arch, std::vector<double> values)
    : arch_(arch), layout_(make_layout(arch)), values_(std::move(values)) {
    if (values_.size() != param_count(arch)) {
        throw LayoutError(fmt::format("{} with d={} m={} n={} needs {} parameters, got {}", kind_name(arch.kind),
                                      arch.d, arch.m, arch.n, param_count(arch), values_.size()));
    }
}

const TensorSlot& ParameterBundle::slot(std::string_view name) const {
    const auto it = std::find_if(layout_.begin(), layout_.end(), [&](const TensorSlot& s) { return s.name == name; });
    if (it == layout_.end()) throw InvalidArgument(fmt::format("no parameter tensor named '{}'", name));
    return *it;
}

std::span<double> ParameterBundle::view(std::string_view name) {
    const TensorSlot& s = slot(name);
    return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParameterBundle::view(std::string_view name) const {
    const TensorSlot& s = slot(name);
    return std::span<const double>(values_).subspan(s.offset, s.size());
}

ParameterBundle init_params(const ArchitectureSpec& arch, Rng& rng) {
    ParameterBundle bundle(arch);
    auto values = bundle.values();
    for (const TensorSlot& s : bundle.layout()) {
        if (s.bias) continue;
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        for (std::size_t i = 0; i < s.size(); ++i) values[s.offset + i] = rng.uniform(-bound, bound);
    }
    return bundle;
}

} // namespace cpfl::hn
