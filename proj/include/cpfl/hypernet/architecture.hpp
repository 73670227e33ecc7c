// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpfl/autodiff/rng.hpp"
#include "cpfl/autodiff/tape.hpp"

namespace cpfl::hn {

enum class Kind { mlp, trans, trans_joint, trans_moe };
enum class Activation { relu, gelu };
enum class OutputConstraint { nonneg, box01, simplex, simplex_sphere };

[[nodiscard]] std::string_view kind_name(Kind k);
[[nodiscard]] std::string_view activation_name(Activation a);
[[nodiscard]] std::string_view constraint_name(OutputConstraint c);
[[nodiscard]] Kind parse_kind(std::string_view s);
[[nodiscard]] Activation parse_activation(std::string_view s);
[[nodiscard]] OutputConstraint parse_constraint(std::string_view s);

struct ArchitectureSpec {
    Kind kind = Kind::trans;
    int m = 2;          // preference dimension (tokens for the transformer kinds)
    int n = 1;          // output dimension
    int d = 20;         // hidden width
    int heads = 2;      // attention heads, transformer kinds
    int experts = 1;    // expert heads, trans_moe
    Activation activation = Activation::relu;
    OutputConstraint constraint = OutputConstraint::box01;

    /// Throws ValidationError on an inconsistent spec.
    void validate() const;
    [[nodiscard]] bool is_transformer() const noexcept { return kind != Kind::mlp; }
};

[[nodiscard]] std::size_t param_count(const ArchitectureSpec& arch);

/// One named sub-tensor of the flat parameter array.
struct TensorSlot {
    std::string name;
    ad::Shape shape;
    std::size_t offset = 0;
    std::size_t fan_in = 1;
    bool bias = false;

    [[nodiscard]] std::size_t size() const { return ad::element_count(shape); }
};

/// Slots in storage order; they partition [0, param_count(arch)).
[[nodiscard]] std::vector<TensorSlot> make_layout(const ArchitectureSpec& arch);

class ParameterBundle {
public:
    ParameterBundle() = default;
    /// Zero-filled bundle for `arch`.
    explicit ParameterBundle(const ArchitectureSpec& arch);
    /// Adopts `values`; throws LayoutError when the length does not match.
    ParameterBundle(const ArchitectureSpec& arch, std::vector<double> values);

    [[nodiscard]] const ArchitectureSpec& arch() const noexcept { return arch_; }
    [[nodiscard]] const std::vector<TensorSlot>& layout() const noexcept { return layout_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] const TensorSlot& slot(std::string_view name) const;
    [[nodiscard]] std::span<double> view(std::string_view name);
    [[nodiscard]] std::span<const double> view(std::string_view name) const;

private:
    ArchitectureSpec arch_;
    std::vector<TensorSlot> layout_;
    std::vector<double> values_;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
[[nodiscard]] ParameterBundle init_params(const ArchitectureSpec& arch, Rng& rng);

} // namespace cpfl::hn
