// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cpfl/autodiff/tape.hpp"
#include "cpfl/hypernet/architecture.hpp"

namespace cpfl::hn {

struct ForwardGraph {
    ad::NodeId raw;                      // head output, shape [n]
    ad::NodeId x;                        // after the constraint layer
    std::vector<ad::NodeId> attention;   // per head, [m, m]; empty for mlp
    // Parameter leaves actually placed on the tape, by layout index.
    std::vector<std::pair<std::size_t, ad::NodeId>> leaves;
};

struct ForwardInput {
    std::span<const double> r;
    std::span<const double> a;                 // used by trans-joint only
    std::optional<std::size_t> expert;         // required by trans-moe
};

/// Records the hypernetwork on `tape`. Parameter leaves require gradients
/// when `trainable` is set. Only the selected expert of a trans-moe bundle is
/// placed on the tape.
ForwardGraph build_forward(ad::Tape& tape, const ParameterBundle& params, const ForwardInput& in, bool trainable);

/// Constraint layer on a raw node of shape [n].
ad::NodeId constraint_layer(ad::Tape& tape, ad::NodeId raw, OutputConstraint kind);

/// Flat gradient vector aligned with the bundle; entries for tensors that
/// were not on the tape are zero.
[[nodiscard]] std::vector<double> gather_gradients(const ParameterBundle& params, const ForwardGraph& graph,
                                                   const ad::Gradients& grads);

/// Constrained output for one query (no gradients).
[[nodiscard]] std::vector<double> predict(const ParameterBundle& params, const ForwardInput& in);

} // namespace cpfl::hn
