// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cpfl {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t size, double learning_rate) : m(size, 0.0), v(size, 0.0), lr(learning_rate) {}
};

/// One bias-corrected Adam update applied in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

} // namespace cpfl
