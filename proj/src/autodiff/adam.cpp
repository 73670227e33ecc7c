// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/autodiff/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw InvalidArgument(fmt::format("adam: length mismatch (params {}, grads {}, m {}, v {})", params.size(),
                                          grads.size(), state.m.size(), state.v.size()));
    }
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mh = state.m[i] / c1;
        const double vh = state.v[i] / c2;
        params[i] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
}

} // namespace cpfl
