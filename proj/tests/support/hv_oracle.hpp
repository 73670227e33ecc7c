// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo estimate of the volume dominated by a point set inside the box
// [0, ref], with its standard error.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cpfl/autodiff/rng.hpp"

namespace cpfl::testing {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline McEstimate mc_hypervolume(const std::vector<std::vector<double>>& points, const std::vector<double>& ref,
                                 std::size_t samples, Rng& rng) {
    const std::size_t m = ref.size();
    double box = 1.0;
    for (double r : ref) box *= r;
    std::size_t hits = 0;
    std::vector<double> z(m);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < m; ++i) z[i] = rng.uniform(0.0, ref[i]);
        for (const auto& p : points) {
            bool dominated = true;
            for (std::size_t i = 0; i < m && dominated; ++i) dominated = p[i] <= z[i];
            if (dominated) {
                ++hits;
                break;
            }
        }
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {box * p, box * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

} // namespace cpfl::testing
