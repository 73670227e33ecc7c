// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/autodiff/rng.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl {

double Rng::uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw InvalidArgument(fmt::format("gamma shape must be positive, got {}", shape));
    if (shape < 1.0) {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia and Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Rng::dirichlet(double alpha, int m) {
    if (!(alpha > 0.0)) throw InvalidArgument(fmt::format("dirichlet alpha must be positive, got {}", alpha));
    if (m < 1) throw InvalidArgument(fmt::format("dirichlet dimension must be at least 1, got {}", m));
    std::vector<double> out(static_cast<std::size_t>(m));
    if (m == 1) {
        out[0] = 1.0;
        return out;
    }
    for (;;) {
        double total = 0.0;
        for (double& v : out) {
            v = gamma(alpha);
            total += v;
        }
        if (!(total > 0.0)) continue;
        bool interior = true;
        for (double& v : out) {
            v /= total;
            interior = interior && v > 0.0;
        }
        if (interior) return out;
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the pair.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace cpfl
