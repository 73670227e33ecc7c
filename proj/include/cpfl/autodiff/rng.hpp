// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cpfl {

/// Seeded random source. Each training run or evaluation seed owns one; it
/// is never shared across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    double uniform(double lo = 0.0, double hi = 1.0);
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Gamma(shape, 1); shape > 0.
    double gamma(double shape);
    /// Symmetric Dirichlet(alpha) on the m-simplex.
    std::vector<double> dirichlet(double alpha, int m);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Deterministically derive a child seed, e.g. one per anchor or per
/// evaluation seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace cpfl
