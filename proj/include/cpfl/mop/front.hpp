// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cpfl/mop/problem.hpp"

namespace cpfl::mop {

using Point = std::vector<double>;

/// Indices (ascending) of the points not dominated by any other point.
/// Duplicates are all kept. Exact comparisons, no tolerance.
[[nodiscard]] std::vector<std::size_t> nondominated_indices(std::span<const Point> points);
[[nodiscard]] std::vector<Point> nondominated_filter(std::span<const Point> points);

/// True when `p` dominates `q`: p <= q everywhere and p < q somewhere.
[[nodiscard]] bool dominates(std::span<const double> p, std::span<const double> q);

struct FrontSample {
    std::vector<Point> points;
    std::vector<Point> decision_points;
    std::size_t density = 0;
};

/// Non-dominated sample of the normalized true front.
[[nodiscard]] FrontSample sample_true_front(const Problem& problem, std::size_t density);

/// Raw (unnormalized) front extents from a dense sample of `density` points
/// per parameter axis; used to regenerate the frozen normalization tables.
[[nodiscard]] std::vector<Affine> raw_front_extents(const Problem& problem, std::size_t density);

struct OptimumPoint {
    Point f;
    std::vector<double> x;
};

/// Chebyshev-optimal points of the true front, max_i r_i (F_i - a_i)
/// minimized over the front parameterization. The coarse grid is built once
/// per instance; queries are thread-safe.
class ParetoOracle {
public:
    explicit ParetoOracle(Problem problem);

    [[nodiscard]] const Problem& problem() const noexcept { return problem_; }

    /// Throws InvalidArgument for a bad r and UnreachableAnchor when no
    /// front point lies in the cone {F >= a}.
    [[nodiscard]] OptimumPoint true_optimum(std::span<const double> r, std::span<const double> a) const;

private:
    [[nodiscard]] double objective(std::span<const double> u, std::span<const double> r, std::span<const double> a,
                                   Point* f = nullptr) const;

    Problem problem_;
    std::size_t grid_ = 0;
    std::vector<Point> grid_f_;
};

/// CSV with header f1,...,fm and 9 significant digits.
void write_front_csv(std::ostream& out, std::span<const Point> points, std::size_t m);

} // namespace cpfl::mop
