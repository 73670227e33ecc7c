// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cpfl/autodiff/rng.hpp"
#include "cpfl/autodiff/tape.hpp"

namespace cpfl::scal {

/// Lower floor applied to every preference component before renormalizing.
inline constexpr double kPreferenceFloor = 1e-6;

struct ChebyshevValue {
    double value = 0.0;
    std::size_t argmax = 0;  // lowest index on ties
};

/// max_i r_i (F_i - a_i).
[[nodiscard]] ChebyshevValue chebyshev(std::span<const double> f, std::span<const double> r,
                                       std::span<const double> a);

/// Differentiable form over an objective node of shape [m]. The gradient
/// flows only through the argmax coordinate.
ad::NodeId chebyshev(ad::Tape& tape, ad::NodeId f, std::span<const double> r, std::span<const double> a);

/// Lower-bound anchor a and upper bound b of one feasibility box.
struct Bounds {
    std::vector<double> a;
    std::vector<double> b;
};

struct PreferenceQuery {
    std::vector<double> r;
    std::vector<double> a;
    std::vector<double> b;
    std::optional<std::size_t> expert_id;
};

/// Floor every component at `floor` and rescale onto the simplex.
[[nodiscard]] std::vector<double> floor_preference(std::span<const double> r, double floor = kPreferenceFloor);

/// Draw r ~ Dir(alpha) and attach the selected box. With several boxes and
/// no index, the call is rejected; the index is also recorded as expert id.
[[nodiscard]] PreferenceQuery make_query(Rng& rng, double alpha, std::span<const Bounds> boxes,
                                         std::optional<std::size_t> component_index = std::nullopt);

struct FeasibilityReport {
    std::vector<bool> lower_ok;
    std::vector<bool> upper_ok;
    bool feasible = true;
};

[[nodiscard]] FeasibilityReport split_feasibility_check(std::span<const double> f, std::span<const double> a,
                                                        std::span<const double> b);
[[nodiscard]] inline FeasibilityReport split_feasibility_check(std::span<const double> f, const PreferenceQuery& q) {
    return split_feasibility_check(f, q.a, q.b);
}

/// Upper bound for anchor `index` when none is configured: (1, ..., 1) for
/// connected fronts; for disconnected fronts, per coordinate the smallest
/// other anchor value above this anchor's, else 1.
[[nodiscard]] std::vector<double> default_upper_bound(std::span<const std::vector<double>> anchors,
                                                      std::size_t index, bool disconnected);

/// Deterministic preference sweep: for m = 2, `samples` evenly spaced rays
/// from (eps, 1 - eps) to (1 - eps, eps); for m = 3, the smallest simplex
/// lattice with at least `samples` points, floored at eps.
[[nodiscard]] std::vector<std::vector<double>> preference_sweep(std::size_t m, std::size_t samples,
                                                                double eps = kPreferenceFloor);

} // namespace cpfl::scal
