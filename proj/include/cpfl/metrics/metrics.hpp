// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "cpfl/mop/front.hpp"

namespace cpfl::metrics {

using mop::Point;

/// Mean Euclidean distance between aligned pairs.
[[nodiscard]] double med(std::span<const Point> targets, std::span<const Point> preds);

/// Exact dominated volume up to `ref` for m in {2, 3}. Points with any
/// coordinate >= ref are ignored.
[[nodiscard]] double hypervolume(std::span<const Point> points, std::span<const double> ref);

/// HV(true_front) - HV(learned); not clamped.
[[nodiscard]] double hvd(std::span<const Point> true_front, std::span<const Point> learned,
                         std::span<const double> ref);

} // namespace cpfl::metrics
