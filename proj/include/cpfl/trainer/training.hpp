// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "cpfl/autodiff/adam.hpp"
#include "cpfl/hypernet/architecture.hpp"
#include "cpfl/trainer/config.hpp"

namespace cpfl::train {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    int version = kCheckpointVersion;
    TrainConfig config;
    /// One bundle per anchor in connected mode, a single bundle otherwise.
    std::vector<hn::ParameterBundle> bundles;
    /// Mean loss over consecutive windows of `log_every` steps, per bundle.
    std::vector<std::vector<double>> loss_traces;
    double wall_clock_s = 0.0;
};

using LogFn = std::function<void(std::string_view)>;

/// One Chebyshev step on a single query; returns the loss before the update.
double train_step(const mop::Problem& problem, hn::ParameterBundle& params, AdamState& adam,
                  const scal::PreferenceQuery& query);

/// Algorithm for connected fronts: one independent model per anchor.
[[nodiscard]] Checkpoint train_connected(const TrainConfig& config, const LogFn& log = {});
/// Disconnected fronts: a single joint-input or mixture-of-experts model.
[[nodiscard]] Checkpoint train_disconnected(const TrainConfig& config, const LogFn& log = {});
/// Dispatch on config.mode.
[[nodiscard]] Checkpoint train(const TrainConfig& config, const LogFn& log = {});

/// Number of upward steps of a moving average (window in trace entries).
[[nodiscard]] std::size_t moving_average_increases(std::span<const double> trace, std::size_t window);

} // namespace cpfl::train
