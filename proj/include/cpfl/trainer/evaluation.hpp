// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpfl/mop/front.hpp"
#include "cpfl/trainer/training.hpp"

namespace cpfl::train {

/// Maps a preference query of one front component to a decision vector.
class Predictor {
public:
    virtual ~Predictor() = default;
    [[nodiscard]] virtual std::vector<double> decision(std::span<const double> r, std::span<const double> a,
                                                       std::size_t component) const = 0;
};

/// Predictor backed by trained bundles. Component k selects bundle k in
/// connected mode, the anchor input in joint mode and expert k in moe mode.
class CheckpointPredictor : public Predictor {
public:
    explicit CheckpointPredictor(const Checkpoint& ckpt);

    [[nodiscard]] std::vector<double> decision(std::span<const double> r, std::span<const double> a,
                                               std::size_t component) const override;

private:
    const Checkpoint& ckpt_;
    mop::Problem problem_;
};

struct EvalOptions {
    std::size_t rays_per_anchor = 3;
    std::vector<std::uint64_t> seeds;     // empty: 30 seeds derived from the training seed
    std::size_t front_samples = 200;      // sweep rays per component for HV
    std::size_t true_front_density = 0;   // 0: 2000 for m = 2, 10000 for m = 3
    std::vector<double> ref;              // empty: (1, ..., 1)
};

struct MetricsReport {
    std::string problem;
    std::string mode;
    std::size_t seeds = 0;
    std::size_t rays_per_anchor = 0;
    double med_mean = 0.0;
    double med_std = 0.0;
    std::vector<double> per_anchor_med;  // averaged over seeds
    double hv = 0.0;
    double hv_true = 0.0;
    double hvd = 0.0;
    double infeasible_fraction = 0.0;
    bool all_infeasible = false;
    double runtime_s = 0.0;
};

[[nodiscard]] std::vector<std::uint64_t> default_eval_seeds(std::uint64_t base, std::size_t count);

/// Objective vectors of a deterministic sweep: `per_component` rays per
/// anchor, optionally only the points inside their anchor's upper bound.
[[nodiscard]] std::vector<mop::Point> predicted_front(const TrainConfig& config, const Predictor& predictor,
                                                      std::size_t per_component, bool feasible_only);

[[nodiscard]] MetricsReport evaluate_predictor(const TrainConfig& config, const Predictor& predictor,
                                               const EvalOptions& options);
[[nodiscard]] MetricsReport evaluate_run(const Checkpoint& ckpt, const EvalOptions& options);

/// key = value lines.
void write_report(std::ostream& out, const MetricsReport& report);

} // namespace cpfl::train
