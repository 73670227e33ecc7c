// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `cpfl` command line:
//
//   train --config P [--seed N] [--out DIR]
//   eval  --ckpt P [--rays K] [--seeds S] [--report P]
//   front --ckpt P --samples N --csv P
//   infer --ckpt P --r v1,..,vm [--a ...] [--b ...] [--expert ID]
//   serve --ckpt P --port N [--bind ADDR]
//   sweep --config P --dims d1,.. --heads e1,.. --csv P
//
// Failures print one line `error: code=<kind> message="..."` to the error
// stream. Usage errors exit with 2, everything else with 1.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cpfl/error.hpp"
#include "cpfl/mop/front.hpp"
#include "cpfl/trainer/training.hpp"

namespace cpfl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error("usage", message) {}
};

/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exactly `samples` predicted points split over the components (the first
/// samples % k components get one extra ray), sorted by f1.
[[nodiscard]] std::vector<mop::Point> front_rows(const train::Checkpoint& ckpt, std::size_t samples);

struct SweepOptions {
    std::size_t train_seeds = 3;
    std::size_t eval_seeds = 5;
    std::size_t rays_per_anchor = 3;
    long iterations = 0;  // 0: keep the config value
};

struct SweepRow {
    int d = 0;
    int heads = 0;
    double med_trans_mean = 0.0;
    double med_trans_std = 0.0;
    double med_mlp_mean = 0.0;
    double med_mlp_std = 0.0;
};

/// MED of transformer and MLP hypernetworks over a (d, heads) grid, rows in
/// d-major order. Cells with d not divisible by heads hold NaN for the
/// transformer.
[[nodiscard]] std::vector<SweepRow> run_sweep(const train::TrainConfig& base, const std::vector<int>& dims,
                                              const std::vector<int>& heads, const SweepOptions& options,
                                              const train::LogFn& log = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace cpfl::cli
