// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training configuration and its text form. The format is line based:
//
//   # comment
//   [problem]
//   id = ZDT3
//   [arch]
//   kind = trans-moe
//   d = 30
//   [train]
//   alpha = 0.6
//   [anchors]
//   a = 0.01, 0.81
//   b = 0.16, 1        # optional, applies to the preceding a
//
// The same sections are embedded verbatim in checkpoints.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cpfl/hypernet/architecture.hpp"
#include "cpfl/mop/problem.hpp"
#include "cpfl/scalarization/chebyshev.hpp"

namespace cpfl::train {

enum class Mode { connected, joint, moe };
/// Order in which anchors are visited in joint and moe modes: `sequential`
/// trains each anchor for `iterations` steps in turn; `interleaved` cycles
/// through the anchors every step for the same total step count.
enum class Schedule { sequential, interleaved };

[[nodiscard]] std::string_view mode_name(Mode m);
[[nodiscard]] std::string_view schedule_name(Schedule s);

struct TrainConfig {
    mop::ProblemId problem = mop::ProblemId::cvx1;
    mop::StarShape shape;
    hn::ArchitectureSpec arch;
    double alpha = 0.6;
    double lr = 1e-3;
    long iterations = 20000;
    std::uint64_t seed = 0;
    Mode mode = Mode::connected;
    Schedule schedule = Schedule::sequential;
    long log_every = 500;
    double anchor_jitter = 0.0;  // joint mode: a + U(-j, j), clamped at 0
    int threads = 1;             // connected mode: anchors trained concurrently
    std::vector<scal::Bounds> anchors;

    [[nodiscard]] mop::Problem make_problem() const { return mop::Problem(problem, shape); }
    [[nodiscard]] std::vector<std::vector<double>> anchor_points() const;
    /// Throws ValidationError naming the offending field.
    void validate() const;
};

struct ParsedConfig {
    TrainConfig config;
    std::vector<std::string> defaults_applied;  // "lr = 0.001" style notes
};

[[nodiscard]] ParsedConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
[[nodiscard]] ParsedConfig parse_config_file(const std::string& path);
/// Sections [problem], [arch], [train], [anchors]; round-trips through
/// parse_config_text.
void write_config(std::ostream& out, const TrainConfig& config);
[[nodiscard]] std::string format_config(const TrainConfig& config);

/// "0.1,0.2" (spaces allowed) -> {0.1, 0.2}. Throws ValidationError.
[[nodiscard]] std::vector<double> parse_vector(std::string_view text);
[[nodiscard]] std::string format_vector(std::span<const double> v, std::string_view sep = ", ");

} // namespace cpfl::train
