// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Append-only run manifest. Each command that writes into a directory adds
// one entry to `<dir>/manifest`:
//
//   [run]
//   command = train
//   argv = train --config configs/cvx1.cfg
//   ...
//   [resolved_config]
//     <config text, indented by two spaces>
//   [end]

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpfl/trainer/config.hpp"

namespace cpfl::cli {

struct RunManifest {
    std::string command;
    std::string argv;
    std::string tool_version;
    int checkpoint_version = 0;
    std::string started;   // UTC, ISO 8601
    std::string finished;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::optional<train::TrainConfig> config;
};

[[nodiscard]] std::string utc_timestamp();

[[nodiscard]] std::string format_manifest_entry(const RunManifest& entry);
/// Appends to `dir`/manifest, creating the directory if needed.
void append_manifest(const std::filesystem::path& dir, const RunManifest& entry);
/// All entries in file order. Throws IoError or ValidationError.
[[nodiscard]] std::vector<RunManifest> read_manifest(const std::filesystem::path& path);

} // namespace cpfl::cli
