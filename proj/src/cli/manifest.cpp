// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/cli/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"

namespace cpfl::cli {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (!s.empty()) {
        const auto pos = s.find(", ");
        out.emplace_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 2);
    }
    return out;
}

} // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

std::string format_manifest_entry(const RunManifest& e) {
    std::string out = "[run]\n";
    out += fmt::format("command = {}\n", e.command);
    out += fmt::format("argv = {}\n", e.argv);
    out += fmt::format("tool_version = {}\n", e.tool_version);
    out += fmt::format("checkpoint_version = {}\n", e.checkpoint_version);
    out += fmt::format("started = {}\n", e.started);
    out += fmt::format("finished = {}\n", e.finished);
    if (!e.config_path.empty()) out += fmt::format("config = {}\n", e.config_path);
    out += fmt::format("inputs = {}\n", fmt::join(e.inputs, ", "));
    out += fmt::format("outputs = {}\n", fmt::join(e.outputs, ", "));
    if (e.config) {
        out += "[resolved_config]\n";
        std::istringstream lines(train::format_config(*e.config));
        for (std::string line; std::getline(lines, line);) out += "  " + line + '\n';
    }
    out += "[end]\n";
    return out;
}

void append_manifest(const std::filesystem::path& dir, const RunManifest& entry) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = dir / "manifest";
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError(fmt::format("cannot append to {}", path.string()));
    out << format_manifest_entry(entry);
    if (!out) throw IoError(fmt::format("write failed on {}", path.string()));
}

std::vector<RunManifest> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::vector<RunManifest> entries;
    std::optional<RunManifest> cur;
    std::string config_text;
    bool in_config = false;
    std::size_t line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line == "[run]") {
            if (cur) throw ValidationError(fmt::format("{}:{}: [run] inside an open entry", path.string(), line_no));
            cur.emplace();
            config_text.clear();
            in_config = false;
            continue;
        }
        if (!cur) throw ValidationError(fmt::format("{}:{}: content outside [run]", path.string(), line_no));
        if (line == "[end]") {
            if (in_config) cur->config = train::parse_config_text(config_text, path.string()).config;
            entries.push_back(std::move(*cur));
            cur.reset();
            in_config = false;
            continue;
        }
        if (line == "[resolved_config]") {
            in_config = true;
            continue;
        }
        if (in_config) {
            config_text += std::string(raw.size() >= 2 && raw.starts_with("  ") ? raw.substr(2) : raw) + '\n';
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(fmt::format("{}:{}: expected key = value", path.string(), line_no));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key == "command") cur->command = value;
        else if (key == "argv") cur->argv = value;
        else if (key == "tool_version") cur->tool_version = value;
        else if (key == "checkpoint_version") cur->checkpoint_version = std::stoi(value);
        else if (key == "started") cur->started = value;
        else if (key == "finished") cur->finished = value;
        else if (key == "config") cur->config_path = value;
        else if (key == "inputs") cur->inputs = split_list(value);
        else if (key == "outputs") cur->outputs = split_list(value);
        else throw ValidationError(fmt::format("{}:{}: unknown key '{}'", path.string(), line_no, key));
    }
    if (cur) throw TruncatedError(fmt::format("{}: last entry has no [end]", path.string()));
    return entries;
}

} // namespace cpfl::cli
