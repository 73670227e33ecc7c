// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/trainer/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"

namespace cpfl::train {
namespace {

constexpr std::string_view kMagic = "# cpfl checkpoint";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::pair<std::string, std::string> split_kv(std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) return {std::string(trim(line)), {}};
    return {std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
}

class LineReader {
public:
    LineReader(std::istream& in, std::string_view origin) : in_(in), origin_(origin) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            const auto t = trim(line);
            if (t.empty()) continue;
            line = std::string(t);
            return true;
        }
        return false;
    }
    std::string require(std::string_view what) {
        std::string line;
        if (!next(line)) throw TruncatedError(fmt::format("{}: file ends before {}", origin_, what));
        return line;
    }
    [[nodiscard]] std::string where() const { return fmt::format("{}:{}", origin_, line_no_); }

private:
    std::istream& in_;
    std::string origin_;
    std::size_t line_no_ = 0;
};

double to_double(std::string_view s, const LineReader& r) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw LayoutError(fmt::format("{}: '{}' is not a number", r.where(), s));
    }
    return v;
}

std::size_t to_size(std::string_view s, const LineReader& r) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw LayoutError(fmt::format("{}: '{}' is not a count", r.where(), s));
    }
    return v;
}

} // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out << kMagic << '\n';
    out << "[checkpoint]\n";
    out << "version = " << ckpt.version << '\n';
    out << "seed = " << ckpt.config.seed << '\n';
    out << fmt::format("wall_clock_s = {:.6f}\n", ckpt.wall_clock_s);
    out << "bundles = " << ckpt.bundles.size() << '\n';
    write_config(out, ckpt.config);
    out << "[layout]\n";
    for (const hn::TensorSlot& s : hn::make_layout(ckpt.config.arch)) {
        out << s.name << " = " << s.offset << ' ' << fmt::format("{}", fmt::join(s.shape, "x")) << '\n';
    }
    for (std::size_t b = 0; b < ckpt.bundles.size(); ++b) {
        out << "[bundle." << b << "]\n";
        out << "count = " << ckpt.bundles[b].size() << '\n';
        for (double v : ckpt.bundles[b].values()) out << fmt::format("{:.17g}\n", v);
        out << "[trace." << b << "]\n";
        const auto& trace = b < ckpt.loss_traces.size() ? ckpt.loss_traces[b] : std::vector<double>{};
        out << "count = " << trace.size() << '\n';
        for (double v : trace) out << fmt::format("{:.17g}\n", v);
    }
    out << "[end]\n";
}

Checkpoint read_checkpoint(std::istream& in, std::string_view origin) {
    LineReader reader(in, origin);
    std::string line = reader.require("the header");
    if (line != kMagic) throw LayoutError(fmt::format("{}: not a checkpoint file", origin));
    if (reader.require("[checkpoint]") != "[checkpoint]") {
        throw LayoutError(fmt::format("{}: missing [checkpoint] section", reader.where()));
    }

    Checkpoint ckpt;
    std::size_t bundles = 0;
    bool have_version = false;
    for (;;) {
        line = reader.require("the config");
        if (line.front() == '[') break;
        const auto [key, value] = split_kv(line);
        if (key == "version") {
            ckpt.version = static_cast<int>(to_size(value, reader));
            have_version = true;
            if (ckpt.version != kCheckpointVersion) {
                throw VersionError(fmt::format("{}: checkpoint version {} is not supported (this build reads version {})",
                                               origin, ckpt.version, kCheckpointVersion));
            }
        } else if (key == "wall_clock_s") {
            ckpt.wall_clock_s = to_double(value, reader);
        } else if (key == "bundles") {
            bundles = to_size(value, reader);
        }
    }
    if (!have_version) throw VersionError(fmt::format("{}: checkpoint has no version field", origin));

    std::string config_text;
    while (line != "[layout]") {
        config_text += line;
        config_text += '\n';
        line = reader.require("the layout table");
    }
    ckpt.config = parse_config_text(config_text, origin).config;

    const auto expected = hn::make_layout(ckpt.config.arch);
    for (const hn::TensorSlot& s : expected) {
        line = reader.require("the layout table");
        const auto [name, desc] = split_kv(line);
        const std::string want = fmt::format("{} {}", s.offset, fmt::join(s.shape, "x"));
        if (name != s.name || desc != want) {
            throw LayoutError(fmt::format("{}: layout entry '{}' does not match the architecture (expected '{} = {}')",
                                          reader.where(), line, s.name, want));
        }
    }

    const std::size_t count = hn::param_count(ckpt.config.arch);
    for (std::size_t b = 0; b < bundles; ++b) {
        line = reader.require(fmt::format("bundle {}", b));
        if (line != fmt::format("[bundle.{}]", b)) {
            throw LayoutError(fmt::format("{}: expected [bundle.{}], found '{}'", reader.where(), b, line));
        }
        const auto [ckey, cval] = split_kv(reader.require("the bundle count"));
        if (ckey != "count") throw LayoutError(fmt::format("{}: expected a count line", reader.where()));
        const std::size_t n = to_size(cval, reader);
        if (n != count) {
            throw LayoutError(fmt::format("{}: bundle {} declares {} parameters but the architecture needs {}",
                                          reader.where(), b, n, count));
        }
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            line = reader.require(fmt::format("parameter {} of bundle {}", i, b));
            if (line.front() == '[') {
                throw TruncatedError(fmt::format("{}: bundle {} ends after {} of {} values", reader.where(), b, i, n));
            }
            values[i] = to_double(line, reader);
        }
        ckpt.bundles.emplace_back(ckpt.config.arch, std::move(values));

        line = reader.require(fmt::format("trace {}", b));
        if (line != fmt::format("[trace.{}]", b)) {
            throw LayoutError(fmt::format("{}: expected [trace.{}], found '{}'", reader.where(), b, line));
        }
        const auto [tkey, tval] = split_kv(reader.require("the trace count"));
        if (tkey != "count") throw LayoutError(fmt::format("{}: expected a count line", reader.where()));
        std::vector<double> trace(to_size(tval, reader));
        for (double& v : trace) {
            line = reader.require("trace values");
            if (line.front() == '[') throw TruncatedError(fmt::format("{}: trace {} is incomplete", reader.where(), b));
            v = to_double(line, reader);
        }
        ckpt.loss_traces.push_back(std::move(trace));
    }
    const std::size_t want_bundles = ckpt.config.mode == Mode::connected ? ckpt.config.anchors.size() : 1;
    if (bundles != want_bundles) {
        throw LayoutError(fmt::format("{}: {} bundles stored, configuration implies {}", origin, bundles, want_bundles));
    }
    if (reader.require("the [end] marker") != "[end]") {
        throw LayoutError(fmt::format("{}: expected [end]", reader.where()));
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", path));
    write_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", path));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read checkpoint '{}'", path));
    return read_checkpoint(in, path);
}

} // namespace cpfl::train
