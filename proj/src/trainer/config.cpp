// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/trainer/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"

namespace cpfl::train {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, std::string_view what) {
    s = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ValidationError(fmt::format("{}: '{}' is not a number", what, s));
    }
    return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view what) {
    s = trim(s);
    Int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ValidationError(fmt::format("{}: '{}' is not an integer", what, s));
    }
    return v;
}

Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::connected, Mode::joint, Mode::moe}) {
        if (s == mode_name(m)) return m;
    }
    throw ValidationError(fmt::format("unknown training mode '{}'", s));
}

Schedule parse_schedule(std::string_view s) {
    for (Schedule m : {Schedule::sequential, Schedule::interleaved}) {
        if (s == schedule_name(m)) return m;
    }
    throw ValidationError(fmt::format("unknown schedule '{}'", s));
}

} // namespace

std::string_view mode_name(Mode m) {
    switch (m) {
    case Mode::connected: return "connected";
    case Mode::joint: return "joint";
    case Mode::moe: return "moe";
    }
    return "unknown";
}

std::string_view schedule_name(Schedule s) { return s == Schedule::sequential ? "sequential" : "interleaved"; }

std::vector<double> parse_vector(std::string_view text) {
    std::vector<double> out;
    text = trim(text);
    if (text.empty()) throw ValidationError("empty vector");
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto part = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        out.push_back(parse_double(part, "vector component"));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string format_vector(std::span<const double> v, std::string_view sep) {
    return fmt::format("{}", fmt::join(v, sep));
}

std::vector<std::vector<double>> TrainConfig::anchor_points() const {
    std::vector<std::vector<double>> out;
    for (const auto& b : anchors) out.push_back(b.a);
    return out;
}

void TrainConfig::validate() const {
    const mop::Problem p = make_problem();
    arch.validate();
    if (arch.m != p.m() || arch.n != p.n()) {
        throw ValidationError(fmt::format("architecture dimensions (m={}, n={}) do not match {} (m={}, n={})", arch.m,
                                          arch.n, p.name(), p.m(), p.n()));
    }
    const bool sphere = p.constraint() == mop::DecisionConstraint::simplex_sphere;
    const bool compatible = sphere ? arch.constraint == hn::OutputConstraint::simplex_sphere
                                   : arch.constraint == hn::OutputConstraint::box01;
    if (!compatible) {
        throw ValidationError(fmt::format("constraint layer '{}' cannot produce {} decisions for {}",
                                          hn::constraint_name(arch.constraint), mop::constraint_name(p.constraint()),
                                          p.name()));
    }
    const bool kind_ok = (mode == Mode::connected && (arch.kind == hn::Kind::mlp || arch.kind == hn::Kind::trans)) ||
                         (mode == Mode::joint && arch.kind == hn::Kind::trans_joint) ||
                         (mode == Mode::moe && arch.kind == hn::Kind::trans_moe);
    if (!kind_ok) {
        throw ValidationError(fmt::format("mode '{}' cannot train architecture '{}'", mode_name(mode),
                                          hn::kind_name(arch.kind)));
    }
    if (!(alpha > 0.0)) throw ValidationError(fmt::format("alpha must be positive, got {}", alpha));
    if (!(lr > 0.0)) throw ValidationError(fmt::format("lr must be positive, got {}", lr));
    if (iterations < 1) throw ValidationError(fmt::format("iterations must be at least 1, got {}", iterations));
    if (log_every < 1) throw ValidationError(fmt::format("log_every must be at least 1, got {}", log_every));
    if (threads < 1) throw ValidationError(fmt::format("threads must be at least 1, got {}", threads));
    if (!(anchor_jitter >= 0.0)) throw ValidationError(fmt::format("anchor_jitter must be >= 0, got {}", anchor_jitter));
    if (anchors.empty()) throw ValidationError("missing anchors: at least one 'a = ...' line is required");
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        const auto& box = anchors[k];
        if (box.a.size() != static_cast<std::size_t>(p.m()) || box.b.size() != static_cast<std::size_t>(p.m())) {
            throw ValidationError(fmt::format("anchor {} must have {} components (a has {}, b has {})", k, p.m(),
                                              box.a.size(), box.b.size()));
        }
        for (std::size_t i = 0; i < box.a.size(); ++i) {
            if (!(box.a[i] >= 0.0)) throw ValidationError(fmt::format("anchor {}: a[{}] = {} is negative", k, i, box.a[i]));
            if (!(box.a[i] <= box.b[i])) {
                throw ValidationError(fmt::format("anchor {}: a[{}] = {} exceeds b[{}] = {}", k, i, box.a[i], i, box.b[i]));
            }
        }
    }
    if (mode == Mode::moe && static_cast<std::size_t>(arch.experts) != anchors.size()) {
        throw ValidationError(fmt::format("trans-moe has {} experts but {} anchors are configured", arch.experts,
                                          anchors.size()));
    }
}

ParsedConfig parse_config_text(std::string_view text, std::string_view origin) {
    ParsedConfig out;
    TrainConfig& c = out.config;
    std::map<std::string, std::map<std::string, std::string>> kv;
    std::vector<std::pair<std::vector<double>, std::optional<std::vector<double>>>> anchors;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto where = [&]() { return fmt::format("{}:{}", origin, line_no); };
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(fmt::format("{}: malformed section header", where()));
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "problem" && section != "arch" && section != "train" && section != "anchors") {
                throw ValidationError(fmt::format("{}: unknown section [{}]", where(), section));
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ValidationError(fmt::format("{}: expected 'key = value'", where()));
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty()) throw ValidationError(fmt::format("{}: key '{}' outside any section", where(), key));
        if (section == "anchors") {
            try {
                if (key == "a") {
                    anchors.emplace_back(parse_vector(value), std::nullopt);
                } else if (key == "b") {
                    if (anchors.empty() || anchors.back().second) {
                        throw ValidationError("'b' must follow its own 'a' line");
                    }
                    anchors.back().second = parse_vector(value);
                } else {
                    throw ValidationError(fmt::format("unknown key '{}'", key));
                }
            } catch (const ValidationError& e) {
                throw ValidationError(fmt::format("{}: [anchors] {}", where(), e.what()));
            }
            continue;
        }
        if (kv[section].count(key) != 0) throw ValidationError(fmt::format("{}: duplicate key '{}'", where(), key));
        kv[section][key] = value;
    }

    auto take = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
        auto& s = kv[sec];
        const auto it = s.find(key);
        if (it == s.end()) return std::nullopt;
        std::string v = it->second;
        s.erase(it);
        return v;
    };
    auto note = [&](std::string msg) { out.defaults_applied.push_back(std::move(msg)); };

    const auto id = take("problem", "id");
    if (!id) throw ValidationError(fmt::format("{}: [problem] id is required", origin));
    c.problem = mop::parse_problem_id(*id);
    if (auto v = take("problem", "A")) c.shape.A = parse_double(*v, "problem.A");
    if (auto v = take("problem", "gamma")) c.shape.gamma = parse_double(*v, "problem.gamma");
    if (auto v = take("problem", "beta")) c.shape.beta = parse_double(*v, "problem.beta");
    const mop::Problem problem = c.make_problem();

    c.arch.m = problem.m();
    c.arch.n = problem.n();
    if (auto v = take("arch", "kind")) c.arch.kind = hn::parse_kind(*v);
    else note("arch.kind = trans");
    if (auto v = take("arch", "d")) c.arch.d = parse_int<int>(*v, "arch.d");
    else note("arch.d = 20");
    if (auto v = take("arch", "heads")) c.arch.heads = parse_int<int>(*v, "arch.heads");
    else if (c.arch.is_transformer()) note("arch.heads = 2");
    if (auto v = take("arch", "activation")) c.arch.activation = hn::parse_activation(*v);
    if (auto v = take("arch", "constraint")) {
        c.arch.constraint = hn::parse_constraint(*v);
    } else {
        c.arch.constraint = problem.constraint() == mop::DecisionConstraint::simplex_sphere
                                ? hn::OutputConstraint::simplex_sphere
                                : hn::OutputConstraint::box01;
    }
    const auto experts = take("arch", "experts");
    if (experts) c.arch.experts = parse_int<int>(*experts, "arch.experts");

    if (auto v = take("train", "alpha")) c.alpha = parse_double(*v, "train.alpha");
    else note("train.alpha = 0.6");
    if (auto v = take("train", "lr")) c.lr = parse_double(*v, "train.lr");
    else note("train.lr = 0.001");
    if (auto v = take("train", "iterations")) c.iterations = parse_int<long>(*v, "train.iterations");
    else note("train.iterations = 20000");
    if (auto v = take("train", "seed")) c.seed = parse_int<std::uint64_t>(*v, "train.seed");
    if (auto v = take("train", "mode")) {
        c.mode = parse_mode(*v);
    } else {
        c.mode = c.arch.kind == hn::Kind::trans_joint ? Mode::joint
                 : c.arch.kind == hn::Kind::trans_moe ? Mode::moe
                                                       : Mode::connected;
    }
    if (auto v = take("train", "schedule")) c.schedule = parse_schedule(*v);
    if (auto v = take("train", "log_every")) c.log_every = parse_int<long>(*v, "train.log_every");
    if (auto v = take("train", "anchor_jitter")) c.anchor_jitter = parse_double(*v, "train.anchor_jitter");
    if (auto v = take("train", "threads")) c.threads = parse_int<int>(*v, "train.threads");

    for (const auto& [sec, rest] : kv) {
        if (!rest.empty()) {
            throw ValidationError(fmt::format("{}: unknown key '{}' in [{}]", origin, rest.begin()->first, sec));
        }
    }

    if (anchors.empty()) throw ValidationError(fmt::format("{}: missing anchors", origin));
    std::vector<std::vector<double>> points;
    for (const auto& [a, b] : anchors) points.push_back(a);
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        scal::Bounds box;
        box.a = anchors[k].first;
        if (anchors[k].second) {
            box.b = *anchors[k].second;
        } else {
            if (box.a.size() != static_cast<std::size_t>(problem.m())) {
                throw ValidationError(fmt::format("{}: anchor {} must have {} components, got {}", origin, k,
                                                  problem.m(), box.a.size()));
            }
            box.b = scal::default_upper_bound(points, k, problem.disconnected());
        }
        c.anchors.push_back(std::move(box));
    }
    if (c.arch.kind == hn::Kind::trans_moe && !experts) c.arch.experts = static_cast<int>(c.anchors.size());

    c.validate();
    return out;
}

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(fmt::format("cannot read config '{}'", path));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

void write_config(std::ostream& out, const TrainConfig& c) {
    out << "[problem]\n";
    out << "id = " << mop::problem_name(c.problem) << '\n';
    if (c.problem == mop::ProblemId::zdt3star) {
        out << fmt::format("A = {}\ngamma = {}\nbeta = {}\n", c.shape.A, c.shape.gamma, c.shape.beta);
    }
    out << "[arch]\n";
    out << "kind = " << hn::kind_name(c.arch.kind) << '\n';
    out << "d = " << c.arch.d << '\n';
    out << "heads = " << c.arch.heads << '\n';
    out << "activation = " << hn::activation_name(c.arch.activation) << '\n';
    out << "constraint = " << hn::constraint_name(c.arch.constraint) << '\n';
    if (c.arch.kind == hn::Kind::trans_moe) out << "experts = " << c.arch.experts << '\n';
    out << "[train]\n";
    out << fmt::format("alpha = {}\nlr = {}\niterations = {}\nseed = {}\n", c.alpha, c.lr, c.iterations, c.seed);
    out << "mode = " << mode_name(c.mode) << '\n';
    out << "schedule = " << schedule_name(c.schedule) << '\n';
    out << fmt::format("log_every = {}\nanchor_jitter = {}\nthreads = {}\n", c.log_every, c.anchor_jitter, c.threads);
    out << "[anchors]\n";
    for (const auto& box : c.anchors) {
        out << "a = " << format_vector(box.a) << '\n';
        out << "b = " << format_vector(box.b) << '\n';
    }
}

std::string format_config(const TrainConfig& config) {
    std::ostringstream ss;
    write_config(ss, config);
    return ss.str();
}

} // namespace cpfl::train
