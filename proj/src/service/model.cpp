// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/service/model.hpp"

#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/scalarization/chebyshev.hpp"

namespace cpfl::service {
namespace {

constexpr double kCacheStep = 1e-3;
constexpr double kAnchorMatch = 1e-12;

[[noreturn]] void reject(int status, const char* kind, const std::string& message) {
    throw RequestError(status, kind, message);
}

void check_length(const std::vector<double>& v, std::size_t m, const char* name) {
    if (v.size() != m) {
        reject(422, "dimension_mismatch", fmt::format("{} has {} entries, the model expects {}", name, v.size(), m));
    }
    for (double x : v) {
        if (!std::isfinite(x)) reject(400, "malformed", fmt::format("{} contains a non-finite value", name));
    }
}

bool same_point(const std::vector<double>& u, const std::vector<double>& v) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i] - v[i]) > kAnchorMatch) return false;
    }
    return true;
}

} // namespace

Model::Model(train::Checkpoint ckpt, bool oracle)
    : ckpt_(std::move(ckpt)), problem_(ckpt_.config.make_problem()) {
    if (ckpt_.bundles.empty()) throw ValidationError("checkpoint has no parameter bundles");
    predictor_ = std::make_unique<train::CheckpointPredictor>(ckpt_);
    if (oracle) oracle_ = std::make_unique<mop::ParetoOracle>(problem_);
}

InferResult Model::infer(const InferRequest& request) const {
    const std::size_t m = this->m();
    const auto& anchors = ckpt_.config.anchors;

    if (request.r.empty()) reject(400, "malformed", "r must be a non-empty list of numbers");
    double sum = 0.0;
    for (double v : request.r) {
        if (!std::isfinite(v)) reject(400, "malformed", "r contains a non-finite value");
        if (v < 0.0) reject(400, "malformed", fmt::format("r has a negative component ({})", v));
        sum += v;
    }
    if (!(sum > 0.0)) reject(400, "malformed", "r must have a positive sum");
    check_length(request.r, m, "r");

    InferResult out;
    out.r.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.r[i] = request.r[i] / sum;

    if (request.expert_id) {
        if (!is_moe()) {
            reject(409, "expert_on_non_moe",
                   fmt::format("expert_id given but the checkpoint mode is {}", train::mode_name(ckpt_.config.mode)));
        }
        const long long id = *request.expert_id;
        if (id < 0 || static_cast<std::size_t>(id) >= components()) {
            reject(422, "unknown_expert", fmt::format("expert_id {} outside [0, {})", id, components()));
        }
        out.component = static_cast<std::size_t>(id);
        out.expert_id = out.component;
    } else if (is_moe()) {
        reject(422, "expert_required", "moe checkpoints need an expert_id");
    }

    if (request.a) {
        check_length(*request.a, m, "a");
        out.a = *request.a;
        if (!is_moe()) {
            std::optional<std::size_t> match;
            for (std::size_t k = 0; k < anchors.size() && !match; ++k) {
                if (same_point(out.a, anchors[k].a)) match = k;
            }
            if (match) {
                out.component = *match;
            } else if (ckpt_.config.mode == train::Mode::connected) {
                reject(422, "unknown_anchor",
                       fmt::format("a = ({}) is not one of the checkpoint anchors", fmt::join(out.a, ", ")));
            }
        }
    } else {
        out.a = anchors[out.component].a;
    }

    if (request.b) {
        check_length(*request.b, m, "b");
        out.b = *request.b;
    } else {
        out.b = anchors[out.component].b;
    }

    out.x = predictor_->decision(scal::floor_preference(out.r), out.a, out.component);
    out.f = problem_.evaluate(out.x);
    out.chebyshev = scal::chebyshev(out.f, out.r, out.a).value;
    const scal::FeasibilityReport report = scal::split_feasibility_check(out.f, out.a, out.b);
    out.feasible = report.feasible;
    out.lower_ok = report.lower_ok;
    out.upper_ok = report.upper_ok;
    out.target = lookup_target(out.r, out.a, out.f);
    return out;
}

std::optional<Target> Model::lookup_target(const std::vector<double>& r, const std::vector<double>& a,
                                           const mop::Point& f) const {
    if (!oracle_) return std::nullopt;

    // The oracle is solved at the bucket centre so that the target depends
    // only on the key, never on which request filled the cache.
    CacheKey key;
    std::vector<double> centre(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        key.first.push_back(std::llround(r[i] / kCacheStep));
        centre[i] = static_cast<double>(key.first.back()) * kCacheStep;
    }
    for (double v : a) key.second.push_back(std::bit_cast<long long>(v));

    std::optional<mop::Point> point;
    bool hit = false;
    {
        std::shared_lock lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            point = it->second;
            hit = true;
        }
    }
    if (!hit) {
        const double total = std::accumulate(centre.begin(), centre.end(), 0.0);
        for (double& v : centre) v /= total;
        try {
            point = oracle_->true_optimum(scal::floor_preference(centre), a).f;
        } catch (const UnreachableAnchor&) {
            point.reset();
        }
        std::unique_lock lock(cache_mutex_);
        cache_.emplace(key, point);
    }
    if (!point) return std::nullopt;

    Target t;
    t.f = *point;
    double sq = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sq += (f[i] - t.f[i]) * (f[i] - t.f[i]);
    t.med_point_error = std::sqrt(sq);
    return t;
}

std::vector<FrontEntry> Model::front(std::size_t samples, std::size_t component) const {
    if (samples < 1) reject(400, "malformed", "samples must be at least 1");
    if (component >= components()) {
        reject(422, "unknown_component", fmt::format("component {} outside [0, {})", component, components()));
    }
    const scal::Bounds& box = ckpt_.config.anchors[component];
    std::vector<FrontEntry> out;
    for (auto& r : scal::preference_sweep(m(), samples)) {
        FrontEntry e;
        e.f = problem_.evaluate(predictor_->decision(r, box.a, component));
        e.feasible = scal::split_feasibility_check(e.f, box.a, box.b).feasible;
        e.component = component;
        e.r = std::move(r);
        out.push_back(std::move(e));
    }
    return out;
}

std::size_t Model::cache_size() const {
    std::shared_lock lock(cache_mutex_);
    return cache_.size();
}

} // namespace cpfl::service
