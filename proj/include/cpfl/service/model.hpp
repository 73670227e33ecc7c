// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// A loaded checkpoint answering preference queries. Shared by the HTTP
// service and the `infer` command.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "cpfl/error.hpp"
#include "cpfl/mop/front.hpp"
#include "cpfl/trainer/evaluation.hpp"

namespace cpfl::service {

/// Request rejected with an HTTP status (400, 409 or 422).
class RequestError : public Error {
public:
    RequestError(int status, std::string kind, const std::string& message)
        : Error(std::move(kind), message), status_(status) {}

    [[nodiscard]] int status() const noexcept { return status_; }

private:
    int status_;
};

struct InferRequest {
    std::vector<double> r;
    std::optional<std::vector<double>> a;
    std::optional<std::vector<double>> b;
    std::optional<long long> expert_id;
};

struct Target {
    mop::Point f;
    double med_point_error = 0.0;
};

struct InferResult {
    std::vector<double> r;  // normalized
    std::vector<double> a;
    std::vector<double> b;
    std::size_t component = 0;
    std::optional<std::size_t> expert_id;
    std::vector<double> x;
    mop::Point f;
    double chebyshev = 0.0;
    bool feasible = false;
    std::vector<bool> lower_ok;
    std::vector<bool> upper_ok;
    std::optional<Target> target;
};

struct FrontEntry {
    std::vector<double> r;
    mop::Point f;
    std::size_t component = 0;
    bool feasible = false;
};

class Model {
public:
    /// `oracle` enables the true-front target in infer results.
    explicit Model(train::Checkpoint ckpt, bool oracle = true);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    [[nodiscard]] const train::Checkpoint& checkpoint() const noexcept { return ckpt_; }
    [[nodiscard]] const mop::Problem& problem() const noexcept { return problem_; }
    [[nodiscard]] std::size_t m() const noexcept { return static_cast<std::size_t>(problem_.m()); }
    [[nodiscard]] bool is_moe() const noexcept { return ckpt_.config.mode == train::Mode::moe; }
    [[nodiscard]] std::size_t components() const noexcept { return ckpt_.config.anchors.size(); }

    /// Throws RequestError for invalid requests.
    [[nodiscard]] InferResult infer(const InferRequest& request) const;

    /// Sweep of `samples` rays through one component.
    [[nodiscard]] std::vector<FrontEntry> front(std::size_t samples, std::size_t component) const;

    [[nodiscard]] std::size_t cache_size() const;

private:
    [[nodiscard]] std::optional<Target> lookup_target(const std::vector<double>& r, const std::vector<double>& a,
                                                      const mop::Point& f) const;

    train::Checkpoint ckpt_;
    mop::Problem problem_;
    std::unique_ptr<train::CheckpointPredictor> predictor_;
    std::unique_ptr<mop::ParetoOracle> oracle_;

    using CacheKey = std::pair<std::vector<long long>, std::vector<long long>>;
    mutable std::shared_mutex cache_mutex_;
    mutable std::map<CacheKey, std::optional<mop::Point>> cache_;
};

} // namespace cpfl::service
