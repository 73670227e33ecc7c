// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/trainer/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"
#include "cpfl/hypernet/forward.hpp"

namespace cpfl::train {
namespace {

class TraceRecorder {
public:
    explicit TraceRecorder(long window) : window_(window) {}

    void add(double loss) {
        sum_ += loss;
        if (++count_ == window_) flush();
        tail_.push_back(loss);
        if (tail_.size() > 10) tail_.pop_front();
    }
    std::vector<double> finish() {
        if (count_ > 0) flush();
        return std::move(trace_);
    }
    [[nodiscard]] std::string tail() const { return fmt::format("{}", fmt::join(tail_, ", ")); }

private:
    void flush() {
        trace_.push_back(sum_ / static_cast<double>(count_));
        sum_ = 0.0;
        count_ = 0;
    }

    long window_;
    long count_ = 0;
    double sum_ = 0.0;
    std::vector<double> trace_;
    std::deque<double> tail_;
};

[[noreturn]] void diverged(std::string_view where, long iteration, const scal::PreferenceQuery& q,
                           const TraceRecorder& trace, std::string_view cause) {
    throw TrainingError(fmt::format("{}: non-finite value at iteration {} (r = [{}], a = [{}]): {}; last losses [{}]",
                                    where, iteration, fmt::join(q.r, ", "), fmt::join(q.a, ", "), cause,
                                    trace.tail()));
}

double run_step(const mop::Problem& problem, hn::ParameterBundle& params, AdamState& adam,
                const scal::PreferenceQuery& q, long iteration, const TraceRecorder& trace, std::string_view where) {
    double loss = 0.0;
    try {
        loss = train_step(problem, params, adam, q);
    } catch (const NumericError& e) {
        diverged(where, iteration, q, trace, e.what());
    }
    if (!std::isfinite(loss)) diverged(where, iteration, q, trace, fmt::format("loss = {}", loss));
    return loss;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

double train_step(const mop::Problem& problem, hn::ParameterBundle& params, AdamState& adam,
                  const scal::PreferenceQuery& q) {
    ad::Tape tape;
    const hn::ForwardGraph g = hn::build_forward(tape, params, {q.r, q.a, q.expert_id}, true);
    const ad::NodeId x = problem.decode(tape, g.x);
    const ad::NodeId f = problem.evaluate(tape, x);
    const ad::NodeId loss = scal::chebyshev(tape, f, q.r, q.a);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError(loss.index, fmt::format("loss is {}", value));
    const ad::Gradients grads = tape.backward(loss);
    const std::vector<double> flat = hn::gather_gradients(params, g, grads);
    adam_step(params.values(), flat, adam);
    return value;
}

Checkpoint train_connected(const TrainConfig& config, const LogFn& log) {
    config.validate();
    if (config.mode != Mode::connected) throw ValidationError("train_connected needs mode = connected");
    const auto t0 = std::chrono::steady_clock::now();
    const mop::Problem problem = config.make_problem();
    const std::size_t k = config.anchors.size();

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.bundles.resize(k);
    ckpt.loss_traces.resize(k);

    auto run_anchor = [&](std::size_t idx) {
        Rng rng(derive_seed(config.seed, idx));
        hn::ParameterBundle params = hn::init_params(config.arch, rng);
        AdamState adam(params.size(), config.lr);
        TraceRecorder trace(config.log_every);
        const scal::Bounds& box = config.anchors[idx];
        const std::string where = fmt::format("anchor {}", idx);
        for (long it = 0; it < config.iterations; ++it) {
            const scal::PreferenceQuery q = scal::make_query(rng, config.alpha, std::span(&box, 1));
            trace.add(run_step(problem, params, adam, q, it, trace, where));
        }
        ckpt.bundles[idx] = std::move(params);
        ckpt.loss_traces[idx] = trace.finish();
    };

    const auto threads = static_cast<std::size_t>(std::max(1, config.threads));
    if (threads == 1 || k == 1) {
        for (std::size_t i = 0; i < k; ++i) {
            run_anchor(i);
            if (log) log(fmt::format("anchor {} done, final window loss {:.6g}", i, ckpt.loss_traces[i].back()));
        }
    } else {
        std::mutex mu;
        std::exception_ptr first_error;
        std::size_t next = 0;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(threads, k); ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t idx;
                    {
                        std::lock_guard lock(mu);
                        if (next >= k || first_error) return;
                        idx = next++;
                    }
                    try {
                        run_anchor(idx);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    ckpt.wall_clock_s = seconds_since(t0);
    return ckpt;
}

Checkpoint train_disconnected(const TrainConfig& config, const LogFn& log) {
    config.validate();
    if (config.mode == Mode::connected) throw ValidationError("train_disconnected needs mode = joint or moe");
    const auto t0 = std::chrono::steady_clock::now();
    const mop::Problem problem = config.make_problem();
    const std::size_t k = config.anchors.size();

    Rng rng(config.seed);
    hn::ParameterBundle params = hn::init_params(config.arch, rng);
    AdamState adam(params.size(), config.lr);
    TraceRecorder trace(config.log_every);

    auto step = [&](std::size_t id, long it) {
        scal::PreferenceQuery q = scal::make_query(rng, config.alpha, config.anchors, id);
        if (config.mode == Mode::joint) {
            q.expert_id.reset();
            if (config.anchor_jitter > 0.0) {
                for (double& v : q.a) v = std::max(0.0, v + rng.uniform(-config.anchor_jitter, config.anchor_jitter));
            }
        }
        trace.add(run_step(problem, params, adam, q, it, trace, fmt::format("component {}", id)));
    };

    const long total = config.iterations * static_cast<long>(k);
    if (config.schedule == Schedule::sequential) {
        long it = 0;
        for (std::size_t id = 0; id < k; ++id) {
            for (long i = 0; i < config.iterations; ++i) step(id, it++);
            if (log) log(fmt::format("component {} done", id));
        }
    } else {
        for (long it = 0; it < total; ++it) step(static_cast<std::size_t>(it) % k, it);
    }

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.bundles.push_back(std::move(params));
    ckpt.loss_traces.push_back(trace.finish());
    ckpt.wall_clock_s = seconds_since(t0);
    return ckpt;
}

Checkpoint train(const TrainConfig& config, const LogFn& log) {
    return config.mode == Mode::connected ? train_connected(config, log) : train_disconnected(config, log);
}

std::size_t moving_average_increases(std::span<const double> trace, std::size_t window) {
    if (window == 0 || trace.size() <= window) return 0;
    std::size_t ups = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < window; ++i) sum += trace[i];
    double prev = sum;
    for (std::size_t i = window; i < trace.size(); ++i) {
        sum += trace[i] - trace[i - window];
        if (sum > prev + 1e-12) ++ups;
        prev = sum;
    }
    return ups;
}

} // namespace cpfl::train
