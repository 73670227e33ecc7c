// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/trainer/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/error.hpp"
#include "cpfl/hypernet/forward.hpp"
#include "cpfl/metrics/metrics.hpp"

namespace cpfl::train {

CheckpointPredictor::CheckpointPredictor(const Checkpoint& ckpt) : ckpt_(ckpt), problem_(ckpt.config.make_problem()) {
    const std::size_t want = ckpt.config.mode == Mode::connected ? ckpt.config.anchors.size() : 1;
    if (ckpt.bundles.size() != want) {
        throw LayoutError(fmt::format("checkpoint holds {} bundles, mode {} needs {}", ckpt.bundles.size(),
                                      mode_name(ckpt.config.mode), want));
    }
}

std::vector<double> CheckpointPredictor::decision(std::span<const double> r, std::span<const double> a,
                                                  std::size_t component) const {
    const TrainConfig& c = ckpt_.config;
    if (component >= c.anchors.size()) {
        throw InvalidArgument(fmt::format("component {} out of range [0, {})", component, c.anchors.size()));
    }
    hn::ForwardInput in{r, a, std::nullopt};
    const hn::ParameterBundle* bundle = &ckpt_.bundles[0];
    if (c.mode == Mode::connected) bundle = &ckpt_.bundles[component];
    if (c.mode == Mode::moe) in.expert = component;
    return problem_.decode(hn::predict(*bundle, in));
}

std::vector<std::uint64_t> default_eval_seeds(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(base, 0x5eed0000ULL + i);
    return seeds;
}

std::vector<mop::Point> predicted_front(const TrainConfig& config, const Predictor& predictor,
                                        std::size_t per_component, bool feasible_only) {
    const mop::Problem problem = config.make_problem();
    const auto rays = scal::preference_sweep(static_cast<std::size_t>(problem.m()), per_component);
    std::vector<mop::Point> out;
    for (std::size_t k = 0; k < config.anchors.size(); ++k) {
        const scal::Bounds& box = config.anchors[k];
        for (const auto& r : rays) {
            mop::Point f = problem.evaluate(predictor.decision(r, box.a, k));
            if (!feasible_only || scal::split_feasibility_check(f, box.a, box.b).feasible) out.push_back(std::move(f));
        }
    }
    return out;
}

MetricsReport evaluate_predictor(const TrainConfig& config, const Predictor& predictor, const EvalOptions& options) {
    if (options.rays_per_anchor < 1) throw InvalidArgument("rays_per_anchor must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    const mop::Problem problem = config.make_problem();
    const auto m = static_cast<std::size_t>(problem.m());
    const mop::ParetoOracle oracle(problem);
    const auto seeds = options.seeds.empty() ? default_eval_seeds(config.seed, 30) : options.seeds;
    const std::vector<double> ref = options.ref.empty() ? std::vector<double>(m, 1.0) : options.ref;
    if (ref.size() != m) throw InvalidArgument(fmt::format("reference point needs {} components", m));

    MetricsReport rep;
    rep.problem = std::string(problem.name());
    rep.mode = std::string(mode_name(config.mode));
    rep.seeds = seeds.size();
    rep.rays_per_anchor = options.rays_per_anchor;
    rep.per_anchor_med.assign(config.anchors.size(), 0.0);

    std::vector<double> seed_meds;
    std::size_t infeasible = 0;
    std::size_t total = 0;
    for (std::uint64_t seed : seeds) {
        Rng rng(seed);
        double seed_med = 0.0;
        for (std::size_t k = 0; k < config.anchors.size(); ++k) {
            const scal::Bounds& box = config.anchors[k];
            std::vector<mop::Point> targets;
            std::vector<mop::Point> preds;
            for (std::size_t j = 0; j < options.rays_per_anchor; ++j) {
                const scal::PreferenceQuery q = scal::make_query(rng, config.alpha, std::span(&box, 1));
                targets.push_back(oracle.true_optimum(q.r, q.a).f);
                preds.push_back(problem.evaluate(predictor.decision(q.r, q.a, k)));
                if (!scal::split_feasibility_check(preds.back(), q).feasible) ++infeasible;
                ++total;
            }
            const double anchor_med = metrics::med(targets, preds);
            rep.per_anchor_med[k] += anchor_med / static_cast<double>(seeds.size());
            seed_med += anchor_med / static_cast<double>(config.anchors.size());
        }
        seed_meds.push_back(seed_med);
    }
    double mean = 0.0;
    for (double v : seed_meds) mean += v;
    mean /= static_cast<double>(seed_meds.size());
    double var = 0.0;
    for (double v : seed_meds) var += (v - mean) * (v - mean);
    rep.med_mean = mean;
    rep.med_std = std::sqrt(var / static_cast<double>(seed_meds.size()));
    rep.infeasible_fraction = total == 0 ? 0.0 : static_cast<double>(infeasible) / static_cast<double>(total);

    const std::size_t density = options.true_front_density != 0 ? options.true_front_density : (m == 2 ? 2000 : 10000);
    const mop::FrontSample truth = mop::sample_true_front(problem, density);
    const auto learned = predicted_front(config, predictor, options.front_samples, true);
    rep.all_infeasible = learned.empty();
    rep.hv_true = metrics::hypervolume(truth.points, ref);
    rep.hv = metrics::hypervolume(learned, ref);
    rep.hvd = rep.hv_true - rep.hv;
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

MetricsReport evaluate_run(const Checkpoint& ckpt, const EvalOptions& options) {
    const CheckpointPredictor predictor(ckpt);
    return evaluate_predictor(ckpt.config, predictor, options);
}

void write_report(std::ostream& out, const MetricsReport& r) {
    out << "[report]\n";
    out << "version = " << kCheckpointVersion << '\n';
    out << "problem = " << r.problem << '\n';
    out << "mode = " << r.mode << '\n';
    out << "seeds = " << r.seeds << '\n';
    out << "rays_per_anchor = " << r.rays_per_anchor << '\n';
    out << fmt::format("med_mean = {:.9g}\nmed_std = {:.9g}\n", r.med_mean, r.med_std);
    out << fmt::format("per_anchor_med = {:.9g}\n", fmt::join(r.per_anchor_med, ", "));
    out << fmt::format("hv = {:.9g}\nhv_true = {:.9g}\nhvd = {:.9g}\n", r.hv, r.hv_true, r.hvd);
    out << fmt::format("infeasible_fraction = {:.9g}\n", r.infeasible_fraction);
    out << "all_infeasible = " << (r.all_infeasible ? "true" : "false") << '\n';
    out << fmt::format("runtime_s = {:.3f}\n", r.runtime_s);
}

} // namespace cpfl::train
