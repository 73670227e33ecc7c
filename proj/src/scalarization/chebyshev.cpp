// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/scalarization/chebyshev.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::scal {

ChebyshevValue chebyshev(std::span<const double> f, std::span<const double> r, std::span<const double> a) {
    if (f.size() != r.size() || f.size() != a.size() || f.empty()) {
        throw InvalidArgument(fmt::format("chebyshev: length mismatch (F {}, r {}, a {})", f.size(), r.size(), a.size()));
    }
    ChebyshevValue out{r[0] * (f[0] - a[0]), 0};
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double v = r[i] * (f[i] - a[i]);
        if (v > out.value) out = {v, i};
    }
    return out;
}

ad::NodeId chebyshev(ad::Tape& tape, ad::NodeId f, std::span<const double> r, std::span<const double> a) {
    const std::size_t m = tape.node(f).value.size();
    if (r.size() != m || a.size() != m) {
        throw InvalidArgument(fmt::format("chebyshev: length mismatch (F {}, r {}, a {})", m, r.size(), a.size()));
    }
    const ad::NodeId rn = tape.constant({m}, {r.begin(), r.end()});
    const ad::NodeId an = tape.constant({m}, {a.begin(), a.end()});
    return tape.hard_max(tape.mul(tape.sub(f, an), rn), 0);
}

std::vector<double> floor_preference(std::span<const double> r, double floor) {
    std::vector<double> out(r.begin(), r.end());
    double total = 0.0;
    for (double& v : out) {
        v = std::max(v, floor);
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

PreferenceQuery make_query(Rng& rng, double alpha, std::span<const Bounds> boxes,
                           std::optional<std::size_t> component_index) {
    if (boxes.empty()) throw InvalidArgument("make_query: no feasibility boxes");
    if (!component_index && boxes.size() > 1) {
        throw InvalidArgument(fmt::format("make_query: {} boxes given but no component index", boxes.size()));
    }
    const std::size_t idx = component_index.value_or(0);
    if (idx >= boxes.size()) {
        throw InvalidArgument(fmt::format("make_query: component index {} out of range [0, {})", idx, boxes.size()));
    }
    PreferenceQuery q;
    q.r = floor_preference(rng.dirichlet(alpha, static_cast<int>(boxes[idx].a.size())));
    q.a = boxes[idx].a;
    q.b = boxes[idx].b;
    q.expert_id = component_index;
    return q;
}

FeasibilityReport split_feasibility_check(std::span<const double> f, std::span<const double> a,
                                          std::span<const double> b) {
    FeasibilityReport rep;
    rep.lower_ok.resize(f.size());
    rep.upper_ok.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        rep.lower_ok[i] = i < a.size() && f[i] >= a[i];
        rep.upper_ok[i] = i < b.size() && f[i] <= b[i];
        rep.feasible = rep.feasible && rep.upper_ok[i];
    }
    return rep;
}

std::vector<double> default_upper_bound(std::span<const std::vector<double>> anchors, std::size_t index,
                                        bool disconnected) {
    const std::vector<double>& a = anchors[index];
    std::vector<double> b(a.size(), 1.0);
    if (!disconnected) return b;
    for (std::size_t j = 0; j < a.size(); ++j) {
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            if (k != index && anchors[k][j] > a[j]) b[j] = std::min(b[j], anchors[k][j]);
        }
    }
    return b;
}

std::vector<std::vector<double>> preference_sweep(std::size_t m, std::size_t samples, double eps) {
    if (samples < 1) throw InvalidArgument("preference sweep needs at least one sample");
    std::vector<std::vector<double>> out;
    if (m == 2) {
        if (samples == 1) return {{0.5, 0.5}};
        for (std::size_t i = 0; i < samples; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(samples - 1);
            const double r0 = eps + (1.0 - 2.0 * eps) * t;
            out.push_back({r0, 1.0 - r0});
        }
        return out;
    }
    if (m == 3) {
        std::size_t h = 0;
        while ((h + 1) * (h + 2) / 2 < samples) ++h;
        if (h == 0) return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        for (std::size_t i = 0; i <= h; ++i) {
            for (std::size_t j = 0; i + j <= h; ++j) {
                const double hd = static_cast<double>(h);
                const std::vector<double> raw = {static_cast<double>(i) / hd, static_cast<double>(j) / hd,
                                                 static_cast<double>(h - i - j) / hd};
                out.push_back(floor_preference(raw, eps));
            }
        }
        return out;
    }
    throw InvalidArgument(fmt::format("preference sweep supports m = 2 or 3, got {}", m));
}

} // namespace cpfl::scal
