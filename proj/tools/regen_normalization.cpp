// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Prints the raw front extents of the problems whose normalization is frozen
// in include/cpfl/mop/problem.hpp.
//
//   regen_normalization [points]

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <vector>

#include <fmt/format.h>

#include "cpfl/mop/front.hpp"

namespace {

using cpfl::mop::Problem;
using cpfl::mop::ProblemId;

void print(const Problem& p, const std::vector<cpfl::mop::Affine>& ext) {
    std::cout << p.name() << ":";
    for (const auto& e : ext) std::cout << fmt::format(" {{{:.17g}, {:.17g}}}", e.lo, e.hi);
    std::cout << '\n';
}

// Golden-section maximum of f on [lo, hi].
template <typename F>
double argmax(F f, double lo, double hi) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-15) {
        if (fc >= fd) {
            hi = d; d = c; fd = fc; c = hi - phi * (hi - lo); fc = f(c);
        } else {
            lo = c; c = d; fc = fd; d = lo + phi * (hi - lo); fd = f(d);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 1'000'000;

    for (ProblemId id : {ProblemId::zdt3, ProblemId::zdt3star}) {
        const Problem p(id);
        auto ext = cpfl::mop::raw_front_extents(p, n);
        // The f2 minimum sits at an interior critical point; polish it.
        const double step = 1.0 / static_cast<double>(n - 1);
        double best_u = 0.0, best_f2 = 1e300;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) * step;
            const double f2 = p.evaluate_raw(p.front_decision(std::vector<double>{u}))[1];
            if (f2 < best_f2) { best_f2 = f2; best_u = u; }
        }
        auto neg_f2 = [&](double u) { return -p.evaluate_raw(p.front_decision(std::vector<double>{u}))[1]; };
        const double u = argmax(neg_f2, std::max(0.0, best_u - step), std::min(1.0, best_u + step));
        const auto f = p.evaluate_raw(p.front_decision(std::vector<double>{u}));
        if (f[1] < ext[1].lo) {
            ext[1].lo = f[1];
            ext[0].hi = std::max(ext[0].hi, f[0]);
        }
        print(p, ext);
    }

    // DTLZ7 separates: with t(u) = u / 2 (1 + sin 3 pi u), a point is on the
    // front iff each of f1, f2 is a running maximum of t, so the extents follow
    // from the 1-D curve t.
    const Problem p(ProblemId::dtlz7);
    auto f3 = [&](double u, double v) {
        std::vector<double> x(static_cast<std::size_t>(p.n()), 0.0);
        x[0] = u;
        x[1] = v;
        return p.evaluate_raw(x)[2];
    };
    auto t = [&](double u) { return 3.0 - 3.0 * f3(u, 0.0); };
    double best_u = 0.0, best_t = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        if (t(u) > best_t) { best_t = t(u); best_u = u; }
    }
    const double h = 1.0 / static_cast<double>(n - 1);
    const double us = argmax(t, std::max(0.0, best_u - h), std::min(1.0, best_u + h));
    print(p, {{0.0, us}, {0.0, us}, {f3(us, us), f3(0.0, 0.0)}});
    return 0;
}
