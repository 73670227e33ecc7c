// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/mop/front.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::mop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> lex_order(std::span<const Point> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    return order;
}

// Fenwick tree over prefix minima.
class MinFenwick {
public:
    explicit MinFenwick(std::size_t n) : tree_(n + 1, kInf) {}
    void update(std::size_t i, double v) {
        for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] = std::min(tree_[i], v);
    }
    [[nodiscard]] double prefix_min(std::size_t i) const {
        double out = kInf;
        for (++i; i > 0; i -= i & (~i + 1)) out = std::min(out, tree_[i]);
        return out;
    }

private:
    std::vector<double> tree_;
};

std::vector<std::size_t> nondominated_brute(std::span<const Point> points) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) dominated = j != i && dominates(points[j], points[i]);
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

std::vector<std::size_t> nondominated_2d(std::span<const Point> points) {
    const auto order = lex_order(points);
    std::vector<std::size_t> keep;
    double best = kInf;  // min f2 over lexicographically smaller distinct points
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        while (end < order.size() && points[order[end]] == points[order[g]]) ++end;
        const double f2 = points[order[g]][1];
        if (f2 < best) {
            for (std::size_t k = g; k < end; ++k) keep.push_back(order[k]);
        }
        best = std::min(best, f2);
        g = end;
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

std::vector<std::size_t> nondominated_3d(std::span<const Point> points) {
    const auto order = lex_order(points);
    std::vector<double> f2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) f2[i] = points[i][1];
    std::sort(f2.begin(), f2.end());
    f2.erase(std::unique(f2.begin(), f2.end()), f2.end());
    MinFenwick tree(f2.size());
    auto rank = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(f2.begin(), f2.end(), v) - f2.begin());
    };

    std::vector<std::size_t> keep;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        while (end < order.size() && points[order[end]] == points[order[g]]) ++end;
        const Point& p = points[order[g]];
        // Every dominator precedes p lexicographically; it dominates iff its
        // f2 and f3 are both <= those of p.
        const std::size_t rk = rank(p[1]);
        if (!(tree.prefix_min(rk) <= p[2])) {
            for (std::size_t k = g; k < end; ++k) keep.push_back(order[k]);
        }
        tree.update(rk, p[2]);
        g = end;
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

std::vector<double> unit_grid(std::size_t count) {
    std::vector<double> u(count);
    for (std::size_t i = 0; i < count; ++i) u[i] = static_cast<double>(i) / static_cast<double>(count - 1);
    return u;
}

// Evaluates the front parameterization on a 1-D or tensor 2-D grid of
// `per_axis` points per axis.
void sample_grid(const Problem& problem, std::size_t per_axis, bool raw, std::vector<Point>& f,
                 std::vector<Point>& x) {
    const auto u = unit_grid(per_axis);
    f.clear();
    x.clear();
    auto push = [&](std::span<const double> param) {
        auto dec = problem.front_decision(param);
        f.push_back(raw ? problem.evaluate_raw(dec) : problem.evaluate(dec));
        x.push_back(std::move(dec));
    };
    if (problem.front_dim() == 1) {
        for (double ui : u) push(std::array<double, 1>{ui});
    } else {
        for (double ui : u)
            for (double vi : u) push(std::array<double, 2>{ui, vi});
    }
}

} // namespace

bool dominates(std::span<const double> p, std::span<const double> q) {
    bool strict = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > q[i]) return false;
        if (p[i] < q[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> nondominated_indices(std::span<const Point> points) {
    if (points.empty()) return {};
    const std::size_t m = points[0].size();
    for (const Point& p : points) {
        if (p.size() != m) throw InvalidArgument(fmt::format("nondominated filter: mixed dimensions {} and {}", m, p.size()));
    }
    if (m == 2) return nondominated_2d(points);
    if (m == 3) return nondominated_3d(points);
    return nondominated_brute(points);
}

std::vector<Point> nondominated_filter(std::span<const Point> points) {
    std::vector<Point> out;
    for (std::size_t i : nondominated_indices(points)) out.push_back(points[i]);
    return out;
}

FrontSample sample_true_front(const Problem& problem, std::size_t density) {
    if (density < 2) throw InvalidArgument(fmt::format("front density must be at least 2, got {}", density));
    FrontSample out;
    out.density = density;
    std::vector<Point> f;
    std::vector<Point> x;
    std::size_t per_axis = density;
    if (problem.front_dim() == 1) {
        if (problem.disconnected()) per_axis = std::max<std::size_t>(density, 20000);
    } else {
        per_axis = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(density))));
        if (problem.disconnected()) per_axis = std::max<std::size_t>(per_axis, 200);
        per_axis = std::max<std::size_t>(per_axis, 2);
    }
    for (;;) {
        sample_grid(problem, per_axis, false, f, x);
        const auto keep = nondominated_indices(f);
        if (problem.disconnected() || keep.size() >= density) {
            for (std::size_t i : keep) {
                out.points.push_back(std::move(f[i]));
                out.decision_points.push_back(std::move(x[i]));
            }
            return out;
        }
        per_axis = std::max(per_axis + 1, per_axis * 5 / 4);
    }
}

std::vector<Affine> raw_front_extents(const Problem& problem, std::size_t density) {
    std::vector<Point> f;
    std::vector<Point> x;
    sample_grid(problem, density, true, f, x);
    std::vector<Affine> ext(static_cast<std::size_t>(problem.m()), Affine{kInf, -kInf});
    for (std::size_t i : nondominated_indices(f)) {
        for (std::size_t j = 0; j < ext.size(); ++j) {
            ext[j].lo = std::min(ext[j].lo, f[i][j]);
            ext[j].hi = std::max(ext[j].hi, f[i][j]);
        }
    }
    return ext;
}

ParetoOracle::ParetoOracle(Problem problem) : problem_(std::move(problem)) {
    grid_ = problem_.front_dim() == 1 ? 4001 : 201;
    std::vector<Point> x;
    sample_grid(problem_, grid_, false, grid_f_, x);
}

double ParetoOracle::objective(std::span<const double> u, std::span<const double> r, std::span<const double> a,
                               Point* f) const {
    Point val = problem_.evaluate(problem_.front_decision(u));
    double worst = -kInf;
    for (std::size_t i = 0; i < val.size(); ++i) worst = std::max(worst, r[i] * (val[i] - a[i]));
    if (f != nullptr) *f = std::move(val);
    return worst;
}

OptimumPoint ParetoOracle::true_optimum(std::span<const double> r, std::span<const double> a) const {
    const auto m = static_cast<std::size_t>(problem_.m());
    if (r.size() != m || a.size() != m) {
        throw InvalidArgument(fmt::format("true_optimum: {} needs r and a of length {} (got {} and {})",
                                          problem_.name(), m, r.size(), a.size()));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(r[i] > 0.0) || !std::isfinite(r[i]) || !std::isfinite(a[i])) {
            throw InvalidArgument(fmt::format("true_optimum: r must be positive and a finite (r[{}]={}, a[{}]={})", i,
                                              r[i], i, a[i]));
        }
    }

    bool reachable = false;
    std::size_t best = 0;
    double best_val = kInf;
    for (std::size_t k = 0; k < grid_f_.size(); ++k) {
        const Point& f = grid_f_[k];
        bool inside = true;
        double worst = -kInf;
        for (std::size_t i = 0; i < m; ++i) {
            inside = inside && f[i] >= a[i];
            worst = std::max(worst, r[i] * (f[i] - a[i]));
        }
        reachable = reachable || inside;
        if (worst < best_val) {
            best_val = worst;
            best = k;
        }
    }
    if (!reachable) {
        throw UnreachableAnchor(fmt::format("{}: no front point lies above anchor ({})", problem_.name(),
                                            fmt::join(a, ", ")));
    }

    const double cell = 1.0 / static_cast<double>(grid_ - 1);
    std::vector<double> u_best;
    if (problem_.front_dim() == 1) {
        double lo = std::max(0.0, (static_cast<double>(best) - 1.0) * cell);
        double hi = std::min(1.0, (static_cast<double>(best) + 1.0) * cell);
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - phi * (hi - lo);
        double d = lo + phi * (hi - lo);
        double fc = objective(std::array<double, 1>{c}, r, a);
        double fd = objective(std::array<double, 1>{d}, r, a);
        while (hi - lo > 1e-13) {
            if (fc <= fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = objective(std::array<double, 1>{c}, r, a);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = objective(std::array<double, 1>{d}, r, a);
            }
        }
        const double mid = 0.5 * (lo + hi);
        u_best = {best * cell};
        if (objective(std::array<double, 1>{mid}, r, a) <= best_val) u_best = {mid};
    } else {
        double cu = static_cast<double>(best / grid_) * cell;
        double cv = static_cast<double>(best % grid_) * cell;
        double cur = best_val;
        double half = 2.0 * cell;
        constexpr int kZoom = 21;
        for (int level = 0; level < 24; ++level) {
            const double u0 = std::max(0.0, cu - half), u1 = std::min(1.0, cu + half);
            const double v0 = std::max(0.0, cv - half), v1 = std::min(1.0, cv + half);
            double nu = cu, nv = cv;
            for (int i = 0; i < kZoom; ++i) {
                for (int j = 0; j < kZoom; ++j) {
                    const double uu = u0 + (u1 - u0) * i / (kZoom - 1);
                    const double vv = v0 + (v1 - v0) * j / (kZoom - 1);
                    const double val = objective(std::array<double, 2>{uu, vv}, r, a);
                    if (val < cur) {
                        cur = val;
                        nu = uu;
                        nv = vv;
                    }
                }
            }
            cu = nu;
            cv = nv;
            half *= 0.25;
        }
        u_best = {cu, cv};
    }

    OptimumPoint out;
    out.x = problem_.front_decision(u_best);
    out.f = problem_.evaluate(out.x);
    return out;
}

void write_front_csv(std::ostream& out, std::span<const Point> points, std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) out << (i ? ",f" : "f") << (i + 1);
    out << '\n';
    for (const Point& p : points) {
        for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << fmt::format("{:.9g}", p[i]);
        out << '\n';
    }
}

} // namespace cpfl::mop
