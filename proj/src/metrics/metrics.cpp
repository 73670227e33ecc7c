// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::metrics {
namespace {

// Area dominated by 2-D points (already inside the box) up to (r0, r1).
double hv2(std::vector<std::array<double, 2>> pts, double r0, double r1) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double ceiling = r1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i][1] >= ceiling) continue;
        // Strip from this point's f1 to the next improving point's f1.
        std::size_t j = i + 1;
        while (j < pts.size() && pts[j][1] >= pts[i][1]) ++j;
        const double right = j < pts.size() ? pts[j][0] : r0;
        area += (right - pts[i][0]) * (r1 - pts[i][1]);
        ceiling = pts[i][1];
        i = j - 1;
    }
    return area;
}

} // namespace

double med(std::span<const Point> targets, std::span<const Point> preds) {
    if (targets.size() != preds.size()) {
        throw InvalidArgument(fmt::format("med: {} targets vs {} predictions", targets.size(), preds.size()));
    }
    if (targets.empty()) throw InvalidArgument("med: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].size() != preds[i].size()) throw InvalidArgument("med: point dimension mismatch");
        double s = 0.0;
        for (std::size_t j = 0; j < targets[i].size(); ++j) {
            const double dlt = targets[i][j] - preds[i][j];
            s += dlt * dlt;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(targets.size());
}

double hypervolume(std::span<const Point> points, std::span<const double> ref) {
    const std::size_t m = ref.size();
    if (m < 2 || m > 3) throw InvalidArgument(fmt::format("hypervolume: unsupported dimension {}", m));
    std::vector<Point> inside;
    for (const Point& p : points) {
        if (p.size() != m) throw InvalidArgument(fmt::format("hypervolume: point of dimension {} vs ref {}", p.size(), m));
        bool ok = true;
        for (std::size_t i = 0; i < m; ++i) ok = ok && p[i] < ref[i];
        if (ok) inside.push_back(p);
    }
    if (inside.empty()) return 0.0;

    if (m == 2) {
        std::vector<std::array<double, 2>> pts;
        pts.reserve(inside.size());
        for (const Point& p : inside) pts.push_back({p[0], p[1]});
        return hv2(std::move(pts), ref[0], ref[1]);
    }

    // Sweep f3 upward; each slab [z_k, z_{k+1}) is dominated by the 2-D
    // staircase of all points with f3 <= z_k.
    std::sort(inside.begin(), inside.end(), [](const Point& a, const Point& b) { return a[2] < b[2]; });
    std::map<double, double> front;  // f1 -> f2, mutually non-dominated, f2 decreasing in f1
    auto insert = [&](double x, double y) {
        auto it = front.upper_bound(x);
        if (it != front.begin()) {
            auto prev = std::prev(it);
            if (prev->second <= y) return;  // dominated (or equal)
        }
        // Remove points dominated by (x, y).
        auto lo = front.lower_bound(x);
        auto hi = lo;
        while (hi != front.end() && hi->second >= y) ++hi;
        front.erase(lo, hi);
        front[x] = y;
    };
    auto area = [&]() {
        double a = 0.0;
        for (auto it = front.begin(); it != front.end(); ++it) {
            const auto next = std::next(it);
            const double right = next == front.end() ? ref[0] : next->first;
            a += (right - it->first) * (ref[1] - it->second);
        }
        return a;
    };
    double volume = 0.0;
    for (std::size_t i = 0; i < inside.size();) {
        const double z = inside[i][2];
        while (i < inside.size() && inside[i][2] == z) {
            insert(inside[i][0], inside[i][1]);
            ++i;
        }
        const double next_z = i < inside.size() ? inside[i][2] : ref[2];
        volume += area() * (next_z - z);
    }
    return volume;
}

double hvd(std::span<const Point> true_front, std::span<const Point> learned, std::span<const double> ref) {
    return hypervolume(true_front, ref) - hypervolume(learned, ref);
}

} // namespace cpfl::metrics
