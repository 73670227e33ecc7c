// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/mop/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "cpfl/error.hpp"

namespace cpfl::mop {
namespace {

constexpr double kPi = std::numbers::pi;

double zdt_g(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += x[i];
    return 1.0 + 9.0 / static_cast<double>(x.size() - 1) * s;
}

// ZDT3 variant second objective at g and f1 (raw).
double star_f2(const StarShape& s, double f1, double g) {
    const double t = f1 / g;
    return g * (1.0 - std::pow(t, s.gamma) - t * std::sin(s.A * kPi * std::pow(f1, s.beta)));
}

// Extents of the non-dominated part of a 1-D curve (f1(u), f2(u)).
template <typename F>
std::vector<Affine> curve_extents(F curve, std::size_t samples) {
    std::vector<std::array<double, 2>> pts(samples);
    for (std::size_t i = 0; i < samples; ++i) pts[i] = curve(static_cast<double>(i) / static_cast<double>(samples - 1));
    // f1 is increasing in u for every curve used here, so a point is
    // non-dominated exactly when it improves the running minimum of f2.
    std::vector<Affine> ext = {{1e300, -1e300}, {1e300, -1e300}};
    double best = 1e300;
    for (std::size_t i = 0; i < samples; ++i) {
        if (pts[i][1] < best) {
            best = pts[i][1];
            for (int j = 0; j < 2; ++j) {
                ext[j].lo = std::min(ext[j].lo, pts[i][j]);
                ext[j].hi = std::max(ext[j].hi, pts[i][j]);
            }
        }
    }
    return ext;
}

} // namespace

std::string_view problem_name(ProblemId id) {
    switch (id) {
    case ProblemId::cvx1: return "CVX1";
    case ProblemId::cvx2: return "CVX2";
    case ProblemId::cvx3: return "CVX3";
    case ProblemId::zdt1: return "ZDT1";
    case ProblemId::zdt2: return "ZDT2";
    case ProblemId::zdt3: return "ZDT3";
    case ProblemId::zdt3star: return "ZDT3STAR";
    case ProblemId::dtlz2: return "DTLZ2";
    case ProblemId::dtlz7: return "DTLZ7";
    }
    return "unknown";
}

ProblemId parse_problem_id(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "ZDT3*") return ProblemId::zdt3star;
    for (ProblemId id : {ProblemId::cvx1, ProblemId::cvx2, ProblemId::cvx3, ProblemId::zdt1, ProblemId::zdt2,
                         ProblemId::zdt3, ProblemId::zdt3star, ProblemId::dtlz2, ProblemId::dtlz7}) {
        if (upper == problem_name(id)) return id;
    }
    throw ValidationError(fmt::format("unknown problem '{}'", name));
}

std::string_view constraint_name(DecisionConstraint c) {
    return c == DecisionConstraint::box01 ? "box01" : "simplex-sphere";
}

Problem::Problem(ProblemId id, StarShape shape) : id_(id), shape_(shape) {
    switch (id) {
    case ProblemId::cvx1: n_ = 1; m_ = 2; break;
    case ProblemId::cvx2: n_ = 2; m_ = 2; x_upper_ = 5.0; break;
    case ProblemId::cvx3: n_ = 3; m_ = 3; constraint_ = DecisionConstraint::simplex_sphere; break;
    case ProblemId::zdt1:
    case ProblemId::zdt2:
    case ProblemId::zdt3:
    case ProblemId::zdt3star: n_ = 30; m_ = 2; break;
    case ProblemId::dtlz2:
    case ProblemId::dtlz7: n_ = 10; m_ = 3; break;
    }
    norm_.assign(static_cast<std::size_t>(m_), Affine{});
    if (id == ProblemId::zdt3) {
        norm_.assign(frozen::zdt3.begin(), frozen::zdt3.end());
    } else if (id == ProblemId::dtlz7) {
        norm_.assign(frozen::dtlz7.begin(), frozen::dtlz7.end());
    } else if (id == ProblemId::zdt3star) {
        if (!(shape.A > 0.0) || !(shape.gamma > 0.0) || !(shape.beta > 0.0)) {
            throw ValidationError(fmt::format("ZDT3STAR shape needs positive A, gamma, beta (got {}, {}, {})",
                                              shape.A, shape.gamma, shape.beta));
        }
        if (shape == StarShape{}) {
            norm_.assign(frozen::zdt3star_default.begin(), frozen::zdt3star_default.end());
        } else {
            norm_ = curve_extents([&](double u) { return std::array<double, 2>{u, star_f2(shape_, u, 1.0)}; },
                                  1'000'001);
        }
    }
}

bool Problem::disconnected() const noexcept {
    return id_ == ProblemId::zdt3 || id_ == ProblemId::zdt3star || id_ == ProblemId::dtlz7;
}

void Problem::check_domain(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(n_)) {
        throw InvalidArgument(fmt::format("{} expects {} decision variables, got {}", name(), n_, x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= x_upper_)) {
            throw InvalidArgument(fmt::format("{}: x[{}] = {} outside [0, {}]", name(), i, x[i], x_upper_));
        }
    }
    if (constraint_ == DecisionConstraint::simplex_sphere) {
        double norm2 = 0.0;
        for (double v : x) norm2 += v * v;
        if (std::abs(norm2 - 1.0) > 1e-9) {
            throw InvalidArgument(fmt::format("{}: |x|^2 = {} is not on the unit sphere", name(), norm2));
        }
    }
}

void Problem::normalize(std::vector<double>& f) const {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (f[i] - norm_[i].lo) / (norm_[i].hi - norm_[i].lo);
}

std::vector<double> Problem::evaluate(std::span<const double> x) const {
    check_domain(x);
    std::vector<double> f = evaluate_raw(x);
    normalize(f);
    return f;
}

std::vector<double> Problem::evaluate_raw(std::span<const double> x) const {
    switch (id_) {
    case ProblemId::cvx1:
        return {x[0], (x[0] - 1.0) * (x[0] - 1.0)};
    case ProblemId::cvx2: {
        const double a = x[0] - 5.0, b = x[1] - 5.0;
        return {(x[0] * x[0] + x[1] * x[1]) / 50.0, (a * a + b * b) / 50.0};
    }
    case ProblemId::cvx3: {
        const double s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return {(s + x[1] - 12.0 * x[2] + 12.0) / 14.0, (s + 8.0 * x[0] - 44.8 * x[1] + 8.0 * x[2] + 44.0) / 57.0,
                (s - 44.8 * x[0] + 8.0 * x[1] + 8.0 * x[2] + 43.7) / 56.0};
    }
    case ProblemId::zdt1: {
        const double g = zdt_g(x);
        return {x[0], g - std::sqrt(x[0] * g)};
    }
    case ProblemId::zdt2: {
        const double g = zdt_g(x);
        return {x[0], g - x[0] * x[0] / g};
    }
    case ProblemId::zdt3: {
        const double g = zdt_g(x);
        return {x[0], g - std::sqrt(x[0] * g) - x[0] * std::sin(10.0 * kPi * x[0])};
    }
    case ProblemId::zdt3star:
        return {x[0], star_f2(shape_, x[0], zdt_g(x))};
    case ProblemId::dtlz2: {
        double g = 0.0;
        for (std::size_t i = 2; i < x.size(); ++i) g += x[i] * x[i];
        const double a = 0.5 * kPi * x[0], b = 0.5 * kPi * x[1];
        return {(1.0 + g) * std::cos(a) * std::cos(b), (1.0 + g) * std::cos(a) * std::sin(b), (1.0 + g) * std::sin(a)};
    }
    case ProblemId::dtlz7: {
        double s = 0.0;
        for (std::size_t i = 2; i < x.size(); ++i) s += x[i];
        const double g = 1.0 + 9.0 / static_cast<double>(x.size() - 2) * s;
        double h = 3.0;
        for (int i = 0; i < 2; ++i) h -= x[i] / (1.0 + g) * (1.0 + std::sin(3.0 * kPi * x[i]));
        return {x[0], x[1], (1.0 + g) * h / 6.0};
    }
    }
    return {};
}

ad::NodeId Problem::evaluate(ad::Tape& t, ad::NodeId x) const {
    if (t.shape(x) != ad::Shape{static_cast<std::size_t>(n_)}) {
        throw ShapeError(x.index, fmt::format("{} expects decision node of shape [{}], got {}", name(), n_,
                                              ad::to_string(t.shape(x))));
    }
    const auto n = static_cast<std::size_t>(n_);
    auto at = [&](std::size_t i) { return t.slice(x, 0, i, 1); };
    auto tail_sum = [&](std::size_t from) { return t.sum(t.slice(x, 0, from, n - from), 0); };
    std::vector<ad::NodeId> f;

    switch (id_) {
    case ProblemId::cvx1: {
        const ad::NodeId x0 = at(0);
        f = {x0, t.square(t.shift(x0, -1.0))};
        break;
    }
    case ProblemId::cvx2: {
        f = {t.scale(t.sum(t.square(x), 0), 1.0 / 50.0), t.scale(t.sum(t.square(t.shift(x, -5.0)), 0), 1.0 / 50.0)};
        break;
    }
    case ProblemId::cvx3: {
        const ad::NodeId s = t.sum(t.square(x), 0);
        auto lin = [&](std::array<double, 3> w, double c, double den) {
            ad::NodeId acc = s;
            for (std::size_t i = 0; i < 3; ++i) {
                if (w[i] != 0.0) acc = t.add(acc, t.scale(at(i), w[i]));
            }
            return t.scale(t.shift(acc, c), 1.0 / den);
        };
        f = {lin({0.0, 1.0, -12.0}, 12.0, 14.0), lin({8.0, -44.8, 8.0}, 44.0, 57.0),
             lin({-44.8, 8.0, 8.0}, 43.7, 56.0)};
        break;
    }
    case ProblemId::zdt1:
    case ProblemId::zdt2:
    case ProblemId::zdt3:
    case ProblemId::zdt3star: {
        const ad::NodeId x0 = at(0);
        const ad::NodeId g = t.shift(t.scale(tail_sum(1), 9.0 / static_cast<double>(n - 1)), 1.0);
        ad::NodeId f2;
        if (id_ == ProblemId::zdt1) {
            f2 = t.sub(g, t.sqrt(t.mul(x0, g)));
        } else if (id_ == ProblemId::zdt2) {
            f2 = t.sub(g, t.div(t.square(x0), g));
        } else if (id_ == ProblemId::zdt3) {
            f2 = t.sub(t.sub(g, t.sqrt(t.mul(x0, g))), t.mul(x0, t.sin(t.scale(x0, 10.0 * kPi))));
        } else {
            const ad::NodeId ratio = t.div(x0, g);
            const ad::NodeId wave = t.sin(t.scale(t.pow(x0, shape_.beta), shape_.A * kPi));
            const ad::NodeId inner = t.shift(t.scale(t.add(t.pow(ratio, shape_.gamma), t.mul(ratio, wave)), -1.0), 1.0);
            f2 = t.mul(g, inner);
        }
        f = {x0, f2};
        break;
    }
    case ProblemId::dtlz2: {
        const ad::NodeId one_g = t.shift(t.sum(t.square(t.slice(x, 0, 2, n - 2)), 0), 1.0);
        const ad::NodeId a = t.scale(at(0), 0.5 * kPi);
        const ad::NodeId b = t.scale(at(1), 0.5 * kPi);
        const ad::NodeId ca = t.mul(one_g, t.cos(a));
        f = {t.mul(ca, t.cos(b)), t.mul(ca, t.sin(b)), t.mul(one_g, t.sin(a))};
        break;
    }
    case ProblemId::dtlz7: {
        const ad::NodeId g = t.shift(t.scale(tail_sum(2), 9.0 / static_cast<double>(n - 2)), 1.0);
        const ad::NodeId one_g = t.shift(g, 1.0);
        const ad::NodeId x0 = at(0);
        const ad::NodeId x1 = at(1);
        auto term = [&](ad::NodeId xi) {
            return t.div(t.mul(xi, t.shift(t.sin(t.scale(xi, 3.0 * kPi)), 1.0)), one_g);
        };
        const ad::NodeId h = t.shift(t.scale(t.add(term(x0), term(x1)), -1.0), 3.0);
        f = {x0, x1, t.scale(t.mul(one_g, h), 1.0 / 6.0)};
        break;
    }
    }

    for (std::size_t i = 0; i < f.size(); ++i) {
        const Affine& nm = norm_[i];
        if (nm.lo != 0.0 || nm.hi != 1.0) f[i] = t.scale(t.shift(f[i], -nm.lo), 1.0 / (nm.hi - nm.lo));
    }
    return t.concat(f, 0);
}

std::vector<double> Problem::decode(std::span<const double> unit) const {
    std::vector<double> x(unit.begin(), unit.end());
    if (x_upper_ != 1.0) {
        for (double& v : x) v *= x_upper_;
    }
    return x;
}

ad::NodeId Problem::decode(ad::Tape& tape, ad::NodeId unit) const {
    return x_upper_ != 1.0 ? tape.scale(unit, x_upper_) : unit;
}

std::vector<double> Problem::front_decision(std::span<const double> u) const {
    if (u.size() != static_cast<std::size_t>(front_dim())) {
        throw InvalidArgument(fmt::format("{}: front parameter needs {} entries, got {}", name(), front_dim(), u.size()));
    }
    std::vector<double> x(static_cast<std::size_t>(n_), 0.0);
    switch (id_) {
    case ProblemId::cvx2:
        x = {x_upper_ * u[0], x_upper_ * u[0]};
        break;
    case ProblemId::cvx3: {
        const double theta = 0.5 * kPi * u[0], phi = 0.5 * kPi * u[1];
        x = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
        // Keep the point on the sphere to working precision.
        double norm = 0.0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : x) v = std::clamp(v / norm, 0.0, 1.0);
        break;
    }
    default:
        for (std::size_t i = 0; i < u.size(); ++i) x[i] = u[i];
        break;
    }
    return x;
}

} // namespace cpfl::mop
