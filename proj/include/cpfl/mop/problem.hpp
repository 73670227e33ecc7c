// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark multi-objective problems. Every objective vector returned here is
// normalized so that the true Pareto front lies in [0, 1]^m.

#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpfl/autodiff/tape.hpp"

namespace cpfl::mop {

enum class ProblemId { cvx1, cvx2, cvx3, zdt1, zdt2, zdt3, zdt3star, dtlz2, dtlz7 };

/// Decision-variable domain that the hypernetwork output layer must respect.
enum class DecisionConstraint { box01, simplex_sphere };

[[nodiscard]] std::string_view problem_name(ProblemId id);
/// Accepts the names returned by `problem_name` (case-insensitive) and
/// "ZDT3*". Throws ValidationError for anything else.
[[nodiscard]] ProblemId parse_problem_id(std::string_view name);
[[nodiscard]] std::string_view constraint_name(DecisionConstraint c);

/// Shape parameters of the ZDT3 variant.
struct StarShape {
    double A = 2.0;
    double gamma = 3.0;
    double beta = 1.0 / 3.0;

    friend bool operator==(const StarShape&, const StarShape&) = default;
};

/// Per-objective affine map f -> (f - lo) / (hi - lo).
struct Affine {
    double lo = 0.0;
    double hi = 1.0;
};

// Raw front extents used for normalization. Regenerate with
// `regen_normalization` after changing any objective definition.
namespace frozen {
inline constexpr std::array<Affine, 2> zdt3 = {{{0.0, 0.85183286520050538}, {-0.77336901232664057, 1.0}}};
inline constexpr std::array<Affine, 2> zdt3star_default = {{{0.0, 1.0}, {2.4492935982947064e-16, 1.0}}};
inline constexpr std::array<Affine, 3> dtlz7 = {{{0.0, 0.85940085368949126},
                                                {0.0, 0.85940085368949126},
                                                {0.43566812183385917, 1.0}}};
} // namespace frozen

class Problem {
public:
    explicit Problem(ProblemId id, StarShape shape = {});

    [[nodiscard]] ProblemId id() const noexcept { return id_; }
    [[nodiscard]] std::string_view name() const noexcept { return problem_name(id_); }
    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int m() const noexcept { return m_; }
    [[nodiscard]] DecisionConstraint constraint() const noexcept { return constraint_; }
    /// Upper bound of each box-constrained decision variable (lower bound 0).
    [[nodiscard]] double x_upper() const noexcept { return x_upper_; }
    [[nodiscard]] bool disconnected() const noexcept;
    [[nodiscard]] const StarShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::span<const Affine> normalization() const noexcept { return norm_; }

    /// Normalized objectives. Throws InvalidArgument on a wrong length or a
    /// point outside the decision domain.
    [[nodiscard]] std::vector<double> evaluate(std::span<const double> x) const;
    /// Unnormalized objectives without domain checks.
    [[nodiscard]] std::vector<double> evaluate_raw(std::span<const double> x) const;
    /// Differentiable normalized objectives; `x` must have shape [n].
    ad::NodeId evaluate(ad::Tape& tape, ad::NodeId x) const;

    /// Map an output of the unit-box constraint layer onto the decision box.
    [[nodiscard]] std::vector<double> decode(std::span<const double> unit) const;
    ad::NodeId decode(ad::Tape& tape, ad::NodeId unit) const;

    /// Dimension of the front parameterization (1 for m = 2, else 2).
    [[nodiscard]] int front_dim() const noexcept { return m_ == 2 ? 1 : 2; }
    /// Decision point on the Pareto set candidate surface for parameter
    /// u in [0, 1]^front_dim. The image of this map contains the front.
    [[nodiscard]] std::vector<double> front_decision(std::span<const double> u) const;

private:
    void check_domain(std::span<const double> x) const;
    void normalize(std::vector<double>& f) const;

    ProblemId id_;
    StarShape shape_;
    int n_ = 0;
    int m_ = 0;
    DecisionConstraint constraint_ = DecisionConstraint::box01;
    double x_upper_ = 1.0;
    std::vector<Affine> norm_;
};

} // namespace cpfl::mop
