// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cpfl/autodiff/rng.hpp"
#include "cpfl/error.hpp"
#include "cpfl/hypernet/architecture.hpp"
#include "cpfl/hypernet/forward.hpp"
#include "../support/finite_difference.hpp"

namespace cpfl::hn {
namespace {

using V = std::vector<double>;

ArchitectureSpec spec(Kind kind, int m, int n, int d, int heads = 2, int experts = 1) {
    ArchitectureSpec a;
    a.kind = kind;
    a.m = m;
    a.n = n;
    a.d = d;
    a.heads = heads;
    a.experts = experts;
    return a;
}

ForwardInput input(const V& r, const V& a = {}, std::optional<std::size_t> expert = std::nullopt) {
    return {r, a, expert};
}

TEST(ParamCount, ClosedFormExamples) {
    EXPECT_EQ(param_count(spec(Kind::mlp, 2, 1, 20)), 2601u);
    EXPECT_EQ(param_count(spec(Kind::trans, 2, 1, 20)), 2621u);
    EXPECT_EQ(param_count(spec(Kind::trans, 2, 30, 30)), 6630u);
    EXPECT_EQ(param_count(spec(Kind::trans_joint, 2, 1, 20)), 2621u + 2u * 20u);
    // Trunk plus k heads of (d^2 + d) + (d + 1) n.
    EXPECT_EQ(param_count(spec(Kind::trans_moe, 2, 30, 30, 2, 5)), 6u * 900 + 180 + 120 + 5u * (930 + 930));
}

TEST(ParamCount, LayoutPartitionsTheArrayOnGrid) {
    for (Kind kind : {Kind::mlp, Kind::trans, Kind::trans_joint, Kind::trans_moe}) {
        for (int d : {16, 20, 30, 64}) {
            for (int m : {2, 3}) {
                for (int n : {1, 2, 3, 10, 30}) {
                    for (int e : {1, 2, 4}) {
                        if (d % e != 0) continue;
                        const auto arch = spec(kind, m, n, d, e, kind == Kind::trans_moe ? 3 : 1);
                        const auto layout = make_layout(arch);
                        std::size_t offset = 0;
                        for (const TensorSlot& s : layout) {
                            ASSERT_EQ(s.offset, offset) << s.name;
                            offset += s.size();
                        }
                        ASSERT_EQ(offset, param_count(arch)) << kind_name(kind) << " d=" << d;
                        ASSERT_EQ(ParameterBundle(arch).size(), param_count(arch));
                    }
                }
            }
        }
    }
}

TEST(ParamCount, MlpHasEightAffineLayers) {
    const auto layout = make_layout(spec(Kind::mlp, 2, 1, 20));
    std::size_t weights = 0;
    for (const auto& s : layout) weights += s.bias ? 0 : 1;
    EXPECT_EQ(weights, 8u);
}

TEST(Architecture, ValidationErrors) {
    EXPECT_THROW(spec(Kind::trans, 2, 1, 20, 3).validate(), ValidationError);
    EXPECT_THROW(spec(Kind::trans, 1, 1, 20).validate(), ValidationError);
    EXPECT_THROW(spec(Kind::trans_moe, 2, 1, 20, 2, 0).validate(), ValidationError);
    EXPECT_THROW(spec(Kind::mlp, 2, 0, 20).validate(), ValidationError);
    EXPECT_THROW((void)parse_kind("transformer"), ValidationError);
    EXPECT_EQ(parse_kind("trans-moe"), Kind::trans_moe);
    EXPECT_EQ(parse_constraint("simplex-sphere"), OutputConstraint::simplex_sphere);
}

TEST(Bundle, WrongLengthIsLayoutError) {
    EXPECT_THROW(ParameterBundle(spec(Kind::mlp, 2, 1, 20), V(2600, 0.0)), LayoutError);
}

TEST(Init, DeterministicBoundedAndZeroBiases) {
    const auto arch = spec(Kind::trans_moe, 3, 4, 16, 4, 2);
    Rng r1(7), r2(7);
    const auto a = init_params(arch, r1);
    const auto b = init_params(arch, r2);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    for (const TensorSlot& s : a.layout()) {
        const auto v = a.view(s.name);
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        for (double x : v) {
            if (s.bias) {
                ASSERT_EQ(x, 0.0) << s.name;
            } else {
                ASSERT_LE(std::abs(x), bound) << s.name;
            }
        }
    }
}

TEST(Forward, ZeroParametersGiveZeroRawOutput) {
    for (Kind kind : {Kind::mlp, Kind::trans}) {
        const ParameterBundle p(spec(kind, 2, 3, 8));
        ad::Tape t;
        const auto g = build_forward(t, p, input({0.3, 0.7}), false);
        for (double v : t.value(g.raw)) EXPECT_EQ(v, 0.0);
        for (double v : t.value(g.x)) EXPECT_EQ(v, 0.5);
    }
}

TEST(Forward, UnitWidthMlpPassesTheSumThrough) {
    auto arch = spec(Kind::mlp, 2, 1, 1);
    ParameterBundle p(arch);
    for (const TensorSlot& s : p.layout()) {
        if (!s.bias) {
            for (double& v : p.view(s.name)) v = 1.0;
        }
    }
    ad::Tape t;
    const auto g = build_forward(t, p, input({0.3, 0.7}), false);
    EXPECT_NEAR(t.value(g.raw)[0], 1.0, 1e-15);
}

TEST(Forward, SkipConnectionsMakeTrunkIdentity) {
    const auto arch = spec(Kind::trans, 3, 2, 8);
    Rng rng(3);
    auto p = init_params(arch, rng);
    for (const char* name : {"attn.q.weight", "attn.k.weight", "attn.v.weight", "attn.o.weight", "attn.q.bias",
                             "attn.k.bias", "attn.v.bias", "attn.o.bias", "ffn.0.weight", "ffn.0.bias", "ffn.1.weight",
                             "ffn.1.bias"}) {
        for (double& v : p.view(name)) v = 0.0;
    }
    for (double& v : p.view("embed.bias")) v = rng.uniform(-1.0, 1.0);
    for (double& v : p.view("head.bias")) v = rng.uniform(-1.0, 1.0);
    const V r = {0.2, 0.5, 0.3};
    // Mean over tokens of r_i * W[i] + B[i], then the head.
    const auto w = p.view("embed.weight");
    const auto b = p.view("embed.bias");
    V pooled(8, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 8; ++j) pooled[j] += (r[i] * w[i * 8 + j] + b[i * 8 + j]) / 3.0;
    }
    const auto hw = p.view("head.weight");
    const auto hb = p.view("head.bias");
    ad::Tape t;
    const auto g = build_forward(t, p, input(r), false);
    for (std::size_t k = 0; k < 2; ++k) {
        double want = hb[k];
        for (std::size_t j = 0; j < 8; ++j) want += pooled[j] * hw[j * 2 + k];
        EXPECT_NEAR(t.value(g.raw)[k], want, 1e-14);
    }
}

TEST(Forward, AttentionRowsSumToOne) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto arch = spec(Kind::trans, 3, 2, 16, 4);
        const auto p = init_params(arch, rng);
        ad::Tape t;
        const auto r = rng.dirichlet(0.6, 3);
        const auto g = build_forward(t, p, input(r), false);
        ASSERT_EQ(g.attention.size(), 4u);
        for (ad::NodeId head : g.attention) {
            const auto a = t.value(head);
            for (std::size_t q = 0; q < 3; ++q) {
                EXPECT_NEAR(a[q * 3] + a[q * 3 + 1] + a[q * 3 + 2], 1.0, 1e-12);
            }
        }
    }
}

TEST(Forward, IdenticalTokensBehaveLikeOne) {
    // Equal r_i and equal embedding rows make every token identical, so the
    // block output does not depend on how many tokens there are.
    Rng rng(5);
    const auto a2 = spec(Kind::trans, 2, 2, 8);
    const auto a3 = spec(Kind::trans, 3, 2, 8);
    auto p2 = init_params(a2, rng);
    ParameterBundle p3(a3);
    for (const TensorSlot& s : p3.layout()) {
        const auto src = p2.view(s.name);
        auto dst = p3.view(s.name);
        if (s.name.rfind("embed.", 0) == 0) {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i % 8];
        } else {
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }
    for (std::size_t i = 0; i < 8; ++i) p2.view("embed.weight")[8 + i] = p2.view("embed.weight")[i];
    for (std::size_t i = 0; i < 8; ++i) p2.view("embed.bias")[8 + i] = p2.view("embed.bias")[i];
    for (std::size_t i = 0; i < 24; ++i) p3.view("embed.weight")[i] = p2.view("embed.weight")[i % 8];
    for (std::size_t i = 0; i < 24; ++i) p3.view("embed.bias")[i] = p2.view("embed.bias")[i % 8];
    const auto y2 = predict(p2, input({0.5, 0.5}));
    const auto y3 = predict(p3, input({0.5, 0.5, 0.5}));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(y2[k], y3[k], 1e-14);
    ad::Tape t;
    const auto g = build_forward(t, p3, input({0.5, 0.5, 0.5}), false);
    for (double v : t.value(g.attention[0])) EXPECT_NEAR(v, 1.0 / 3.0, 1e-14);
}

TEST(Forward, JointWithZeroAnchorColumnReducesToTrans) {
    Rng rng(6);
    const auto tj = spec(Kind::trans_joint, 2, 3, 8);
    const auto tr = spec(Kind::trans, 2, 3, 8);
    auto pj = init_params(tj, rng);
    for (double& v : pj.view("embed.weight_a")) v = 0.0;
    ParameterBundle pt(tr);
    for (const TensorSlot& s : pt.layout()) {
        const auto src = pj.view(s.name == "embed.weight" ? "embed.weight_r" : s.name);
        std::copy(src.begin(), src.end(), pt.view(s.name).begin());
    }
    const V r = {0.35, 0.65};
    const auto yj = predict(pj, input(r, {0.0, 0.0}));
    const auto yt = predict(pt, input(r));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(yj[k], yt[k], 1e-15);
    auto pj2 = init_params(tj, rng);
    EXPECT_NE(predict(pj2, input(r, {0.0, 0.0})), predict(pj2, input(r, {0.4, 0.41})));
    EXPECT_THROW((void)predict(pj2, input(r)), InvalidArgument);
}

TEST(Forward, MoeRoutesToOneExpert) {
    Rng rng(8);
    const auto arch = spec(Kind::trans_moe, 2, 3, 8, 2, 3);
    const auto p = init_params(arch, rng);
    const V r = {0.4, 0.6};
    EXPECT_NE(predict(p, input(r, {}, 0)), predict(p, input(r, {}, 1)));
    EXPECT_THROW((void)predict(p, input(r, {}, 3)), InvalidArgument);
    EXPECT_THROW((void)predict(p, input(r)), InvalidArgument);

    ad::Tape t;
    const auto g = build_forward(t, p, input(r, {}, 1), true);
    const auto loss = t.sum(g.x, 0);
    const auto grads = gather_gradients(p, g, t.backward(loss));
    ASSERT_EQ(grads.size(), p.size());
    for (const TensorSlot& s : p.layout()) {
        const bool other = s.name.rfind("expert.0.", 0) == 0 || s.name.rfind("expert.2.", 0) == 0;
        double norm = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) norm += std::abs(grads[s.offset + i]);
        if (other) {
            EXPECT_EQ(norm, 0.0) << s.name;
        } else if (!s.bias) {
            EXPECT_GT(norm, 0.0) << s.name;
        }
    }
}

TEST(ConstraintLayer, ExactForExtremeInputs) {
    const V raw = {-1e6, -3.0, 0.0, 2.5, 1e6};
    auto apply = [&](OutputConstraint c, const V& in) {
        ad::Tape t;
        const auto x = constraint_layer(t, t.constant({in.size()}, in), c);
        return V(t.value(x).begin(), t.value(x).end());
    };
    for (double v : apply(OutputConstraint::nonneg, raw)) EXPECT_GE(v, 0.0);
    for (double v : apply(OutputConstraint::box01, raw)) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    const auto s = apply(OutputConstraint::simplex, raw);
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-12);
    const auto sp = apply(OutputConstraint::simplex_sphere, raw);
    double norm2 = 0.0;
    for (double v : sp) norm2 += v * v;
    EXPECT_NEAR(norm2, 1.0, 1e-12);
    for (double v : apply(OutputConstraint::box01, V(4, 0.0))) EXPECT_EQ(v, 0.5);
    for (double v : apply(OutputConstraint::simplex, V(4, 1.5))) EXPECT_NEAR(v, 0.25, 1e-15);
}

class FullModelGradient : public ::testing::TestWithParam<Kind> {};

TEST_P(FullModelGradient, MatchesFiniteDifferences) {
    const Kind kind = GetParam();
    auto arch = spec(kind, 3, 4, 8, 2, kind == Kind::trans_moe ? 2 : 1);
    arch.activation = Activation::gelu;
    Rng rng(static_cast<std::uint64_t>(kind) + 40);
    for (int draw = 0; draw < 3; ++draw) {
        auto p = init_params(arch, rng);
        for (double& v : p.values()) v += rng.uniform(-0.1, 0.1);  // non-zero biases too
        const V r = rng.dirichlet(0.6, 3);
        const V a = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const ForwardInput in = input(r, a, kind == Kind::trans_moe ? std::optional<std::size_t>(1) : std::nullopt);
        const V w = {0.3, -0.8, 0.5, 1.1};
        auto loss_of = [&](const ParameterBundle& q) {
            const auto x = predict(q, in);
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
            return s;
        };
        ad::Tape t;
        const auto g = build_forward(t, p, in, true);
        const auto loss = t.sum(t.mul(g.x, t.constant({4}, w)), 0);
        const auto analytic = gather_gradients(p, g, t.backward(loss));
        const V base(p.values().begin(), p.values().end());
        const auto numeric = testing::numeric_gradient(
            [&](std::span<const double> v) { return loss_of(ParameterBundle(arch, V(v.begin(), v.end()))); }, base);
        EXPECT_LT(testing::gradient_error(analytic, numeric), 1e-4) << kind_name(kind);
    }
}

INSTANTIATE_TEST_SUITE_P(Kinds, FullModelGradient,
                         ::testing::Values(Kind::mlp, Kind::trans, Kind::trans_joint, Kind::trans_moe));

} // namespace
} // namespace cpfl::hn
