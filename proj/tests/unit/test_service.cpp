// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "cpfl/autodiff/rng.hpp"
#include "cpfl/hypernet/architecture.hpp"
#include "cpfl/scalarization/chebyshev.hpp"
#include "cpfl/service/service.hpp"
#include "cpfl/trainer/config.hpp"
#include "cpfl/trainer/training.hpp"

namespace cpfl::service {
namespace {

using nlohmann::json;
using V = std::vector<double>;

train::Checkpoint train_text(const char* text) {
    return train::train(train::parse_config_text(text).config);
}

const train::Checkpoint& cvx1() {
    static const train::Checkpoint ckpt = train_text(R"(
[problem]
id = CVX1
[arch]
kind = trans
d = 20
heads = 2
[train]
iterations = 400
seed = 7
[anchors]
a = 0, 0
a = 0.1, 0.2
b = 0.2, 1
)");
    return ckpt;
}

const train::Checkpoint& zdt3_moe() {
    static const train::Checkpoint ckpt = train_text(R"(
[problem]
id = ZDT3
[arch]
kind = trans-moe
d = 8
[train]
iterations = 20
seed = 2
[anchors]
a = 0.01, 0.81
a = 0.16, 0.61
a = 0.4, 0.41
)");
    return ckpt;
}

json body_of(const Response& r) { return json::parse(r.body); }

Response post(const Service& svc, const json& body) { return svc.infer(body.dump()); }

class LoadedService : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        svc_ = new Service();
        svc_->load(cvx1());
        moe_ = new Service();
        moe_->load(zdt3_moe());
    }
    static void TearDownTestSuite() {
        delete svc_;
        delete moe_;
    }
    static Service* svc_;
    static Service* moe_;
};

Service* LoadedService::svc_ = nullptr;
Service* LoadedService::moe_ = nullptr;

TEST(ServiceLifecycle, EndpointsReturn503BeforeLoad) {
    Service svc;
    EXPECT_FALSE(svc.ready());
    for (const Response& r : {svc.health(), svc.info(), svc.infer(R"({"r":[1,1]})"), svc.front({})}) {
        EXPECT_EQ(r.status, 503);
        EXPECT_EQ(body_of(r)["version"], train::kCheckpointVersion);
    }
    svc.load(cvx1());
    EXPECT_TRUE(svc.ready());
    EXPECT_EQ(svc.health().status, 200);
}

TEST_F(LoadedService, InfoReportsModelCard) {
    const json info = body_of(svc_->info());
    EXPECT_EQ(info["problem"], "CVX1");
    EXPECT_EQ(info["mode"], "connected");
    EXPECT_EQ(info["m"], 2);
    EXPECT_EQ(info["n"], 1);
    EXPECT_EQ(info["d"], 20);
    EXPECT_EQ(info["e"], 2);
    EXPECT_EQ(info["param_count"], 2621);
    EXPECT_EQ(info["bundles"], 2);
    EXPECT_EQ(info["param_count_total"], 2 * 2621);
    EXPECT_EQ(info["anchors"].size(), 2U);
    EXPECT_EQ(info["anchors"][1]["b"], json(V{0.2, 1.0}));
    EXPECT_EQ(info["version"], train::kCheckpointVersion);
}

TEST_F(LoadedService, InferNormalizesAndEchoesR) {
    const Response r = post(*svc_, {{"r", {2, 2}}});
    ASSERT_EQ(r.status, 200) << r.body;
    const json body = body_of(r);
    EXPECT_EQ(body["r"], json(V{0.5, 0.5}));
    EXPECT_EQ(body["a"], json(V{0.0, 0.0}));
    EXPECT_EQ(body["version"], train::kCheckpointVersion);
}

TEST_F(LoadedService, InferRecomputesObjectivesFromX) {
    const mop::Problem problem = cvx1().config.make_problem();
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const V r = rng.dirichlet(0.6, 2);
        const json body = body_of(post(*svc_, {{"r", r}}));
        const V x = body["x"].get<V>();
        const V f = body["f"].get<V>();
        const mop::Point expect = problem.evaluate(x);
        for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(f[j], expect[j], 1e-12);
        const auto cheb = scal::chebyshev(expect, body["r"].get<V>(), V{0, 0});
        EXPECT_NEAR(body["chebyshev"].get<double>(), cheb.value, 1e-12);
    }
}

TEST_F(LoadedService, RejectsMalformedRequestsWith400) {
    for (const char* body : {"not json", "[1,2]", R"({"a":[0,0]})", R"({"r":"0.5,0.5"})", R"({"r":[0.5,"x"]})",
                             R"({"r":[-0.1,1.1]})", R"({"r":[0,0]})", R"({"r":[]})", R"({"r":[1,1],"expert_id":0.5})"}) {
        const Response r = svc_->infer(body);
        EXPECT_EQ(r.status, 400) << body;
        EXPECT_TRUE(body_of(r).contains("error")) << body;
    }
}

TEST_F(LoadedService, ExpertOnNonMoeIs409) {
    EXPECT_EQ(post(*svc_, {{"r", {1, 1}}, {"expert_id", 0}}).status, 409);
}

TEST_F(LoadedService, DimensionAndAnchorMismatchesAre422) {
    EXPECT_EQ(post(*svc_, {{"r", {1, 1, 1}}}).status, 422);
    EXPECT_EQ(post(*svc_, {{"r", {1, 1}}, {"a", {0.0}}}).status, 422);
    EXPECT_EQ(post(*svc_, {{"r", {1, 1}}, {"b", {1, 1, 1}}}).status, 422);
    const Response unknown = post(*svc_, {{"r", {1, 1}}, {"a", {0.05, 0.05}}});
    EXPECT_EQ(unknown.status, 422);
    EXPECT_EQ(body_of(unknown)["error"]["code"], "unknown_anchor");
}

TEST_F(LoadedService, AnchorSelectsItsModelAndDefaultBox) {
    const json body = body_of(post(*svc_, {{"r", {1, 1}}, {"a", {0.1, 0.2}}}));
    EXPECT_EQ(body["component"], 1);
    EXPECT_EQ(body["b"], json(V{0.2, 1.0}));
    const V f = body["f"].get<V>();
    EXPECT_EQ(body["upper_ok"][0].get<bool>(), f[0] <= 0.2);
}

TEST_F(LoadedService, RequestBoundsOverrideFeasibility) {
    const json loose = body_of(post(*svc_, {{"r", {1, 1}}, {"b", {1, 1}}}));
    EXPECT_TRUE(loose["feasible"].get<bool>());
    const json tight = body_of(post(*svc_, {{"r", {1, 1}}, {"b", {0.01, 1}}}));
    EXPECT_FALSE(tight["feasible"].get<bool>());
    EXPECT_FALSE(tight["upper_ok"][0].get<bool>());
    EXPECT_TRUE(tight["upper_ok"][1].get<bool>());
    EXPECT_EQ(tight["x"], loose["x"]);
}

TEST_F(LoadedService, TargetComesFromTheOracle) {
    const json body = body_of(post(*svc_, {{"r", {0.5, 0.5}}}));
    ASSERT_TRUE(body.contains("target"));
    const V t = body["target"].get<V>();
    const double golden = (3.0 - std::sqrt(5.0)) / 2.0;
    EXPECT_NEAR(t[0], golden, 1e-4);
    EXPECT_NEAR(t[1], golden, 1e-4);
    const V f = body["f"].get<V>();
    EXPECT_NEAR(body["med_point_error"].get<double>(), std::hypot(f[0] - t[0], f[1] - t[1]), 1e-12);
}

TEST(ServiceCache, TargetDependsOnlyOnTheBucket) {
    Service svc;
    svc.load(cvx1());
    const json first = body_of(post(svc, {{"r", {0.5002, 0.4998}}}));
    const json second = body_of(post(svc, {{"r", {0.4998, 0.5002}}}));
    EXPECT_EQ(first["target"], second["target"]);
    EXPECT_NE(first["x"], second["x"]);
    EXPECT_EQ(svc.model()->cache_size(), 1U);

    Service fresh;
    fresh.load(cvx1());
    EXPECT_EQ(body_of(post(fresh, {{"r", {0.4998, 0.5002}}}))["target"], first["target"]);

    post(svc, {{"r", {0.3, 0.7}}});
    EXPECT_EQ(svc.model()->cache_size(), 2U);
}

TEST(ServiceCache, OracleCanBeDisabled) {
    Service svc(false);
    svc.load(cvx1());
    const json body = body_of(post(svc, {{"r", {1, 1}}}));
    EXPECT_FALSE(body.contains("target"));
    EXPECT_FALSE(body.contains("med_point_error"));
}

TEST_F(LoadedService, IdenticalRequestsGiveIdenticalResponses) {
    const std::string req = R"({"r":[0.3,0.7],"b":[0.5,1]})";
    const std::string first = svc_->infer(req).body;
    EXPECT_EQ(svc_->infer(req).body, first);

    std::vector<std::string> bodies(8);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        threads.emplace_back([&, i] {
            for (int k = 0; k < 20; ++k) bodies[i] = svc_->infer(R"({"r":[0.61,0.39]})").body;
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& b : bodies) EXPECT_EQ(b, bodies[0]);
}

TEST_F(LoadedService, MoeNeedsAValidExpert) {
    EXPECT_EQ(post(*moe_, {{"r", {1, 1}}}).status, 422);
    EXPECT_EQ(post(*moe_, {{"r", {1, 1}}, {"expert_id", 3}}).status, 422);
    EXPECT_EQ(post(*moe_, {{"r", {1, 1}}, {"expert_id", -1}}).status, 422);
    const Response ok = post(*moe_, {{"r", {1, 1}}, {"expert_id", 2}});
    ASSERT_EQ(ok.status, 200) << ok.body;
    const json body = body_of(ok);
    EXPECT_EQ(body["expert_id"], 2);
    EXPECT_EQ(body["a"], json(V{0.4, 0.41}));
    EXPECT_EQ(body["x"].size(), 30U);
}

TEST_F(LoadedService, FrontSweepsTheSimplex) {
    const json body = body_of(svc_->front({{"samples", "3"}}));
    const json& pts = body["points"];
    ASSERT_EQ(pts.size(), 3U);
    EXPECT_NEAR(pts[0]["r"][0].get<double>(), 1e-6, 1e-15);
    EXPECT_NEAR(pts[1]["r"][0].get<double>(), 0.5, 1e-15);
    EXPECT_NEAR(pts[2]["r"][0].get<double>(), 1.0 - 1e-6, 1e-15);
    for (std::size_t n : {1U, 2U, 17U, 200U}) {
        EXPECT_EQ(body_of(svc_->front({{"samples", std::to_string(n)}}))["points"].size(), n);
    }
}

TEST_F(LoadedService, FrontFlagsInfeasiblePointsWithoutDroppingThem) {
    const json body = body_of(svc_->front({{"samples", "50"}, {"anchor", "1"}}));
    const json& pts = body["points"];
    ASSERT_EQ(pts.size(), 50U);
    std::size_t infeasible = 0;
    for (const auto& p : pts) {
        const double f1 = p["f"][0].get<double>();
        const double f2 = p["f"][1].get<double>();
        EXPECT_EQ(p["feasible"].get<bool>(), f1 <= 0.2 && f2 <= 1.0);
        infeasible += p["feasible"].get<bool>() ? 0 : 1;
    }
    EXPECT_GT(infeasible, 0U);
    EXPECT_EQ(body_of(svc_->front({{"samples", "4"}, {"anchor", "all"}}))["points"].size(), 8U);
}

TEST_F(LoadedService, FrontErrors) {
    EXPECT_EQ(svc_->front({{"samples", "0"}}).status, 400);
    EXPECT_EQ(svc_->front({{"samples", "abc"}}).status, 400);
    EXPECT_EQ(svc_->front({{"samples", "5"}, {"anchor", "9"}}).status, 422);
    EXPECT_EQ(svc_->front({{"samples", "5"}, {"expert", "0"}}).status, 409);
    EXPECT_EQ(moe_->front({{"samples", "5"}}).status, 422);
    EXPECT_EQ(moe_->front({{"samples", "5"}, {"expert", "5"}}).status, 422);
    EXPECT_EQ(body_of(moe_->front({{"samples", "5"}, {"expert", "1"}}))["points"].size(), 5U);
    EXPECT_EQ(body_of(moe_->front({{"samples", "5"}, {"experts", "all"}}))["points"].size(), 15U);
}

TEST(InferRecord, ListsEveryField) {
    const Model model{train::Checkpoint(cvx1())};
    InferRequest req;
    req.r = {1, 3};
    const std::string text = format_infer_record(model.infer(req), 1);
    for (const char* key : {"[infer]\n", "\nr = 0.25, 0.75\n", "\nx = ", "\nf = ", "\nchebyshev = ", "\nfeasible = ",
                            "\nupper_ok = ", "\nlower_ok = ", "\ntarget = ", "\nmed_point_error = "}) {
        EXPECT_NE(text.find(key), std::string::npos) << key;
    }
}

class HttpFixture : public ::testing::Test {
protected:
    void SetUp() override {
        server_ = std::make_unique<HttpServer>(svc_);
        port_ = server_->bind("127.0.0.1", 0);
        server_->start();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    void TearDown() override { server_->stop(); }

    Service svc_;
    std::unique_ptr<HttpServer> server_;
    std::unique_ptr<httplib::Client> client_;
    int port_ = 0;
};

TEST_F(HttpFixture, HealthFlipsAfterLoad) {
    auto before = client_->Get("/health");
    ASSERT_TRUE(before);
    EXPECT_EQ(before->status, 503);
    svc_.load(cvx1());
    auto after = client_->Get("/health");
    ASSERT_TRUE(after);
    EXPECT_EQ(after->status, 200);
    EXPECT_EQ(json::parse(after->body)["status"], "ok");
}

TEST_F(HttpFixture, EndpointsOverTheWire) {
    svc_.load(cvx1());
    auto info = client_->Get("/model/info");
    ASSERT_TRUE(info);
    EXPECT_EQ(json::parse(info->body)["param_count"], 2621);
    EXPECT_EQ(info->get_header_value("Content-Type"), "application/json");

    auto ok = client_->Post("/infer", R"({"r":[0.5,0.5]})", "application/json");
    ASSERT_TRUE(ok);
    EXPECT_EQ(ok->status, 200);
    EXPECT_EQ(ok->body, svc_.infer(R"({"r":[0.5,0.5]})").body);

    auto bad = client_->Post("/infer", R"({"r":[-1,2]})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    auto front = client_->Get("/front?samples=25&anchor=1");
    ASSERT_TRUE(front);
    EXPECT_EQ(json::parse(front->body)["points"].size(), 25U);

    auto missing = client_->Get("/nowhere");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    EXPECT_TRUE(json::parse(missing->body).contains("error"));
}

TEST_F(HttpFixture, WireNumbersRoundTripExactly) {
    svc_.load(cvx1());
    const mop::Problem problem = cvx1().config.make_problem();
    auto res = client_->Post("/infer", R"({"r":[0.123,0.877]})", "application/json");
    ASSERT_TRUE(res);
    const json body = json::parse(res->body);
    const mop::Point f = problem.evaluate(body["x"].get<V>());
    EXPECT_EQ(body["f"].get<V>(), f);
}

TEST(HttpServerBind, RejectsAnOccupiedPort) {
    Service svc;
    HttpServer first(svc);
    const int port = first.bind("127.0.0.1", 0);
    HttpServer second(svc);
    EXPECT_THROW((void)second.bind("127.0.0.1", port), IoError);
}

} // namespace
} // namespace cpfl::service
