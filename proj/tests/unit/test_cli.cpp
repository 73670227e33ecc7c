// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "cpfl/cli/commands.hpp"
#include "cpfl/cli/manifest.hpp"
#include "cpfl/service/service.hpp"
#include "cpfl/trainer/checkpoint.hpp"
#include "cpfl/trainer/config.hpp"
#include "cpfl/version.hpp"

namespace cpfl::cli {
namespace {

namespace fs = std::filesystem;

const char* kConfig = R"(
[problem]
id = CVX1
[arch]
kind = trans
d = 8
heads = 2
[train]
iterations = 150
seed = 5
log_every = 50
[anchors]
a = 0, 0.8
a = 0.2, 0.4
a = 0.6, 0.1
)";

const char* kMoeConfig = R"(
[problem]
id = ZDT3
[arch]
kind = trans-moe
d = 8
[train]
iterations = 10
seed = 2
[anchors]
a = 0.01, 0.81
a = 0.16, 0.61
)";

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = run_command(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

bool is_error_line(const std::string& text) {
    static const std::regex re(R"(^error: code=[a-z_]+ message="([^"\\]|\\.)*"\n$)");
    return std::regex_match(text, re);
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / fmt_dir();
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        spit(dir_ / "cvx1.cfg", kConfig);
        spit(dir_ / "moe.cfg", kMoeConfig);
        const Result r = run({"train", "--config", (dir_ / "cvx1.cfg").string(), "--out", run_dir().string(), "--quiet"});
        ASSERT_EQ(r.code, 0) << r.err;
        const Result m = run({"train", "--config", (dir_ / "moe.cfg").string(), "--out", (dir_ / "moe").string(),
                              "--quiet"});
        ASSERT_EQ(m.code, 0) << m.err;
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string fmt_dir() { return "cpfl_cli_test_" + std::to_string(::getpid()); }
    static fs::path run_dir() { return dir_ / "runs" / "cvx1"; }
    static std::string ckpt() { return (run_dir() / "checkpoint").string(); }

    static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, TrainWritesCheckpointAndManifest) {
    ASSERT_TRUE(fs::exists(ckpt()));
    const auto entries = read_manifest(run_dir() / "manifest");
    ASSERT_GE(entries.size(), 1U);
    const RunManifest& e = entries.front();
    EXPECT_EQ(e.command, "train");
    EXPECT_EQ(e.tool_version, kToolVersion);
    EXPECT_EQ(e.checkpoint_version, train::kCheckpointVersion);
    EXPECT_EQ(e.config_path, (dir_ / "cvx1.cfg").string());
    ASSERT_EQ(e.outputs.size(), 1U);
    EXPECT_EQ(e.outputs[0], ckpt());
    EXPECT_FALSE(e.started.empty());
    EXPECT_FALSE(e.finished.empty());
    ASSERT_TRUE(e.config.has_value());
    EXPECT_EQ(train::format_config(*e.config), train::format_config(train::load_checkpoint(ckpt()).config));
}

TEST_F(CliTest, ManifestReexecutesBitIdentically) {
    const auto entry = read_manifest(run_dir() / "manifest").front();
    const fs::path cfg = dir_ / "resolved.cfg";
    spit(cfg, train::format_config(*entry.config));
    const fs::path again = dir_ / "again";
    const Result r = run({"train", "--config", cfg.string(), "--out", again.string(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;

    // wall-clock time is the only field allowed to differ
    auto strip = [](std::string text) {
        return std::regex_replace(text, std::regex("wall_clock_s = [^\n]*\n"), "");
    };
    EXPECT_EQ(strip(slurp(again / "checkpoint")), strip(slurp(ckpt())));
}

TEST_F(CliTest, SeedFlagOverridesTheConfig) {
    const fs::path out = dir_ / "seeded";
    ASSERT_EQ(run({"train", "--config", (dir_ / "cvx1.cfg").string(), "--out", out.string(), "--seed", "99",
                   "--iterations", "5", "--quiet"})
                  .code,
              0);
    const auto ckpt = train::load_checkpoint((out / "checkpoint").string());
    EXPECT_EQ(ckpt.config.seed, 99U);
    EXPECT_EQ(ckpt.config.iterations, 5);
    EXPECT_EQ(read_manifest(out / "manifest").front().config->seed, 99U);
}

TEST_F(CliTest, FrontWritesExactlyNSortedRows) {
    const fs::path csv = dir_ / "front" / "front.csv";
    const Result r = run({"front", "--ckpt", ckpt(), "--samples", "200", "--csv", csv.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "f1,f2");
    double prev = -1.0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const double f1 = std::stod(line.substr(0, line.find(',')));
        EXPECT_GE(f1, prev);
        prev = f1;
        ++rows;
    }
    EXPECT_EQ(rows, 200U);

    const std::string first = slurp(csv);
    ASSERT_EQ(run({"front", "--ckpt", ckpt(), "--samples", "200", "--csv", csv.string()}).code, 0);
    EXPECT_EQ(slurp(csv), first);
    const auto entries = read_manifest(csv.parent_path() / "manifest");
    ASSERT_EQ(entries.size(), 2U);
    EXPECT_EQ(entries[1].command, "front");
    EXPECT_EQ(entries[1].inputs, std::vector<std::string>{ckpt()});
}

TEST_F(CliTest, FrontRowsSplitEvenlyAcrossComponents) {
    const auto ckpt = train::load_checkpoint(CliTest::ckpt());
    for (std::size_t n : {1U, 2U, 3U, 7U, 31U}) EXPECT_EQ(front_rows(ckpt, n).size(), n);

    auto three = train::parse_config_text(R"(
[problem]
id = DTLZ2
[arch]
kind = trans
d = 8
[train]
iterations = 2
[anchors]
a = 0, 0, 0
)").config;
    const auto c3 = train::train(three);
    for (std::size_t n : {1U, 5U, 20U, 101U}) EXPECT_EQ(front_rows(c3, n).size(), n);
    EXPECT_THROW((void)front_rows(ckpt, 0), InvalidArgument);
}

TEST_F(CliTest, InferPrintsOneRecord) {
    const Result r = run({"infer", "--ckpt", ckpt(), "--r", "2,2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("[infer]\n"));
    EXPECT_NE(r.out.find("\nr = 0.5, 0.5\n"), std::string::npos);
    for (const char* key : {"\nx = ", "\nf = ", "\nchebyshev = ", "\nfeasible = ", "\nupper_ok = "}) {
        EXPECT_NE(r.out.find(key), std::string::npos) << key;
    }
    const Result bounded = run({"infer", "--ckpt", ckpt(), "--r", "1,1", "--a", "0.2,0.4", "--b", "0.01,0.01"});
    ASSERT_EQ(bounded.code, 0) << bounded.err;
    EXPECT_NE(bounded.out.find("\nfeasible = false\n"), std::string::npos);
    EXPECT_NE(bounded.out.find("\ncomponent = 1\n"), std::string::npos);
}

TEST_F(CliTest, InferWithExpertOnMoe) {
    const std::string moe = (dir_ / "moe" / "checkpoint").string();
    const Result ok = run({"infer", "--ckpt", moe, "--r", "0.5,0.5", "--expert", "1"});
    ASSERT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("\nexpert_id = 1\n"), std::string::npos);
    const Result missing = run({"infer", "--ckpt", moe, "--r", "0.5,0.5"});
    EXPECT_EQ(missing.code, kExitFailure);
    EXPECT_TRUE(is_error_line(missing.err)) << missing.err;
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
    const std::vector<std::vector<std::string>> cases = {
        {},
        {"bogus"},
        {"infer", "--ckpt", ckpt()},
        {"infer", "--ckpt", ckpt(), "--r", "0.5,x"},
        {"infer", "--ckpt", ckpt(), "--r", "-1,2"},
        {"infer", "--ckpt", (dir_ / "missing").string(), "--r", "1,1"},
        {"train", "--config", (dir_ / "missing.cfg").string()},
        {"train", "--config", (dir_ / "cvx1.cfg").string(), "--unknown-flag"},
        {"front", "--ckpt", ckpt(), "--samples", "0", "--csv", (dir_ / "x.csv").string()},
        {"sweep", "--config", (dir_ / "cvx1.cfg").string(), "--dims", "8,a", "--heads", "1",
         "--csv", (dir_ / "s.csv").string()},
        {"sweep", "--config", (dir_ / "cvx1.cfg").string(), "--dims", "8,2.5", "--heads", "1",
         "--csv", (dir_ / "s.csv").string()},
    };
    for (const auto& args : cases) {
        const Result r = run(args);
        EXPECT_EQ(r.code, kExitUsage) << fmt::format("{}", fmt::join(args, " "));
        EXPECT_TRUE(is_error_line(r.err)) << r.err;
    }
}

TEST_F(CliTest, OtherErrorsExitWithOne) {
    const fs::path broken = dir_ / "broken";
    std::string text = slurp(ckpt());
    spit(broken, text.substr(0, text.size() / 2));
    const Result truncated = run({"infer", "--ckpt", broken.string(), "--r", "1,1"});
    EXPECT_EQ(truncated.code, kExitFailure);
    EXPECT_TRUE(is_error_line(truncated.err)) << truncated.err;
    EXPECT_NE(truncated.err.find("code=truncated"), std::string::npos) << truncated.err;

    const Result dims = run({"infer", "--ckpt", ckpt(), "--r", "1,1,1"});
    EXPECT_EQ(dims.code, kExitFailure);
    EXPECT_NE(dims.err.find("code=dimension_mismatch"), std::string::npos);

    const fs::path bad_cfg = dir_ / "bad.cfg";
    spit(bad_cfg, "[problem]\nid = NOPE\n");
    const Result invalid = run({"train", "--config", bad_cfg.string(), "--quiet"});
    EXPECT_EQ(invalid.code, kExitFailure);
    EXPECT_NE(invalid.err.find("code=validation"), std::string::npos) << invalid.err;
}

TEST_F(CliTest, EvalAppendsToTheManifest) {
    const fs::path manifest = run_dir() / "manifest";
    const std::string before = slurp(manifest);
    const fs::path report = run_dir() / "report";
    const Result r = run({"eval", "--ckpt", ckpt(), "--rays", "2", "--seeds", "2", "--report", report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string after = slurp(manifest);
    EXPECT_TRUE(after.starts_with(before));
    EXPECT_GT(after.size(), before.size());
    const auto entries = read_manifest(manifest);
    EXPECT_EQ(entries.back().command, "eval");
    EXPECT_EQ(entries.back().outputs, std::vector<std::string>{report.string()});

    const std::string text = slurp(report);
    EXPECT_NE(text.find("seeds = 2\n"), std::string::npos);
    EXPECT_NE(text.find("rays_per_anchor = 2\n"), std::string::npos);
    EXPECT_NE(text.find("med_mean = "), std::string::npos);
}

TEST_F(CliTest, EvalWithoutReportPrintsIt) {
    const Result r = run({"eval", "--ckpt", ckpt(), "--rays", "1", "--seeds", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("[report]\n"));
}

TEST_F(CliTest, ServiceInfoMatchesTheManifest) {
    service::Service svc;
    svc.load_file(ckpt());
    const auto info = nlohmann::json::parse(svc.info().body);
    const auto entries = read_manifest(run_dir() / "manifest");
    const train::TrainConfig& c = *entries.front().config;
    EXPECT_EQ(info["problem"], "CVX1");
    EXPECT_EQ(info["m"], c.arch.m);
    EXPECT_EQ(info["n"], c.arch.n);
    EXPECT_EQ(info["d"], c.arch.d);
    EXPECT_EQ(info["e"], c.arch.heads);
    EXPECT_EQ(info["seed"], c.seed);
    EXPECT_EQ(info["iterations"], c.iterations);
    EXPECT_EQ(info["alpha"], c.alpha);
    EXPECT_EQ(info["lr"], c.lr);
    EXPECT_EQ(info["mode"], train::mode_name(c.mode));
    ASSERT_EQ(info["anchors"].size(), c.anchors.size());
    for (std::size_t k = 0; k < c.anchors.size(); ++k) {
        EXPECT_EQ(info["anchors"][k]["a"].get<std::vector<double>>(), c.anchors[k].a);
        EXPECT_EQ(info["anchors"][k]["b"].get<std::vector<double>>(), c.anchors[k].b);
    }
}

TEST_F(CliTest, SweepEmitsTheFullGrid) {
    const fs::path csv = dir_ / "sweep" / "grid.csv";
    const Result r = run({"sweep", "--config", (dir_ / "cvx1.cfg").string(), "--dims", "16,32,64,128", "--heads",
                          "1,2,4,8,16", "--csv", csv.string(), "--iterations", "2", "--seeds", "1", "--eval-seeds",
                          "1", "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "d,heads,med_trans_mean,med_trans_std,med_mlp_mean,med_mlp_std");
    std::vector<std::pair<int, int>> cells;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string d, e, tm;
        std::getline(row, d, ',');
        std::getline(row, e, ',');
        std::getline(row, tm, ',');
        cells.emplace_back(std::stoi(d), std::stoi(e));
        EXPECT_TRUE(std::isfinite(std::stod(tm))) << line;
    }
    ASSERT_EQ(cells.size(), 20U);
    EXPECT_EQ(cells.front(), std::make_pair(16, 1));
    EXPECT_EQ(cells[4], std::make_pair(16, 16));
    EXPECT_EQ(cells.back(), std::make_pair(128, 16));
}

TEST(Sweep, IndivisibleCellsHoldNan) {
    auto config = train::parse_config_text(kConfig).config;
    config.anchors.resize(1);
    SweepOptions options;
    options.train_seeds = 2;
    options.eval_seeds = 1;
    options.iterations = 2;
    const auto rows = run_sweep(config, {6}, {3, 4}, options);
    ASSERT_EQ(rows.size(), 2U);
    EXPECT_TRUE(std::isfinite(rows[0].med_trans_mean));
    EXPECT_TRUE(std::isnan(rows[1].med_trans_mean));
    EXPECT_EQ(rows[0].med_mlp_mean, rows[1].med_mlp_mean);
    EXPECT_GE(rows[0].med_mlp_std, 0.0);
}

TEST(Sweep, RejectsDisconnectedModes) {
    const auto config = train::parse_config_text(kMoeConfig).config;
    EXPECT_THROW((void)run_sweep(config, {8}, {1}, {}), ValidationError);
}

TEST(Manifest, RoundTripsThroughText) {
    RunManifest e;
    e.command = "front";
    e.argv = "cpfl front --ckpt c --samples 3 --csv f.csv";
    e.tool_version = "0.1.0";
    e.checkpoint_version = 1;
    e.started = "2026-01-01T00:00:00Z";
    e.finished = "2026-01-01T00:00:01Z";
    e.inputs = {"c"};
    e.outputs = {"f.csv", "g.csv"};
    e.config = train::parse_config_text(kConfig).config;

    const fs::path dir = fs::temp_directory_path() / ("cpfl_manifest_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    append_manifest(dir, e);
    append_manifest(dir, e);
    const auto back = read_manifest(dir / "manifest");
    ASSERT_EQ(back.size(), 2U);
    EXPECT_EQ(back[1].argv, e.argv);
    EXPECT_EQ(back[1].outputs, e.outputs);
    EXPECT_EQ(train::format_config(*back[1].config), train::format_config(*e.config));
    EXPECT_EQ(format_manifest_entry(back[0]), format_manifest_entry(e));

    spit(dir / "manifest", format_manifest_entry(e).substr(0, 40));
    EXPECT_THROW((void)read_manifest(dir / "manifest"), TruncatedError);
    fs::remove_all(dir);
}

TEST(Manifest, TimestampIsUtcIso8601) {
    EXPECT_TRUE(std::regex_match(utc_timestamp(), std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));
}

} // namespace
} // namespace cpfl::cli
