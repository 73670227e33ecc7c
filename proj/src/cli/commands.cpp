// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cpfl/cli/manifest.hpp"
#include "cpfl/scalarization/chebyshev.hpp"
#include "cpfl/service/service.hpp"
#include "cpfl/trainer/checkpoint.hpp"
#include "cpfl/trainer/evaluation.hpp"
#include "cpfl/version.hpp"

namespace cpfl::cli {
namespace fs = std::filesystem;

namespace {

std::string quote(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

void print_error(std::ostream& err, std::string_view code, std::string_view message) {
    err << "error: code=" << code << " message=\"" << quote(message) << "\"\n";
}

std::vector<double> vector_flag(const std::string& name, const std::string& text) {
    try {
        return train::parse_vector(text);
    } catch (const ValidationError& e) {
        throw UsageError(fmt::format("--{}: {}", name, e.what()));
    }
}

std::vector<int> int_list_flag(const std::string& name, const std::string& text) {
    std::vector<int> out;
    for (double v : vector_flag(name, text)) {
        if (v != std::floor(v) || v < 1 || v > std::numeric_limits<int>::max()) {
            throw UsageError(fmt::format("--{}: '{}' is not a positive integer", name, v));
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    return out;
}

fs::path directory_of(const fs::path& file) {
    return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::string argv;
};

RunManifest start_manifest(const Context& ctx, std::string command) {
    RunManifest m;
    m.command = std::move(command);
    m.argv = ctx.argv;
    m.tool_version = std::string(kToolVersion);
    m.checkpoint_version = train::kCheckpointVersion;
    m.started = utc_timestamp();
    return m;
}

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<long> iterations;
    int threads = 0;
    bool quiet = false;
};

int cmd_train(const Context& ctx, const TrainArgs& args) {
    RunManifest manifest = start_manifest(ctx, "train");
    train::ParsedConfig parsed = train::parse_config_file(args.config);
    train::TrainConfig& config = parsed.config;
    if (args.seed) config.seed = *args.seed;
    if (args.iterations) config.iterations = *args.iterations;
    if (args.threads > 0) config.threads = args.threads;
    config.validate();
    for (const auto& note : parsed.defaults_applied) {
        if (!args.quiet) ctx.err << "default applied: " << note << '\n';
    }

    const fs::path dir = args.out_dir.empty() ? fs::path("runs") / fs::path(args.config).stem() : fs::path(args.out_dir);
    fs::create_directories(dir);
    const fs::path ckpt_path = dir / "checkpoint";

    train::LogFn log;
    if (!args.quiet) log = [&](std::string_view line) { ctx.err << line << '\n'; };
    const train::Checkpoint ckpt = train::train(config, log);
    train::save_checkpoint(ckpt, ckpt_path.string());

    manifest.config_path = args.config;
    manifest.inputs = {args.config};
    manifest.outputs = {ckpt_path.string()};
    manifest.config = config;
    manifest.finished = utc_timestamp();
    append_manifest(dir, manifest);

    ctx.out << "checkpoint = " << ckpt_path.string() << '\n';
    ctx.out << "manifest = " << (dir / "manifest").string() << '\n';
    ctx.out << fmt::format("wall_clock_s = {:.3f}\n", ckpt.wall_clock_s);
    return kExitOk;
}

struct EvalArgs {
    std::string ckpt;
    std::size_t rays = 3;
    std::size_t seeds = 30;
    std::string report;
};

int cmd_eval(const Context& ctx, const EvalArgs& args) {
    RunManifest manifest = start_manifest(ctx, "eval");
    const train::Checkpoint ckpt = train::load_checkpoint(args.ckpt);
    train::EvalOptions options;
    options.rays_per_anchor = args.rays;
    options.seeds = train::default_eval_seeds(ckpt.config.seed, args.seeds);
    const train::MetricsReport report = train::evaluate_run(ckpt, options);
    if (args.report.empty()) {
        train::write_report(ctx.out, report);
        return kExitOk;
    }
    {
        std::ofstream file = open_output(args.report);
        train::write_report(file, report);
        if (!file) throw IoError(fmt::format("write failed on {}", args.report));
    }
    manifest.inputs = {args.ckpt};
    manifest.outputs = {args.report};
    manifest.config = ckpt.config;
    manifest.finished = utc_timestamp();
    append_manifest(directory_of(args.report), manifest);
    ctx.out << "report = " << args.report << '\n';
    ctx.out << fmt::format("med_mean = {:.9g}\nhvd = {:.9g}\n", report.med_mean, report.hvd);
    return kExitOk;
}

struct FrontArgs {
    std::string ckpt;
    std::size_t samples = 0;
    std::string csv;
};

int cmd_front(const Context& ctx, const FrontArgs& args) {
    RunManifest manifest = start_manifest(ctx, "front");
    const train::Checkpoint ckpt = train::load_checkpoint(args.ckpt);
    const auto rows = front_rows(ckpt, args.samples);
    {
        std::ofstream file = open_output(args.csv);
        mop::write_front_csv(file, rows, static_cast<std::size_t>(ckpt.config.arch.m));
        if (!file) throw IoError(fmt::format("write failed on {}", args.csv));
    }
    manifest.inputs = {args.ckpt};
    manifest.outputs = {args.csv};
    manifest.config = ckpt.config;
    manifest.finished = utc_timestamp();
    append_manifest(directory_of(args.csv), manifest);
    ctx.out << "csv = " << args.csv << '\n' << "rows = " << rows.size() << '\n';
    return kExitOk;
}

struct InferArgs {
    std::string ckpt;
    std::string r;
    std::string a;
    std::string b;
    std::optional<long long> expert;
    bool no_oracle = false;
};

int cmd_infer(const Context& ctx, const InferArgs& args) {
    service::InferRequest req;
    req.r = vector_flag("r", args.r);
    if (!args.a.empty()) req.a = vector_flag("a", args.a);
    if (!args.b.empty()) req.b = vector_flag("b", args.b);
    req.expert_id = args.expert;
    const service::Model model(train::load_checkpoint(args.ckpt), !args.no_oracle);
    const service::InferResult result = model.infer(req);
    ctx.out << service::format_infer_record(result, model.checkpoint().version);
    return kExitOk;
}

struct ServeArgs {
    std::string ckpt;
    int port = 0;
    std::string bind = "127.0.0.1";
    bool no_oracle = false;
};

int cmd_serve(const Context& ctx, const ServeArgs& args) {
    service::Service svc(!args.no_oracle);
    service::HttpServer server(svc);
    const int port = server.bind(args.bind, args.port);
    ctx.out << fmt::format("listening on http://{}:{}\n", args.bind, port) << std::flush;

    std::optional<Error> failure;
    std::thread loader([&] {
        try {
            svc.load_file(args.ckpt);
            ctx.out << "ready\n" << std::flush;
        } catch (const Error& e) {
            failure.emplace(e);
            server.stop();
        }
    });
    server.run();
    loader.join();
    if (failure) {
        print_error(ctx.err, failure->kind(), failure->what());
        return kExitFailure;
    }
    return kExitOk;
}

struct SweepArgs {
    std::string config;
    std::string dims;
    std::string heads;
    std::string csv;
    SweepOptions options;
    bool quiet = false;
};

int cmd_sweep(const Context& ctx, const SweepArgs& args) {
    RunManifest manifest = start_manifest(ctx, "sweep");
    const std::vector<int> dims = int_list_flag("dims", args.dims);
    const std::vector<int> heads = int_list_flag("heads", args.heads);
    const train::TrainConfig config = train::parse_config_file(args.config).config;
    train::LogFn log;
    if (!args.quiet) log = [&](std::string_view line) { ctx.err << line << '\n'; };
    const auto rows = run_sweep(config, dims, heads, args.options, log);
    {
        std::ofstream file = open_output(args.csv);
        write_sweep_csv(file, rows);
        if (!file) throw IoError(fmt::format("write failed on {}", args.csv));
    }
    manifest.config_path = args.config;
    manifest.inputs = {args.config};
    manifest.outputs = {args.csv};
    manifest.config = config;
    manifest.finished = utc_timestamp();
    append_manifest(directory_of(args.csv), manifest);
    ctx.out << "csv = " << args.csv << '\n' << "rows = " << rows.size() << '\n';
    return kExitOk;
}

} // namespace

std::vector<mop::Point> front_rows(const train::Checkpoint& ckpt, std::size_t samples) {
    if (samples < 1) throw InvalidArgument("front needs at least one sample");
    const train::TrainConfig& c = ckpt.config;
    const mop::Problem problem = c.make_problem();
    const train::CheckpointPredictor predictor(ckpt);
    const std::size_t k = c.anchors.size();
    std::vector<mop::Point> rows;
    for (std::size_t comp = 0; comp < k; ++comp) {
        const std::size_t count = samples / k + (comp < samples % k ? 1 : 0);
        if (count == 0) continue;
        const auto rays = scal::preference_sweep(static_cast<std::size_t>(problem.m()), count);
        for (std::size_t i = 0; i < count; ++i) {
            // m = 3 lattices can exceed `count`; take an even stride.
            const auto& r = rays[i * rays.size() / count];
            rows.push_back(problem.evaluate(predictor.decision(r, c.anchors[comp].a, comp)));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const mop::Point& x, const mop::Point& y) { return x[0] < y[0]; });
    return rows;
}

std::vector<SweepRow> run_sweep(const train::TrainConfig& base, const std::vector<int>& dims,
                                const std::vector<int>& heads, const SweepOptions& options, const train::LogFn& log) {
    if (base.mode != train::Mode::connected) {
        throw ValidationError("sweep needs a connected-mode config (mlp or trans)");
    }
    if (dims.empty() || heads.empty()) throw InvalidArgument("sweep needs at least one d and one head count");
    if (options.train_seeds < 1) throw InvalidArgument("sweep needs at least one training seed");

    auto med_over_seeds = [&](train::TrainConfig config) {
        if (options.iterations > 0) config.iterations = options.iterations;
        config.validate();
        std::vector<double> meds;
        for (std::size_t s = 0; s < options.train_seeds; ++s) {
            config.seed = base.seed + s;
            const train::Checkpoint ckpt = train::train(config);
            train::EvalOptions eval;
            eval.rays_per_anchor = options.rays_per_anchor;
            eval.seeds = train::default_eval_seeds(config.seed, options.eval_seeds);
            meds.push_back(train::evaluate_run(ckpt, eval).med_mean);
        }
        return std::pair{mean_of(meds), std_of(meds)};
    };

    std::vector<SweepRow> rows;
    for (int d : dims) {
        train::TrainConfig mlp = base;
        mlp.arch.kind = hn::Kind::mlp;
        mlp.arch.d = d;
        const auto [mlp_mean, mlp_std] = med_over_seeds(mlp);
        if (log) log(fmt::format("sweep d={} mlp med={:.6g}", d, mlp_mean));
        for (int e : heads) {
            SweepRow row{d, e, std::nan(""), std::nan(""), mlp_mean, mlp_std};
            if (d % e == 0) {
                train::TrainConfig trans = base;
                trans.arch.kind = hn::Kind::trans;
                trans.arch.d = d;
                trans.arch.heads = e;
                std::tie(row.med_trans_mean, row.med_trans_std) = med_over_seeds(trans);
            }
            if (log) log(fmt::format("sweep d={} heads={} trans med={:.6g}", d, e, row.med_trans_mean));
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "d,heads,med_trans_mean,med_trans_std,med_mlp_mean,med_mlp_std\n";
    for (const SweepRow& r : rows) {
        out << fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.d, r.heads, r.med_trans_mean, r.med_trans_std,
                           r.med_mlp_mean, r.med_mlp_std);
    }
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Preference-conditioned Pareto front learning", "cpfl"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train hypernetworks from a config file");
    train_cmd->add_option("--config", train_args.config, "Config path")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", train_args.seed, "Override the config seed");
    train_cmd->add_option("--out", train_args.out_dir, "Run directory (default runs/<config stem>)");
    train_cmd->add_option("--iterations", train_args.iterations, "Override the iteration count")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--threads", train_args.threads, "Anchors trained concurrently")->check(CLI::PositiveNumber);
    train_cmd->add_flag("--quiet", train_args.quiet, "No progress log");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Compute MED, HV and HVD of a checkpoint");
    eval_cmd->add_option("--ckpt", eval_args.ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--rays", eval_args.rays, "Rays per anchor and seed")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seeds", eval_args.seeds, "Evaluation seeds")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--report", eval_args.report, "Report path (default: stdout)");

    FrontArgs front_args;
    auto* front_cmd = app.add_subcommand("front", "Write predicted front points as CSV");
    front_cmd->add_option("--ckpt", front_args.ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
    front_cmd->add_option("--samples", front_args.samples, "Number of rows")->required()->check(CLI::PositiveNumber);
    front_cmd->add_option("--csv", front_args.csv, "Output CSV path")->required();

    InferArgs infer_args;
    auto* infer_cmd = app.add_subcommand("infer", "Map one preference to a solution");
    infer_cmd->add_option("--ckpt", infer_args.ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--r", infer_args.r, "Preference vector, comma separated")->required();
    infer_cmd->add_option("--a", infer_args.a, "Lower bound (anchor)");
    infer_cmd->add_option("--b", infer_args.b, "Upper bound");
    infer_cmd->add_option("--expert", infer_args.expert, "Expert id (moe checkpoints)");
    infer_cmd->add_flag("--no-oracle", infer_args.no_oracle, "Skip the true-front target");

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Serve a checkpoint over HTTP");
    serve_cmd->add_option("--ckpt", serve_args.ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", serve_args.port, "TCP port (0 picks one)")->required()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--bind", serve_args.bind, "Bind address");
    serve_cmd->add_flag("--no-oracle", serve_args.no_oracle, "Skip the true-front target");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "MED over a grid of widths and head counts");
    sweep_cmd->add_option("--config", sweep_args.config, "Config path")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--dims", sweep_args.dims, "Widths, comma separated")->required();
    sweep_cmd->add_option("--heads", sweep_args.heads, "Head counts, comma separated")->required();
    sweep_cmd->add_option("--csv", sweep_args.csv, "Output CSV path")->required();
    sweep_cmd->add_option("--seeds", sweep_args.options.train_seeds, "Training seeds per cell")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--eval-seeds", sweep_args.options.eval_seeds, "Evaluation seeds per model")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--iterations", sweep_args.options.iterations, "Override the iteration count")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--quiet", sweep_args.quiet, "No progress log");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(err, "usage", e.what());
        return kExitUsage;
    }

    const Context ctx{out, err, fmt::format("cpfl {}", fmt::join(args, " "))};
    try {
        if (*train_cmd) return cmd_train(ctx, train_args);
        if (*eval_cmd) return cmd_eval(ctx, eval_args);
        if (*front_cmd) return cmd_front(ctx, front_args);
        if (*infer_cmd) return cmd_infer(ctx, infer_args);
        if (*serve_cmd) return cmd_serve(ctx, serve_args);
        if (*sweep_cmd) return cmd_sweep(ctx, sweep_args);
    } catch (const UsageError& e) {
        print_error(err, e.kind(), e.what());
        return kExitUsage;
    } catch (const service::RequestError& e) {
        print_error(err, e.kind(), e.what());
        return e.status() == 400 ? kExitUsage : kExitFailure;
    } catch (const Error& e) {
        print_error(err, e.kind(), e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        print_error(err, "internal", e.what());
        return kExitFailure;
    }
    print_error(err, "usage", "no command given");
    return kExitUsage;
}

} // namespace cpfl::cli
