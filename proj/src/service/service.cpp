// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpfl/service/service.hpp"

#include <charconv>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <httplib.h>
#include <json.hpp>

#include "cpfl/hypernet/architecture.hpp"
#include "cpfl/trainer/checkpoint.hpp"

namespace cpfl::service {
namespace {

using nlohmann::json;

Response reply(int status, json body, int version) {
    body["version"] = version;
    return {status, body.dump()};
}

Response error_reply(int status, std::string_view code, std::string_view message, int version) {
    return reply(status, json{{"error", {{"code", code}, {"message", message}}}}, version);
}

std::vector<double> number_list(const json& body, const char* key) {
    const json& v = body.at(key);
    if (!v.is_array()) throw RequestError(400, "malformed", fmt::format("{} must be a list of numbers", key));
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) throw RequestError(400, "malformed", fmt::format("{} must be a list of numbers", key));
        out.push_back(e.get<double>());
    }
    return out;
}

InferRequest parse_infer(std::string_view text) {
    json body = json::parse(text, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw RequestError(400, "malformed", "body is not a JSON object");
    if (!body.contains("r")) throw RequestError(400, "malformed", "missing field r");
    InferRequest req;
    req.r = number_list(body, "r");
    if (body.contains("a") && !body["a"].is_null()) req.a = number_list(body, "a");
    if (body.contains("b") && !body["b"].is_null()) req.b = number_list(body, "b");
    if (body.contains("expert_id") && !body["expert_id"].is_null()) {
        const json& e = body["expert_id"];
        if (!e.is_number_integer()) throw RequestError(400, "malformed", "expert_id must be an integer");
        req.expert_id = e.get<long long>();
    }
    return req;
}

json to_json(const InferResult& r) {
    json out{{"r", r.r},         {"a", r.a},
             {"b", r.b},         {"component", r.component},
             {"x", r.x},         {"f", r.f},
             {"chebyshev", r.chebyshev}, {"feasible", r.feasible},
             {"lower_ok", r.lower_ok},   {"upper_ok", r.upper_ok}};
    if (r.expert_id) out["expert_id"] = *r.expert_id;
    if (r.target) {
        out["target"] = r.target->f;
        out["med_point_error"] = r.target->med_point_error;
    }
    return out;
}

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw RequestError(400, "malformed", fmt::format("{} must be a non-negative integer, got '{}'", key, text));
    }
    return v;
}

template <typename Fn>
Response guarded(int version, Fn&& fn) {
    try {
        return fn();
    } catch (const RequestError& e) {
        return error_reply(e.status(), e.kind(), e.what(), version);
    } catch (const Error& e) {
        return error_reply(500, e.kind(), e.what(), version);
    } catch (const std::exception& e) {
        return error_reply(500, "internal", e.what(), version);
    }
}

} // namespace

void Service::load(train::Checkpoint ckpt) {
    auto model = std::make_shared<const Model>(std::move(ckpt), oracle_);
    std::lock_guard lock(mutex_);
    model_ = std::move(model);
}

void Service::load_file(const std::string& path) { load(train::load_checkpoint(path)); }

bool Service::ready() const { return model() != nullptr; }

std::shared_ptr<const Model> Service::model() const {
    std::lock_guard lock(mutex_);
    return model_;
}

Response Service::health() const {
    const auto model = this->model();
    if (!model) return error_reply(503, "loading", "checkpoint not loaded yet", train::kCheckpointVersion);
    return reply(200, json{{"status", "ok"}}, model->checkpoint().version);
}

Response Service::info() const {
    const auto model = this->model();
    if (!model) return error_reply(503, "loading", "checkpoint not loaded yet", train::kCheckpointVersion);
    const train::Checkpoint& ckpt = model->checkpoint();
    const train::TrainConfig& c = ckpt.config;
    json anchors = json::array();
    for (const auto& box : c.anchors) anchors.push_back({{"a", box.a}, {"b", box.b}});
    std::size_t total = 0;
    for (const auto& bundle : ckpt.bundles) total += bundle.size();
    json body{{"problem", model->problem().name()},
              {"mode", train::mode_name(c.mode)},
              {"schedule", train::schedule_name(c.schedule)},
              {"kind", hn::kind_name(c.arch.kind)},
              {"activation", hn::activation_name(c.arch.activation)},
              {"constraint", hn::constraint_name(c.arch.constraint)},
              {"m", c.arch.m},
              {"n", c.arch.n},
              {"d", c.arch.d},
              {"e", c.arch.heads},
              {"experts", c.arch.experts},
              {"alpha", c.alpha},
              {"lr", c.lr},
              {"iterations", c.iterations},
              {"seed", c.seed},
              {"anchors", anchors},
              {"bundles", ckpt.bundles.size()},
              {"param_count", hn::param_count(c.arch)},
              {"param_count_total", total}};
    return reply(200, body, ckpt.version);
}

Response Service::infer(std::string_view body) const {
    const auto model = this->model();
    if (!model) return error_reply(503, "loading", "checkpoint not loaded yet", train::kCheckpointVersion);
    const int version = model->checkpoint().version;
    return guarded(version, [&] { return reply(200, to_json(model->infer(parse_infer(body))), version); });
}

Response Service::front(const QueryParams& params) const {
    const auto model = this->model();
    if (!model) return error_reply(503, "loading", "checkpoint not loaded yet", train::kCheckpointVersion);
    const int version = model->checkpoint().version;
    return guarded(version, [&] {
        const std::size_t samples = parse_count("samples", param(params, "samples").value_or("100"));
        const auto expert = param(params, "expert");
        const auto experts = param(params, "experts");
        const auto anchor = param(params, "anchor");

        std::vector<std::size_t> components;
        auto all = [&] {
            for (std::size_t k = 0; k < model->components(); ++k) components.push_back(k);
        };
        if (model->is_moe()) {
            if (anchor) throw RequestError(422, "expert_required", "moe checkpoints are swept by expert, not anchor");
            if (experts && *experts == "all") {
                all();
            } else if (experts) {
                throw RequestError(400, "malformed", "experts only accepts 'all'");
            } else if (expert) {
                components.push_back(parse_count("expert", *expert));
            } else {
                throw RequestError(422, "expert_required", "moe checkpoints need expert=K or experts=all");
            }
        } else {
            if (expert || experts) {
                throw RequestError(409, "expert_on_non_moe", "expert sweep requested on a non-moe checkpoint");
            }
            if (anchor && *anchor == "all") {
                all();
            } else {
                components.push_back(anchor ? parse_count("anchor", *anchor) : 0);
            }
        }

        json points = json::array();
        for (std::size_t k : components) {
            for (const FrontEntry& e : model->front(samples, k)) {
                points.push_back({{"r", e.r}, {"f", e.f}, {"component", e.component}, {"feasible", e.feasible}});
            }
        }
        return reply(200, json{{"m", model->m()}, {"samples", samples}, {"points", std::move(points)}}, version);
    });
}

std::string format_infer_record(const InferResult& r, int version) {
    auto flags = [](const std::vector<bool>& v) {
        std::vector<std::string_view> s;
        for (bool b : v) s.push_back(b ? "true" : "false");
        return fmt::format("{}", fmt::join(s, ", "));
    };
    std::string out = "[infer]\n";
    out += fmt::format("version = {}\n", version);
    out += fmt::format("r = {}\n", fmt::join(r.r, ", "));
    out += fmt::format("a = {}\n", fmt::join(r.a, ", "));
    out += fmt::format("b = {}\n", fmt::join(r.b, ", "));
    out += fmt::format("component = {}\n", r.component);
    if (r.expert_id) out += fmt::format("expert_id = {}\n", *r.expert_id);
    out += fmt::format("x = {}\n", fmt::join(r.x, ", "));
    out += fmt::format("f = {}\n", fmt::join(r.f, ", "));
    out += fmt::format("chebyshev = {}\n", r.chebyshev);
    out += fmt::format("feasible = {}\n", r.feasible);
    out += fmt::format("lower_ok = {}\n", flags(r.lower_ok));
    out += fmt::format("upper_ok = {}\n", flags(r.upper_ok));
    if (r.target) {
        out += fmt::format("target = {}\n", fmt::join(r.target->f, ", "));
        out += fmt::format("med_point_error = {}\n", r.target->med_point_error);
    }
    return out;
}

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Service& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
}

QueryParams to_params(const httplib::Params& p) { return QueryParams(p.begin(), p.end()); }

} // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    Service& svc = impl_->service;
    srv.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
    srv.Get("/model/info", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.info()); });
    srv.Post("/infer", [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.infer(req.body)); });
    srv.Get("/front", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.front(to_params(req.params)));
    });
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    // SO_REUSEPORT (the library default) would let a second server share the port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        send(res, error_reply(res.status, "http", httplib::status_message(res.status), train::kCheckpointVersion));
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    int bound = -1;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) throw IoError(fmt::format("cannot bind {}:{}", host, port));
    return bound;
}

void HttpServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace cpfl::service
