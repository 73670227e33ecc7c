// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON endpoints over a loaded Model:
//
//   GET  /health      200 once a checkpoint is loaded, 503 before
//   GET  /model/info  model card
//   POST /infer       {"r": [...], "a"?: [...], "b"?: [...], "expert_id"?: k}
//   GET  /front       ?samples=N&anchor=K|all  or  ?samples=N&expert=K|&experts=all
//
// Every body carries "version". Errors are {"error": {"code", "message"}}.

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "cpfl/service/model.hpp"

namespace cpfl::service {

struct Response {
    int status = 200;
    std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

class Service {
public:
    explicit Service(bool oracle = true) : oracle_(oracle) {}

    /// Publishes a checkpoint; requests before this return 503.
    void load(train::Checkpoint ckpt);
    void load_file(const std::string& path);
    [[nodiscard]] bool ready() const;
    [[nodiscard]] std::shared_ptr<const Model> model() const;

    [[nodiscard]] Response health() const;
    [[nodiscard]] Response info() const;
    [[nodiscard]] Response infer(std::string_view body) const;
    [[nodiscard]] Response front(const QueryParams& params) const;

private:
    bool oracle_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Model> model_;
};

/// Plain-text form of an infer result, one `key = value` per line.
[[nodiscard]] std::string format_infer_record(const InferResult& result, int version);

/// Blocking HTTP front end for a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port; throws IoError.
    int bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cpfl::service
