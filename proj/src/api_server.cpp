// Copyright 2026 the squatwatch authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "squatwatch/api_server.hpp"

#include <spdlog/spdlog.h>

#include <thread>

#include "httplib.h"
#include "squatwatch/errors.hpp"
#include "squatwatch/text.hpp"

namespace squatwatch {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxPageSize = 1000;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::AlertNotFound: return 404;
        case ErrorCode::InvalidTransition: return 409;
        case ErrorCode::InvalidArgument:
        case ErrorCode::MalformedName:
        case ErrorCode::UnknownRegistry: return 400;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, json{{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
    }
    return j[key].get<std::string>();
}

std::size_t size_param(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        x = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size() || v[0] == '-') {
        throw Error(ErrorCode::InvalidArgument, std::string("parameter '") + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(x);
}

json allowlist_json(const AllowLists& l) {
    return json{{"organization", l.organizations},
                {"mirror_domain", l.mirror_domains},
                {"customer_package", l.customer_packages},
                {"denied_package", l.denied_packages}};
}

}  // namespace

struct ApiServer::Impl {
    AlertStore& alerts;
    MetadataStore& store;
    httplib::Server server;
    std::thread thread;
    int port = -1;

    Impl(AlertStore& a, MetadataStore& s) : alerts(a), store(s) {
        // Without SO_REUSEPORT a second listener on a busy port fails to bind.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
    }

    template <class Fn>
    httplib::Server::Handler guarded(Fn fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, http_status(e.code()), e.code_name(), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    }

    void routes() {
        server.Get("/api/v1/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send_json(res, 200, json{{"status", "ok"}, {"alerts", alerts.size()}});
                   }));

        server.Get("/api/v1/alerts", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       AlertQuery q;
                       if (req.has_param("status")) q.status = parse_alert_status(req.get_param_value("status"));
                       if (req.has_param("registry")) q.registry = parse_registry(req.get_param_value("registry"));
                       if (req.has_param("category")) {
                           const auto c = parse_category(req.get_param_value("category"));
                           if (!c) {
                               throw Error(ErrorCode::InvalidArgument,
                                           "unknown category '" + req.get_param_value("category") + "'");
                           }
                           q.category = *c;
                       }
                       q.limit = size_param(req, "limit", q.limit);
                       q.offset = size_param(req, "offset", 0);
                       if (q.limit > kMaxPageSize) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "limit must be at most " + std::to_string(kMaxPageSize));
                       }
                       const AlertPage page = alerts.list(q);
                       send_json(res, 200, json{{"alerts", page.alerts}, {"total", page.total}});
                   }));

        server.Get(R"(/api/v1/alerts/([0-9A-Za-z_-]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, alerts.get(req.matches[1]));
                   }));

        server.Post(R"(/api/v1/alerts/([0-9A-Za-z_-]+)/verdict)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.matches[1];
                        const json body = parse_body(req);
                        const AlertStatus to = parse_alert_status(string_field(body, "status"));
                        std::optional<std::string> note;
                        if (body.contains("note") && !body["note"].is_null()) note = string_field(body, "note");
                        std::optional<AllowListAddition> add;
                        if (body.contains("add_to_allowlist") && !body["add_to_allowlist"].is_null()) {
                            const json& a = body["add_to_allowlist"];
                            const Alert current = alerts.get(id);
                            if (a.is_string()) {
                                add = implied_allowlist(current, parse_allowlist_kind(a.get<std::string>()));
                            } else if (a.is_object()) {
                                const auto kind = parse_allowlist_kind(string_field(a, "kind"));
                                add = a.contains("value") ? AllowListAddition{kind, string_field(a, "value")}
                                                          : implied_allowlist(current, kind);
                            } else {
                                throw Error(ErrorCode::InvalidArgument,
                                            "add_to_allowlist must be a kind or {kind, value}");
                            }
                        }
                        send_json(res, 200, alerts.transition(id, to, std::move(note), std::move(add), &store));
                    }));

        server.Get("/api/v1/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json s = alerts.stats();
                       const AllowLists l = store.allow_lists();
                       s["allowlist"] = json{{"organization", l.organizations.size()},
                                             {"mirror_domain", l.mirror_domains.size()},
                                             {"customer_package", l.customer_packages.size()},
                                             {"denied_package", l.denied_packages.size()}};
                       send_json(res, 200, s);
                   }));

        server.Post("/api/v1/allowlist", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const json body = parse_body(req);
                        const auto kind = parse_allowlist_kind(string_field(body, "kind"));
                        const auto action = body.contains("action")
                                                ? parse_allowlist_action(string_field(body, "action"))
                                                : AllowListAction::Add;
                        send_json(res, 200,
                                  allowlist_json(store.update_allowlist(kind, string_field(body, "value"), action)));
                    }));

        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                send_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
            }
        });
    }
};

ApiServer::ApiServer(AlertStore& alerts, MetadataStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(alerts, store)) {
    impl_->routes();
    if (static_dir && !impl_->server.set_mount_point("/", static_dir->string())) {
        throw Error(ErrorCode::IoFailure, "static directory '" + static_dir->string() + "' not found");
    }
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw Error(ErrorCode::PortInUse, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->port = bound;
    return bound;
}

void ApiServer::start() {
    if (impl_->port < 0) throw Error(ErrorCode::InvalidArgument, "server is not bound");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::listen() {
    if (impl_->port < 0) throw Error(ErrorCode::InvalidArgument, "server is not bound");
    spdlog::info("serving on port {}", impl_->port);
    impl_->server.listen_after_bind();
}

void ApiServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const { return impl_->port; }

}  // namespace squatwatch
