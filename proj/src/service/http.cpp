// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cctype>
#include <charconv>

#include "httplib.h"
#include "molmimo/error.hpp"
#include "molmimo/service.hpp"

namespace molmimo {

namespace {

// "UnsupportedCharacter" -> "unsupported_character"
std::string slug(std::string_view camel) {
    std::string out;
    for (char c : camel) {
        if (std::isupper(static_cast<unsigned char>(c))) {
            if (!out.empty()) out.push_back('_');
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

int http_status(ErrorCode c) {
    switch (c) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Internal:
    case ErrorCode::Io: return 500;
    default: return 400;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view error, std::string_view detail) {
    send_json(res, status, {{"error", error}, {"detail", detail}});
}

json parse_body(const httplib::Request& req, ErrorCode on_error) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        fail(on_error, std::string("body is not valid JSON: ") + e.what());
    }
}

template <class F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const Error& e) {
        send_error(res, http_status(e.code()), slug(error_name(e.code())), e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "invalid_config", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

json status_json(const SessionStatus& s) {
    return {
        {"id", s.id},
        {"state", state_name(s.state)},
        {"events_released", s.events_released},
        {"config", to_json(s.config)},
        {"report", s.report ? to_json(*s.report) : json(nullptr)},
        {"error", s.error.empty() ? json(nullptr) : json(s.error)},
    };
}

std::string sse_event(const LinkEvent& e) {
    return "id: " + std::to_string(e.seq) + "\ndata: " + to_json(e).dump() + "\n\n";
}

std::string sse_end(SessionState state, std::uint64_t next) {
    const json body{{"state", state_name(state)}, {"next", next}};
    return "event: end\ndata: " + body.dump() + "\n\n";
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return !s.empty() && r.ec == std::errc() && r.ptr == end;
}

} // namespace

class HttpServer {
public:
    explicit HttpServer(SessionManager& m) : manager_(m) { routes(); }

    httplib::Server server;
    std::atomic<bool> stopping{false};

private:
    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

        server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = manager_.create(parse_body(req, ErrorCode::InvalidConfig));
                send_json(res, 201, {{"id", id}});
            });
        });

        server.Post(R"(/api/sessions/([^/]+)/message)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req, ErrorCode::InvalidParameter);
                const auto it = body.find("text");
                if (!body.is_object() || it == body.end() || !it->is_string())
                    fail(ErrorCode::InvalidParameter, "body must be {\"text\": string}");
                const std::string id = req.matches[1];
                manager_.submit(id, it->get<std::string>());
                send_json(res, 202, {{"id", id}, {"state", "transmitting"}});
            });
        });

        server.Get(R"(/api/sessions/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, status_json(manager_.status(req.matches[1]))); });
        });

        server.Get(R"(/api/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                std::uint64_t from = 0;
                if (req.has_param("from")) {
                    if (!parse_u64(req.get_param_value("from"), from))
                        fail(ErrorCode::InvalidParameter, "'from' must be a non-negative integer");
                } else if (req.has_header("Last-Event-ID")) {
                    std::uint64_t last = 0;
                    if (parse_u64(req.get_header_value("Last-Event-ID"), last)) from = last + 1;
                }
                manager_.status(id);   // unknown ids fail here, before the stream opens
                res.set_header("Cache-Control", "no-cache");
                auto next = std::make_shared<std::uint64_t>(from);
                res.set_chunked_content_provider(
                    "text/event-stream", [this, id, next](std::size_t, httplib::DataSink& sink) {
                        if (stopping) return false;
                        const EventBatch b = manager_.events(id, *next, std::chrono::milliseconds(250));
                        std::string chunk;
                        for (const auto& e : b.events) chunk += sse_event(e);
                        if (!b.events.empty()) *next = b.events.back().seq + 1;
                        if (b.closed) chunk += sse_end(b.state, *next);
                        // A comment line keeps idle connections alive and detects departed clients.
                        if (chunk.empty()) chunk = ": idle\n\n";
                        if (!sink.write(chunk.data(), chunk.size())) return false;
                        if (b.closed) sink.done();
                        return true;
                    });
            });
        });

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                if (res.status == 404)
                    send_error(res, 404, "not_found", "no such route");
                else
                    send_error(res, res.status, "http_error", httplib::status_message(res.status));
            }
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            send_error(res, 500, "internal", "unhandled exception");
        });
    }

    SessionManager& manager_;
};

Service::Service(ServiceOptions options)
    : manager_(options), http_(std::make_unique<HttpServer>(manager_)) {}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0)
        bound = http_->server.bind_to_any_port(host);
    else if (!http_->server.bind_to_port(host, port))
        bound = -1;
    if (bound < 0) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    http_->server.wait_until_ready();
    return bound;
}

void Service::run(const std::string& host, int port) {
    if (!http_->server.listen(host, port)) fail(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
    http_->stopping = true;
    http_->server.stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace molmimo
