// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "molmimo/config.hpp"
#include "molmimo/harness.hpp"

namespace molmimo {

struct LinkEvent {
    std::uint64_t seq = 0;
    std::string kind;    // spray | sample | symbol | char | frame_done
    double t_sim = 0.0;  // s
    json data;
};

json to_json(const LinkEvent& e);

/// The complete event log of a finished run. Pure: identical runs give
/// identical logs. Samples are decimated to at most `max_sample_rate` per
/// simulated second and stop at the last decision.
std::vector<LinkEvent> build_events(const LinkRun& run, double max_sample_rate = 10.0);

enum class SessionState { Idle, Transmitting, Done, Failed };

std::string_view state_name(SessionState s);

struct ServiceOptions {
    double time_scale = 60.0;       // simulated seconds per wall second; 0 releases events at once
    double max_sample_rate = 10.0;  // sample events per simulated second
};

struct EventBatch {
    std::vector<LinkEvent> events;
    bool closed = false;            // terminal state and nothing left past these events
    SessionState state = SessionState::Idle;
};

struct SessionStatus {
    std::string id;
    SessionState state = SessionState::Idle;
    RunConfig config;
    std::optional<LinkReport> report;
    std::string error;              // set when failed
    std::uint64_t events_released = 0;
};

/// Owns every session. A submitted message is simulated to completion on a
/// worker thread, then its log is released on the scaled clock.
class SessionManager {
public:
    explicit SessionManager(ServiceOptions options = {});
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// `overrides` may carry "time_scale" next to RunConfig keys.
    std::string create(const json& overrides);
    void submit(const std::string& id, const std::string& text);
    SessionStatus status(const std::string& id) const;

    /// Released events with seq >= from. Blocks up to `wait` when none are
    /// available yet and the session is still open.
    EventBatch events(const std::string& id, std::uint64_t from, std::chrono::milliseconds wait) const;

    std::size_t size() const;

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    void execute(std::shared_ptr<Session> s);

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::vector<std::jthread> workers_;
    std::uint64_t next_id_ = 1;
};

class HttpServer;

/// HTTP front end. Routes:
///   POST /api/sessions                 body: config overrides -> {id}
///   POST /api/sessions/{id}/message    body: {text}
///   GET  /api/sessions/{id}/report
///   GET  /api/sessions/{id}/events?from=N   text/event-stream
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();

    /// Binds and serves on a background thread; returns the bound port
    /// (pass 0 for an ephemeral one).
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    SessionManager& sessions() { return manager_; }

private:
    SessionManager manager_;
    std::unique_ptr<HttpServer> http_;
    std::thread thread_;
};

} // namespace molmimo
