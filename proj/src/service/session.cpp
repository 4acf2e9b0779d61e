// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <tuple>

#include "molmimo/error.hpp"
#include "molmimo/service.hpp"

namespace molmimo {

namespace {

int kind_rank(std::string_view kind) {
    if (kind == "spray") return 0;
    if (kind == "sample") return 1;
    if (kind == "symbol") return 2;
    if (kind == "char") return 3;
    return 4;
}

using Clock = std::chrono::steady_clock;

} // namespace

json to_json(const LinkEvent& e) { return {{"seq", e.seq}, {"kind", e.kind}, {"t_sim", e.t_sim}, {"data", e.data}}; }

std::vector<LinkEvent> build_events(const LinkRun& run, double max_sample_rate) {
    if (!(max_sample_rate > 0.0)) fail(ErrorCode::InvalidParameter, "sample event rate must be > 0");
    const RunConfig& cfg = run.config;
    const LinkReport& rep = run.report;
    const TimingConfig& timing = cfg.timing;
    std::vector<LinkEvent> ev;

    for (const auto& s : run.schedule) ev.push_back({0, "spray", s.time, {{"tx", s.link}, {"molecules", s.molecules}}});

    // Slot k of the payload closes at the end of frame slot preamble + k.
    auto slot_end = [&](std::size_t k) {
        return rep.frame_start - timing.guard +
               static_cast<double>(timing.preamble_slots + k + 1) * timing.symbol_period;
    };

    double last_decision = 0.0;
    for (const auto& d : rep.slots) {
        const double t = slot_end(d.slot);
        last_decision = std::max(last_decision, t);
        ev.push_back({0,
                      "symbol",
                      t,
                      {{"rx", d.rx}, {"slot", d.slot}, {"bit", d.bit}, {"statistic", d.statistic},
                       {"threshold", d.threshold}}});
    }

    const std::size_t streams = rep.decoded_per_rx.size();
    for (std::size_t r = 0; r < streams; ++r) {
        const std::string& text = rep.decoded_per_rx[r];
        for (std::size_t k = 0; k < text.size(); ++k) {
            const std::size_t last_slot = (k + 1) * CodecTable::bits_per_char - 1;
            ev.push_back({0,
                          "char",
                          slot_end(last_slot),
                          {{"rx", r}, {"position", k * streams + r}, {"char", std::string(1, text[k])}}});
        }
    }

    double end = last_decision;
    if (rep.slots.empty())
        for (const auto& s : run.schedule) end = std::max(end, s.time + timing.symbol_period);

    if (!run.voltages.empty()) {
        const double rate = 1.0 / run.voltages.front().grid.step;
        const auto stride = static_cast<std::size_t>(std::max(1.0, std::ceil(rate / max_sample_rate - 1e-9)));
        for (std::size_t r = 0; r < run.voltages.size(); ++r) {
            const auto& v = run.voltages[r];
            for (std::size_t i = 0; i < v.values.size(); i += stride) {
                const double t = v.grid.time(i);
                if (t > end + 1e-9) break;
                ev.push_back({0, "sample", t, {{"rx", r}, {"v", v.values[i]}}});
            }
        }
    }

    std::stable_sort(ev.begin(), ev.end(), [](const LinkEvent& a, const LinkEvent& b) {
        return std::make_tuple(a.t_sim, kind_rank(a.kind)) < std::make_tuple(b.t_sim, kind_rank(b.kind));
    });
    const double done_at = ev.empty() ? 0.0 : ev.back().t_sim;
    ev.push_back({0, "frame_done", done_at, to_json(rep)});
    for (std::size_t i = 0; i < ev.size(); ++i) ev[i].seq = i;
    return ev;
}

std::string_view state_name(SessionState s) {
    switch (s) {
    case SessionState::Idle: return "idle";
    case SessionState::Transmitting: return "transmitting";
    case SessionState::Done: return "done";
    case SessionState::Failed: return "failed";
    }
    return "unknown";
}

struct SessionManager::Session {
    std::string id;
    RunConfig config;
    double time_scale = 60.0;

    mutable std::mutex m;
    mutable std::condition_variable cv;
    SessionState state = SessionState::Idle;
    bool simulated = false;
    std::vector<LinkEvent> log;
    Clock::time_point origin;       // wall time of t_sim = 0
    std::optional<LinkReport> report;
    std::string error;

    // Number of events whose release time has passed. Call with `m` held.
    std::size_t released(Clock::time_point now) const {
        if (!simulated) return 0;
        if (time_scale <= 0.0) return log.size();
        const double sim_now = std::chrono::duration<double>(now - origin).count() * time_scale;
        const auto it = std::upper_bound(log.begin(), log.end(), sim_now,
                                         [](double t, const LinkEvent& e) { return t < e.t_sim; });
        return static_cast<std::size_t>(it - log.begin());
    }

    Clock::time_point release_time(const LinkEvent& e) const {
        return origin + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(e.t_sim / time_scale));
    }

    // Promotes a fully released transmission to done. Call with `m` held.
    void refresh(Clock::time_point now) {
        if (state == SessionState::Transmitting && simulated && released(now) == log.size())
            state = SessionState::Done;
    }
};

SessionManager::SessionManager(ServiceOptions options) : options_(options) {
    if (!std::isfinite(options_.time_scale) || options_.time_scale < 0.0)
        fail(ErrorCode::InvalidParameter, "time scale must be >= 0");
    if (!(options_.max_sample_rate > 0.0)) fail(ErrorCode::InvalidParameter, "sample event rate must be > 0");
}

SessionManager::~SessionManager() {
    std::vector<std::jthread> workers;
    {
        std::lock_guard lock(mutex_);
        workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
}

std::string SessionManager::create(const json& overrides) {
    json body = overrides.is_null() ? json::object() : overrides;
    if (!body.is_object()) fail(ErrorCode::InvalidConfig, "session overrides must be a JSON object");
    double scale = options_.time_scale;
    if (auto it = body.find("time_scale"); it != body.end()) {
        if (!it->is_number() || !std::isfinite(it->get<double>()) || it->get<double>() < 0.0)
            fail(ErrorCode::InvalidConfig, "'time_scale' must be a number >= 0");
        scale = it->get<double>();
        body.erase(it);
    }
    RunConfig cfg = config_from_json(body);
    cfg.validate();

    auto s = std::make_shared<Session>();
    s->config = std::move(cfg);
    s->time_scale = scale;
    std::lock_guard lock(mutex_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_.emplace(s->id, s);
    return s->id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::NotFound, "no session '" + id + "'");
    return it->second;
}

void SessionManager::submit(const std::string& id, const std::string& text) {
    auto s = find(id);
    {
        std::lock_guard lock(s->m);
        if (s->state != SessionState::Idle)
            fail(ErrorCode::Conflict, "session is " + std::string(state_name(s->state)) + "; one message per session");
        encode_text(text, s->config.mode);   // rejects empty and unsupported text before any state change
        s->config.message = text;
        s->state = SessionState::Transmitting;
    }
    std::lock_guard lock(mutex_);
    workers_.emplace_back([this, s] { execute(s); });
}

void SessionManager::execute(std::shared_ptr<Session> s) {
    RunConfig cfg;
    {
        std::lock_guard lock(s->m);
        cfg = s->config;
    }
    std::vector<LinkEvent> log;
    std::optional<LinkReport> report;
    std::string error;
    try {
        const LinkRun run = run_link_detailed(cfg);
        log = build_events(run, options_.max_sample_rate);
        report = run.report;
    } catch (const std::exception& e) {
        error = e.what();
    }
    std::lock_guard lock(s->m);
    if (report) {
        s->log = std::move(log);
        s->report = std::move(report);
        s->simulated = true;
        s->origin = Clock::now();
        s->refresh(s->origin);
    } else {
        s->error = error;
        s->state = SessionState::Failed;
    }
    s->cv.notify_all();
}

SessionStatus SessionManager::status(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->m);
    const auto now = Clock::now();
    s->refresh(now);
    SessionStatus out;
    out.id = s->id;
    out.state = s->state;
    out.config = s->config;
    if (s->state == SessionState::Done) out.report = s->report;
    out.error = s->error;
    out.events_released = s->released(now);
    return out;
}

EventBatch SessionManager::events(const std::string& id, std::uint64_t from, std::chrono::milliseconds wait) const {
    auto s = find(id);
    const auto deadline = Clock::now() + wait;
    std::unique_lock lock(s->m);
    while (true) {
        const auto now = Clock::now();
        s->refresh(now);
        const std::size_t avail = s->released(now);
        EventBatch b;
        b.state = s->state;
        for (std::size_t i = static_cast<std::size_t>(std::min<std::uint64_t>(from, avail)); i < avail; ++i)
            b.events.push_back(s->log[i]);
        b.closed = (s->state == SessionState::Done || s->state == SessionState::Failed);
        if (!b.events.empty() || b.closed || now >= deadline) return b;

        auto until = deadline;
        if (s->simulated && avail < s->log.size()) until = std::min(until, s->release_time(s->log[avail]));
        s->cv.wait_until(lock, until);
    }
}

std::size_t SessionManager::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

} // namespace molmimo
