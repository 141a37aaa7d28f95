#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "servsim/types.hpp"

namespace servsim {

enum class EventKind {
    RequestArrival,
    ColdStartComplete,
    ExecutionComplete,
    TtlExpiry,
    ExecutionTimeout,
    InactivityCheck,
    NodeProvisioned,
    NodeFailed,
    Command,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct SimEvent {
    EventId id = 0;
    SimTime time = 0;
    EventKind kind = EventKind::Command;
    EntityRef subject;
    /// Free-form payload: function type for arrivals, JSON for commands.
    std::string detail;

    friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

/// One newline-delimited JSON record per event; `seq` is the log position.
std::string to_ndjson(const SimEvent& ev, std::size_t seq);

/// Discrete-event kernel: virtual clock, future-event set ordered by
/// (time, id), tombstone cancellation and an append-only log of processed
/// events.
class Kernel {
public:
    /// Receives the logged copy of each event; may fill in `subject`.
    using Handler = std::function<void(SimEvent&)>;

    Kernel() = default;
    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    void set_handler(Handler handler) { handler_ = std::move(handler); }

    SimTime now() const { return clock_; }

    /// Throws SimError(SchedulingInPast) when time < now().
    EventId schedule(SimTime time, EventKind kind, EntityRef subject = {}, std::string detail = {});

    /// Tombstones a pending event. Returns false if it already fired, was
    /// already cancelled or never existed.
    bool cancel(EventId id);
    bool is_pending(EventId id) const;

    /// Pops the minimal (time, id) live event, advances the clock, appends
    /// it to the log and runs the handler.
    std::optional<SimEvent> step();

    /// Processes every event with time <= t; the clock ends at max(clock, t).
    std::size_t run_until(SimTime t);

    /// Moves the clock forward without processing anything.
    void advance_to(SimTime t);

    /// Time of the next live event, if any.
    std::optional<SimTime> peek_time();

    /// Logs an occurrence at the current clock that was never scheduled
    /// (manual injections, control commands). It takes a fresh id.
    const SimEvent& record(EventKind kind, EntityRef subject = {}, std::string detail = {});

    const std::vector<SimEvent>& log() const { return log_; }
    std::size_t pending_count() const { return live_.size(); }
    std::size_t cancelled_count() const { return cancelled_total_; }
    EventId last_issued_id() const { return next_id_ - 1; }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.id > b.id;
        }
    };

    void drop_tombstones();

    SimTime clock_ = 0;
    EventId next_id_ = 1;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> future_;
    std::unordered_set<EventId> live_;
    std::unordered_set<EventId> cancelled_;
    std::size_t cancelled_total_ = 0;
    std::vector<SimEvent> log_;
    Handler handler_;
};

}  // namespace servsim
