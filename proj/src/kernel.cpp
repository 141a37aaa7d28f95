#include "servsim/kernel.hpp"

#include <array>
#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

namespace servsim {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 9> kEventKindNames{{
    {EventKind::RequestArrival, "RequestArrival"},
    {EventKind::ColdStartComplete, "ColdStartComplete"},
    {EventKind::ExecutionComplete, "ExecutionComplete"},
    {EventKind::TtlExpiry, "TtlExpiry"},
    {EventKind::ExecutionTimeout, "ExecutionTimeout"},
    {EventKind::InactivityCheck, "InactivityCheck"},
    {EventKind::NodeProvisioned, "NodeProvisioned"},
    {EventKind::NodeFailed, "NodeFailed"},
    {EventKind::Command, "Command"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kEventKindNames) {
        if (k == kind) return name;
    }
    return "Unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
    for (const auto& [k, n] : kEventKindNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SchedulingInPast: return "SchedulingInPast";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::UnknownFunctionType: return "UnknownFunctionType";
        case ErrorCode::UnknownScenario: return "UnknownScenario";
        case ErrorCode::DuplicateEnqueue: return "DuplicateEnqueue";
        case ErrorCode::NodeLimitReached: return "NodeLimitReached";
        case ErrorCode::UnderflowViolation: return "UnderflowViolation";
        case ErrorCode::InstanceLimitReached: return "InstanceLimitReached";
        case ErrorCode::NoCapacity: return "NoCapacity";
        case ErrorCode::InvalidTransition: return "InvalidTransition";
        case ErrorCode::ConcurrencyExceeded: return "ConcurrencyExceeded";
        case ErrorCode::UnknownRequest: return "UnknownRequest";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::NodeNotActive: return "NodeNotActive";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::UnknownCommand: return "UnknownCommand";
    }
    return "Unknown";
}

std::int64_t cpu_to_millicores(double cpu) { return std::llround(cpu * 1000.0); }
double millicores_to_cpu(std::int64_t cpu_m) { return static_cast<double>(cpu_m) / 1000.0; }

std::string to_ndjson(const SimEvent& ev, std::size_t seq) {
    nlohmann::ordered_json j;
    j["seq"] = seq;
    j["id"] = ev.id;
    j["t"] = ev.time;
    j["kind"] = to_string(ev.kind);
    j["subject"] = ev.subject.str();
    if (!ev.detail.empty()) j["detail"] = ev.detail;
    return j.dump();
}

EventId Kernel::schedule(SimTime time, EventKind kind, EntityRef subject, std::string detail) {
    if (time < clock_) {
        throw SimError(ErrorCode::SchedulingInPast,
                       "event at t=" + std::to_string(time) + " while clock=" + std::to_string(clock_));
    }
    const EventId id = next_id_++;
    future_.push(SimEvent{id, time, kind, subject, std::move(detail)});
    live_.insert(id);
    return id;
}

bool Kernel::cancel(EventId id) {
    if (live_.erase(id) == 0) return false;
    cancelled_.insert(id);
    ++cancelled_total_;
    return true;
}

bool Kernel::is_pending(EventId id) const { return live_.contains(id); }

void Kernel::drop_tombstones() {
    while (!future_.empty() && cancelled_.contains(future_.top().id)) {
        cancelled_.erase(future_.top().id);
        future_.pop();
    }
}

std::optional<SimTime> Kernel::peek_time() {
    drop_tombstones();
    if (future_.empty()) return std::nullopt;
    return future_.top().time;
}

std::optional<SimEvent> Kernel::step() {
    drop_tombstones();
    if (future_.empty()) return std::nullopt;
    SimEvent ev = future_.top();
    future_.pop();
    live_.erase(ev.id);
    clock_ = ev.time;
    log_.push_back(std::move(ev));
    const std::size_t index = log_.size() - 1;
    if (handler_) {
        // The handler may append records, so re-index rather than hold a
        // reference across the call.
        SimEvent scratch = log_[index];
        handler_(scratch);
        log_[index].subject = scratch.subject;
        log_[index].detail = std::move(scratch.detail);
    }
    return log_[index];
}

std::size_t Kernel::run_until(SimTime t) {
    std::size_t processed = 0;
    while (true) {
        auto next = peek_time();
        if (!next || *next > t) break;
        step();
        ++processed;
    }
    advance_to(t);
    return processed;
}

void Kernel::advance_to(SimTime t) {
    if (t > clock_) clock_ = t;
}

const SimEvent& Kernel::record(EventKind kind, EntityRef subject, std::string detail) {
    log_.push_back(SimEvent{next_id_++, clock_, kind, subject, std::move(detail)});
    return log_.back();
}

}  // namespace servsim
