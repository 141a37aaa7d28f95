#include <algorithm>

#include "servsim/lifecycle.hpp"

namespace servsim {

std::string_view to_string(InstanceState state) {
    switch (state) {
        case InstanceState::ColdStarting: return "ColdStarting";
        case InstanceState::Busy: return "Busy";
        case InstanceState::Warm: return "Warm";
        case InstanceState::Terminated: return "Terminated";
        case InstanceState::Failed: return "Failed";
    }
    return "Unknown";
}

bool is_legal_transition(InstanceState from, InstanceState to) {
    using S = InstanceState;
    switch (from) {
        case S::ColdStarting: return to == S::Warm || to == S::Failed;
        case S::Warm: return to == S::Busy || to == S::Terminated || to == S::Failed;
        case S::Busy: return to == S::Warm || to == S::Failed;
        case S::Terminated:
        case S::Failed: return false;
    }
    return false;
}

void transition(FunctionInstance& instance, InstanceState to) {
    if (!is_legal_transition(instance.state, to)) {
        throw SimError(ErrorCode::InvalidTransition, instance.id.str() + " " + std::string(to_string(instance.state)) +
                                                         " -> " + std::string(to_string(to)));
    }
    instance.state = to;
}

void complete_cold_start(FunctionInstance& instance, SimTime now) {
    if (instance.state != InstanceState::ColdStarting || now != instance.cold_ready_at) {
        throw SimError(ErrorCode::InvalidTransition, instance.id.str() + " is not finishing a cold start at t=" +
                                                         std::to_string(now));
    }
    transition(instance, InstanceState::Warm);
    instance.ready_at = now;
    instance.last_idle_since = now;
}

void accept_request(FunctionInstance& instance, RequestId request) {
    if (!instance.is_ready()) {
        throw SimError(ErrorCode::InvalidTransition,
                       instance.id.str() + " cannot take work while " + std::string(to_string(instance.state)));
    }
    if (!instance.has_free_slot()) {
        throw SimError(ErrorCode::ConcurrencyExceeded,
                       instance.id.str() + " at limit " + std::to_string(instance.concurrency_limit));
    }
    if (instance.state == InstanceState::Warm) transition(instance, InstanceState::Busy);
    instance.in_flight.push_back(request);
    instance.last_idle_since.reset();
    ++instance.requests_served;
}

void finish_request(FunctionInstance& instance, RequestId request, SimTime now) {
    auto it = std::find(instance.in_flight.begin(), instance.in_flight.end(), request);
    if (it == instance.in_flight.end()) {
        throw SimError(ErrorCode::UnknownRequest, request.str() + " is not in flight on " + instance.id.str());
    }
    instance.in_flight.erase(it);
    if (instance.in_flight.empty()) {
        transition(instance, InstanceState::Warm);
        instance.last_idle_since = now;
    }
}

bool is_reapable(const FunctionInstance& instance, SimTime now, Millis inactivity_timeout) {
    return instance.state == InstanceState::Warm && instance.in_flight.empty() && instance.last_idle_since &&
           now - *instance.last_idle_since >= inactivity_timeout;
}

}  // namespace servsim
