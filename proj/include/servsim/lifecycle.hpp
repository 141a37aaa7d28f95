#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "servsim/config.hpp"
#include "servsim/types.hpp"

namespace servsim {

/// Rendered Orange / Blue / Green by visualisers.
enum class InstanceState { ColdStarting, Busy, Warm, Terminated, Failed };

std::string_view to_string(InstanceState state);
/// Legal moves: ColdStarting->{Warm, Failed}, Warm->{Busy, Terminated,
/// Failed}, Busy->{Warm, Failed}.
bool is_legal_transition(InstanceState from, InstanceState to);

struct FunctionInstance {
    InstanceId id;
    std::string function_type;
    NodeId node_id;
    InstanceState state = InstanceState::ColdStarting;
    std::vector<RequestId> in_flight;
    int concurrency_limit = 1;
    ResourceDemand demand;
    SimTime created_at = 0;
    SimTime cold_ready_at = 0;
    /// Set once the cold start actually completed.
    std::optional<SimTime> ready_at;
    std::optional<SimTime> last_idle_since;
    std::optional<SimTime> ended_at;
    int requests_served = 0;
    EventId cold_start_event = 0;

    bool is_live() const { return state != InstanceState::Terminated && state != InstanceState::Failed; }
    bool is_ready() const { return state == InstanceState::Warm || state == InstanceState::Busy; }
    int free_slots() const { return is_ready() ? concurrency_limit - static_cast<int>(in_flight.size()) : 0; }
    bool has_free_slot() const { return free_slots() > 0; }
};

/// Throws SimError(InvalidTransition) on an illegal move.
void transition(FunctionInstance& instance, InstanceState to);

/// ColdStarting -> Warm at cold_ready_at.
void complete_cold_start(FunctionInstance& instance, SimTime now);

/// Takes a request into a free slot; the instance becomes Busy.
/// Throws SimError(ConcurrencyExceeded) or SimError(InvalidTransition).
void accept_request(FunctionInstance& instance, RequestId request);

/// Drops a finished request; the instance turns Warm when it empties.
/// Throws SimError(UnknownRequest).
void finish_request(FunctionInstance& instance, RequestId request, SimTime now);

/// Warm for at least `inactivity_timeout` (boundary inclusive).
bool is_reapable(const FunctionInstance& instance, SimTime now, Millis inactivity_timeout);

}  // namespace servsim
