#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "servsim/config.hpp"
#include "servsim/kernel.hpp"
#include "servsim/lifecycle.hpp"
#include "servsim/workload.hpp"

namespace servsim {

struct RoutingStrategy {
    RoutingKind kind = RoutingKind::WarmPriority;
    /// Round-robin position over the instance list.
    std::size_t cursor = 0;
};

struct RoutingDecision {
    enum class Outcome { Assign, Enqueue, EnqueueAndScaleUp };

    Outcome outcome = Outcome::Enqueue;
    InstanceId instance;

    static RoutingDecision assign(InstanceId id) { return {Outcome::Assign, id}; }
    static RoutingDecision enqueue() { return {Outcome::Enqueue, {}}; }
    static RoutingDecision enqueue_and_scale_up() { return {Outcome::EnqueueAndScaleUp, {}}; }

    friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

std::string to_string(const RoutingDecision& decision);

struct ScaleOptions {
    /// A new instance can be placed right now under instance/node limits.
    bool can_provision = false;
    /// Scale up when instances exist but none has a free slot.
    bool scale_up_on_busy = true;
};

/// Chooses where a request goes. `instances` are the live instances of the
/// request's function type in ascending id order; cold-starting ones are
/// never assigned.
RoutingDecision route(std::span<const FunctionInstance* const> instances, RoutingStrategy& strategy,
                      const ScaleOptions& scale);

struct QueueEntry {
    RequestId request;
    SimTime enqueue_time = 0;
    SimTime ttl_deadline = 0;
    EventId ttl_event = 0;
};

struct Assignment {
    RequestId request;
    InstanceId instance;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// What the dispatcher needs from the arena that owns it.
class DispatchContext {
public:
    virtual ~DispatchContext() = default;
    virtual Request& request(RequestId id) = 0;
    virtual std::vector<const FunctionInstance*> candidates(const std::string& function_type) const = 0;
    virtual ScaleOptions scale_options(const std::string& function_type) const = 0;
    /// Starts execution of `request` on `instance` at the current clock.
    virtual void assign(Request& request, InstanceId instance) = 0;
};

struct DrainResult {
    std::vector<Assignment> assignments;
    /// Set when the blocked head would warrant a scale-up.
    std::optional<RequestId> blocked_head_wants_capacity;
};

/// FIFO request queue plus the active routing strategy.
class Dispatcher {
public:
    explicit Dispatcher(RoutingKind kind = RoutingKind::WarmPriority) : kind_(kind) {}

    RoutingKind kind() const { return kind_; }
    /// Switching strategy resets the round-robin cursors.
    void set_kind(RoutingKind kind);

    RoutingDecision route(const Request& request, const DispatchContext& context);

    /// Appends to the tail and arms a TtlExpiry at now + ttl. Returns the
    /// queue position. Throws SimError(DuplicateEnqueue).
    std::size_t enqueue(Request& request, SimTime now, Millis ttl, Kernel& kernel);

    /// Routes the head repeatedly until it cannot be placed. Each assignment
    /// cancels the TTL and stamps dispatch_time.
    DrainResult drain(DispatchContext& context, Kernel& kernel);

    /// Removes a request wherever it sits (TTL expiry). Returns false if absent.
    bool remove(RequestId id);

    bool contains(RequestId id) const;
    std::size_t size() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }
    const std::deque<QueueEntry>& entries() const { return queue_; }
    const std::map<std::string, RoutingStrategy>& strategies() const { return per_type_; }

private:
    RoutingStrategy& strategy_for(const std::string& function_type);

    RoutingKind kind_;
    std::map<std::string, RoutingStrategy> per_type_;
    std::deque<QueueEntry> queue_;
    std::unordered_set<RequestId> members_;
};

}  // namespace servsim
