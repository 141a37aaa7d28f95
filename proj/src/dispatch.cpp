#include "servsim/dispatch.hpp"

#include <algorithm>

namespace servsim {

namespace {

RoutingDecision no_capacity(std::span<const FunctionInstance* const> instances, const ScaleOptions& scale) {
    if (!scale.can_provision) return RoutingDecision::enqueue();
    if (instances.empty() || scale.scale_up_on_busy) return RoutingDecision::enqueue_and_scale_up();
    return RoutingDecision::enqueue();
}

}  // namespace

std::string to_string(const RoutingDecision& d) {
    switch (d.outcome) {
        case RoutingDecision::Outcome::Assign: return "Assign(" + d.instance.str() + ")";
        case RoutingDecision::Outcome::Enqueue: return "Enqueue";
        case RoutingDecision::Outcome::EnqueueAndScaleUp: return "EnqueueAndScaleUp";
    }
    return "Unknown";
}

RoutingDecision route(std::span<const FunctionInstance* const> instances, RoutingStrategy& strategy,
                      const ScaleOptions& scale) {
    switch (strategy.kind) {
        case RoutingKind::WarmPriority: {
            // Idle warm instances first, then ready instances with a spare slot.
            const FunctionInstance* busy_with_slot = nullptr;
            for (const FunctionInstance* inst : instances) {
                if (!inst->has_free_slot()) continue;
                if (inst->state == InstanceState::Warm) return RoutingDecision::assign(inst->id);
                if (busy_with_slot == nullptr) busy_with_slot = inst;
            }
            if (busy_with_slot != nullptr) return RoutingDecision::assign(busy_with_slot->id);
            break;
        }
        case RoutingKind::RoundRobin: {
            const std::size_t k = instances.size();
            if (k == 0) {
                strategy.cursor = 0;
                break;
            }
            if (strategy.cursor >= k) strategy.cursor = 0;
            for (std::size_t step = 0; step < k; ++step) {
                const std::size_t idx = (strategy.cursor + step) % k;
                if (instances[idx]->has_free_slot()) {
                    strategy.cursor = (idx + 1) % k;
                    return RoutingDecision::assign(instances[idx]->id);
                }
            }
            break;
        }
        case RoutingKind::LeastConnections: {
            const FunctionInstance* best = nullptr;
            for (const FunctionInstance* inst : instances) {
                if (!inst->has_free_slot()) continue;
                if (best == nullptr || inst->in_flight.size() < best->in_flight.size() ||
                    (inst->in_flight.size() == best->in_flight.size() && inst->id < best->id)) {
                    best = inst;
                }
            }
            if (best != nullptr) return RoutingDecision::assign(best->id);
            break;
        }
    }
    return no_capacity(instances, scale);
}

void Dispatcher::set_kind(RoutingKind kind) {
    kind_ = kind;
    per_type_.clear();
}

RoutingStrategy& Dispatcher::strategy_for(const std::string& function_type) {
    auto [it, inserted] = per_type_.try_emplace(function_type);
    if (inserted) it->second.kind = kind_;
    return it->second;
}

RoutingDecision Dispatcher::route(const Request& request, const DispatchContext& context) {
    const auto instances = context.candidates(request.function_type);
    return servsim::route(instances, strategy_for(request.function_type), context.scale_options(request.function_type));
}

std::size_t Dispatcher::enqueue(Request& request, SimTime now, Millis ttl, Kernel& kernel) {
    if (contains(request.id) || is_terminal(request.status)) {
        throw SimError(ErrorCode::DuplicateEnqueue, request.id.str());
    }
    QueueEntry entry{request.id, now, now + ttl, 0};
    entry.ttl_event = kernel.schedule(entry.ttl_deadline, EventKind::TtlExpiry, request.id);
    request.ttl_event = entry.ttl_event;
    request.enqueue_time = now;
    request.status = RequestStatus::InQueue;
    queue_.push_back(entry);
    members_.insert(request.id);
    return queue_.size() - 1;
}

DrainResult Dispatcher::drain(DispatchContext& context, Kernel& kernel) {
    DrainResult result;
    while (!queue_.empty()) {
        const QueueEntry head = queue_.front();
        Request& req = context.request(head.request);
        const RoutingDecision decision = route(req, context);
        if (decision.outcome != RoutingDecision::Outcome::Assign) {
            if (decision.outcome == RoutingDecision::Outcome::EnqueueAndScaleUp) {
                result.blocked_head_wants_capacity = head.request;
            }
            break;
        }
        queue_.pop_front();
        members_.erase(head.request);
        kernel.cancel(head.ttl_event);
        req.ttl_event = 0;
        req.dispatch_time = kernel.now();
        req.status = RequestStatus::Dispatched;
        context.assign(req, decision.instance);
        result.assignments.push_back({head.request, decision.instance});
    }
    return result;
}

bool Dispatcher::remove(RequestId id) {
    auto it = std::find_if(queue_.begin(), queue_.end(), [&](const QueueEntry& e) { return e.request == id; });
    if (it == queue_.end()) return false;
    queue_.erase(it);
    members_.erase(id);
    return true;
}

bool Dispatcher::contains(RequestId id) const { return members_.contains(id); }

}  // namespace servsim
