// Instance and node lifecycle of a Simulation: scale-up, cold starts,
// completions and idle reaping.

#include <algorithm>

#include "servsim/simulation.hpp"

namespace servsim {

InstanceId Simulation::provision_instance(const std::string& function_type) {
    if (live_instance_count() >= config_.max_instances) {
        throw SimError(ErrorCode::InstanceLimitReached, "max_instances=" + std::to_string(config_.max_instances));
    }
    const FunctionSpec& fn = config_.function(function_type);
    std::optional<NodeId> host = select_node(nodes_.all(), fn.demand, function_type, config_.placement_strategy);
    if (!host) {
        if (!nodes_.can_provision(config_)) throw SimError(ErrorCode::NoCapacity, "no node fits " + function_type);
        host = nodes_.provision(config_, kernel_);
        emit(*host, std::string(to_string(NodeState::Provisioning)));
    }

    FunctionInstance inst;
    inst.id = InstanceId{instances_.size() + 1};
    inst.function_type = function_type;
    inst.node_id = *host;
    inst.concurrency_limit = config_.concurrency_limit;
    inst.demand = fn.demand;
    inst.created_at = kernel_.now();
    inst.cold_ready_at = std::max(kernel_.now(), nodes_.at(*host).ready_at) + config_.cold_start_delay_ms;
    nodes_.place(*host, inst.id, function_type, fn.demand);
    inst.cold_start_event = kernel_.schedule(inst.cold_ready_at, EventKind::ColdStartComplete, inst.id);
    instances_.push_back(std::move(inst));
    metrics_.on_cold_start();

    const FunctionInstance& added = instances_.back();
    emit(added.id, std::string(to_string(added.state)), added.node_id);
    return added.id;
}

void Simulation::on_node_provisioned(NodeId id) {
    if (!nodes_.activate(id, kernel_.now())) return;
    emit(id, std::string(to_string(NodeState::Active)));
    arm_reaper();
}

void Simulation::on_cold_start_complete(InstanceId id) {
    FunctionInstance& inst = instance(id);
    complete_cold_start(inst, kernel_.now());
    inst.cold_start_event = 0;
    emit(inst.id, std::string(to_string(inst.state)), inst.node_id);
    drain();
    arm_reaper();
}

void Simulation::on_execution_complete(RequestId id) {
    Request& r = request(id);
    FunctionInstance& inst = instance(r.assigned_instance);
    kernel_.cancel(r.timeout_event);
    r.completion_event = 0;
    r.timeout_event = 0;
    finish_request(inst, r.id, kernel_.now());
    r.end_time = kernel_.now();
    r.status = RequestStatus::Succeeded;
    metrics_.on_terminal(r, inst.demand.mem_mb);
    note_terminal(r);
    emit(inst.id, std::string(to_string(inst.state)), inst.node_id);
    drain();
    arm_reaper();
}

void Simulation::retire_instance(FunctionInstance& inst, InstanceState to) {
    if (inst.cold_start_event != 0) {
        kernel_.cancel(inst.cold_start_event);
        inst.cold_start_event = 0;
    }
    transition(inst, to);
    inst.ended_at = kernel_.now();
    inst.last_idle_since.reset();
    nodes_.unplace(inst.node_id, inst.id, inst.function_type, inst.demand, kernel_.now());
    emit(inst.id, std::string(to_string(inst.state)), inst.node_id);
}

ReapReport Simulation::reap_idle() {
    ReapReport report;
    const SimTime now = kernel_.now();
    const Millis timeout = config_.inactivity_timeout_ms;

    std::vector<FunctionInstance*> idle;
    for (auto& inst : instances_) {
        if (is_reapable(inst, now, timeout)) idle.push_back(&inst);
    }
    std::sort(idle.begin(), idle.end(), [](const FunctionInstance* a, const FunctionInstance* b) {
        if (*a->last_idle_since != *b->last_idle_since) return *a->last_idle_since < *b->last_idle_since;
        return a->id < b->id;
    });
    for (FunctionInstance* inst : idle) {
        retire_instance(*inst, InstanceState::Terminated);
        report.terminated.push_back(inst->id);
    }

    for (const auto& node : nodes_.all()) {
        if (node.state == NodeState::Active && node.hosted.empty() && now - node.last_active_at >= timeout) {
            report.deprovisioned.push_back(node.id);
        }
    }
    for (NodeId id : report.deprovisioned) {
        nodes_.deprovision(id, now);
        emit(id, std::string(to_string(NodeState::Deprovisioned)));
    }
    arm_reaper();
    return report;
}

void Simulation::arm_reaper() {
    if (reaper_event_ != 0 && kernel_.is_pending(reaper_event_)) return;
    const bool idle_instance = std::any_of(instances_.begin(), instances_.end(),
                                           [](const auto& i) { return i.state == InstanceState::Warm; });
    const bool idle_node = std::any_of(nodes_.all().begin(), nodes_.all().end(), [](const auto& n) {
        return n.state == NodeState::Active && n.hosted.empty();
    });
    if (!idle_instance && !idle_node) return;
    // Checks sit on a fixed grid so their times never depend on history.
    const Millis period = config_.inactivity_check_period();
    const SimTime next = (kernel_.now() / period + 1) * period;
    reaper_event_ = kernel_.schedule(next, EventKind::InactivityCheck);
}

}  // namespace servsim
