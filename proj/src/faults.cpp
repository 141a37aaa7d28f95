// Failure paths of a Simulation: TTL expiry, execution timeouts and node
// loss.

#include "servsim/simulation.hpp"

namespace servsim {

namespace {

constexpr std::size_t kRecentTerminalLimit = 200;

}  // namespace

void Simulation::note_terminal(const Request& r) {
    recent_terminal_.push_back(r.id);
    if (recent_terminal_.size() > kRecentTerminalLimit) recent_terminal_.pop_front();
    emit(r.id, std::string(to_string(r.status)), r.assigned_instance);
}

void Simulation::fail_request(Request& r, RequestStatus status) {
    for (EventId* ev : {&r.ttl_event, &r.completion_event, &r.timeout_event}) {
        if (*ev != 0) kernel_.cancel(*ev);
        *ev = 0;
    }
    r.end_time = kernel_.now();
    r.status = status;
    metrics_.on_terminal(r, 0);
    note_terminal(r);
}

void Simulation::expire_ttl(RequestId id) {
    Request& r = request(id);
    if (!is_queued(r.status)) return;
    dispatcher_.remove(id);
    r.ttl_event = 0;
    fail_request(r, RequestStatus::FailedTtl);
}

void Simulation::on_execution_timeout(RequestId id) {
    Request& r = request(id);
    if (r.status != RequestStatus::Executing) return;
    FunctionInstance& inst = instance(r.assigned_instance);
    // Everything sharing the hung instance goes down with it.
    const std::vector<RequestId> victims = inst.in_flight;
    for (RequestId v : victims) {
        finish_request(inst, v, kernel_.now());
        fail_request(request(v), RequestStatus::FailedExecTimeout);
    }
    if (config_.timeout_kills_instance) {
        retire_instance(inst, InstanceState::Failed);
    } else {
        emit(inst.id, std::string(to_string(inst.state)), inst.node_id);
    }
    drain();
    arm_reaper();
}

void Simulation::check_failable(NodeId id) const {
    const ComputeNode& node = nodes_.at(id);
    if (!node.is_up()) throw SimError(ErrorCode::NodeNotActive, id.str() + " is " + std::string(to_string(node.state)));
}

FailureReport Simulation::fail_node_now(NodeId id) {
    FailureReport report{id, kernel_.now(), {}, {}};
    const std::vector<InstanceId> hosted = nodes_.at(id).hosted;
    for (InstanceId iid : hosted) {
        FunctionInstance& inst = instance(iid);
        const std::vector<RequestId> victims = inst.in_flight;
        for (RequestId v : victims) {
            finish_request(inst, v, kernel_.now());
            fail_request(request(v), RequestStatus::FailedNodeDown);
            report.failed_requests.push_back(v);
        }
        retire_instance(inst, InstanceState::Failed);
        report.failed_instances.push_back(iid);
    }
    nodes_.fail(id, kernel_.now());
    emit(id, std::string(to_string(NodeState::Failed)));
    drain();
    arm_reaper();
    return report;
}

void Simulation::on_scripted_failure(SimEvent& ev) {
    const auto id = ev.subject.as<'N'>();
    try {
        if (!id) throw SimError(ErrorCode::UnknownNode, ev.subject.str());
        check_failable(*id);
    } catch (const SimError& e) {
        ev.detail = std::string("rejected: ") + e.what();
        return;
    }
    fail_node_now(*id);
}

}  // namespace servsim
