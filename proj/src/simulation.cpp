#include "servsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace servsim {

using nlohmann::json;

json to_json(const StateDelta& d) {
    json j{{"t", d.time}, {"entity", d.entity.str()}, {"state", d.state}, {"cause_seq", d.cause_seq}};
    if (!d.parent.empty()) j["parent"] = d.parent.str();
    return j;
}

Simulation::Simulation(SimConfig config, Feed feed)
    : config_(std::move(config)),
      feed_(feed),
      service_rng_(Rng::derive(config_.seed, kServiceStream)),
      dispatcher_(config_.routing_strategy),
      metrics_(config_.sample_interval_ms),
      instance_limit_high_water_(config_.max_instances),
      node_limit_high_water_(config_.max_nodes) {
    validate(config_);
    kernel_.set_handler([this](SimEvent& ev) { handle(ev); });
    for (const auto& f : config_.scripted_failures) kernel_.schedule(f.at_ms, EventKind::NodeFailed, f.node);
    if (feed_ == Feed::Internal) {
        generator_.emplace(config_.workload, Rng::derive(config_.seed, kWorkloadStream));
        pull_next_arrival();
    }
}

// ---------------------------------------------------------------------------
// Driving

std::optional<SimEvent> Simulation::step() {
    const auto next = kernel_.peek_time();
    if (!next) return std::nullopt;
    metrics_.sample_through(*next - 1, dispatcher_.size(), instances_, nodes_.all());
    auto ev = kernel_.step();
    flush_trace();
    return ev;
}

std::size_t Simulation::run_until(SimTime t) {
    std::size_t processed = 0;
    while (true) {
        const auto next = kernel_.peek_time();
        if (!next || *next > t) break;
        step();
        ++processed;
    }
    advance_to(t);
    return processed;
}

void Simulation::advance_to(SimTime t) {
    kernel_.advance_to(t);
    metrics_.sample_through(kernel_.now(), dispatcher_.size(), instances_, nodes_.all());
}

void Simulation::handle(SimEvent& ev) {
    switch (ev.kind) {
        case EventKind::RequestArrival: on_arrival(ev); break;
        case EventKind::ColdStartComplete: on_cold_start_complete(*ev.subject.as<'I'>()); break;
        case EventKind::ExecutionComplete: on_execution_complete(*ev.subject.as<'R'>()); break;
        case EventKind::TtlExpiry: expire_ttl(*ev.subject.as<'R'>()); break;
        case EventKind::ExecutionTimeout: on_execution_timeout(*ev.subject.as<'R'>()); break;
        case EventKind::InactivityCheck:
            reaper_event_ = 0;
            reap_idle();
            break;
        case EventKind::NodeProvisioned: on_node_provisioned(*ev.subject.as<'N'>()); break;
        case EventKind::NodeFailed: on_scripted_failure(ev); break;
        case EventKind::Command: break;
    }
}

// ---------------------------------------------------------------------------
// Gateway and dispatch

void Simulation::pull_next_arrival() {
    if (!generator_ || arrival_pending_) return;
    if (auto next = generator_->next()) {
        kernel_.schedule(std::max(next->time, kernel_.now()), EventKind::RequestArrival, {}, next->function_type);
        arrival_pending_ = true;
    }
}

void Simulation::schedule_arrival(SimTime time, const std::string& function_type) {
    config_.function(function_type);
    kernel_.schedule(time, EventKind::RequestArrival, {}, function_type);
}

void Simulation::on_arrival(SimEvent& ev) {
    Request& r = create_request(ev.detail);
    ev.subject = r.id;
    if (feed_ == Feed::Internal) {
        arrival_pending_ = false;
        pull_next_arrival();
    }
    admit(r);
}

Request& Simulation::create_request(const std::string& function_type) {
    Request r;
    r.id = RequestId{requests_.size() + 1};
    r.function_type = function_type;
    r.arrival_time = kernel_.now();
    requests_.push_back(std::move(r));
    metrics_.on_created();
    return requests_.back();
}

void Simulation::admit(Request& r) {
    r.enqueue_time = kernel_.now();
    const RoutingDecision decision = dispatcher_.route(r, *this);
    // Arrivals never overtake requests already waiting.
    if (decision.outcome == RoutingDecision::Outcome::Assign && dispatcher_.empty()) {
        r.dispatch_time = kernel_.now();
        assign(r, decision.instance);
        return;
    }
    enqueue(r);
    if (decision.outcome == RoutingDecision::Outcome::EnqueueAndScaleUp && try_scale_up(r.function_type)) {
        r.status = RequestStatus::ColdStartWait;
        emit(r.id, std::string(to_string(r.status)));
    }
}

void Simulation::enqueue(Request& r) {
    dispatcher_.enqueue(r, kernel_.now(), config_.request_ttl_ms, kernel_);
    emit(r.id, std::string(to_string(r.status)));
}

void Simulation::drain() {
    const DrainResult result = dispatcher_.drain(*this, kernel_);
    if (!result.blocked_head_wants_capacity) return;
    Request& head = request(*result.blocked_head_wants_capacity);
    // Recovery path (failures, timeouts, raised limits): only scale up when
    // nothing of this type is already warming up.
    const auto cands = candidates(head.function_type);
    const bool warming = std::any_of(cands.begin(), cands.end(), [](const FunctionInstance* i) {
        return i->state == InstanceState::ColdStarting;
    });
    if (!warming && try_scale_up(head.function_type)) {
        head.status = RequestStatus::ColdStartWait;
        emit(head.id, std::string(to_string(head.status)));
    }
}

bool Simulation::try_scale_up(const std::string& function_type) {
    try {
        provision_instance(function_type);
        return true;
    } catch (const SimError& e) {
        if (e.code() == ErrorCode::InstanceLimitReached || e.code() == ErrorCode::NoCapacity) return false;
        throw;
    }
}

Request& Simulation::request(RequestId id) {
    if (!id || id.value > requests_.size()) throw SimError(ErrorCode::UnknownRequest, id.str());
    return requests_[id.value - 1];
}

const Request& Simulation::request_at(RequestId id) const {
    if (!id || id.value > requests_.size()) throw SimError(ErrorCode::UnknownRequest, id.str());
    return requests_[id.value - 1];
}

FunctionInstance& Simulation::instance(InstanceId id) { return instances_.at(id.value - 1); }
const FunctionInstance& Simulation::instance_at(InstanceId id) const { return instances_.at(id.value - 1); }

std::vector<const FunctionInstance*> Simulation::candidates(const std::string& function_type) const {
    std::vector<const FunctionInstance*> out;
    for (const auto& inst : instances_) {
        if (inst.is_live() && inst.function_type == function_type) out.push_back(&inst);
    }
    return out;
}

ScaleOptions Simulation::scale_options(const std::string& function_type) const {
    return ScaleOptions{can_provision_instance(function_type), config_.scale_up_on_busy};
}

int Simulation::live_instance_count() const {
    return static_cast<int>(std::count_if(instances_.begin(), instances_.end(), [](const auto& i) { return i.is_live(); }));
}

bool Simulation::can_provision_instance(const std::string& function_type) const {
    if (live_instance_count() >= config_.max_instances) return false;
    if (nodes_.can_provision(config_)) return true;
    const auto& fn = config_.function(function_type);
    return select_node(nodes_.all(), fn.demand, function_type, config_.placement_strategy).has_value();
}

Millis Simulation::sample_execution(const std::string& function_type) {
    const Millis base = config_.function(function_type).exec_base_ms;
    if (config_.exec_jitter <= 0.0) return base;
    const double b = static_cast<double>(base);
    return std::max<Millis>(0, std::llround(service_rng_.uniform(b * (1.0 - config_.exec_jitter),
                                                                  b * (1.0 + config_.exec_jitter))));
}

void Simulation::assign(Request& r, InstanceId id) {
    FunctionInstance& inst = instance(id);
    const bool first = inst.requests_served == 0;
    accept_request(inst, r.id);
    const SimTime now = kernel_.now();
    r.assigned_instance = inst.id;
    r.assigned_node = inst.node_id;
    r.cold_served = first;
    if (!r.dispatch_time) r.dispatch_time = now;
    r.exec_start_time = now;
    r.status = RequestStatus::Executing;
    const Millis duration = sample_execution(r.function_type);
    r.completion_event = kernel_.schedule(now + duration, EventKind::ExecutionComplete, r.id);
    r.timeout_event = kernel_.schedule(now + config_.max_execution_timeout_ms, EventKind::ExecutionTimeout, r.id);
    metrics_.on_dispatched(r);
    emit(r.id, std::string(to_string(r.status)), inst.id);
    emit(inst.id, std::string(to_string(inst.state)), inst.node_id);
}

// ---------------------------------------------------------------------------
// Control

void Simulation::record_command(const json& command) {
    commands_.push_back(RecordedCommand{kernel_.log().size(), kernel_.now(), command});
    kernel_.record(EventKind::Command, {}, command.dump());
}

std::vector<RequestId> Simulation::inject(int n, const std::string& function_type) {
    if (n < 1) throw SimError(ErrorCode::InvalidSpec, "inject needs n >= 1");
    config_.function(function_type);
    record_command(json{{"kind", "InjectRequests"}, {"n", n}, {"function_type", function_type}});
    std::vector<RequestId> ids;
    for (int i = 0; i < n; ++i) {
        Request& r = create_request(function_type);
        kernel_.record(EventKind::RequestArrival, r.id, function_type);
        ids.push_back(r.id);
        admit(r);
    }
    flush_trace();
    return ids;
}

FailureReport Simulation::fail_node(NodeId node) {
    check_failable(node);
    record_command(json{{"kind", "FailNode"}, {"node", node.str()}});
    kernel_.record(EventKind::NodeFailed, node);
    FailureReport report = fail_node_now(node);
    flush_trace();
    return report;
}

void Simulation::update_config(const json& patch) {
    SimConfig updated = apply_patch(config_, patch);
    record_command(json{{"kind", "UpdateConfig"}, {"patch", patch}});
    const bool workload_changed = !(updated.workload == config_.workload);
    config_ = std::move(updated);
    instance_limit_high_water_ = std::max(instance_limit_high_water_, config_.max_instances);
    node_limit_high_water_ = std::max(node_limit_high_water_, config_.max_nodes);
    if (config_.routing_strategy != dispatcher_.kind()) dispatcher_.set_kind(config_.routing_strategy);
    metrics_.set_sample_interval(config_.sample_interval_ms);
    if (generator_ && workload_changed) {
        generator_->update(config_.workload, kernel_.now());
        pull_next_arrival();
    }
    drain();
    flush_trace();
}

void Simulation::reset_session() {
    record_command(json{{"kind", "ResetSession"}});
    metrics_.reset_session(kernel_.now());
    flush_trace();
}

void apply_recorded(Simulation& sim, const json& command) {
    const std::string kind = command.value("kind", "");
    if (kind == "InjectRequests") {
        sim.inject(command.at("n").get<int>(), command.value("function_type", std::string("f")));
    } else if (kind == "FailNode") {
        auto id = parse_id<'N'>(command.at("node").get<std::string>());
        if (!id) throw SimError(ErrorCode::UnknownNode, command.at("node").dump());
        sim.fail_node(*id);
    } else if (kind == "UpdateConfig") {
        sim.update_config(command.at("patch"));
    } else if (kind == "ResetSession") {
        sim.reset_session();
    } else {
        throw SimError(ErrorCode::UnknownCommand, kind);
    }
}

std::unique_ptr<Simulation> replay(const SimConfig& config, std::span<const RecordedCommand> commands, SimTime until) {
    auto sim = std::make_unique<Simulation>(config);
    for (const auto& cmd : commands) {
        while (sim->kernel().log().size() < cmd.at_seq) {
            if (!sim->step()) break;
        }
        sim->advance_to(cmd.time);
        apply_recorded(*sim, cmd.command);
    }
    sim->run_until(until);
    return sim;
}

// ---------------------------------------------------------------------------
// Views

CumulativeStats Simulation::stats() const { return metrics_.cumulative(kernel_.now(), instances_, nodes_.all()); }

json Simulation::snapshot_json(std::size_t recent) const {
    json j;
    j["t"] = kernel_.now();
    j["routing_strategy"] = to_string(config_.routing_strategy);
    j["placement_strategy"] = to_string(config_.placement_strategy);
    j["queue_length"] = dispatcher_.size();
    j["queue"] = json::array();
    for (const auto& e : dispatcher_.entries()) {
        j["queue"].push_back({{"request", e.request.str()},
                              {"enqueue_ms", e.enqueue_time},
                              {"ttl_deadline_ms", e.ttl_deadline},
                              {"wait_ms", kernel_.now() - e.enqueue_time}});
    }
    j["instances"] = json::array();
    for (const auto& i : instances_) {
        if (i.state == InstanceState::Terminated) continue;
        json in_flight = json::array();
        for (auto r : i.in_flight) in_flight.push_back(r.str());
        j["instances"].push_back({{"id", i.id.str()},
                                  {"function_type", i.function_type},
                                  {"node", i.node_id.str()},
                                  {"state", to_string(i.state)},
                                  {"in_flight", in_flight},
                                  {"concurrency_limit", i.concurrency_limit}});
    }
    j["nodes"] = json::array();
    for (const auto& n : nodes_.all()) {
        if (n.state == NodeState::Deprovisioned) continue;
        json hosted = json::array();
        for (auto i : n.hosted) hosted.push_back(i.str());
        j["nodes"].push_back({{"id", n.id.str()},
                              {"state", to_string(n.state)},
                              {"cpu_used", millicores_to_cpu(n.used.cpu_m)},
                              {"cpu_capacity", millicores_to_cpu(n.capacity.cpu_m)},
                              {"mem_used_mb", n.used.mem_mb},
                              {"mem_capacity_mb", n.capacity.mem_mb},
                              {"instances", hosted}});
    }
    j["recent_requests"] = json::array();
    const std::size_t skip = recent_terminal_.size() > recent ? recent_terminal_.size() - recent : 0;
    for (std::size_t k = skip; k < recent_terminal_.size(); ++k) {
        const Request& r = requests_[recent_terminal_[k].value - 1];
        j["recent_requests"].push_back({{"id", r.id.str()},
                                        {"status", to_string(r.status)},
                                        {"instance", r.assigned_instance ? r.assigned_instance.str() : ""},
                                        {"end_to_end_ms", r.end_to_end_ms().value_or(0)}});
    }
    j["counts"] = {{"requests", requests_.size()},
                   {"live_instances", live_instance_count()},
                   {"up_nodes", nodes_.up_count()},
                   {"events_logged", kernel_.log().size()}};
    return j;
}

json Simulation::metrics_json() const {
    return json{{"t", kernel_.now()}, {"cumulative", to_json(stats())}, {"session", to_json(session())}};
}

std::string Simulation::export_csv() const { return servsim::export_csv(requests_, instances_, nodes_.all(), now()); }

CsvSource Simulation::csv_source(const std::string& arena) const {
    return CsvSource{arena, &requests_, &instances_, &nodes_.all(), now()};
}

std::string Simulation::event_log_ndjson() const {
    std::string out;
    const auto& log = kernel_.log();
    for (std::size_t i = 0; i < log.size(); ++i) {
        out += to_ndjson(log[i], i);
        out += '\n';
    }
    return out;
}

std::uint64_t Simulation::state_hash() const {
    std::ostringstream os;
    os << now() << '|' << export_csv() << '|' << event_log_ndjson() << '|' << to_json(config_).dump() << '|';
    for (const auto& e : dispatcher_.entries()) os << e.request.str() << ',';
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Trace

void Simulation::emit(EntityRef entity, std::string state, EntityRef parent) {
    const std::size_t cause = kernel_.log().empty() ? 0 : kernel_.log().size() - 1;
    deltas_.push_back(StateDelta{kernel_.now(), entity, std::move(state), parent, cause});
}

void Simulation::flush_trace() {
    const auto& log = kernel_.log();
    if (sink_) {
        std::size_t d = 0;
        for (std::size_t i = trace_cursor_; i < log.size(); ++i) {
            const std::size_t begin = d;
            while (d < deltas_.size() && deltas_[d].cause_seq == i) ++d;
            sink_(log[i], i, std::span<const StateDelta>(deltas_.data() + begin, d - begin));
        }
    }
    trace_cursor_ = log.size();
    deltas_.clear();
}

// ---------------------------------------------------------------------------
// Invariants

void Simulation::verify() const {
    auto fail = [](const std::string& what) { throw std::logic_error("invariant: " + what); };

    int live = 0;
    for (const auto& i : instances_) {
        const auto n = static_cast<int>(i.in_flight.size());
        if (n > i.concurrency_limit) fail(i.id.str() + " over its concurrency limit");
        if (i.state == InstanceState::Busy && n == 0) fail(i.id.str() + " Busy with nothing in flight");
        if (i.state == InstanceState::Warm && n != 0) fail(i.id.str() + " Warm with work in flight");
        if (!i.is_ready() && n != 0) fail(i.id.str() + " holds requests while " + std::string(to_string(i.state)));
        if (i.is_live()) {
            ++live;
            const auto& node = nodes_.at(i.node_id);
            if (!node.is_up()) fail(i.id.str() + " lives on a down node");
        }
        for (auto rid : i.in_flight) {
            const Request& r = requests_[rid.value - 1];
            if (r.status != RequestStatus::Executing || r.assigned_instance != i.id) {
                fail(rid.str() + " in flight on " + i.id.str() + " but not executing there");
            }
        }
    }
    if (live > instance_limit_high_water_) fail("live instances exceed max_instances");
    if (nodes_.up_count() > node_limit_high_water_) fail("up nodes exceed max_nodes");

    for (const auto& n : nodes_.all()) {
        Resources sum;
        for (auto id : n.hosted) {
            const auto& inst = instances_[id.value - 1];
            if (!inst.is_live()) fail(n.id.str() + " still lists retired " + id.str());
            sum += inst.demand;
        }
        if (!(sum == n.used)) fail(n.id.str() + " usage does not match hosted demand");
        if (!n.used.fits_within(n.capacity) || n.used.cpu_m < 0 || n.used.mem_mb < 0) {
            fail(n.id.str() + " usage outside [0, capacity]");
        }
        if (!n.is_up() && !n.hosted.empty()) fail(n.id.str() + " is down but hosts instances");
    }

    std::int64_t terminal = 0;
    std::int64_t succeeded = 0;
    std::size_t queued = 0;
    for (const auto& r : requests_) {
        const SimTime enq = r.enqueue_time.value_or(r.arrival_time);
        if (enq < r.arrival_time) fail(r.id.str() + " enqueued before arrival");
        if (r.dispatch_time && *r.dispatch_time < enq) fail(r.id.str() + " dispatched before enqueue");
        if (r.exec_start_time && r.dispatch_time && *r.exec_start_time < *r.dispatch_time) {
            fail(r.id.str() + " started before dispatch");
        }
        if (r.end_time && r.exec_start_time && *r.end_time < *r.exec_start_time) fail(r.id.str() + " ended before start");
        if (is_terminal(r.status)) {
            ++terminal;
            if (!r.end_time) fail(r.id.str() + " terminal without end_time");
            if (r.status == RequestStatus::Succeeded) ++succeeded;
        } else if (r.end_time) {
            fail(r.id.str() + " has end_time but is not terminal");
        }
        if (is_queued(r.status)) {
            ++queued;
            if (!dispatcher_.contains(r.id)) fail(r.id.str() + " queued but missing from the queue");
            if (!kernel_.is_pending(r.ttl_event)) fail(r.id.str() + " queued without a pending TTL");
        }
        if (r.status == RequestStatus::Executing && !kernel_.is_pending(r.completion_event)) {
            fail(r.id.str() + " executing without a pending completion");
        }
    }
    if (queued != dispatcher_.size()) fail("queue length disagrees with request statuses");

    const CumulativeStats s = stats();
    if (s.total_created != static_cast<std::int64_t>(requests_.size())) fail("created counter drifted");
    if (s.total_succeeded != succeeded) fail("succeeded counter drifted");
    if (s.total_succeeded + s.failed.total() != terminal) fail("failure counters drifted");
    if (s.total_created != s.total_succeeded + s.failed.total() + s.in_system) fail("accounting closure broken");
}

}  // namespace servsim
