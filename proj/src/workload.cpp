#include "servsim/workload.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace servsim {

namespace {

constexpr std::array<std::pair<RequestStatus, std::string_view>, 8> kStatusNames{{
    {RequestStatus::InQueue, "InQueue"},
    {RequestStatus::Dispatched, "Dispatched"},
    {RequestStatus::ColdStartWait, "ColdStartWait"},
    {RequestStatus::Executing, "Executing"},
    {RequestStatus::Succeeded, "Succeeded"},
    {RequestStatus::FailedTtl, "FailedTtl"},
    {RequestStatus::FailedExecTimeout, "FailedExecTimeout"},
    {RequestStatus::FailedNodeDown, "FailedNodeDown"},
}};

}  // namespace

std::string_view to_string(RequestStatus status) {
    for (const auto& [s, name] : kStatusNames) {
        if (s == status) return name;
    }
    return "Unknown";
}

std::optional<RequestStatus> parse_request_status(std::string_view name) {
    for (const auto& [s, n] : kStatusNames) {
        if (n == name) return s;
    }
    return std::nullopt;
}

bool is_terminal(RequestStatus status) {
    switch (status) {
        case RequestStatus::Succeeded:
        case RequestStatus::FailedTtl:
        case RequestStatus::FailedExecTimeout:
        case RequestStatus::FailedNodeDown: return true;
        default: return false;
    }
}

bool is_queued(RequestStatus status) {
    return status == RequestStatus::InQueue || status == RequestStatus::ColdStartWait;
}

std::optional<Millis> Request::queue_wait_ms() const {
    if (!enqueue_time || !dispatch_time) return std::nullopt;
    return *dispatch_time - *enqueue_time;
}

std::optional<Millis> Request::execution_ms() const {
    if (!exec_start_time || !end_time) return std::nullopt;
    return *end_time - *exec_start_time;
}

std::optional<Millis> Request::end_to_end_ms() const {
    if (!end_time) return std::nullopt;
    return *end_time - arrival_time;
}

double arrival_spacing(double rate, double jitter, Rng& rng) {
    const double base = 1000.0 / rate;
    if (jitter <= 0.0) return base;
    return rng.uniform(base * (1.0 - jitter), base * (1.0 + jitter));
}

SimTime next_arrival(const WorkloadSpec& spec, SimTime now, Rng& rng) {
    if (!(spec.rate > 0.0)) throw SimError(ErrorCode::InvalidSpec, "rate must be > 0");
    return now + std::llround(arrival_spacing(spec.rate, spec.jitter, rng));
}

ArrivalGenerator::ArrivalGenerator(WorkloadSpec spec, std::uint64_t seed, SimTime start)
    : spec_(std::move(spec)), rng_(seed), cursor_(static_cast<double>(start)) {
    validate(spec_);
    update(spec_, start);
}

void ArrivalGenerator::update(const WorkloadSpec& spec, SimTime now) {
    validate(spec);
    spec_ = spec;
    cursor_ = std::max(cursor_, static_cast<double>(now));
    stream_next_.reset();
    stream_done_ = spec_.mode == WorkloadMode::Manual;

    phase_index_ = 0;
    while (phase_index_ < spec_.phases.size() && spec_.phases[phase_index_].until_ms <= now) ++phase_index_;

    burst_arrivals_.clear();
    burst_index_ = 0;
    if (spec_.mode == WorkloadMode::Scenario) {
        std::vector<Burst> bursts = spec_.bursts;
        std::stable_sort(bursts.begin(), bursts.end(), [](const Burst& a, const Burst& b) { return a.at_ms < b.at_ms; });
        for (const auto& b : bursts) {
            if (b.at_ms < now) continue;
            for (int i = 0; i < b.count; ++i) burst_arrivals_.push_back(Arrival{b.at_ms, b.function_type});
        }
    }
}

std::optional<SimTime> ArrivalGenerator::advance_stream() {
    if (stream_done_) return std::nullopt;
    if (spec_.mode == WorkloadMode::AutoRate) {
        cursor_ += arrival_spacing(spec_.rate, spec_.jitter, rng_);
        return std::llround(cursor_);
    }
    while (phase_index_ < spec_.phases.size()) {
        const Phase& phase = spec_.phases[phase_index_];
        const auto phase_end = static_cast<double>(phase.until_ms);
        if (phase.rate > 0.0) {
            const double t = cursor_ + arrival_spacing(phase.rate, spec_.jitter, rng_);
            if (std::llround(t) < phase.until_ms) {
                cursor_ = t;
                return std::llround(t);
            }
        }
        cursor_ = std::max(cursor_, phase_end);
        ++phase_index_;
    }
    stream_done_ = true;
    return std::nullopt;
}

std::optional<SimTime> ArrivalGenerator::peek_stream() {
    if (!stream_next_) stream_next_ = advance_stream();
    return stream_next_;
}

std::string ArrivalGenerator::pick_type() {
    const auto& mix = spec_.function_type_mix;
    double total = 0.0;
    std::size_t positive = 0;
    for (const auto& [_, w] : mix) {
        total += w;
        if (w > 0.0) ++positive;
    }
    if (positive == 1) {
        for (const auto& [type, w] : mix) {
            if (w > 0.0) return type;
        }
    }
    double draw = rng_.uniform01() * total;
    std::string last;
    for (const auto& [type, w] : mix) {
        if (w <= 0.0) continue;
        last = type;
        if (draw < w) return type;
        draw -= w;
    }
    return last;
}

std::optional<Arrival> ArrivalGenerator::next() {
    const std::optional<SimTime> stream = peek_stream();
    const bool have_burst = burst_index_ < burst_arrivals_.size();
    if (have_burst && (!stream || burst_arrivals_[burst_index_].time <= *stream)) {
        return burst_arrivals_[burst_index_++];
    }
    if (!stream) return std::nullopt;
    stream_next_.reset();
    return Arrival{*stream, pick_type()};
}

std::vector<Arrival> ArrivalGenerator::take_until(SimTime end) {
    std::vector<Arrival> out;
    while (true) {
        const std::optional<SimTime> stream = peek_stream();
        const bool have_burst = burst_index_ < burst_arrivals_.size();
        SimTime head = 0;
        if (have_burst && (!stream || burst_arrivals_[burst_index_].time <= *stream)) {
            head = burst_arrivals_[burst_index_].time;
        } else if (stream) {
            head = *stream;
        } else {
            break;
        }
        if (head >= end) break;
        out.push_back(*next());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundled scenarios

namespace {

Scenario steady_state() {
    Scenario s{"steady-state", {}};
    auto& c = s.config;
    c.cold_start_delay_ms = 800;
    c.functions = {{"f", FunctionSpec{300, {1000, 256}}}};
    c.exec_jitter = 0.2;
    c.concurrency_limit = 1;
    c.max_instances = 5;
    c.max_nodes = 2;
    c.inactivity_timeout_ms = 5000;
    c.request_ttl_ms = 10000;
    c.max_execution_timeout_ms = 5000;
    c.seed = 7;
    c.workload.mode = WorkloadMode::AutoRate;
    c.workload.rate = 2.0;
    c.workload.jitter = 0.3;
    c.workload.scenario_name = s.name;
    return s;
}

Scenario cold_start_burst() {
    Scenario s{"cold-start-burst", {}};
    auto& c = s.config;
    c.cold_start_delay_ms = 2500;
    c.functions = {{"f", FunctionSpec{400, {1000, 256}}}};
    c.concurrency_limit = 1;
    c.max_instances = 4;
    c.max_nodes = 2;
    c.inactivity_timeout_ms = 5000;
    c.request_ttl_ms = 20000;
    c.max_execution_timeout_ms = 5000;
    c.seed = 11;
    c.workload.mode = WorkloadMode::Scenario;
    c.workload.rate = 0.0;
    c.workload.scenario_name = s.name;
    c.workload.bursts = {{0, 10, "f"}, {20000, 10, "f"}, {45000, 10, "f"}};
    return s;
}

Scenario node_failure_drill() {
    Scenario s{"node-failure-drill", {}};
    auto& c = s.config;
    c.cold_start_delay_ms = 500;
    c.functions = {{"f", FunctionSpec{1000, {1000, 256}}}};
    c.concurrency_limit = 1;
    c.node_capacity = {4000, 4096};
    c.max_instances = 8;
    c.max_nodes = 3;
    c.inactivity_timeout_ms = 10000;
    c.request_ttl_ms = 8000;
    c.max_execution_timeout_ms = 5000;
    c.seed = 3;
    c.workload.mode = WorkloadMode::AutoRate;
    c.workload.rate = 4.0;
    c.workload.scenario_name = s.name;
    c.scripted_failures = {{NodeId{1}, 5000}};
    return s;
}

Scenario strategy_duel() {
    Scenario s{"strategy-duel", {}};
    auto& c = s.config;
    c.routing_strategy = RoutingKind::WarmPriority;
    c.cold_start_delay_ms = 1500;
    c.functions = {{"f", FunctionSpec{600, {500, 256}}}};
    c.exec_jitter = 0.25;
    c.concurrency_limit = 2;
    c.node_capacity = {2000, 2048};
    c.max_instances = 8;
    c.max_nodes = 4;
    c.inactivity_timeout_ms = 3000;
    c.request_ttl_ms = 15000;
    c.max_execution_timeout_ms = 6000;
    c.seed = 21;
    c.workload.mode = WorkloadMode::Scenario;
    c.workload.jitter = 0.4;
    c.workload.scenario_name = s.name;
    c.workload.phases = {{10000, 2.0}, {14000, 0.0}, {24000, 5.0}, {30000, 0.0}, {40000, 3.0}, {60000, 0.5}};
    c.workload.bursts = {{5000, 6, "f"}, {32000, 8, "f"}};
    return s;
}

Scenario ramp_and_quiet() {
    Scenario s{"ramp-and-quiet", {}};
    auto& c = s.config;
    c.cold_start_delay_ms = 1000;
    c.functions = {{"f", FunctionSpec{1000, {1000, 512}}}};
    c.concurrency_limit = 1;
    c.node_capacity = {4000, 4096};
    c.max_instances = 6;
    c.max_nodes = 2;
    c.inactivity_timeout_ms = 4000;
    c.request_ttl_ms = 20000;
    c.max_execution_timeout_ms = 5000;
    c.seed = 5;
    c.workload.mode = WorkloadMode::Scenario;
    c.workload.scenario_name = s.name;
    c.workload.phases = {{5000, 1.0}, {10000, 3.0}, {20000, 8.0}, {40000, 0.0}};
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
    return {"cold-start-burst", "node-failure-drill", "ramp-and-quiet", "steady-state", "strategy-duel"};
}

Scenario load_scenario(std::string_view name) {
    if (name == "steady-state") return steady_state();
    if (name == "cold-start-burst") return cold_start_burst();
    if (name == "node-failure-drill") return node_failure_drill();
    if (name == "strategy-duel") return strategy_duel();
    if (name == "ramp-and-quiet") return ramp_and_quiet();
    throw SimError(ErrorCode::UnknownScenario, std::string(name));
}

}  // namespace servsim
