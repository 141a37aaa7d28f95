#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "servsim/config.hpp"
#include "servsim/kernel.hpp"
#include "servsim/rng.hpp"
#include "servsim/types.hpp"

namespace servsim {

enum class RequestStatus {
    InQueue,
    Dispatched,
    /// Queued behind a cold start that was triggered on its behalf.
    ColdStartWait,
    Executing,
    Succeeded,
    FailedTtl,
    FailedExecTimeout,
    FailedNodeDown,
};

std::string_view to_string(RequestStatus status);
std::optional<RequestStatus> parse_request_status(std::string_view name);
bool is_terminal(RequestStatus status);
bool is_queued(RequestStatus status);

struct Request {
    RequestId id;
    std::string function_type;
    SimTime arrival_time = 0;
    std::optional<SimTime> enqueue_time;
    std::optional<SimTime> dispatch_time;
    std::optional<SimTime> exec_start_time;
    std::optional<SimTime> end_time;
    RequestStatus status = RequestStatus::InQueue;
    InstanceId assigned_instance;
    NodeId assigned_node;
    /// First request served by a freshly cold-started instance.
    bool cold_served = false;

    // Pending kernel events owned by this request.
    EventId ttl_event = 0;
    EventId completion_event = 0;
    EventId timeout_event = 0;

    std::optional<Millis> queue_wait_ms() const;
    std::optional<Millis> execution_ms() const;
    std::optional<Millis> end_to_end_ms() const;
};

/// Inter-arrival spacing for an auto-rate stream: exactly 1000/rate ms
/// without jitter, otherwise uniform in [base(1-j), base(1+j)].
/// Throws SimError(InvalidSpec) if the rate is not positive.
SimTime next_arrival(const WorkloadSpec& spec, SimTime now, Rng& rng);

/// Unrounded spacing in ms for the given rate; draws from rng only when
/// jitter > 0.
double arrival_spacing(double rate, double jitter, Rng& rng);

struct Arrival {
    SimTime time = 0;
    std::string function_type;

    friend bool operator==(const Arrival&, const Arrival&) = default;
};

/// Produces the arrival schedule of a workload spec in time order.
///
/// Auto-rate streams are unbounded; scenario mode merges bursts with the
/// phase-driven stream; manual mode yields nothing.
class ArrivalGenerator {
public:
    ArrivalGenerator(WorkloadSpec spec, std::uint64_t seed, SimTime start = 0);

    /// Next arrival, or none once the schedule is exhausted.
    std::optional<Arrival> next();
    /// Arrivals with time < end, consumed from the stream.
    std::vector<Arrival> take_until(SimTime end);

    /// Switches to a new spec from `now` on. Arrivals already handed out
    /// keep their times; the stream resumes after the last of them.
    void update(const WorkloadSpec& spec, SimTime now);

    const WorkloadSpec& spec() const { return spec_; }

private:
    std::optional<SimTime> peek_stream();
    std::optional<SimTime> advance_stream();
    std::string pick_type();

    WorkloadSpec spec_;
    Rng rng_;
    /// Fractional stream position so rounding never drifts over long runs.
    double cursor_ = 0.0;
    std::size_t phase_index_ = 0;
    std::vector<Arrival> burst_arrivals_;
    std::size_t burst_index_ = 0;
    std::optional<SimTime> stream_next_;
    bool stream_done_ = false;
};

/// A bundled demo scenario: configuration plus its workload.
struct Scenario {
    std::string name;
    SimConfig config;

    const WorkloadSpec& workload() const { return config.workload; }
};

std::vector<std::string> scenario_names();
/// Throws SimError(UnknownScenario).
Scenario load_scenario(std::string_view name);

}  // namespace servsim
