#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "servsim/config.hpp"
#include "servsim/dispatch.hpp"
#include "servsim/kernel.hpp"
#include "servsim/lifecycle.hpp"
#include "servsim/metrics.hpp"
#include "servsim/placement.hpp"
#include "servsim/rng.hpp"
#include "servsim/workload.hpp"

namespace servsim {

/// Entity state change, attributed to the log entry that caused it.
struct StateDelta {
    SimTime time = 0;
    EntityRef entity;
    std::string state;
    /// Host node for instances, instance for requests.
    EntityRef parent;
    std::size_t cause_seq = 0;
};

nlohmann::json to_json(const StateDelta& delta);

struct FailureReport {
    NodeId node;
    SimTime time = 0;
    std::vector<InstanceId> failed_instances;
    std::vector<RequestId> failed_requests;
};

struct ReapReport {
    std::vector<InstanceId> terminated;
    std::vector<NodeId> deprovisioned;
};

/// A control command as applied, for deterministic replay: it ran when the
/// event log had `at_seq` entries and the clock read `time`.
struct RecordedCommand {
    std::size_t at_seq = 0;
    SimTime time = 0;
    nlohmann::json command;
};

/// One self-contained arena: kernel, registries, dispatcher and metrics.
///
/// Not copyable or movable; the kernel handler binds to this object.
class Simulation : private DispatchContext {
public:
    enum class Feed {
        /// Arrivals come from the configured workload.
        Internal,
        /// Arrivals are only scheduled from outside (battleground).
        External,
    };

    using TraceSink = std::function<void(const SimEvent& event, std::size_t seq, std::span<const StateDelta> deltas)>;

    /// Throws SimError(InvalidConfig).
    explicit Simulation(SimConfig config, Feed feed = Feed::Internal);
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;
    ~Simulation() override = default;

    // -- driving --
    std::optional<SimEvent> step();
    std::size_t run_until(SimTime t);
    /// Moves the clock to t without processing; no live event may be due
    /// before t.
    void advance_to(SimTime t);
    SimTime now() const { return kernel_.now(); }

    // -- control; each of these is recorded for replay --
    /// Creates n requests arriving now. Throws SimError(UnknownFunctionType).
    std::vector<RequestId> inject(int n, const std::string& function_type);
    /// Throws SimError(UnknownNode) or SimError(NodeNotActive).
    FailureReport fail_node(NodeId node);
    /// Takes effect from the next decision on; scheduled events keep their
    /// times. Throws SimError(InvalidConfig).
    void update_config(const nlohmann::json& patch);
    void reset_session();

    /// Arrival supplied by an external workload source.
    void schedule_arrival(SimTime time, const std::string& function_type);

    // -- views --
    const SimConfig& config() const { return config_; }
    const std::vector<Request>& requests() const { return requests_; }
    const std::vector<FunctionInstance>& instances() const { return instances_; }
    const std::vector<ComputeNode>& nodes() const { return nodes_.all(); }
    const Dispatcher& dispatcher() const { return dispatcher_; }
    const Kernel& kernel() const { return kernel_; }
    const Metrics& metrics() const { return metrics_; }
    const std::vector<RecordedCommand>& command_log() const { return commands_; }
    const Request& request_at(RequestId id) const;
    const FunctionInstance& instance_at(InstanceId id) const;

    CumulativeStats stats() const;
    SessionStats session() const { return metrics_.session(); }
    int live_instance_count() const;

    nlohmann::json snapshot_json(std::size_t recent = 20) const;
    nlohmann::json metrics_json() const;
    std::string export_csv() const;
    std::string event_log_ndjson() const;
    CsvSource csv_source(const std::string& arena) const;

    /// Hash over the full observable state; used for isolation checks.
    std::uint64_t state_hash() const;

    /// Throws std::logic_error describing the first broken invariant.
    void verify() const;

    void set_trace_sink(TraceSink sink) { sink_ = std::move(sink); }

private:
    // DispatchContext
    Request& request(RequestId id) override;
    std::vector<const FunctionInstance*> candidates(const std::string& function_type) const override;
    ScaleOptions scale_options(const std::string& function_type) const override;
    void assign(Request& request, InstanceId instance) override;

    void handle(SimEvent& ev);
    void on_arrival(SimEvent& ev);
    void on_node_provisioned(NodeId node);
    void on_cold_start_complete(InstanceId id);
    void on_execution_complete(RequestId id);
    void on_execution_timeout(RequestId id);
    void on_scripted_failure(SimEvent& ev);

    Request& create_request(const std::string& function_type);
    void admit(Request& request);
    void enqueue(Request& request);
    void drain();
    bool try_scale_up(const std::string& function_type);
    bool can_provision_instance(const std::string& function_type) const;
    void pull_next_arrival();
    Millis sample_execution(const std::string& function_type);

    // lifecycle
    InstanceId provision_instance(const std::string& function_type);
    ReapReport reap_idle();
    void arm_reaper();
    void retire_instance(FunctionInstance& instance, InstanceState to);

    // faults
    void expire_ttl(RequestId id);
    void fail_request(Request& request, RequestStatus status);
    void note_terminal(const Request& request);
    FailureReport fail_node_now(NodeId node);
    void check_failable(NodeId node) const;

    void record_command(const nlohmann::json& command);
    void emit(EntityRef entity, std::string state, EntityRef parent = {});
    void flush_trace();
    FunctionInstance& instance(InstanceId id);

    SimConfig config_;
    Feed feed_;
    Kernel kernel_;
    Rng service_rng_;
    std::optional<ArrivalGenerator> generator_;
    bool arrival_pending_ = false;

    std::vector<Request> requests_;
    std::vector<FunctionInstance> instances_;
    NodePool nodes_;
    Dispatcher dispatcher_;
    Metrics metrics_;
    EventId reaper_event_ = 0;
    std::deque<RequestId> recent_terminal_;

    std::vector<RecordedCommand> commands_;
    int instance_limit_high_water_;
    int node_limit_high_water_;

    TraceSink sink_;
    std::vector<StateDelta> deltas_;
    std::size_t trace_cursor_ = 0;
};

/// Stream ids used to derive per-purpose RNG seeds from a config seed.
inline constexpr std::uint64_t kWorkloadStream = 0;
inline constexpr std::uint64_t kServiceStream = 1;

/// Applies one recorded command to `sim` (inject, fail_node, update_config
/// or reset_session). Throws SimError(UnknownCommand) for anything else.
void apply_recorded(Simulation& sim, const nlohmann::json& command);

/// Re-runs a fresh arena from `config`, applying each command at the point it
/// was originally applied, and stops at `until`.
std::unique_ptr<Simulation> replay(const SimConfig& config, std::span<const RecordedCommand> commands, SimTime until);

}  // namespace servsim
