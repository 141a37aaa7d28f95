#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "servsim/types.hpp"

namespace servsim {

enum class RoutingKind { WarmPriority, RoundRobin, LeastConnections };
enum class PlacementKind { FirstFit, BestFit, WorstFit, LoadBalanced, Affinity, AntiAffinity, CostOptimised };
enum class WorkloadMode { AutoRate, Manual, Scenario };

std::string_view to_string(RoutingKind kind);
std::string_view to_string(PlacementKind kind);
std::string_view to_string(WorkloadMode mode);
std::optional<RoutingKind> parse_routing(std::string_view name);
std::optional<PlacementKind> parse_placement(std::string_view name);
std::optional<WorkloadMode> parse_workload_mode(std::string_view name);

inline constexpr PlacementKind kAllPlacements[] = {
    PlacementKind::FirstFit,     PlacementKind::BestFit,      PlacementKind::WorstFit,     PlacementKind::LoadBalanced,
    PlacementKind::Affinity,     PlacementKind::AntiAffinity, PlacementKind::CostOptimised,
};

/// Burst of simultaneous arrivals at a fixed time.
struct Burst {
    SimTime at_ms = 0;
    int count = 1;
    std::string function_type = "f";

    friend bool operator==(const Burst&, const Burst&) = default;
};

/// Rate segment that lasts until `until_ms`; rate 0 means silence.
struct Phase {
    SimTime until_ms = 0;
    double rate = 0.0;

    friend bool operator==(const Phase&, const Phase&) = default;
};

struct WorkloadSpec {
    WorkloadMode mode = WorkloadMode::AutoRate;
    /// Requests per second.
    double rate = 1.0;
    /// Inter-arrival jitter as a fraction of the base spacing, in [0, 1].
    double jitter = 0.0;
    std::string scenario_name;
    std::map<std::string, double> function_type_mix{{"f", 1.0}};
    /// Scenario mode only.
    std::vector<Burst> bursts;
    std::vector<Phase> phases;

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

struct FunctionSpec {
    Millis exec_base_ms = 500;
    ResourceDemand demand{1000, 256};

    friend bool operator==(const FunctionSpec&, const FunctionSpec&) = default;
};

struct ScriptedFailure {
    NodeId node;
    SimTime at_ms = 0;

    friend bool operator==(const ScriptedFailure&, const ScriptedFailure&) = default;
};

/// Every tunable of one arena.
struct SimConfig {
    RoutingKind routing_strategy = RoutingKind::WarmPriority;
    PlacementKind placement_strategy = PlacementKind::FirstFit;
    Millis cold_start_delay_ms = 1000;
    std::map<std::string, FunctionSpec> functions{{"f", FunctionSpec{}}};
    double exec_jitter = 0.0;
    int concurrency_limit = 1;
    Resources node_capacity{4000, 4096};
    Millis node_startup_delay_ms = 0;
    int max_instances = 10;
    int max_nodes = 4;
    Millis inactivity_timeout_ms = 10000;
    Millis request_ttl_ms = 30000;
    Millis max_execution_timeout_ms = 15000;
    bool timeout_kills_instance = true;
    bool scale_up_on_busy = true;
    Millis sample_interval_ms = 250;
    WorkloadSpec workload;
    std::uint64_t seed = 1;
    /// Simulated ms per wall-clock second; 0 runs as fast as possible.
    double pace = 0.0;
    std::vector<ScriptedFailure> scripted_failures;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;

    const FunctionSpec& function(const std::string& type) const;
    /// Sweep cadence for idle reaping: timeout/4, at least 100 ms.
    Millis inactivity_check_period() const;
};

/// Throws SimError(InvalidConfig) naming the first violated constraint.
void validate(const SimConfig& config);
/// Throws SimError(InvalidSpec).
void validate(const WorkloadSpec& spec);

nlohmann::json to_json(const SimConfig& config);
nlohmann::json to_json(const WorkloadSpec& spec);

/// Missing fields keep the values already in `base`.
SimConfig config_from_json(const nlohmann::json& j, SimConfig base = {});
WorkloadSpec workload_from_json(const nlohmann::json& j, WorkloadSpec base = {});

/// Applies a partial update and validates the result.
SimConfig apply_patch(const SimConfig& config, const nlohmann::json& patch);

}  // namespace servsim
