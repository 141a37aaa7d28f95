#include "servsim/config.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

namespace servsim {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<RoutingKind, 3> kRoutingNames{{
    {RoutingKind::WarmPriority, "warm_priority"},
    {RoutingKind::RoundRobin, "round_robin"},
    {RoutingKind::LeastConnections, "least_connections"},
}};

constexpr NameTable<PlacementKind, 7> kPlacementNames{{
    {PlacementKind::FirstFit, "first_fit"},
    {PlacementKind::BestFit, "best_fit"},
    {PlacementKind::WorstFit, "worst_fit"},
    {PlacementKind::LoadBalanced, "load_balanced"},
    {PlacementKind::Affinity, "affinity"},
    {PlacementKind::AntiAffinity, "anti_affinity"},
    {PlacementKind::CostOptimised, "cost_optimised"},
}};

constexpr NameTable<WorkloadMode, 3> kModeNames{{
    {WorkloadMode::AutoRate, "auto_rate"},
    {WorkloadMode::Manual, "manual"},
    {WorkloadMode::Scenario, "scenario"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "unknown";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view name) {
    for (const auto& [v, n] : table) {
        if (n == name) return v;
    }
    return std::nullopt;
}

[[noreturn]] void invalid(const std::string& what) { throw SimError(ErrorCode::InvalidConfig, what); }

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!j.is_object()) invalid(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            invalid("unknown field '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            invalid(std::string("field '") + key + "' has the wrong type");
        }
    }
}

Resources resources_from_json(const json& j, Resources base, const std::string& where) {
    reject_unknown_keys(j, {"cpu", "mem_mb"}, where);
    double cpu = millicores_to_cpu(base.cpu_m);
    read(j, "cpu", cpu);
    read(j, "mem_mb", base.mem_mb);
    base.cpu_m = cpu_to_millicores(cpu);
    return base;
}

json resources_to_json(const Resources& r) { return json{{"cpu", millicores_to_cpu(r.cpu_m)}, {"mem_mb", r.mem_mb}}; }

}  // namespace

std::string_view to_string(RoutingKind kind) { return name_of(kRoutingNames, kind); }
std::string_view to_string(PlacementKind kind) { return name_of(kPlacementNames, kind); }
std::string_view to_string(WorkloadMode mode) { return name_of(kModeNames, mode); }
std::optional<RoutingKind> parse_routing(std::string_view name) { return value_of(kRoutingNames, name); }
std::optional<PlacementKind> parse_placement(std::string_view name) { return value_of(kPlacementNames, name); }
std::optional<WorkloadMode> parse_workload_mode(std::string_view name) { return value_of(kModeNames, name); }

const FunctionSpec& SimConfig::function(const std::string& type) const {
    auto it = functions.find(type);
    if (it == functions.end()) throw SimError(ErrorCode::UnknownFunctionType, type);
    return it->second;
}

Millis SimConfig::inactivity_check_period() const { return std::max<Millis>(100, inactivity_timeout_ms / 4); }

void validate(const WorkloadSpec& spec) {
    auto bad = [](const std::string& what) { throw SimError(ErrorCode::InvalidSpec, what); };
    if (spec.mode == WorkloadMode::AutoRate && !(spec.rate > 0.0)) bad("rate must be > 0 in auto_rate mode");
    if (spec.rate < 0.0) bad("rate must be >= 0");
    if (spec.jitter < 0.0 || spec.jitter > 1.0) bad("jitter must be in [0, 1]");
    if (spec.function_type_mix.empty()) bad("function_type_mix is empty");
    double total = 0.0;
    for (const auto& [type, w] : spec.function_type_mix) {
        if (w < 0.0) bad("negative weight for " + type);
        total += w;
    }
    if (!(total > 0.0)) bad("function_type_mix weights are all zero");
    SimTime prev = 0;
    for (const auto& p : spec.phases) {
        if (p.rate < 0.0) bad("phase rate must be >= 0");
        if (p.until_ms <= prev) bad("phase boundaries must strictly increase");
        prev = p.until_ms;
    }
    for (const auto& b : spec.bursts) {
        if (b.count < 1) bad("burst count must be >= 1");
        if (b.at_ms < 0) bad("burst time must be >= 0");
    }
}

void validate(const SimConfig& c) {
    if (c.cold_start_delay_ms < 0) invalid("cold_start_delay_ms must be >= 0");
    if (c.node_startup_delay_ms < 0) invalid("node_startup_delay_ms must be >= 0");
    if (c.inactivity_timeout_ms < 0) invalid("inactivity_timeout_ms must be >= 0");
    if (c.request_ttl_ms <= 0) invalid("request_ttl_ms must be > 0");
    if (c.max_execution_timeout_ms <= 0) invalid("max_execution_timeout_ms must be > 0");
    if (c.sample_interval_ms <= 0) invalid("sample_interval_ms must be > 0");
    if (c.concurrency_limit < 1) invalid("concurrency_limit must be >= 1");
    if (c.max_instances < 1) invalid("max_instances must be >= 1");
    if (c.max_nodes < 1) invalid("max_nodes must be >= 1");
    if (c.exec_jitter < 0.0 || c.exec_jitter > 1.0) invalid("exec_jitter must be in [0, 1]");
    if (c.pace < 0.0) invalid("pace must be >= 0");
    if (c.node_capacity.cpu_m <= 0 || c.node_capacity.mem_mb <= 0) invalid("node_capacity must be positive");
    if (c.functions.empty()) invalid("at least one function type is required");
    for (const auto& [type, f] : c.functions) {
        if (f.exec_base_ms < 0) invalid("exec_base_ms must be >= 0 for " + type);
        if (f.demand.cpu_m <= 0 || f.demand.mem_mb <= 0) invalid("demand must be positive for " + type);
        if (!f.demand.fits_within(c.node_capacity)) invalid("demand of " + type + " exceeds node capacity");
    }
    for (const auto& [type, _] : c.workload.function_type_mix) {
        if (!c.functions.contains(type)) invalid("workload mixes unknown function type " + type);
    }
    for (const auto& b : c.workload.bursts) {
        if (!c.functions.contains(b.function_type)) invalid("burst uses unknown function type " + b.function_type);
    }
    for (const auto& f : c.scripted_failures) {
        if (!f.node || f.at_ms < 0) invalid("scripted failure needs a node id and a time >= 0");
    }
    try {
        validate(c.workload);
    } catch (const SimError& e) {
        invalid(e.what());
    }
}

json to_json(const WorkloadSpec& s) {
    json j;
    j["mode"] = to_string(s.mode);
    j["rate"] = s.rate;
    j["jitter"] = s.jitter;
    j["scenario_name"] = s.scenario_name;
    j["function_type_mix"] = s.function_type_mix;
    j["bursts"] = json::array();
    for (const auto& b : s.bursts) {
        j["bursts"].push_back({{"at_ms", b.at_ms}, {"count", b.count}, {"function_type", b.function_type}});
    }
    j["phases"] = json::array();
    for (const auto& p : s.phases) j["phases"].push_back({{"until_ms", p.until_ms}, {"rate", p.rate}});
    return j;
}

json to_json(const SimConfig& c) {
    json j;
    j["routing_strategy"] = to_string(c.routing_strategy);
    j["placement_strategy"] = to_string(c.placement_strategy);
    j["cold_start_delay_ms"] = c.cold_start_delay_ms;
    j["functions"] = json::object();
    for (const auto& [type, f] : c.functions) {
        j["functions"][type] = {{"exec_base_ms", f.exec_base_ms},
                                {"cpu", millicores_to_cpu(f.demand.cpu_m)},
                                {"mem_mb", f.demand.mem_mb}};
    }
    j["exec_jitter"] = c.exec_jitter;
    j["concurrency_limit"] = c.concurrency_limit;
    j["node_capacity"] = resources_to_json(c.node_capacity);
    j["node_startup_delay_ms"] = c.node_startup_delay_ms;
    j["max_instances"] = c.max_instances;
    j["max_nodes"] = c.max_nodes;
    j["inactivity_timeout_ms"] = c.inactivity_timeout_ms;
    j["request_ttl_ms"] = c.request_ttl_ms;
    j["max_execution_timeout_ms"] = c.max_execution_timeout_ms;
    j["timeout_kills_instance"] = c.timeout_kills_instance;
    j["scale_up_on_busy"] = c.scale_up_on_busy;
    j["sample_interval_ms"] = c.sample_interval_ms;
    j["workload"] = to_json(c.workload);
    j["seed"] = c.seed;
    j["pace"] = c.pace;
    j["scripted_failures"] = json::array();
    for (const auto& f : c.scripted_failures) {
        j["scripted_failures"].push_back({{"node", f.node.str()}, {"at_ms", f.at_ms}});
    }
    return j;
}

WorkloadSpec workload_from_json(const json& j, WorkloadSpec s) {
    reject_unknown_keys(j, {"mode", "rate", "jitter", "scenario_name", "function_type_mix", "bursts", "phases"},
                        "workload");
    if (auto it = j.find("mode"); it != j.end()) {
        if (!it->is_string()) invalid("workload.mode must be a string");
        auto mode = parse_workload_mode(it->get<std::string>());
        if (!mode) invalid("unknown workload mode " + it->get<std::string>());
        s.mode = *mode;
    }
    read(j, "rate", s.rate);
    read(j, "jitter", s.jitter);
    read(j, "scenario_name", s.scenario_name);
    read(j, "function_type_mix", s.function_type_mix);
    if (auto it = j.find("bursts"); it != j.end()) {
        if (!it->is_array()) invalid("workload.bursts must be an array");
        s.bursts.clear();
        for (const auto& b : *it) {
            reject_unknown_keys(b, {"at_ms", "count", "function_type"}, "burst");
            Burst burst;
            read(b, "at_ms", burst.at_ms);
            read(b, "count", burst.count);
            read(b, "function_type", burst.function_type);
            s.bursts.push_back(burst);
        }
    }
    if (auto it = j.find("phases"); it != j.end()) {
        if (!it->is_array()) invalid("workload.phases must be an array");
        s.phases.clear();
        for (const auto& p : *it) {
            reject_unknown_keys(p, {"until_ms", "rate"}, "phase");
            Phase phase;
            read(p, "until_ms", phase.until_ms);
            read(p, "rate", phase.rate);
            s.phases.push_back(phase);
        }
    }
    return s;
}

SimConfig config_from_json(const json& j, SimConfig c) {
    reject_unknown_keys(j,
                        {"routing_strategy", "placement_strategy", "cold_start_delay_ms", "functions", "exec_jitter",
                         "concurrency_limit", "node_capacity", "node_startup_delay_ms", "max_instances", "max_nodes",
                         "inactivity_timeout_ms", "request_ttl_ms", "max_execution_timeout_ms",
                         "timeout_kills_instance", "scale_up_on_busy", "sample_interval_ms", "workload", "seed", "pace",
                         "scripted_failures"},
                        "config");
    if (auto it = j.find("routing_strategy"); it != j.end()) {
        auto kind = it->is_string() ? parse_routing(it->get<std::string>()) : std::nullopt;
        if (!kind) invalid("unknown routing strategy " + it->dump());
        c.routing_strategy = *kind;
    }
    if (auto it = j.find("placement_strategy"); it != j.end()) {
        auto kind = it->is_string() ? parse_placement(it->get<std::string>()) : std::nullopt;
        if (!kind) invalid("unknown placement strategy " + it->dump());
        c.placement_strategy = *kind;
    }
    read(j, "cold_start_delay_ms", c.cold_start_delay_ms);
    if (auto it = j.find("functions"); it != j.end()) {
        if (!it->is_object()) invalid("functions must be an object");
        std::map<std::string, FunctionSpec> functions;
        for (const auto& [type, f] : it->items()) {
            reject_unknown_keys(f, {"exec_base_ms", "cpu", "mem_mb"}, "function " + type);
            // Patches of an existing type start from its current values.
            FunctionSpec spec = c.functions.contains(type) ? c.functions.at(type) : FunctionSpec{};
            read(f, "exec_base_ms", spec.exec_base_ms);
            json demand = json::object();
            if (f.contains("cpu")) demand["cpu"] = f["cpu"];
            if (f.contains("mem_mb")) demand["mem_mb"] = f["mem_mb"];
            spec.demand = resources_from_json(demand, spec.demand, "function " + type);
            functions[type] = spec;
        }
        c.functions = std::move(functions);
    }
    read(j, "exec_jitter", c.exec_jitter);
    read(j, "concurrency_limit", c.concurrency_limit);
    if (auto it = j.find("node_capacity"); it != j.end()) {
        c.node_capacity = resources_from_json(*it, c.node_capacity, "node_capacity");
    }
    read(j, "node_startup_delay_ms", c.node_startup_delay_ms);
    read(j, "max_instances", c.max_instances);
    read(j, "max_nodes", c.max_nodes);
    read(j, "inactivity_timeout_ms", c.inactivity_timeout_ms);
    read(j, "request_ttl_ms", c.request_ttl_ms);
    read(j, "max_execution_timeout_ms", c.max_execution_timeout_ms);
    read(j, "timeout_kills_instance", c.timeout_kills_instance);
    read(j, "scale_up_on_busy", c.scale_up_on_busy);
    read(j, "sample_interval_ms", c.sample_interval_ms);
    if (auto it = j.find("workload"); it != j.end()) {
        try {
            c.workload = workload_from_json(*it, c.workload);
        } catch (const SimError& e) {
            invalid(e.what());
        }
    }
    read(j, "seed", c.seed);
    read(j, "pace", c.pace);
    if (auto it = j.find("scripted_failures"); it != j.end()) {
        if (!it->is_array()) invalid("scripted_failures must be an array");
        c.scripted_failures.clear();
        for (const auto& f : *it) {
            reject_unknown_keys(f, {"node", "at_ms"}, "scripted failure");
            std::string node;
            ScriptedFailure sf;
            read(f, "node", node);
            read(f, "at_ms", sf.at_ms);
            auto id = parse_id<'N'>(node);
            if (!id) invalid("bad node id '" + node + "'");
            sf.node = *id;
            c.scripted_failures.push_back(sf);
        }
    }
    return c;
}

SimConfig apply_patch(const SimConfig& config, const json& patch) {
    SimConfig updated = config_from_json(patch, config);
    validate(updated);
    return updated;
}

}  // namespace servsim
