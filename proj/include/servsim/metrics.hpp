#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "servsim/lifecycle.hpp"
#include "servsim/placement.hpp"
#include "servsim/workload.hpp"

namespace servsim {

/// Cost in MB·seconds held as exact thousandths.
struct Cost {
    std::int64_t milli = 0;

    Cost& operator+=(const Cost& o) {
        milli += o.milli;
        return *this;
    }
    friend Cost operator+(Cost a, const Cost& b) { return a += b; }
    friend auto operator<=>(const Cost&, const Cost&) = default;

    double value() const { return static_cast<double>(milli) / 1000.0; }
    /// Shortest exact decimal, e.g. "256", "64.128", "0.5".
    std::string str() const;
    static std::optional<Cost> parse(const std::string& text);
};

/// (execution_ms / 1000) * memory_mb.
Cost cost(Millis execution_ms, std::int64_t memory_mb);

struct FailureCounts {
    std::int64_t ttl = 0;
    std::int64_t exec_timeout = 0;
    std::int64_t node_down = 0;

    std::int64_t total() const { return ttl + exec_timeout + node_down; }
    friend bool operator==(const FailureCounts&, const FailureCounts&) = default;
};

struct SeriesSample {
    SimTime time = 0;
    std::int64_t queue_length = 0;
    std::int64_t active_instances = 0;
    std::int64_t active_nodes = 0;
    double cpu_utilisation = 0.0;
    double mem_utilisation = 0.0;
    std::int64_t total_succeeded = 0;
    std::int64_t total_failed = 0;
    Cost cumulative_cost;
    std::optional<double> avg_end_to_end_ms;

    friend bool operator==(const SeriesSample&, const SeriesSample&) = default;
};

/// Whole-run aggregates. Everything except `series` can be rebuilt from the
/// CSV export.
struct CumulativeStats {
    std::int64_t total_created = 0;
    std::int64_t total_succeeded = 0;
    FailureCounts failed;
    std::int64_t in_system = 0;
    std::optional<double> avg_end_to_end_ms;
    double avg_cpu_utilisation = 0.0;
    double avg_mem_utilisation = 0.0;
    Cost cumulative_cost;
    std::int64_t cold_starts = 0;
    std::vector<SeriesSample> series;
};

struct SessionStats {
    SimTime since = 0;
    std::int64_t queue_wait_samples = 0;
    std::int64_t execution_samples = 0;
    std::optional<double> avg_queue_wait_ms;
    std::optional<double> avg_execution_ms;
};

/// Time-weighted integrals of resources held versus capacity up to `now`.
struct UtilisationIntegrals {
    std::int64_t cpu_used = 0;
    std::int64_t cpu_capacity = 0;
    std::int64_t mem_used = 0;
    std::int64_t mem_capacity = 0;

    double cpu_ratio() const;
    double mem_ratio() const;
};

UtilisationIntegrals utilisation_integrals(const std::vector<FunctionInstance>& instances,
                                           const std::vector<ComputeNode>& nodes, SimTime now);

/// Instantaneous Σused / Σcapacity over up nodes; 0 with no nodes.
std::pair<double, double> instant_utilisation(const std::vector<ComputeNode>& nodes);

class Metrics {
public:
    explicit Metrics(Millis sample_interval_ms = 250) : interval_(sample_interval_ms) {}

    void on_created() { ++created_; }
    void on_cold_start() { ++cold_starts_; }
    void on_dispatched(const Request& request);
    /// Failed requests accrue no cost.
    void on_terminal(const Request& request, std::int64_t memory_mb);

    /// Appends samples for every grid time <= t not yet sampled.
    void sample_through(SimTime t, std::size_t queue_length, const std::vector<FunctionInstance>& instances,
                        const std::vector<ComputeNode>& nodes);

    void reset_session(SimTime now);
    void set_sample_interval(Millis interval) { interval_ = interval; }

    CumulativeStats cumulative(SimTime now, const std::vector<FunctionInstance>& instances,
                               const std::vector<ComputeNode>& nodes) const;
    SessionStats session() const;
    const std::vector<SeriesSample>& series() const { return series_; }
    Cost cumulative_cost() const { return cost_; }

private:
    Millis interval_;
    SimTime next_sample_ = 0;
    std::int64_t created_ = 0;
    std::int64_t succeeded_ = 0;
    FailureCounts failed_;
    std::int64_t e2e_sum_ = 0;
    Cost cost_;
    std::int64_t cold_starts_ = 0;
    std::vector<SeriesSample> series_;

    SimTime session_since_ = 0;
    std::int64_t session_wait_sum_ = 0;
    std::int64_t session_wait_n_ = 0;
    std::int64_t session_exec_sum_ = 0;
    std::int64_t session_exec_n_ = 0;
};

nlohmann::json to_json(const SeriesSample& sample);
nlohmann::json to_json(const CumulativeStats& stats, bool include_series = true);
nlohmann::json to_json(const SessionStats& stats);

inline const std::vector<std::string> kRequestColumns = {
    "request_id",  "function_type", "arrival_ms",   "enqueue_ms",    "dispatch_ms", "exec_start_ms", "end_ms",
    "status",      "queue_wait_ms", "execution_ms", "end_to_end_ms", "cost",        "instance_id",   "node_id",
};
inline const std::vector<std::string> kInstanceColumns = {
    "instance_id", "function_type", "node_id", "state", "created_ms",      "ready_ms",
    "ended_ms",    "lifetime_ms",   "cpu_m",   "mem_mb", "requests_served",
};
inline const std::vector<std::string> kNodeColumns = {
    "node_id",        "state",           "provisioned_ms", "ready_ms",    "ended_ms",         "lifetime_ms",
    "cpu_capacity_m", "mem_capacity_mb", "cpu_used_m",     "mem_used_mb", "instances_hosted",
};

struct CsvSource {
    /// Empty for single-arena exports; otherwise a leading `arena` column.
    std::string arena;
    const std::vector<Request>* requests = nullptr;
    const std::vector<FunctionInstance>* instances = nullptr;
    const std::vector<ComputeNode>* nodes = nullptr;
    SimTime now = 0;
};

/// Three tables (requests, instances, nodes), each introduced by a
/// "# <name>" line and separated by a blank line. Rows are in id order,
/// arena by arena. Unset timestamps are empty fields.
std::string export_csv(std::span<const CsvSource> sources);
std::string export_csv(const std::vector<Request>& requests, const std::vector<FunctionInstance>& instances,
                       const std::vector<ComputeNode>& nodes, SimTime now);

}  // namespace servsim
