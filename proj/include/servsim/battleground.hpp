#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "servsim/simulation.hpp"

namespace servsim {

struct ArenaSummary {
    std::string label;
    std::int64_t total_created = 0;
    std::int64_t total_succeeded = 0;
    FailureCounts failed;
    std::int64_t cold_starts = 0;
    std::optional<double> avg_latency_ms;
    /// Succeeded over finished requests; absent before anything finished.
    std::optional<double> success_rate;
    /// Succeeded requests per simulated second; absent at t=0.
    std::optional<double> throughput_per_s;
    Cost cumulative_cost;
};

struct ComparisonReport {
    SimTime time = 0;
    std::array<ArenaSummary, 2> arenas;
    /// Sampled at the same simulated times in both arenas.
    std::array<std::vector<SeriesSample>, 2> series;
};

nlohmann::json to_json(const ArenaSummary& summary);
nlohmann::json to_json(const ComparisonReport& report);

/// Two isolated arenas fed one shared arrival schedule.
///
/// The workload is generated once, from the shared seed, and scheduled
/// into both arenas window by window; each arena keeps its own service RNG
/// seeded from its own config.
class Battleground {
public:
    static constexpr std::array<const char*, 2> kLabels{"A", "B"};

    /// Both configs must share the workload spec and sample interval.
    /// Throws SimError(InvalidConfig).
    Battleground(SimConfig config_a, SimConfig config_b, std::uint64_t shared_workload_seed);

    /// Advances both clocks by exactly dt. Returns the events processed in
    /// each arena.
    std::array<std::size_t, 2> step_lockstep(Millis dt);

    SimTime now() const { return arenas_[0]->now(); }

    /// Throws SimError(UnknownCommand) for labels other than "A" and "B".
    Simulation& arena(const std::string& label);
    const Simulation& arena(const std::string& label) const;
    Simulation& arena(std::size_t index) { return *arenas_.at(index); }
    const Simulation& arena(std::size_t index) const { return *arenas_.at(index); }

    /// Labelled commands touch one arena. An unlabelled update applies to
    /// both and is the only way to change the shared workload.
    void update_config(const std::optional<std::string>& label, const nlohmann::json& patch);
    std::vector<RequestId> inject(const std::optional<std::string>& label, int n, const std::string& function_type);

    ComparisonReport report() const;
    /// Same schema as a single-arena export, with a leading `arena` column.
    std::string export_csv() const;

    std::uint64_t shared_seed() const { return seed_; }

private:
    std::uint64_t seed_;
    ArrivalGenerator generator_;
    std::array<std::unique_ptr<Simulation>, 2> arenas_;
    /// Arrivals at or before this time are already scheduled in both arenas.
    SimTime fed_through_ = -1;
};

}  // namespace servsim
