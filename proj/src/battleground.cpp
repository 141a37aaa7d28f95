#include "servsim/battleground.hpp"

#include "servsim/workload.hpp"

namespace servsim {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

SimConfig checked(SimConfig config) {
    validate(config);
    return config;
}

}  // namespace

json to_json(const ArenaSummary& s) {
    return json{{"label", s.label},
                {"total_created", s.total_created},
                {"total_succeeded", s.total_succeeded},
                {"total_failed",
                 {{"ttl", s.failed.ttl}, {"exec_timeout", s.failed.exec_timeout}, {"node_down", s.failed.node_down}}},
                {"cold_starts", s.cold_starts},
                {"avg_latency_ms", optional_json(s.avg_latency_ms)},
                {"success_rate", optional_json(s.success_rate)},
                {"throughput_per_s", optional_json(s.throughput_per_s)},
                {"cumulative_cost", s.cumulative_cost.value()},
                {"cumulative_cost_exact", s.cumulative_cost.str()}};
}

json to_json(const ComparisonReport& r) {
    json j{{"t", r.time}, {"arenas", json::array()}, {"series", json::array()}};
    for (const auto& a : r.arenas) j["arenas"].push_back(to_json(a));
    // Paired rows: one entry per sample time with both arenas' values.
    const std::size_t n = std::min(r.series[0].size(), r.series[1].size());
    for (std::size_t i = 0; i < n; ++i) {
        j["series"].push_back({{"t", r.series[0][i].time}, {"A", to_json(r.series[0][i])}, {"B", to_json(r.series[1][i])}});
    }
    return j;
}

Battleground::Battleground(SimConfig config_a, SimConfig config_b, std::uint64_t shared_workload_seed)
    : seed_(shared_workload_seed),
      generator_(checked(config_a).workload, Rng::derive(shared_workload_seed, kWorkloadStream)) {
    validate(config_b);
    if (!(config_a.workload == config_b.workload)) {
        throw SimError(ErrorCode::InvalidConfig, "arenas must share one workload spec");
    }
    if (config_a.sample_interval_ms != config_b.sample_interval_ms) {
        throw SimError(ErrorCode::InvalidConfig, "arenas must share one sample interval");
    }
    arenas_[0] = std::make_unique<Simulation>(std::move(config_a), Simulation::Feed::External);
    arenas_[1] = std::make_unique<Simulation>(std::move(config_b), Simulation::Feed::External);
}

std::array<std::size_t, 2> Battleground::step_lockstep(Millis dt) {
    if (dt < 0) throw SimError(ErrorCode::SchedulingInPast, "dt must be >= 0");
    const SimTime end = now() + dt;
    if (end > fed_through_) {
        for (const Arrival& a : generator_.take_until(end + 1)) {
            for (auto& arena : arenas_) arena->schedule_arrival(a.time, a.function_type);
        }
        fed_through_ = end;
    }
    return {arenas_[0]->run_until(end), arenas_[1]->run_until(end)};
}

Simulation& Battleground::arena(const std::string& label) {
    for (std::size_t i = 0; i < kLabels.size(); ++i) {
        if (label == kLabels[i]) return *arenas_[i];
    }
    throw SimError(ErrorCode::UnknownCommand, "no arena labelled '" + label + "'");
}

const Simulation& Battleground::arena(const std::string& label) const {
    return const_cast<Battleground*>(this)->arena(label);
}

void Battleground::update_config(const std::optional<std::string>& label, const json& patch) {
    if (label) {
        if (patch.is_object() && (patch.contains("workload") || patch.contains("sample_interval_ms"))) {
            throw SimError(ErrorCode::InvalidConfig, "workload and sample interval are shared; omit the arena label");
        }
        arena(*label).update_config(patch);
        return;
    }
    // Validate against both arenas before touching either.
    apply_patch(arenas_[0]->config(), patch);
    apply_patch(arenas_[1]->config(), patch);
    arenas_[0]->update_config(patch);
    arenas_[1]->update_config(patch);
    if (patch.contains("workload")) {
        generator_.update(arenas_[0]->config().workload, fed_through_ + 1);
    }
}

std::vector<RequestId> Battleground::inject(const std::optional<std::string>& label, int n,
                                            const std::string& function_type) {
    if (label) return arena(*label).inject(n, function_type);
    arenas_[0]->config().function(function_type);
    arenas_[1]->config().function(function_type);
    auto ids = arenas_[0]->inject(n, function_type);
    arenas_[1]->inject(n, function_type);
    return ids;
}

ComparisonReport Battleground::report() const {
    ComparisonReport r;
    r.time = now();
    for (std::size_t i = 0; i < 2; ++i) {
        const CumulativeStats s = arenas_[i]->stats();
        ArenaSummary& a = r.arenas[i];
        a.label = kLabels[i];
        a.total_created = s.total_created;
        a.total_succeeded = s.total_succeeded;
        a.failed = s.failed;
        a.cold_starts = s.cold_starts;
        a.avg_latency_ms = s.avg_end_to_end_ms;
        const std::int64_t finished = s.total_succeeded + s.failed.total();
        if (finished > 0) a.success_rate = static_cast<double>(s.total_succeeded) / static_cast<double>(finished);
        if (r.time > 0) a.throughput_per_s = static_cast<double>(s.total_succeeded) * 1000.0 / static_cast<double>(r.time);
        a.cumulative_cost = s.cumulative_cost;
        r.series[i] = s.series;
    }
    return r;
}

std::string Battleground::export_csv() const {
    const std::array<CsvSource, 2> sources{arenas_[0]->csv_source(kLabels[0]), arenas_[1]->csv_source(kLabels[1])};
    return servsim::export_csv(sources);
}

}  // namespace servsim
