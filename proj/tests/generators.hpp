// Randomised inputs shared by property tests and the acceptance suite.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "servsim/lifecycle.hpp"
#include "servsim/placement.hpp"

namespace gen {

inline std::int64_t pick(std::mt19937_64& g, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(g);
}

/// Up to five nodes with whole-cpu capacities <= 8 and memory <= 1024 MB;
/// usage and hosted types are arbitrary, and a few nodes are not up.
inline std::vector<servsim::ComputeNode> cluster(std::mt19937_64& g) {
    using namespace servsim;
    const auto count = pick(g, 1, 5);
    std::vector<ComputeNode> nodes;
    for (std::int64_t i = 0; i < count; ++i) {
        ComputeNode n;
        n.id = NodeId{static_cast<std::uint64_t>(i + 1)};
        n.capacity = {pick(g, 1, 8) * 1000, pick(g, 1, 8) * 128};
        // Coarse usage steps make exact score ties common.
        n.used = {pick(g, 0, n.capacity.cpu_m / 500) * 500, pick(g, 0, n.capacity.mem_mb / 64) * 64};
        const auto roll = pick(g, 0, 9);
        n.state = roll == 0 ? NodeState::Failed : roll == 1 ? NodeState::Provisioning : NodeState::Active;
        if (pick(g, 0, 1) == 1) n.hosted_types["f"] = static_cast<int>(pick(g, 1, 3));
        if (pick(g, 0, 2) == 1) n.hosted_types["g"] = 1;
        nodes.push_back(n);
    }
    return nodes;
}

inline servsim::Resources demand(std::mt19937_64& g) {
    return {pick(g, 1, 8) * 500, pick(g, 1, 8) * 64};
}

/// Ready instances (Warm or Busy) with random in-flight counts, ids
/// ascending from 1.
inline std::vector<servsim::FunctionInstance> instances(std::mt19937_64& g, int max_count, int limit) {
    using namespace servsim;
    const auto count = pick(g, 0, max_count);
    std::vector<FunctionInstance> out;
    std::uint64_t next_request = 1;
    for (std::int64_t i = 0; i < count; ++i) {
        FunctionInstance inst;
        inst.id = InstanceId{static_cast<std::uint64_t>(i + 1)};
        inst.function_type = "f";
        inst.concurrency_limit = limit;
        const auto roll = pick(g, 0, 5);
        if (roll == 0) {
            inst.state = InstanceState::ColdStarting;
        } else {
            const auto busy = pick(g, 0, limit);
            inst.state = busy == 0 ? InstanceState::Warm : InstanceState::Busy;
            for (std::int64_t k = 0; k < busy; ++k) inst.in_flight.push_back(RequestId{next_request++});
        }
        out.push_back(inst);
    }
    return out;
}

}  // namespace gen
