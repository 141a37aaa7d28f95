#include "servsim/placement.hpp"

#include <algorithm>

namespace servsim {

namespace {

__extension__ using Wide = __int128;

/// Exact non-negative rational used to compare placement objectives.
struct Ratio {
    Wide num = 0;
    Wide den = 1;

    friend bool operator<(const Ratio& a, const Ratio& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator==(const Ratio& a, const Ratio& b) { return a.num * b.den == b.num * a.den; }
};

/// cpu/cpu_cap + mem/mem_cap as one fraction.
Ratio fraction_sum(std::int64_t cpu, std::int64_t cpu_cap, std::int64_t mem, std::int64_t mem_cap) {
    return Ratio{static_cast<Wide>(cpu) * mem_cap + static_cast<Wide>(mem) * cpu_cap,
                 static_cast<Wide>(cpu_cap) * mem_cap};
}

Ratio remaining_after(const ComputeNode& n, const ResourceDemand& d) {
    const Resources left = n.free() - d;
    return fraction_sum(left.cpu_m, n.capacity.cpu_m, left.mem_mb, n.capacity.mem_mb);
}

Ratio utilisation(const ComputeNode& n, const Resources& used) {
    return fraction_sum(used.cpu_m, n.capacity.cpu_m, used.mem_mb, n.capacity.mem_mb);
}

bool feasible(const ComputeNode& n, const ResourceDemand& d) { return n.is_up() && d.fits_within(n.free()); }

/// Lowest-id node among `candidates` that minimises (or maximises) key.
template <typename Key>
const ComputeNode* pick(const std::vector<const ComputeNode*>& candidates, Key key, bool maximise) {
    const ComputeNode* best = nullptr;
    Ratio best_key;
    for (const ComputeNode* n : candidates) {
        const Ratio k = key(*n);
        if (best == nullptr) {
            best = n;
            best_key = k;
            continue;
        }
        const bool better = maximise ? best_key < k : k < best_key;
        const bool tie_lower_id = k == best_key && n->id < best->id;
        if (better || tie_lower_id) {
            best = n;
            best_key = k;
        }
    }
    return best;
}

const ComputeNode* lowest_id(const std::vector<const ComputeNode*>& candidates) {
    const ComputeNode* best = nullptr;
    for (const ComputeNode* n : candidates) {
        if (best == nullptr || n->id < best->id) best = n;
    }
    return best;
}

}  // namespace

std::string_view to_string(NodeState state) {
    switch (state) {
        case NodeState::Provisioning: return "Provisioning";
        case NodeState::Active: return "Active";
        case NodeState::Failed: return "Failed";
        case NodeState::Deprovisioned: return "Deprovisioned";
    }
    return "Unknown";
}

bool ComputeNode::hosts_type(const std::string& type) const {
    auto it = hosted_types.find(type);
    return it != hosted_types.end() && it->second > 0;
}

std::optional<NodeId> select_node(std::span<const ComputeNode> nodes, const ResourceDemand& demand,
                                  const std::string& function_type, PlacementKind strategy) {
    std::vector<const ComputeNode*> fit;
    for (const auto& n : nodes) {
        if (feasible(n, demand)) fit.push_back(&n);
    }
    if (fit.empty()) return std::nullopt;

    const ComputeNode* chosen = nullptr;
    switch (strategy) {
        case PlacementKind::FirstFit: chosen = lowest_id(fit); break;
        case PlacementKind::BestFit:
            chosen = pick(fit, [&](const ComputeNode& n) { return remaining_after(n, demand); }, false);
            break;
        case PlacementKind::WorstFit:
            chosen = pick(fit, [&](const ComputeNode& n) { return remaining_after(n, demand); }, true);
            break;
        case PlacementKind::LoadBalanced:
            chosen = pick(fit, [](const ComputeNode& n) { return utilisation(n, n.used); }, false);
            break;
        case PlacementKind::CostOptimised:
            chosen = pick(fit, [&](const ComputeNode& n) { return utilisation(n, n.used + demand); }, true);
            break;
        case PlacementKind::Affinity:
        case PlacementKind::AntiAffinity: {
            const bool want_same = strategy == PlacementKind::Affinity;
            std::vector<const ComputeNode*> preferred;
            for (const ComputeNode* n : fit) {
                if (n->hosts_type(function_type) == want_same) preferred.push_back(n);
            }
            chosen = lowest_id(preferred.empty() ? fit : preferred);
            break;
        }
    }
    return chosen->id;
}

void release(ComputeNode& node, const ResourceDemand& demand) {
    if (demand.cpu_m > node.used.cpu_m || demand.mem_mb > node.used.mem_mb) {
        throw SimError(ErrorCode::UnderflowViolation, "release of more than " + node.id.str() + " has in use");
    }
    node.used -= demand;
}

NodeId NodePool::provision(const SimConfig& config, Kernel& kernel) {
    if (!can_provision(config)) {
        throw SimError(ErrorCode::NodeLimitReached, "max_nodes=" + std::to_string(config.max_nodes));
    }
    ComputeNode node;
    node.id = NodeId{nodes_.size() + 1};
    node.capacity = config.node_capacity;
    node.state = NodeState::Provisioning;
    node.provisioned_at = kernel.now();
    node.ready_at = kernel.now() + config.node_startup_delay_ms;
    node.last_active_at = node.ready_at;
    nodes_.push_back(node);
    kernel.schedule(node.ready_at, EventKind::NodeProvisioned, node.id);
    return node.id;
}

bool NodePool::activate(NodeId id, SimTime now) {
    ComputeNode& n = at(id);
    if (n.state != NodeState::Provisioning) return false;
    n.state = NodeState::Active;
    n.ready_at = now;
    n.activated_at = now;
    if (n.hosted.empty()) n.last_active_at = now;
    return true;
}

void NodePool::place(NodeId id, InstanceId instance, const std::string& type, const ResourceDemand& demand) {
    ComputeNode& n = at(id);
    if (!n.is_up() || !demand.fits_within(n.free())) {
        throw SimError(ErrorCode::NoCapacity, "cannot place on " + id.str());
    }
    n.used += demand;
    n.hosted.push_back(instance);
    ++n.hosted_types[type];
}

void NodePool::unplace(NodeId id, InstanceId instance, const std::string& type, const ResourceDemand& demand,
                       SimTime now) {
    ComputeNode& n = at(id);
    release(n, demand);
    std::erase(n.hosted, instance);
    if (auto it = n.hosted_types.find(type); it != n.hosted_types.end() && --it->second <= 0) {
        n.hosted_types.erase(it);
    }
    if (n.hosted.empty()) n.last_active_at = std::max(now, n.ready_at);
}

int NodePool::up_count() const {
    return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_up(); }));
}

bool NodePool::contains(NodeId id) const { return id.value >= 1 && id.value <= nodes_.size(); }

ComputeNode& NodePool::at(NodeId id) {
    if (!contains(id)) throw SimError(ErrorCode::UnknownNode, id.str());
    return nodes_[id.value - 1];
}

const ComputeNode& NodePool::at(NodeId id) const {
    if (!contains(id)) throw SimError(ErrorCode::UnknownNode, id.str());
    return nodes_[id.value - 1];
}

void NodePool::fail(NodeId id, SimTime now) {
    ComputeNode& n = at(id);
    n.state = NodeState::Failed;
    n.ended_at = now;
}

void NodePool::deprovision(NodeId id, SimTime now) {
    ComputeNode& n = at(id);
    n.state = NodeState::Deprovisioned;
    n.ended_at = now;
}

}  // namespace servsim
