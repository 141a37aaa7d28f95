#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "servsim/config.hpp"
#include "servsim/kernel.hpp"
#include "servsim/types.hpp"

namespace servsim {

enum class NodeState { Provisioning, Active, Failed, Deprovisioned };

std::string_view to_string(NodeState state);

struct ComputeNode {
    NodeId id;
    Resources capacity;
    Resources used;
    std::vector<InstanceId> hosted;
    /// Live instances per function type; drives (anti-)affinity.
    std::map<std::string, int> hosted_types;
    NodeState state = NodeState::Provisioning;
    SimTime provisioned_at = 0;
    /// Planned activation time while Provisioning.
    SimTime ready_at = 0;
    std::optional<SimTime> activated_at;
    /// Last time the node hosted anything (or became ready).
    SimTime last_active_at = 0;
    std::optional<SimTime> ended_at;

    Resources free() const { return capacity - used; }
    bool hosts_type(const std::string& type) const;
    bool is_up() const { return state == NodeState::Provisioning || state == NodeState::Active; }
};

/// Picks a host for an instance with `demand` among `nodes`. Nodes that are
/// not up are ignored. The answer depends only on node contents and ids, not
/// on the order of `nodes`. Returns none when no node can hold the demand.
std::optional<NodeId> select_node(std::span<const ComputeNode> nodes, const ResourceDemand& demand,
                                  const std::string& function_type, PlacementKind strategy);

/// Subtracts `demand` from the node's usage.
/// Throws SimError(UnderflowViolation) if usage would go negative.
void release(ComputeNode& node, const ResourceDemand& demand);

/// Registry of compute nodes for one arena.
class NodePool {
public:
    /// Starts a new node that becomes Active at now + startup delay; the
    /// NodeProvisioned event is scheduled on `kernel`.
    /// Throws SimError(NodeLimitReached) when max_nodes are already up.
    NodeId provision(const SimConfig& config, Kernel& kernel);

    /// Handles NodeProvisioned. Returns false if the node is no longer
    /// provisioning (it failed in the meantime).
    bool activate(NodeId id, SimTime now);

    void place(NodeId id, InstanceId instance, const std::string& type, const ResourceDemand& demand);
    void unplace(NodeId id, InstanceId instance, const std::string& type, const ResourceDemand& demand, SimTime now);

    int up_count() const;
    bool can_provision(const SimConfig& config) const { return up_count() < config.max_nodes; }

    ComputeNode& at(NodeId id);
    const ComputeNode& at(NodeId id) const;
    bool contains(NodeId id) const;
    const std::vector<ComputeNode>& all() const { return nodes_; }

    /// Marks the node terminal. Resources are released by the caller via
    /// unplace() for each hosted instance beforehand.
    void fail(NodeId id, SimTime now);
    void deprovision(NodeId id, SimTime now);

private:
    std::vector<ComputeNode> nodes_;
};

}  // namespace servsim
