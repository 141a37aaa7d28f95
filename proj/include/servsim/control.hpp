#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "servsim/battleground.hpp"
#include "servsim/simulation.hpp"

namespace servsim {

enum class CommandKind {
    Start,
    Pause,
    Reset,
    UpdateConfig,
    InjectRequests,
    FailNode,
    ResetSession,
    ExportCsv,
    CreateBattleground,
    StepLockstep,
};

std::string_view to_string(CommandKind kind);
std::optional<CommandKind> parse_command_kind(std::string_view name);

/// A parsed control command. JSON shape: {"kind": "...", "arena": "A", ...}
/// with the kind-specific fields below.
struct ControlCommand {
    CommandKind kind = CommandKind::Start;
    std::optional<std::string> arena;

    /// UpdateConfig
    nlohmann::json patch;
    /// InjectRequests
    int n = 1;
    std::string function_type = "f";
    /// FailNode
    NodeId node;
    /// StepLockstep
    Millis dt = 0;
    /// Reset: optional bundled scenario, full config object and seed.
    /// CreateBattleground: config_a / config_b (each a scenario name or a
    /// config object) and the shared seed.
    std::optional<std::string> scenario;
    nlohmann::json config;
    nlohmann::json config_a;
    nlohmann::json config_b;
    std::optional<std::uint64_t> seed;
};

/// Throws SimError(UnknownCommand) for an unknown kind and
/// SimError(InvalidConfig) for malformed fields.
ControlCommand parse_command(const nlohmann::json& j);

/// Resolves a config given as a bundled scenario name or a config object.
/// Throws SimError(UnknownScenario) or SimError(InvalidConfig).
SimConfig resolve_config(const nlohmann::json& spec);

/// Owns the live arena (or battleground) and applies commands to it. Not
/// thread-safe; the service serialises access through its mailbox.
class Controller {
public:
    /// Single-arena mode from `config`.
    explicit Controller(SimConfig config);

    /// Always returns exactly one reply: {"ok": true, "kind", "t", "result"?}
    /// or {"ok": false, "kind", "error", "message"}.
    nlohmann::json apply(const nlohmann::json& command);
    nlohmann::json apply(const ControlCommand& command);

    /// Advances the running simulation by dt; no-op while paused.
    void advance(Millis dt);
    /// Advances regardless of the running flag.
    void advance_unconditionally(Millis dt);

    bool running() const { return running_; }
    bool battleground_mode() const { return bg_ != nullptr; }
    SimTime now() const;

    Simulation* simulation() { return sim_.get(); }
    const Simulation* simulation() const { return sim_.get(); }
    Battleground* battleground() { return bg_.get(); }
    const Battleground* battleground() const { return bg_.get(); }

    nlohmann::json state_json() const;
    nlohmann::json metrics_json() const;
    std::string export_csv() const;
    double pace() const;

    /// Called for every processed event of every arena; arena is "" in
    /// single-arena mode.
    using StreamSink = std::function<void(const std::string& arena, const SimEvent& event, std::size_t seq,
                                          std::span<const StateDelta> deltas)>;
    void set_stream_sink(StreamSink sink);

    /// Bumped whenever the arena set is replaced (Reset, CreateBattleground).
    std::uint64_t generation() const { return generation_; }

private:
    void attach_sinks();
    nlohmann::json dispatch(const ControlCommand& command);

    std::unique_ptr<Simulation> sim_;
    std::unique_ptr<Battleground> bg_;
    bool running_ = false;
    StreamSink sink_;
    std::uint64_t generation_ = 0;
};

}  // namespace servsim
