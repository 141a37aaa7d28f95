#include "servsim/control.hpp"

#include <array>
#include <utility>

#include "servsim/workload.hpp"

namespace servsim {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<CommandKind, std::string_view>, 10> kCommandNames{{
    {CommandKind::Start, "Start"},
    {CommandKind::Pause, "Pause"},
    {CommandKind::Reset, "Reset"},
    {CommandKind::UpdateConfig, "UpdateConfig"},
    {CommandKind::InjectRequests, "InjectRequests"},
    {CommandKind::FailNode, "FailNode"},
    {CommandKind::ResetSession, "ResetSession"},
    {CommandKind::ExportCsv, "ExportCsv"},
    {CommandKind::CreateBattleground, "CreateBattleground"},
    {CommandKind::StepLockstep, "StepLockstep"},
}};

[[noreturn]] void malformed(const std::string& what) { throw SimError(ErrorCode::InvalidConfig, what); }

json ids_json(const auto& ids) {
    json out = json::array();
    for (const auto& id : ids) out.push_back(id.str());
    return out;
}

}  // namespace

std::string_view to_string(CommandKind kind) {
    for (const auto& [k, name] : kCommandNames) {
        if (k == kind) return name;
    }
    return "Unknown";
}

std::optional<CommandKind> parse_command_kind(std::string_view name) {
    for (const auto& [k, n] : kCommandNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

ControlCommand parse_command(const json& j) {
    if (!j.is_object()) malformed("command must be an object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw SimError(ErrorCode::UnknownCommand, "missing kind");
    const auto kind = parse_command_kind(j["kind"].get<std::string>());
    if (!kind) throw SimError(ErrorCode::UnknownCommand, j["kind"].get<std::string>());

    ControlCommand c;
    c.kind = *kind;
    try {
        if (j.contains("arena") && !j["arena"].is_null()) c.arena = j["arena"].get<std::string>();
        switch (c.kind) {
            case CommandKind::UpdateConfig:
                c.patch = j.at("patch");
                if (!c.patch.is_object()) malformed("patch must be an object");
                break;
            case CommandKind::InjectRequests:
                c.n = j.value("n", 1);
                c.function_type = j.value("function_type", std::string("f"));
                if (c.n < 1) malformed("n must be >= 1");
                break;
            case CommandKind::FailNode: {
                const auto text = j.at("node").get<std::string>();
                const auto id = parse_id<'N'>(text);
                if (!id) throw SimError(ErrorCode::UnknownNode, text);
                c.node = *id;
                break;
            }
            case CommandKind::StepLockstep:
                c.dt = j.at("dt").get<Millis>();
                if (c.dt < 0) malformed("dt must be >= 0");
                break;
            case CommandKind::Reset:
            case CommandKind::CreateBattleground:
                if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
                if (j.contains("config")) c.config = j["config"];
                if (j.contains("config_a")) c.config_a = j["config_a"];
                if (j.contains("config_b")) c.config_b = j["config_b"];
                if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
                break;
            default: break;
        }
    } catch (const json::exception& e) {
        malformed(std::string(to_string(c.kind)) + ": " + e.what());
    }
    return c;
}

SimConfig resolve_config(const json& spec) {
    if (spec.is_string()) return load_scenario(spec.get<std::string>()).config;
    if (spec.is_object()) return config_from_json(spec);
    malformed("config must be a scenario name or an object");
}

Controller::Controller(SimConfig config) : sim_(std::make_unique<Simulation>(std::move(config))) {}

SimTime Controller::now() const { return bg_ ? bg_->now() : sim_->now(); }

double Controller::pace() const { return bg_ ? bg_->arena(0).config().pace : sim_->config().pace; }

void Controller::set_stream_sink(StreamSink sink) {
    sink_ = std::move(sink);
    attach_sinks();
}

void Controller::attach_sinks() {
    auto bind = [this](Simulation& sim, std::string label) {
        if (!sink_) {
            sim.set_trace_sink(nullptr);
            return;
        }
        sim.set_trace_sink([this, label](const SimEvent& ev, std::size_t seq, std::span<const StateDelta> deltas) {
            sink_(label, ev, seq, deltas);
        });
    };
    if (sim_) bind(*sim_, "");
    if (bg_) {
        bind(bg_->arena(0), Battleground::kLabels[0]);
        bind(bg_->arena(1), Battleground::kLabels[1]);
    }
}

void Controller::advance(Millis dt) {
    if (running_) advance_unconditionally(dt);
}

void Controller::advance_unconditionally(Millis dt) {
    if (bg_) {
        bg_->step_lockstep(dt);
    } else {
        sim_->run_until(sim_->now() + dt);
    }
}

json Controller::apply(const json& command) {
    std::string kind = command.is_object() && command.contains("kind") && command["kind"].is_string()
                           ? command["kind"].get<std::string>()
                           : std::string();
    try {
        return apply(parse_command(command));
    } catch (const SimError& e) {
        return json{{"ok", false}, {"kind", kind}, {"error", to_string(e.code())}, {"message", e.what()}};
    }
}

json Controller::apply(const ControlCommand& command) {
    try {
        json reply{{"ok", true}, {"kind", to_string(command.kind)}};
        json result = dispatch(command);
        reply["t"] = now();
        if (!result.is_null()) reply["result"] = std::move(result);
        return reply;
    } catch (const SimError& e) {
        return json{{"ok", false},
                    {"kind", to_string(command.kind)},
                    {"error", to_string(e.code())},
                    {"message", e.what()}};
    }
}

json Controller::dispatch(const ControlCommand& c) {
    auto target = [&]() -> Simulation& {
        if (!bg_) return *sim_;
        if (!c.arena) malformed("battleground commands need an arena label");
        return bg_->arena(*c.arena);
    };

    switch (c.kind) {
        case CommandKind::Start: running_ = true; return nullptr;
        case CommandKind::Pause: running_ = false; return nullptr;
        case CommandKind::Reset: {
            SimConfig config = bg_ ? bg_->arena(0).config() : sim_->config();
            if (c.scenario) config = load_scenario(*c.scenario).config;
            if (!c.config.is_null()) config = resolve_config(c.config);
            if (c.seed) config.seed = *c.seed;
            auto fresh = std::make_unique<Simulation>(std::move(config));
            sim_ = std::move(fresh);
            bg_.reset();
            running_ = false;
            ++generation_;
            attach_sinks();
            return nullptr;
        }
        case CommandKind::UpdateConfig:
            if (bg_) {
                bg_->update_config(c.arena, c.patch);
            } else {
                sim_->update_config(c.patch);
            }
            return nullptr;
        case CommandKind::InjectRequests:
            if (bg_) return ids_json(bg_->inject(c.arena, c.n, c.function_type));
            return ids_json(sim_->inject(c.n, c.function_type));
        case CommandKind::FailNode: {
            const FailureReport r = target().fail_node(c.node);
            return json{{"node", r.node.str()},
                        {"failed_instances", ids_json(r.failed_instances)},
                        {"failed_requests", ids_json(r.failed_requests)}};
        }
        case CommandKind::ResetSession:
            if (bg_ && !c.arena) {
                bg_->arena(0).reset_session();
                bg_->arena(1).reset_session();
            } else {
                target().reset_session();
            }
            return nullptr;
        case CommandKind::ExportCsv: return json{{"csv", export_csv()}};
        case CommandKind::CreateBattleground: {
            const SimConfig current = bg_ ? bg_->arena(0).config() : sim_->config();
            SimConfig a = current;
            if (c.scenario) a = load_scenario(*c.scenario).config;
            SimConfig b = a;
            if (!c.config_a.is_null()) a = resolve_config(c.config_a);
            if (!c.config_b.is_null()) b = resolve_config(c.config_b);
            const std::uint64_t seed = c.seed.value_or(a.seed);
            bg_ = std::make_unique<Battleground>(std::move(a), std::move(b), seed);
            sim_.reset();
            running_ = false;
            ++generation_;
            attach_sinks();
            return nullptr;
        }
        case CommandKind::StepLockstep: {
            if (!bg_) malformed("no battleground has been created");
            const auto counts = bg_->step_lockstep(c.dt);
            return json{{"events", {{"A", counts[0]}, {"B", counts[1]}}}};
        }
    }
    throw SimError(ErrorCode::UnknownCommand, std::string(to_string(c.kind)));
}

json Controller::state_json() const {
    if (!bg_) {
        json j = sim_->snapshot_json();
        j["mode"] = "single";
        j["running"] = running_;
        return j;
    }
    json j{{"mode", "battleground"}, {"running", running_}, {"t", bg_->now()}, {"arenas", json::object()}};
    for (std::size_t i = 0; i < 2; ++i) j["arenas"][Battleground::kLabels[i]] = bg_->arena(i).snapshot_json();
    return j;
}

json Controller::metrics_json() const {
    if (!bg_) return sim_->metrics_json();
    return to_json(bg_->report());
}

std::string Controller::export_csv() const { return bg_ ? bg_->export_csv() : sim_->export_csv(); }

}  // namespace servsim
