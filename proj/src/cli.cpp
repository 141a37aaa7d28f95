#include "servsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "servsim/battleground.hpp"
#include "servsim/service.hpp"
#include "servsim/simulation.hpp"
#include "servsim/workload.hpp"

namespace servsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

RoutingKind routing_flag(const std::string& name) {
    auto r = parse_routing(name);
    if (!r) throw SimError(ErrorCode::InvalidConfig, "unknown routing strategy '" + name + "'");
    return *r;
}

PlacementKind placement_flag(const std::string& name) {
    auto p = parse_placement(name);
    if (!p) throw SimError(ErrorCode::InvalidConfig, "unknown placement strategy '" + name + "'");
    return *p;
}

std::atomic<bool> g_interrupted{false};

}  // namespace

SimConfig load_config_source(const std::string& name_or_path) {
    const fs::path path(name_or_path);
    if (fs::is_regular_file(path)) {
        std::ifstream f(path);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw SimError(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
        }
        SimConfig c = config_from_json(j);
        validate(c);
        return c;
    }
    return load_scenario(name_or_path).config;
}

ScriptedFailure parse_fail_spec(const std::string& text) {
    const auto at = text.find('@');
    if (at == std::string::npos) throw SimError(ErrorCode::InvalidConfig, "expected <node>@<ms>, got '" + text + "'");
    const auto node = parse_id<'N'>(text.substr(0, at));
    if (!node) throw SimError(ErrorCode::InvalidConfig, "bad node id in '" + text + "'");
    const std::string when = text.substr(at + 1);
    if (when.empty() || !std::all_of(when.begin(), when.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw SimError(ErrorCode::InvalidConfig, "bad time in '" + text + "'");
    }
    return ScriptedFailure{*node, std::stoll(when)};
}

void write_scenario_files(const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& name : scenario_names()) {
        write_file(dir / (name + ".json"), to_json(load_scenario(name).config).dump(2) + "\n");
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deterministic discrete-event simulator of a serverless platform", "servsim"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one scenario headlessly and write its artifacts");
    std::string scenario;
    SimTime until = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> routing;
    std::optional<std::string> placement;
    std::vector<std::string> fail_specs;
    std::string out_dir;
    run->add_option("--scenario", scenario, "Bundled scenario name or config file")->required();
    run->add_option("--until", until, "Simulated end time in ms")->required()->check(CLI::NonNegativeNumber);
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--routing", routing, "warm_priority | round_robin | least_connections");
    run->add_option("--placement", placement,
                    "first_fit | best_fit | worst_fit | load_balanced | affinity | anti_affinity | cost_optimised");
    run->add_option("--fail-node", fail_specs, "Scripted node failure, e.g. N1@5000 (repeatable)");
    run->add_option("--out", out_dir, "Output directory")->required();

    // battleground
    auto* bg = app.add_subcommand("battleground", "Run two arenas on one shared workload and compare them");
    std::string config_a;
    std::string config_b;
    std::optional<std::string> routing_a, routing_b, placement_a, placement_b;
    Millis dt = 0;
    bg->add_option("--config-a", config_a, "Scenario name or config file for arena A")->required();
    bg->add_option("--config-b", config_b, "Scenario name or config file for arena B")->required();
    bg->add_option("--routing-a", routing_a, "Override arena A's routing strategy");
    bg->add_option("--routing-b", routing_b, "Override arena B's routing strategy");
    bg->add_option("--placement-a", placement_a, "Override arena A's placement strategy");
    bg->add_option("--placement-b", placement_b, "Override arena B's placement strategy");
    bg->add_option("--seed", seed, "Shared workload seed (defaults to arena A's seed)");
    bg->add_option("--until", until, "Simulated end time in ms")->required()->check(CLI::NonNegativeNumber);
    bg->add_option("--step", dt, "Lockstep window in ms (defaults to the whole run)")->check(CLI::NonNegativeNumber);
    bg->add_option("--out", out_dir, "Output directory")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Start the HTTP control service");
    int port = 8080;
    std::string host = "127.0.0.1";
    std::optional<std::string> ui_dir;
    std::string initial = "steady-state";
    std::optional<double> pace;
    bool start_running = false;
    serve->add_option("--port", port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--ui-dir", ui_dir, "Static UI bundle to host at /")->check(CLI::ExistingDirectory);
    serve->add_option("--scenario", initial, "Initial scenario name or config file");
    serve->add_option("--pace", pace, "Simulated ms per wall-clock second (0 = unpaced)");
    serve->add_flag("--start", start_running, "Start running immediately");

    // scenarios
    auto* scen = app.add_subcommand("scenarios", "List bundled scenarios or write them as config files");
    std::optional<std::string> write_dir;
    scen->add_option("--write", write_dir, "Directory to write <name>.json files into");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*run) {
            SimConfig config = load_config_source(scenario);
            if (seed) config.seed = *seed;
            if (routing) config.routing_strategy = routing_flag(*routing);
            if (placement) config.placement_strategy = placement_flag(*placement);
            for (const auto& spec : fail_specs) config.scripted_failures.push_back(parse_fail_spec(spec));

            Simulation sim(config);
            sim.run_until(until);

            fs::create_directories(out_dir);
            write_file(fs::path(out_dir) / "export.csv", sim.export_csv());
            write_file(fs::path(out_dir) / "events.ndjson", sim.event_log_ndjson());
            json summary{{"scenario", scenario}, {"until_ms", until}, {"config", to_json(sim.config())},
                         {"stats", to_json(sim.stats())}, {"session", to_json(sim.session())}};
            write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

            const CumulativeStats s = sim.stats();
            out << "t=" << sim.now() << " created=" << s.total_created << " succeeded=" << s.total_succeeded
                << " failed=" << s.failed.total() << " cold_starts=" << s.cold_starts
                << " cost=" << s.cumulative_cost.str() << "\n";
            return 0;
        }

        if (*bg) {
            SimConfig a = load_config_source(config_a);
            SimConfig b = load_config_source(config_b);
            if (routing_a) a.routing_strategy = routing_flag(*routing_a);
            if (routing_b) b.routing_strategy = routing_flag(*routing_b);
            if (placement_a) a.placement_strategy = placement_flag(*placement_a);
            if (placement_b) b.placement_strategy = placement_flag(*placement_b);
            Battleground arena_pair(a, b, seed.value_or(a.seed));
            const Millis window = dt > 0 ? dt : std::max<Millis>(until, 0);
            while (arena_pair.now() < until) arena_pair.step_lockstep(std::min(window, until - arena_pair.now()));
            if (until == 0) arena_pair.step_lockstep(0);

            fs::create_directories(out_dir);
            const ComparisonReport report = arena_pair.report();
            write_file(fs::path(out_dir) / "report.json", to_json(report).dump(2) + "\n");
            write_file(fs::path(out_dir) / "export.csv", arena_pair.export_csv());
            write_file(fs::path(out_dir) / "events_A.ndjson", arena_pair.arena("A").event_log_ndjson());
            write_file(fs::path(out_dir) / "events_B.ndjson", arena_pair.arena("B").event_log_ndjson());

            for (const auto& s : report.arenas) {
                out << s.label << ": succeeded=" << s.total_succeeded << " failed=" << s.failed.total()
                    << " cold_starts=" << s.cold_starts << " avg_latency_ms="
                    << (s.avg_latency_ms ? std::to_string(*s.avg_latency_ms) : std::string("-"))
                    << " cost=" << s.cumulative_cost.str() << "\n";
            }
            return 0;
        }

        if (*serve) {
            SimConfig config = load_config_source(initial);
            if (pace) config.pace = *pace;
            ServiceOptions options;
            options.host = host;
            options.port = port;
            options.ui_dir = ui_dir;
            Service service(config, options);
            const int bound = service.start();
            out << "listening on http://" << host << ":" << bound << std::endl;
            if (start_running) service.command(json{{"kind", "Start"}});
            std::signal(SIGINT, [](int) { g_interrupted = true; });
            std::signal(SIGTERM, [](int) { g_interrupted = true; });
            while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            service.stop();
            return 0;
        }

        if (*scen) {
            if (write_dir) {
                write_scenario_files(*write_dir);
            } else {
                for (const auto& name : scenario_names()) out << name << "\n";
            }
            return 0;
        }
    } catch (const SimError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace servsim
