// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
//
// Usage: acceptance <path-to-servsim>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <boost/rational.hpp>

#include "generators.hpp"
#include "oracles.hpp"
#include "servsim/battleground.hpp"
#include "servsim/dispatch.hpp"
#include "servsim/service.hpp"
#include "servsim/simulation.hpp"

using namespace servsim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;

/// Collects the first few failures of a criterion for the report line.
struct Check {
    std::vector<std::string> problems;
    std::string note;

    void expect(bool ok, const std::string& what) {
        if (!ok && problems.size() < 5) problems.push_back(what);
        if (!ok && problems.size() == 5) problems.push_back("...");
    }
    bool ok() const { return problems.empty(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

// ---------------------------------------------------------------------------

void determinism(Check& c) {
    const fs::path base = fs::temp_directory_path() / "servsim_acceptance_c1";
    fs::remove_all(base);
    double slowest = 0.0;
    for (const char* run : {"a", "b"}) {
        const std::string cmd = "\"" + g_cli + "\" run --scenario steady-state --until 60000 --seed 7 --out \"" +
                                (base / run).string() + "\" > /dev/null";
        const auto t0 = std::chrono::steady_clock::now();
        const int rc = std::system(cmd.c_str());
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, secs);
        c.expect(rc == 0, std::string("run ") + run + " exited with " + std::to_string(rc));
        c.expect(secs < 5.0, std::string("run ") + run + " took " + std::to_string(secs) + " s");
    }
    const auto log_a = slurp(base / "a" / "events.ndjson");
    c.expect(!log_a.empty(), "empty event log");
    c.expect(log_a == slurp(base / "b" / "events.ndjson"), "event logs differ");
    c.expect(slurp(base / "a" / "export.csv") == slurp(base / "b" / "export.csv"), "export.csv differs");
    std::ostringstream n;
    n << "slowest run " << slowest << " s";
    c.note = n.str();
}

void placement_oracle(Check& c) {
    std::mt19937_64 g(20240611);
    const int clusters = 2000;
    std::int64_t compared = 0;
    for (int i = 0; i < clusters; ++i) {
        const auto nodes = gen::cluster(g);
        const auto d = gen::demand(g);
        const std::string type = gen::pick(g, 0, 1) ? "f" : "g";
        for (PlacementKind k : kAllPlacements) {
            const auto got = select_node(nodes, d, type, k);
            const auto want = oracle::select(nodes, d, type, k);
            ++compared;
            c.expect(got == want, std::string(to_string(k)) + " mismatch on cluster " + std::to_string(i));
        }
    }
    c.note = std::to_string(clusters) + " clusters x 7 strategies, " + std::to_string(compared) + " comparisons";
}

std::vector<const FunctionInstance*> view(const std::vector<FunctionInstance>& v) {
    std::vector<const FunctionInstance*> out;
    for (const auto& i : v) out.push_back(&i);
    return out;
}

void routing_properties(Check& c) {
    std::mt19937_64 g(77);
    std::int64_t decisions = 0;

    // Least connections against brute force; no decision ever overfills.
    for (int round = 0; round < 40000; ++round) {
        const int limit = static_cast<int>(gen::pick(g, 1, 4));
        const auto v = gen::instances(g, 6, limit);
        std::optional<InstanceId> best;
        std::size_t best_load = 0;
        for (const auto& i : v) {
            if (!i.has_free_slot()) continue;
            if (!best || i.in_flight.size() < best_load) {
                best = i.id;
                best_load = i.in_flight.size();
            }
        }
        for (RoutingKind kind : {RoutingKind::LeastConnections, RoutingKind::WarmPriority, RoutingKind::RoundRobin}) {
            RoutingStrategy s{kind, static_cast<std::size_t>(gen::pick(g, 0, 7))};
            const auto dec = route(view(v), s, {true, true});
            ++decisions;
            if (dec.outcome == RoutingDecision::Outcome::Assign) {
                c.expect(v[dec.instance.value - 1].has_free_slot(), "assigned to a full or cold instance");
            } else {
                c.expect(!best.has_value(), "refused although a slot was free");
            }
            if (kind == RoutingKind::LeastConnections && best) {
                c.expect(dec.instance == *best, "least-connections picked " + dec.instance.str() + ", brute force " +
                                                    best->str());
            }
        }
    }

    // Round-robin fairness: k warm instances, m*k requests, m each.
    for (int round = 0; round < 400; ++round) {
        const auto k = gen::pick(g, 1, 6);
        const auto m = gen::pick(g, 1, 20);
        std::vector<FunctionInstance> v;
        for (std::int64_t i = 0; i < k; ++i) {
            FunctionInstance inst;
            inst.id = InstanceId{static_cast<std::uint64_t>(i + 1)};
            inst.state = InstanceState::Warm;
            inst.concurrency_limit = static_cast<int>(m);
            v.push_back(inst);
        }
        RoutingStrategy s{RoutingKind::RoundRobin, 0};
        std::map<std::uint64_t, std::int64_t> count;
        for (std::int64_t r = 0; r < m * k; ++r) {
            const auto dec = route(view(v), s, {});
            ++decisions;
            accept_request(v.at(dec.instance.value - 1), RequestId{static_cast<std::uint64_t>(r + 1)});
            ++count[dec.instance.value];
        }
        for (std::int64_t i = 1; i <= k; ++i) {
            c.expect(count[static_cast<std::uint64_t>(i)] == m, "round-robin imbalance");
        }
    }

    // FIFO: within an arena, dispatch order follows arrival order, and no
    // instance ever holds more than its limit.
    for (const auto& name : scenario_names()) {
        for (RoutingKind kind : {RoutingKind::WarmPriority, RoutingKind::RoundRobin, RoutingKind::LeastConnections}) {
            SimConfig cfg = load_scenario(name).config;
            cfg.routing_strategy = kind;
            Simulation sim(cfg);
            while (sim.now() < 60000) {
                if (!sim.step()) break;
                for (const auto& i : sim.instances()) {
                    c.expect(static_cast<int>(i.in_flight.size()) <= i.concurrency_limit, "concurrency exceeded");
                }
            }
            SimTime last = -1;
            for (const auto& r : sim.requests()) {
                if (!r.dispatch_time) continue;
                ++decisions;
                c.expect(*r.dispatch_time >= last, name + ": " + r.id.str() + " overtook an earlier request");
                last = *r.dispatch_time;
            }
        }
    }
    c.expect(decisions >= 100000, "only " + std::to_string(decisions) + " decisions");
    c.note = std::to_string(decisions) + " decisions";
}

SimConfig burst_config(int count, Millis cold, Millis exec, int max_instances, Millis ttl) {
    SimConfig cfg;
    cfg.cold_start_delay_ms = cold;
    cfg.functions = {{"f", FunctionSpec{exec, {1000, 128}}}};
    cfg.concurrency_limit = 1;
    cfg.max_instances = max_instances;
    cfg.max_nodes = 4;
    cfg.request_ttl_ms = ttl;
    cfg.max_execution_timeout_ms = 60000;
    cfg.workload.mode = WorkloadMode::Scenario;
    cfg.workload.bursts = {{0, count, "f"}};
    return cfg;
}

void cold_start(Check& c) {
    Simulation sim(burst_config(10, 1000, 500, 2, 600000));
    sim.run_until(20000);
    const auto expected = oracle::fifo_dispatch_times(10, 2, 1000, 500, 600000);
    std::ostringstream waits;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& r = sim.requests().at(i);
        const auto wait = r.queue_wait_ms();
        c.expect(wait.has_value() && *wait == *expected[i],
                 r.id.str() + " waited " + (wait ? std::to_string(*wait) : "-") + ", expected " +
                     std::to_string(*expected[i]));
        if (r.cold_served) c.expect(wait && *wait >= 1000, r.id.str() + " was cold-served after under 1000 ms");
        waits << (i ? "," : "") << (wait ? *wait : -1);
    }
    c.expect(sim.stats().cold_starts == 2, "expected two cold starts");
    c.note = "waits [" + waits.str() + "]";
}

void scaling(Check& c) {
    const SimConfig cfg = load_scenario("ramp-and-quiet").config;
    Simulation sim(cfg);
    int peak = 0;
    while (sim.now() < 90000) {
        if (!sim.step()) break;
        peak = std::max(peak, sim.live_instance_count());
    }
    sim.run_until(90000);

    // Demand: most requests simultaneously in the system.
    std::vector<std::pair<SimTime, int>> edges;
    SimTime last_completion = 0;
    for (const auto& r : sim.requests()) {
        edges.emplace_back(r.arrival_time, +1);
        if (r.end_time) edges.emplace_back(*r.end_time, -1);
        if (r.status == RequestStatus::Succeeded) last_completion = std::max(last_completion, *r.end_time);
    }
    std::sort(edges.begin(), edges.end());
    int in_system = 0, demand = 0;
    for (const auto& [t, d] : edges) demand = std::max(demand, in_system += d);

    const int want_peak = std::min(demand, cfg.max_instances);
    c.expect(peak == want_peak, "peak " + std::to_string(peak) + ", expected " + std::to_string(want_peak));

    const Millis period = cfg.inactivity_check_period();
    const Millis timeout = cfg.inactivity_timeout_ms;
    auto ceil_grid = [&](SimTime t) { return (t + period - 1) / period * period; };
    std::map<std::uint64_t, SimTime> idle_since;
    for (const auto& i : sim.instances()) idle_since[i.id.value] = i.ready_at.value_or(i.created_at);
    for (const auto& r : sim.requests()) {
        if (r.assigned_instance && r.end_time) {
            auto& s = idle_since[r.assigned_instance.value];
            s = std::max(s, *r.end_time);
        }
    }
    for (const auto& i : sim.instances()) {
        c.expect(i.state == InstanceState::Terminated, i.id.str() + " still " + std::string(to_string(i.state)));
        const SimTime want = ceil_grid(idle_since[i.id.value] + timeout);
        c.expect(i.ended_at == want, i.id.str() + " ended at " + std::to_string(i.ended_at.value_or(-1)) +
                                         ", expected " + std::to_string(want));
        c.expect(i.ended_at && *i.ended_at <= last_completion + timeout + period, i.id.str() + " outlived the bound");
    }
    c.expect(sim.live_instance_count() == 0, "instances left alive");
    c.note = "peak " + std::to_string(peak) + " (demand " + std::to_string(demand) + "), zero by " +
             std::to_string(last_completion + timeout + period) + " ms";
}

void failure(Check& c) {
    const SimConfig cfg = load_scenario("node-failure-drill").config;
    const NodeId n1{1};
    const SimTime at = 5000;

    // In-flight count on N1 just before the failure, from a twin run.
    SimConfig twin_cfg = cfg;
    twin_cfg.scripted_failures.clear();
    Simulation twin(twin_cfg);
    twin.run_until(at - 1);
    std::int64_t f = 0;
    for (const auto& r : twin.requests()) {
        if (r.status == RequestStatus::Executing && r.assigned_node == n1) ++f;
    }

    Simulation sim(cfg);
    bool closure = true;
    std::string broken;
    while (sim.now() < 30000) {
        if (!sim.step()) break;
        try {
            sim.verify();
        } catch (const std::logic_error& e) {
            if (broken.empty()) broken = e.what();
        }
        const auto s = sim.stats();
        closure = closure && s.total_created == s.total_succeeded + s.failed.total() + s.in_system;
    }
    c.expect(broken.empty(), broken);
    c.expect(closure, "accounting closure broken");

    std::int64_t node_down = 0, node_down_at = 0, replacements = 0;
    for (const auto& r : sim.requests()) {
        if (r.status == RequestStatus::FailedNodeDown) {
            ++node_down;
            if (r.end_time == at) ++node_down_at;
        }
        if (r.exec_start_time && *r.exec_start_time >= at) {
            c.expect(r.assigned_node != n1, r.id.str() + " started on N1 after the failure");
        }
        if (r.status == RequestStatus::Succeeded && *r.exec_start_time >= at && r.assigned_node != n1) ++replacements;
    }
    c.expect(f > 0, "no in-flight work at the failure");
    c.expect(node_down == f, "FailedNodeDown " + std::to_string(node_down) + ", expected " + std::to_string(f));
    c.expect(node_down_at == f, "not all node-down failures at t=5000");
    c.expect(replacements > 0, "no successes after the failure");
    c.note = "f=" + std::to_string(f) + ", " + std::to_string(replacements) + " later successes elsewhere";
}

/// Exact decimal of a non-negative rational with a power-of-ten denominator.
std::string decimal(boost::rational<std::int64_t> q) {
    std::int64_t scaled = q.numerator() * (1000 / q.denominator());
    std::string out = std::to_string(scaled / 1000);
    std::string frac = std::to_string(scaled % 1000);
    frac.insert(0, 3 - frac.size(), '0');
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    return frac.empty() ? out : out + "." + frac;
}

void cost_model(Check& c) {
    c.expect(cost(2000, 128).str() == "256", "cost(2000, 128) = " + cost(2000, 128).str());
    c.expect(cost(500, 512).str() == "256", "cost(500, 512) = " + cost(500, 512).str());

    SimConfig cfg = burst_config(100, 700, 333, 6, 600000);
    cfg.functions["f"].demand.mem_mb = 192;
    cfg.exec_jitter = 0.35;
    Simulation sim(cfg);
    sim.run_until(60000);

    boost::rational<std::int64_t> sum = 0;
    std::int64_t succeeded = 0;
    for (const auto& r : sim.requests()) {
        if (r.status != RequestStatus::Succeeded) continue;
        ++succeeded;
        sum += boost::rational<std::int64_t>(*r.execution_ms(), 1000) * 192;
    }
    c.expect(succeeded == 100, std::to_string(succeeded) + " of 100 succeeded");
    const std::string want = decimal(sum);
    const std::string got = sim.stats().cumulative_cost.str();
    c.expect(got == want, "cumulative " + got + ", expected " + want);
    c.note = "100 requests, cost " + got;
}

void ttl(Check& c) {
    const int burst = 20, k = 2;
    const Millis exec = 1000, cold = 500, ttl_ms = 3000;
    Simulation sim(burst_config(burst, cold, exec, k, ttl_ms));
    sim.run_until(60000);

    // Each server starts ceil((ttl - ready) / exec) requests before the deadline.
    const std::int64_t served = k * ((ttl_ms - cold + exec - 1) / exec);
    const std::int64_t hand = burst - served;
    std::int64_t oracle_fail = 0;
    for (const auto& d : oracle::fifo_dispatch_times(burst, k, cold, exec, ttl_ms)) oracle_fail += d ? 0 : 1;
    const std::int64_t got = sim.stats().failed.ttl;
    c.expect(hand == oracle_fail, "hand count and oracle disagree");
    c.expect(got == hand, "FailedTtl " + std::to_string(got) + ", expected " + std::to_string(hand));
    for (const auto& r : sim.requests()) {
        if (r.status == RequestStatus::FailedTtl) c.expect(r.end_time == ttl_ms, r.id.str() + " expired late");
    }
    c.note = "FailedTtl " + std::to_string(got) + " of " + std::to_string(burst);
}

void battleground(Check& c) {
    const SimConfig duel = load_scenario("strategy-duel").config;
    {
        Battleground same(duel, duel, duel.seed);
        for (int i = 0; i < 60; ++i) same.step_lockstep(1000);
        const auto r = same.report();
        c.expect(!r.series[0].empty() && r.series[0] == r.series[1], "identical configs, different series");
    }

    SimConfig rr = duel;
    rr.routing_strategy = RoutingKind::RoundRobin;
    Battleground bg(duel, rr, duel.seed);
    for (int i = 0; i < 60; ++i) bg.step_lockstep(1000);
    const auto r = bg.report();
    c.expect(r.arenas[0].cold_starts <= r.arenas[1].cold_starts,
             "WarmPriority " + std::to_string(r.arenas[0].cold_starts) + " cold starts > RoundRobin " +
                 std::to_string(r.arenas[1].cold_starts));

    const auto hash_b = bg.arena("B").state_hash();
    bg.inject("A", 5, "f");
    bg.update_config("A", json{{"max_instances", 2}});
    for (const auto& n : bg.arena("A").nodes()) {
        if (n.is_up()) {
            bg.arena("A").fail_node(n.id);
            break;
        }
    }
    c.expect(bg.arena("B").state_hash() == hash_b, "arena B changed after commands to A");

    c.note = "cold starts WarmPriority " + std::to_string(r.arenas[0].cold_starts) + " vs RoundRobin " +
             std::to_string(r.arenas[1].cold_starts);
}

void csv_round_trip(Check& c) {
    ServiceOptions opts;
    opts.port = 0;
    Service svc(load_scenario("node-failure-drill").config, opts);
    const int port = svc.start();
    httplib::Client cli("127.0.0.1", port);
    cli.Post("/command", R"({"kind":"Start"})", "application/json");
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    cli.Post("/command", R"({"kind":"Pause"})", "application/json");

    auto m = cli.Get("/metrics");
    auto csv = cli.Get("/export.csv");
    svc.stop();
    if (!m || !csv) {
        c.expect(false, "HTTP request failed");
        return;
    }
    const json metrics = json::parse(m->body);
    const json& cum = metrics.at("cumulative");
    const auto agg = oracle::aggregate(csv->body);
    auto same = [&](const std::string& what, auto got, auto want) {
        c.expect(got == want, what + ": csv " + nlohmann::json(got).dump() + ", /metrics " + nlohmann::json(want).dump());
    };
    same("created", agg.created, cum.at("total_created").get<std::int64_t>());
    same("succeeded", agg.succeeded, cum.at("total_succeeded").get<std::int64_t>());
    same("failed.ttl", agg.failed_ttl, cum.at("total_failed").at("ttl").get<std::int64_t>());
    same("failed.exec_timeout", agg.failed_timeout, cum.at("total_failed").at("exec_timeout").get<std::int64_t>());
    same("failed.node_down", agg.failed_node, cum.at("total_failed").at("node_down").get<std::int64_t>());
    same("in_system", agg.in_system, cum.at("in_system").get<std::int64_t>());
    same("cold_starts", agg.cold_starts, cum.at("cold_starts").get<std::int64_t>());
    same("cost", agg.cost_thousandths, oracle::thousandths(cum.at("cumulative_cost_exact").get<std::string>()));
    same("avg_cpu_utilisation", agg.avg_cpu_utilisation, cum.at("avg_cpu_utilisation").get<double>());
    same("avg_mem_utilisation", agg.avg_mem_utilisation, cum.at("avg_mem_utilisation").get<double>());
    const json& e2e = cum.at("avg_end_to_end_ms");
    c.expect(agg.avg_end_to_end_ms.has_value() == !e2e.is_null(), "avg_end_to_end_ms presence differs");
    if (agg.avg_end_to_end_ms && !e2e.is_null()) same("avg_end_to_end_ms", *agg.avg_end_to_end_ms, e2e.get<double>());
    c.expect(agg.created > 0, "nothing ran");
    c.note = "t=" + std::to_string(metrics.at("t").get<std::int64_t>()) + " ms, " + std::to_string(agg.created) +
             " requests";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-servsim>\n";
        return 2;
    }
    g_cli = argv[1];

    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"determinism", determinism},
        {"placement oracle", placement_oracle},
        {"routing properties", routing_properties},
        {"cold-start queue waits", cold_start},
        {"scale up and decay", scaling},
        {"node failure", failure},
        {"cost model", cost_model},
        {"ttl overflow", ttl},
        {"battleground", battleground},
        {"csv round-trip", csv_round_trip},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        std::cout << (c.ok() ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first;
        if (!c.note.empty()) std::cout << " (" << c.note << ")";
        std::cout << "\n";
        for (const auto& p : c.problems) std::cout << "      " << p << "\n";
        if (!c.ok()) ++failed;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed;
}
