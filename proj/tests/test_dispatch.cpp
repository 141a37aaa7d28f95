#include <doctest.h>

#include <map>
#include <random>

#include "generators.hpp"
#include "servsim/dispatch.hpp"

using namespace servsim;

namespace {

FunctionInstance inst(std::uint64_t id, InstanceState state, int in_flight = 0, int limit = 1) {
    FunctionInstance i;
    i.id = InstanceId{id};
    i.function_type = "f";
    i.state = state;
    i.concurrency_limit = limit;
    for (int k = 0; k < in_flight; ++k) i.in_flight.push_back(RequestId{id * 100 + static_cast<std::uint64_t>(k)});
    return i;
}

std::vector<const FunctionInstance*> view(const std::vector<FunctionInstance>& v) {
    std::vector<const FunctionInstance*> out;
    for (const auto& i : v) out.push_back(&i);
    return out;
}

RoutingDecision decide(RoutingKind kind, const std::vector<FunctionInstance>& v, ScaleOptions scale = {true, true}) {
    RoutingStrategy s{kind, 0};
    return route(view(v), s, scale);
}

/// Minimal arena for driving the dispatcher without a simulation.
struct FakeArena : DispatchContext {
    std::vector<Request> requests;
    std::vector<FunctionInstance> instances;
    std::vector<Assignment> log;

    Request& request(RequestId id) override { return requests.at(id.value - 1); }
    std::vector<const FunctionInstance*> candidates(const std::string&) const override { return view(instances); }
    ScaleOptions scale_options(const std::string&) const override { return {false, true}; }
    void assign(Request& r, InstanceId id) override {
        auto& i = instances.at(id.value - 1);
        accept_request(i, r.id);
        r.status = RequestStatus::Executing;
        log.push_back({r.id, id});
    }
    RequestId add_request() {
        Request r;
        r.id = RequestId{requests.size() + 1};
        r.function_type = "f";
        requests.push_back(r);
        return r.id;
    }
};

}  // namespace

TEST_SUITE("dispatch") {

TEST_CASE("warm priority") {
    using S = InstanceState;
    CHECK(decide(RoutingKind::WarmPriority, {inst(1, S::Warm), inst(2, S::Busy, 1)}) ==
          RoutingDecision::assign(InstanceId{1}));
    CHECK(decide(RoutingKind::WarmPriority, {}) == RoutingDecision::enqueue_and_scale_up());
    CHECK(decide(RoutingKind::WarmPriority, {}, {false, true}) == RoutingDecision::enqueue());
    // Idle instances beat busy ones with spare slots.
    CHECK(decide(RoutingKind::WarmPriority, {inst(1, S::Busy, 1, 2), inst(2, S::Warm, 0, 2)}) ==
          RoutingDecision::assign(InstanceId{2}));
    CHECK(decide(RoutingKind::WarmPriority, {inst(1, S::Busy, 1, 2), inst(2, S::ColdStarting)}) ==
          RoutingDecision::assign(InstanceId{1}));
    // All busy or cold: scale up only when busy-scaling is enabled.
    const std::vector<FunctionInstance> full{inst(1, S::Busy, 1), inst(2, S::ColdStarting)};
    CHECK(decide(RoutingKind::WarmPriority, full) == RoutingDecision::enqueue_and_scale_up());
    CHECK(decide(RoutingKind::WarmPriority, full, {true, false}) == RoutingDecision::enqueue());
}

TEST_CASE("round robin walks the instance list and skips cold or full ones") {
    using S = InstanceState;
    std::vector<FunctionInstance> v{inst(1, S::Warm), inst(2, S::Warm), inst(3, S::Warm)};
    RoutingStrategy s{RoutingKind::RoundRobin, 0};
    CHECK(route(view(v), s, {}) == RoutingDecision::assign(InstanceId{1}));
    CHECK(s.cursor == 1);
    CHECK(route(view(v), s, {}) == RoutingDecision::assign(InstanceId{2}));

    std::vector<FunctionInstance> w{inst(1, S::Warm), inst(2, S::ColdStarting), inst(3, S::Busy, 1)};
    RoutingStrategy t{RoutingKind::RoundRobin, 1};
    CHECK(route(view(w), t, {}) == RoutingDecision::assign(InstanceId{1}));

    // A cursor beyond a shrunken list restarts at 0.
    RoutingStrategy u{RoutingKind::RoundRobin, 7};
    CHECK(route(view(v), u, {}) == RoutingDecision::assign(InstanceId{1}));
}

TEST_CASE("least connections takes the minimum, ties to the lowest id") {
    using S = InstanceState;
    CHECK(decide(RoutingKind::LeastConnections, {inst(1, S::Busy, 2, 4), inst(2, S::Warm, 0, 4), inst(3, S::Busy, 1, 4)}) ==
          RoutingDecision::assign(InstanceId{2}));
    CHECK(decide(RoutingKind::LeastConnections, {inst(1, S::Busy, 1, 4), inst(2, S::Busy, 1, 4)}) ==
          RoutingDecision::assign(InstanceId{1}));
}

TEST_CASE("enqueue arms a TTL and rejects duplicates") {
    Kernel k;
    Dispatcher d;
    Request r;
    r.id = RequestId{1};
    CHECK(d.enqueue(r, 0, 5000, k) == 0);
    CHECK(r.status == RequestStatus::InQueue);
    CHECK(d.entries().front().ttl_deadline == 5000);
    CHECK(k.is_pending(r.ttl_event));
    CHECK(k.peek_time() == 5000);
    try {
        d.enqueue(r, 0, 5000, k);
        FAIL("expected DuplicateEnqueue");
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::DuplicateEnqueue);
    }
    Request r2;
    r2.id = RequestId{2};
    CHECK(d.enqueue(r2, 0, 5000, k) == 1);
}

TEST_CASE("drain: FIFO, head blocking, TTL cancelled, dispatch stamped") {
    Kernel k;
    k.advance_to(40);
    Dispatcher d;
    FakeArena a;
    a.instances = {inst(1, InstanceState::Warm, 0, 2)};
    const auto r1 = a.add_request();
    const auto r2 = a.add_request();
    const auto r3 = a.add_request();
    for (auto id : {r1, r2, r3}) d.enqueue(a.request(id), 10, 5000, k);

    const auto out = d.drain(a, k);
    CHECK(out.assignments == std::vector<Assignment>{{r1, InstanceId{1}}, {r2, InstanceId{1}}});
    CHECK_FALSE(out.blocked_head_wants_capacity.has_value());
    CHECK(d.size() == 1);
    CHECK(d.entries().front().request == r3);
    CHECK(a.request(r1).dispatch_time == 40);
    CHECK(a.request(r1).queue_wait_ms() == 30);
    CHECK(k.pending_count() == 1);

    // One slot frees: exactly one request drains.
    finish_request(a.instances[0], r1, 50);
    CHECK(d.drain(a, k).assignments.size() == 1);
    CHECK(d.empty());
}

TEST_CASE("remove takes a request out from anywhere") {
    Kernel k;
    Dispatcher d;
    FakeArena a;
    for (int i = 0; i < 3; ++i) d.enqueue(a.request(a.add_request()), 0, 100, k);
    CHECK(d.remove(RequestId{2}));
    CHECK_FALSE(d.remove(RequestId{2}));
    CHECK_FALSE(d.contains(RequestId{2}));
    CHECK(d.entries()[1].request == RequestId{3});
}

TEST_CASE("switching strategy resets per-type cursors") {
    Dispatcher d(RoutingKind::RoundRobin);
    FakeArena a;
    a.instances = {inst(1, InstanceState::Warm), inst(2, InstanceState::Warm)};
    Request r;
    r.function_type = "f";
    d.route(r, a);
    CHECK(d.strategies().at("f").cursor == 1);
    d.set_kind(RoutingKind::RoundRobin);
    CHECK(d.strategies().empty());
}

TEST_CASE("property: decisions never overfill, least-connections is an argmin, order-invariant") {
    std::mt19937_64 g(7);
    for (int round = 0; round < 20000; ++round) {
        const int limit = static_cast<int>(gen::pick(g, 1, 3));
        const auto v = gen::instances(g, 6, limit);
        for (auto kind : {RoutingKind::WarmPriority, RoutingKind::RoundRobin, RoutingKind::LeastConnections}) {
            RoutingStrategy s{kind, static_cast<std::size_t>(gen::pick(g, 0, 6))};
            const auto dec = route(view(v), s, {true, true});
            const bool any_free = std::any_of(v.begin(), v.end(), [](const auto& i) { return i.has_free_slot(); });
            CHECK((dec.outcome == RoutingDecision::Outcome::Assign) == any_free);
            if (dec.outcome == RoutingDecision::Outcome::Assign) {
                REQUIRE(v[dec.instance.value - 1].has_free_slot());
            }
        }
    }
}

}
