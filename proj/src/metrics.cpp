#include "servsim/metrics.hpp"

#include <sstream>

namespace servsim {

using nlohmann::json;

std::string Cost::str() const {
    const bool negative = milli < 0;
    const std::int64_t abs = negative ? -milli : milli;
    std::string out = (negative ? "-" : "") + std::to_string(abs / 1000);
    std::int64_t frac = abs % 1000;
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 3 - digits.size(), '0');
        while (digits.back() == '0') digits.pop_back();
        out += "." + digits;
    }
    return out;
}

std::optional<Cost> Cost::parse(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t pos = 0;
    bool negative = false;
    if (text[0] == '-') {
        negative = true;
        pos = 1;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any_digit = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (c == '.' && !seen_dot) {
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9') return std::nullopt;
        any_digit = true;
        if (seen_dot) {
            if (++frac_digits > 3) return std::nullopt;
            frac = frac * 10 + (c - '0');
        } else {
            whole = whole * 10 + (c - '0');
        }
    }
    if (!any_digit) return std::nullopt;
    for (int i = frac_digits; i < 3; ++i) frac *= 10;
    const std::int64_t milli = whole * 1000 + frac;
    return Cost{negative ? -milli : milli};
}

Cost cost(Millis execution_ms, std::int64_t memory_mb) { return Cost{execution_ms * memory_mb}; }

double UtilisationIntegrals::cpu_ratio() const {
    return cpu_capacity > 0 ? static_cast<double>(cpu_used) / static_cast<double>(cpu_capacity) : 0.0;
}

double UtilisationIntegrals::mem_ratio() const {
    return mem_capacity > 0 ? static_cast<double>(mem_used) / static_cast<double>(mem_capacity) : 0.0;
}

UtilisationIntegrals utilisation_integrals(const std::vector<FunctionInstance>& instances,
                                           const std::vector<ComputeNode>& nodes, SimTime now) {
    UtilisationIntegrals u;
    for (const auto& inst : instances) {
        const Millis life = inst.ended_at.value_or(now) - inst.created_at;
        u.cpu_used += inst.demand.cpu_m * life;
        u.mem_used += inst.demand.mem_mb * life;
    }
    for (const auto& node : nodes) {
        const Millis life = node.ended_at.value_or(now) - node.provisioned_at;
        u.cpu_capacity += node.capacity.cpu_m * life;
        u.mem_capacity += node.capacity.mem_mb * life;
    }
    return u;
}

std::pair<double, double> instant_utilisation(const std::vector<ComputeNode>& nodes) {
    Resources used;
    Resources cap;
    for (const auto& n : nodes) {
        if (!n.is_up()) continue;
        used += n.used;
        cap += n.capacity;
    }
    if (cap.cpu_m == 0 || cap.mem_mb == 0) return {0.0, 0.0};
    return {static_cast<double>(used.cpu_m) / static_cast<double>(cap.cpu_m),
            static_cast<double>(used.mem_mb) / static_cast<double>(cap.mem_mb)};
}

void Metrics::on_dispatched(const Request& request) {
    if (auto wait = request.queue_wait_ms()) {
        session_wait_sum_ += *wait;
        ++session_wait_n_;
    }
}

void Metrics::on_terminal(const Request& request, std::int64_t memory_mb) {
    switch (request.status) {
        case RequestStatus::Succeeded: {
            ++succeeded_;
            e2e_sum_ += request.end_to_end_ms().value_or(0);
            const Millis exec = request.execution_ms().value_or(0);
            cost_ += cost(exec, memory_mb);
            session_exec_sum_ += exec;
            ++session_exec_n_;
            break;
        }
        case RequestStatus::FailedTtl: ++failed_.ttl; break;
        case RequestStatus::FailedExecTimeout: ++failed_.exec_timeout; break;
        case RequestStatus::FailedNodeDown: ++failed_.node_down; break;
        default: break;
    }
}

void Metrics::sample_through(SimTime t, std::size_t queue_length, const std::vector<FunctionInstance>& instances,
                             const std::vector<ComputeNode>& nodes) {
    if (next_sample_ > t) return;
    SeriesSample s;
    s.queue_length = static_cast<std::int64_t>(queue_length);
    for (const auto& inst : instances) {
        if (inst.is_live()) ++s.active_instances;
    }
    for (const auto& n : nodes) {
        if (n.is_up()) ++s.active_nodes;
    }
    std::tie(s.cpu_utilisation, s.mem_utilisation) = instant_utilisation(nodes);
    s.total_succeeded = succeeded_;
    s.total_failed = failed_.total();
    s.cumulative_cost = cost_;
    if (succeeded_ > 0) s.avg_end_to_end_ms = static_cast<double>(e2e_sum_) / static_cast<double>(succeeded_);
    // State is constant between events, so every grid point up to t shares it.
    while (next_sample_ <= t) {
        s.time = next_sample_;
        series_.push_back(s);
        next_sample_ += interval_;
    }
}

void Metrics::reset_session(SimTime now) {
    session_since_ = now;
    session_wait_sum_ = session_wait_n_ = 0;
    session_exec_sum_ = session_exec_n_ = 0;
}

CumulativeStats Metrics::cumulative(SimTime now, const std::vector<FunctionInstance>& instances,
                                    const std::vector<ComputeNode>& nodes) const {
    CumulativeStats c;
    c.total_created = created_;
    c.total_succeeded = succeeded_;
    c.failed = failed_;
    c.in_system = created_ - succeeded_ - failed_.total();
    if (succeeded_ > 0) c.avg_end_to_end_ms = static_cast<double>(e2e_sum_) / static_cast<double>(succeeded_);
    const UtilisationIntegrals u = utilisation_integrals(instances, nodes, now);
    c.avg_cpu_utilisation = u.cpu_ratio();
    c.avg_mem_utilisation = u.mem_ratio();
    c.cumulative_cost = cost_;
    c.cold_starts = cold_starts_;
    c.series = series_;
    return c;
}

SessionStats Metrics::session() const {
    SessionStats s;
    s.since = session_since_;
    s.queue_wait_samples = session_wait_n_;
    s.execution_samples = session_exec_n_;
    if (session_wait_n_ > 0) {
        s.avg_queue_wait_ms = static_cast<double>(session_wait_sum_) / static_cast<double>(session_wait_n_);
    }
    if (session_exec_n_ > 0) {
        s.avg_execution_ms = static_cast<double>(session_exec_sum_) / static_cast<double>(session_exec_n_);
    }
    return s;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const SeriesSample& s) {
    return json{{"t", s.time},
                {"queue_length", s.queue_length},
                {"active_instances", s.active_instances},
                {"active_nodes", s.active_nodes},
                {"cpu_utilisation", s.cpu_utilisation},
                {"mem_utilisation", s.mem_utilisation},
                {"total_succeeded", s.total_succeeded},
                {"total_failed", s.total_failed},
                {"cumulative_cost", s.cumulative_cost.value()},
                {"avg_end_to_end_ms", optional_json(s.avg_end_to_end_ms)}};
}

json to_json(const CumulativeStats& c, bool include_series) {
    json j{{"total_created", c.total_created},
           {"total_succeeded", c.total_succeeded},
           {"total_failed",
            {{"ttl", c.failed.ttl},
             {"exec_timeout", c.failed.exec_timeout},
             {"node_down", c.failed.node_down},
             {"total", c.failed.total()}}},
           {"in_system", c.in_system},
           {"avg_end_to_end_ms", optional_json(c.avg_end_to_end_ms)},
           {"avg_cpu_utilisation", c.avg_cpu_utilisation},
           {"avg_mem_utilisation", c.avg_mem_utilisation},
           {"cumulative_cost", c.cumulative_cost.value()},
           {"cumulative_cost_exact", c.cumulative_cost.str()},
           {"cold_starts", c.cold_starts}};
    if (include_series) {
        j["series"] = json::array();
        for (const auto& s : c.series) j["series"].push_back(to_json(s));
    }
    return j;
}

json to_json(const SessionStats& s) {
    return json{{"since_ms", s.since},
                {"queue_wait_samples", s.queue_wait_samples},
                {"execution_samples", s.execution_samples},
                {"avg_queue_wait_ms", optional_json(s.avg_queue_wait_ms)},
                {"avg_execution_ms", optional_json(s.avg_execution_ms)}};
}

namespace {

std::string opt(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

template <char Tag>
std::string id_or_empty(Id<Tag> id) {
    return id ? id.str() : std::string();
}

void header(std::ostream& os, const std::string& name, const std::vector<std::string>& columns, bool with_arena) {
    os << "# " << name << '\n';
    if (with_arena) os << "arena,";
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
}

void row(std::ostream& os, const std::string& arena, const std::vector<std::string>& fields) {
    if (!arena.empty()) os << arena << ',';
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
    os << '\n';
}

}  // namespace

std::string export_csv(std::span<const CsvSource> sources) {
    const bool with_arena = !sources.empty() && !sources.front().arena.empty();
    std::ostringstream os;

    header(os, "requests", kRequestColumns, with_arena);
    for (const auto& src : sources) {
        for (const auto& r : *src.requests) {
            // Failed requests cost nothing; unfinished ones have no cost yet.
            Cost c;
            if (r.status == RequestStatus::Succeeded && r.assigned_instance) {
                const auto& inst = (*src.instances)[r.assigned_instance.value - 1];
                c = cost(r.execution_ms().value_or(0), inst.demand.mem_mb);
            }
            row(os, src.arena,
                {r.id.str(), r.function_type, std::to_string(r.arrival_time), opt(r.enqueue_time), opt(r.dispatch_time),
                 opt(r.exec_start_time), opt(r.end_time), std::string(to_string(r.status)), opt(r.queue_wait_ms()),
                 opt(r.execution_ms()), opt(r.end_to_end_ms()), is_terminal(r.status) ? c.str() : std::string(),
                 id_or_empty(r.assigned_instance),
                 id_or_empty(r.assigned_node)});
        }
    }

    os << '\n';
    header(os, "instances", kInstanceColumns, with_arena);
    for (const auto& src : sources) {
        for (const auto& i : *src.instances) {
            row(os, src.arena,
                {i.id.str(), i.function_type, id_or_empty(i.node_id), std::string(to_string(i.state)),
                 std::to_string(i.created_at), opt(i.ready_at), opt(i.ended_at),
                 std::to_string(i.ended_at.value_or(src.now) - i.created_at), std::to_string(i.demand.cpu_m),
                 std::to_string(i.demand.mem_mb), std::to_string(i.requests_served)});
        }
    }

    os << '\n';
    header(os, "nodes", kNodeColumns, with_arena);
    for (const auto& src : sources) {
        for (const auto& n : *src.nodes) {
            row(os, src.arena,
                {n.id.str(), std::string(to_string(n.state)), std::to_string(n.provisioned_at), opt(n.activated_at),
                 opt(n.ended_at), std::to_string(n.ended_at.value_or(src.now) - n.provisioned_at),
                 std::to_string(n.capacity.cpu_m), std::to_string(n.capacity.mem_mb), std::to_string(n.used.cpu_m),
                 std::to_string(n.used.mem_mb), std::to_string(n.hosted.size())});
        }
    }
    return os.str();
}

std::string export_csv(const std::vector<Request>& requests, const std::vector<FunctionInstance>& instances,
                       const std::vector<ComputeNode>& nodes, SimTime now) {
    const CsvSource src{{}, &requests, &instances, &nodes, now};
    return export_csv(std::span<const CsvSource>(&src, 1));
}

}  // namespace servsim
