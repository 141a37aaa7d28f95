#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace servsim {

/// Simulated time in integer milliseconds since the start of a run.
using SimTime = std::int64_t;
using Millis = std::int64_t;
using EventId = std::uint64_t;

/// Identifier tagged with the entity family it names. Rendered as the tag
/// letter followed by the number, e.g. "N1" or "R42". Zero means unset.
template <char Tag>
struct Id {
    std::uint64_t value = 0;

    static constexpr char tag = Tag;

    constexpr explicit operator bool() const { return value != 0; }
    friend constexpr auto operator<=>(const Id&, const Id&) = default;

    std::string str() const { return std::string(1, Tag) + std::to_string(value); }
};

using RequestId = Id<'R'>;
using InstanceId = Id<'I'>;
using NodeId = Id<'N'>;

template <char Tag>
std::ostream& operator<<(std::ostream& os, const Id<Tag>& id) {
    return os << id.str();
}

/// Parses "N3" style ids; the tag letter is optional ("3" also parses).
template <char Tag>
std::optional<Id<Tag>> parse_id(std::string_view text) {
    if (!text.empty() && text.front() == Tag) text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : text) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (v == 0) return std::nullopt;
    return Id<Tag>{v};
}

/// Subject of a kernel event: any entity, or none.
struct EntityRef {
    char tag = '-';
    std::uint64_t value = 0;

    EntityRef() = default;
    template <char Tag>
    EntityRef(Id<Tag> id) : tag(Tag), value(id.value) {}  // NOLINT(implicit)

    bool empty() const { return value == 0; }
    std::string str() const { return empty() ? std::string("-") : std::string(1, tag) + std::to_string(value); }
    friend bool operator==(const EntityRef&, const EntityRef&) = default;

    template <char Tag>
    std::optional<Id<Tag>> as() const {
        if (tag != Tag || value == 0) return std::nullopt;
        return Id<Tag>{value};
    }
};

/// CPU in millicores and memory in MB. Integer units keep every placement
/// score and every cost an exact rational.
struct Resources {
    std::int64_t cpu_m = 0;
    std::int64_t mem_mb = 0;

    friend constexpr bool operator==(const Resources&, const Resources&) = default;
    constexpr Resources& operator+=(const Resources& o) {
        cpu_m += o.cpu_m;
        mem_mb += o.mem_mb;
        return *this;
    }
    constexpr Resources& operator-=(const Resources& o) {
        cpu_m -= o.cpu_m;
        mem_mb -= o.mem_mb;
        return *this;
    }
    friend constexpr Resources operator+(Resources a, const Resources& b) { return a += b; }
    friend constexpr Resources operator-(Resources a, const Resources& b) { return a -= b; }
    constexpr bool fits_within(const Resources& o) const { return cpu_m <= o.cpu_m && mem_mb <= o.mem_mb; }
};

/// Fixed per-instance consumption of a function type.
using ResourceDemand = Resources;

std::int64_t cpu_to_millicores(double cpu);
double millicores_to_cpu(std::int64_t cpu_m);

enum class ErrorCode {
    SchedulingInPast,
    InvalidSpec,
    UnknownFunctionType,
    UnknownScenario,
    DuplicateEnqueue,
    NodeLimitReached,
    UnderflowViolation,
    InstanceLimitReached,
    NoCapacity,
    InvalidTransition,
    ConcurrencyExceeded,
    UnknownRequest,
    UnknownNode,
    NodeNotActive,
    InvalidConfig,
    UnknownCommand,
};

std::string_view to_string(ErrorCode code);

class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace servsim

template <char Tag>
struct std::hash<servsim::Id<Tag>> {
    std::size_t operator()(const servsim::Id<Tag>& id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
