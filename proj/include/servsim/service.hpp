#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "servsim/control.hpp"

namespace servsim {

/// One server-sent-events frame with its position in the stream.
struct StreamMessage {
    std::uint64_t stream_seq = 0;
    std::string type;
    nlohmann::json body;

    /// "id: <seq>\nevent: <type>\ndata: <json>\n\n"
    std::string frame() const;
};

/// Ordered, bounded log of stream messages shared by all subscribers.
///
/// Subscribers start at the latest full snapshot so they can hydrate from
/// it; the latest snapshot and everything after it are never evicted.
class StreamHub {
public:
    explicit StreamHub(std::size_t capacity = 50000) : capacity_(capacity) {}

    /// Stamps the next contiguous stream_seq onto body and appends it.
    std::uint64_t publish(const std::string& type, nlohmann::json body);

    /// Cursor positioned at the latest snapshot.
    std::uint64_t subscribe() const;

    /// Copies messages at or after `cursor` into `out`, waiting up to
    /// `timeout` for at least one. A cursor that fell out of the buffer
    /// jumps to the latest snapshot. Returns false once closed.
    bool wait(std::uint64_t& cursor, std::vector<StreamMessage>& out, std::chrono::milliseconds timeout);

    void close();
    std::uint64_t next_seq() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<StreamMessage> messages_;
    std::uint64_t base_ = 0;
    std::uint64_t next_ = 0;
    std::optional<std::uint64_t> last_snapshot_;
    std::size_t capacity_;
    bool closed_ = false;
};

struct ServiceOptions {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    std::optional<std::string> ui_dir;
    /// Full snapshot cadence on the event stream, in simulated ms.
    Millis snapshot_interval_ms = 2000;
    /// Simulated ms advanced per loop turn when pace is 0.
    Millis unpaced_chunk_ms = 250;
};

/// HTTP front end over a Controller.
///
/// One loop thread owns the controller. HTTP handlers never touch it
/// directly: they post tasks to an ordered mailbox that the loop drains
/// between advances, and receive serialised copies back.
class Service {
public:
    Service(SimConfig config, ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts serving. Returns the bound port.
    /// Throws std::runtime_error if the port cannot be bound.
    int start();
    void stop();
    /// Blocks until stop() is called or the listener exits.
    void wait();

    int port() const { return port_; }

    /// Runs `task` on the loop thread between advances.
    template <typename F>
    auto post(F task) -> decltype(task(std::declval<Controller&>()));

    nlohmann::json command(const nlohmann::json& cmd);
    StreamHub& hub() { return hub_; }

private:
    struct Impl;

    void loop();
    void publish_snapshot();
    void enqueue_task(std::function<void(Controller&)> task);

    Controller controller_;
    ServiceOptions options_;
    StreamHub hub_;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;

    std::mutex mailbox_mu_;
    std::condition_variable mailbox_cv_;
    std::deque<std::function<void(Controller&)>> mailbox_;
    std::atomic<bool> stopping_{false};
    std::thread loop_thread_;
    std::thread http_thread_;

    std::uint64_t generation_seen_ = 0;
    SimTime next_snapshot_at_ = 0;
};

template <typename F>
auto Service::post(F task) -> decltype(task(std::declval<Controller&>())) {
    using R = decltype(task(std::declval<Controller&>()));
    auto promise = std::make_shared<std::promise<R>>();
    auto future = promise->get_future();
    enqueue_task([promise, task = std::move(task)](Controller& c) mutable {
        try {
            if constexpr (std::is_void_v<R>) {
                task(c);
                promise->set_value();
            } else {
                promise->set_value(task(c));
            }
        } catch (...) {
            promise->set_exception(std::current_exception());
        }
    });
    return future.get();
}

}  // namespace servsim
