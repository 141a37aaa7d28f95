#include "servsim/service.hpp"

#include <cmath>
#include <stdexcept>

#include <httplib.h>

#include "servsim/workload.hpp"

namespace servsim {

using nlohmann::json;
using namespace std::chrono_literals;

// ---------------------------------------------------------------------------
// StreamHub

std::string StreamMessage::frame() const {
    return "id: " + std::to_string(stream_seq) + "\nevent: " + type + "\ndata: " + body.dump() + "\n\n";
}

std::uint64_t StreamHub::publish(const std::string& type, json body) {
    std::lock_guard lock(mu_);
    const std::uint64_t seq = next_++;
    body["type"] = type;
    body["stream_seq"] = seq;
    messages_.push_back(StreamMessage{seq, type, std::move(body)});
    if (type == "snapshot") last_snapshot_ = seq;
    while (messages_.size() > capacity_ && last_snapshot_ && base_ < *last_snapshot_) {
        messages_.pop_front();
        ++base_;
    }
    cv_.notify_all();
    return seq;
}

std::uint64_t StreamHub::subscribe() const {
    std::lock_guard lock(mu_);
    return last_snapshot_.value_or(base_);
}

std::uint64_t StreamHub::next_seq() const {
    std::lock_guard lock(mu_);
    return next_;
}

bool StreamHub::wait(std::uint64_t& cursor, std::vector<StreamMessage>& out, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || cursor < next_; });
    if (closed_) return false;
    if (cursor < base_) cursor = last_snapshot_.value_or(base_);
    for (std::uint64_t s = cursor; s < next_; ++s) out.push_back(messages_[s - base_]);
    cursor = next_;
    return true;
}

void StreamHub::close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
}

// ---------------------------------------------------------------------------
// Service

struct Service::Impl {
    httplib::Server server;
};

namespace {

json event_json(const SimEvent& ev) {
    return json{{"id", ev.id},
                {"t", ev.time},
                {"kind", to_string(ev.kind)},
                {"subject", ev.subject.str()},
                {"detail", ev.detail}};
}

void reply_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json error_body(ErrorCode code, const std::string& message) {
    return json{{"ok", false}, {"error", to_string(code)}, {"message", message}};
}

}  // namespace

Service::Service(SimConfig config, ServiceOptions options)
    : controller_(std::move(config)), options_(std::move(options)), impl_(std::make_unique<Impl>()) {
    controller_.set_stream_sink(
        [this](const std::string& arena, const SimEvent& ev, std::size_t seq, std::span<const StateDelta> deltas) {
            hub_.publish("event", json{{"arena", arena}, {"seq", seq}, {"event", event_json(ev)}});
            for (const auto& d : deltas) {
                json body = to_json(d);
                body["arena"] = arena;
                hub_.publish("delta", std::move(body));
            }
        });
}

Service::~Service() { stop(); }

void Service::enqueue_task(std::function<void(Controller&)> task) {
    std::lock_guard lock(mailbox_mu_);
    if (stopping_) throw std::runtime_error("service is stopping");
    mailbox_.push_back(std::move(task));
    mailbox_cv_.notify_all();
}

json Service::command(const json& cmd) {
    return post([cmd](Controller& c) { return c.apply(cmd); });
}

void Service::publish_snapshot() {
    hub_.publish("snapshot",
                 json{{"t", controller_.now()}, {"generation", controller_.generation()}, {"state", controller_.state_json()}});
}

void Service::loop() {
    auto last_tick = std::chrono::steady_clock::now();
    double carry = 0.0;
    const Millis every = options_.snapshot_interval_ms;

    while (true) {
        std::deque<std::function<void(Controller&)>> tasks;
        {
            std::unique_lock lock(mailbox_mu_);
            if (!controller_.running() && mailbox_.empty() && !stopping_) mailbox_cv_.wait_for(lock, 50ms);
            if (stopping_ && mailbox_.empty()) break;
            tasks.swap(mailbox_);
        }
        for (auto& task : tasks) {
            task(controller_);
            if (controller_.generation() != generation_seen_) {
                generation_seen_ = controller_.generation();
                publish_snapshot();
                next_snapshot_at_ = (controller_.now() / every + 1) * every;
            }
        }
        if (!controller_.running()) {
            last_tick = std::chrono::steady_clock::now();
            carry = 0.0;
            continue;
        }

        Millis dt = options_.unpaced_chunk_ms;
        const double pace = controller_.pace();
        if (pace > 0.0) {
            {
                std::unique_lock lock(mailbox_mu_);
                mailbox_cv_.wait_for(lock, 20ms, [&] { return !mailbox_.empty() || stopping_.load(); });
            }
            const auto tick = std::chrono::steady_clock::now();
            const double sim = carry + std::chrono::duration<double>(tick - last_tick).count() * pace;
            dt = static_cast<Millis>(std::floor(sim));
            carry = sim - static_cast<double>(dt);
            last_tick = tick;
        }

        const SimTime target = controller_.now() + dt;
        while (controller_.now() < target) {
            const SimTime stop_at = std::min(target, next_snapshot_at_);
            controller_.advance_unconditionally(stop_at - controller_.now());
            if (controller_.now() >= next_snapshot_at_) {
                publish_snapshot();
                next_snapshot_at_ += every;
            }
        }
        if (pace <= 0.0) std::this_thread::yield();
    }
}

int Service::start() {
    auto& svr = impl_->server;
    svr.new_task_queue = [] { return new httplib::ThreadPool(16); };
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    auto serve_text = [this](httplib::Response& res, auto make, const char* type) {
        try {
            res.set_content(post(make), type);
        } catch (const std::exception& e) {
            reply_json(res, error_body(ErrorCode::UnknownCommand, e.what()), 503);
        }
    };
    auto need_battleground = [this](httplib::Response& res) {
        if (post([](Controller& c) { return c.battleground_mode(); })) return true;
        reply_json(res, error_body(ErrorCode::UnknownCommand, "no battleground has been created"), 409);
        return false;
    };
    auto handle_command = [this](const httplib::Request& req, httplib::Response& res) {
        json cmd;
        try {
            cmd = json::parse(req.body);
        } catch (const json::exception& e) {
            reply_json(res, error_body(ErrorCode::InvalidConfig, std::string("body is not JSON: ") + e.what()), 400);
            return;
        }
        try {
            const json reply = command(cmd);
            reply_json(res, reply, reply.value("ok", false) ? 200 : 400);
        } catch (const std::exception& e) {
            reply_json(res, error_body(ErrorCode::UnknownCommand, e.what()), 503);
        }
    };

    svr.Get("/state", [=](const httplib::Request&, httplib::Response& res) {
        serve_text(res, [](Controller& c) { return c.state_json().dump(); }, "application/json");
    });
    svr.Get("/metrics", [=](const httplib::Request&, httplib::Response& res) {
        serve_text(res, [](Controller& c) { return c.metrics_json().dump(); }, "application/json");
    });
    svr.Get("/export.csv", [=](const httplib::Request&, httplib::Response& res) {
        serve_text(res, [](Controller& c) { return c.export_csv(); }, "text/csv");
    });
    svr.Get("/scenarios", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, json(scenario_names()));
    });
    svr.Post("/command", handle_command);

    svr.Get("/battleground/state", [=](const httplib::Request&, httplib::Response& res) {
        if (need_battleground(res)) serve_text(res, [](Controller& c) { return c.state_json().dump(); }, "application/json");
    });
    svr.Get("/battleground/metrics", [=](const httplib::Request&, httplib::Response& res) {
        if (need_battleground(res)) {
            serve_text(res, [](Controller& c) { return c.metrics_json().dump(); }, "application/json");
        }
    });
    svr.Get("/battleground/export.csv", [=](const httplib::Request&, httplib::Response& res) {
        if (need_battleground(res)) serve_text(res, [](Controller& c) { return c.export_csv(); }, "text/csv");
    });
    svr.Post("/battleground/command", handle_command);

    svr.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
        res.set_header("Cache-Control", "no-cache");
        auto cursor = std::make_shared<std::uint64_t>(hub_.subscribe());
        res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
            std::vector<StreamMessage> batch;
            if (!hub_.wait(*cursor, batch, 500ms)) {
                sink.done();
                return false;
            }
            if (batch.empty()) {
                static constexpr char kKeepAlive[] = ": keep-alive\n\n";
                return sink.write(kKeepAlive, sizeof(kKeepAlive) - 1);
            }
            std::string out;
            for (const auto& m : batch) out += m.frame();
            return sink.write(out.data(), out.size());
        });
    });

    if (options_.ui_dir && !svr.set_mount_point("/", *options_.ui_dir)) {
        throw std::runtime_error("UI directory not found: " + *options_.ui_dir);
    }

    if (options_.port == 0) {
        port_ = svr.bind_to_any_port(options_.host);
        if (port_ <= 0) throw std::runtime_error("could not bind " + options_.host);
    } else {
        if (!svr.bind_to_port(options_.host, options_.port)) {
            throw std::runtime_error("could not bind " + options_.host + ":" + std::to_string(options_.port));
        }
        port_ = options_.port;
    }

    generation_seen_ = controller_.generation();
    publish_snapshot();
    next_snapshot_at_ = (controller_.now() / options_.snapshot_interval_ms + 1) * options_.snapshot_interval_ms;
    loop_thread_ = std::thread([this] { loop(); });
    http_thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void Service::stop() {
    {
        std::lock_guard lock(mailbox_mu_);
        stopping_ = true;
        mailbox_cv_.notify_all();
    }
    hub_.close();
    impl_->server.stop();
    if (http_thread_.joinable()) http_thread_.join();
    if (loop_thread_.joinable()) loop_thread_.join();
}

void Service::wait() {
    if (http_thread_.joinable()) http_thread_.join();
}

}  // namespace servsim
